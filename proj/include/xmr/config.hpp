// SPDX-License-Identifier: Apache-2.0
#pragma once

// Human-editable `key = value` config files ('#' starts a comment).

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "xmr/fusion.hpp"
#include "xmr/train.hpp"

namespace xmr {

using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(std::string_view text, const std::string& source = "config");
KeyValues read_key_values(const std::filesystem::path& path);

/// Keys `normalization` and `pool_k` are reserved; every other key is a
/// channel name whose value is its weight.
FusionSpec fusion_spec_from(const KeyValues& kv);
std::string format_fusion_spec(const FusionSpec& spec);

/// Unknown keys are rejected.
TrainConfig train_config_from(const KeyValues& kv);
std::string format_train_config(const TrainConfig& config);

}  // namespace xmr
