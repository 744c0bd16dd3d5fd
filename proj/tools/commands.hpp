// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <CLI11.hpp>

#include "xmr/error.hpp"

namespace xmr::cli {

/// Adds every subcommand to `app`. Each subcommand runs from its parse
/// callback and writes its artifacts plus manifest.json under --out.
void register_commands(CLI::App& app);

/// Process exit status for a failure of the given category.
int exit_code(ErrorCategory category);

}  // namespace xmr::cli
