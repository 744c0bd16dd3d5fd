// SPDX-License-Identifier: Apache-2.0
#include "xmr/config.hpp"

#include <charconv>
#include <cstdio>

#include "xmr/embedstore.hpp"
#include "xmr/error.hpp"

namespace xmr {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) {
        throw format_error("config key '" + key + "': not a number: '" + v + "'");
    }
    return out;
}

std::size_t to_size(const std::string& key, const std::string& v) {
    std::size_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) {
        throw format_error("config key '" + key + "': not a non-negative integer: '" + v + "'");
    }
    return out;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw format_error("config key '" + key + "': not a boolean: '" + v + "'");
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

KeyValues parse_key_values(std::string_view text, const std::string& source) {
    KeyValues kv;
    std::size_t lineno = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        ++lineno;
        std::string line(text.substr(start, end - start));
        start = end + 1;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = source + ":" + std::to_string(lineno);
        if (eq == std::string::npos) throw format_error(where + ": expected 'key = value'");
        auto key = trim(std::string_view(line).substr(0, eq));
        auto value = trim(std::string_view(line).substr(eq + 1));
        if (key.empty()) throw format_error(where + ": empty key");
        if (!kv.emplace(key, value).second) throw format_error(where + ": duplicate key '" + key + "'");
    }
    return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
    return parse_key_values(detail::read_file(path), path.string());
}

FusionSpec fusion_spec_from(const KeyValues& kv) {
    FusionSpec spec;
    for (const auto& [key, value] : kv) {
        if (key == "normalization") {
            spec.normalization = parse_normalization(value);
        } else if (key == "pool_k") {
            spec.candidate_pool_k = to_size(key, value);
        } else {
            spec.weights[key] = to_double(key, value);
        }
    }
    spec.validate();
    return spec;
}

std::string format_fusion_spec(const FusionSpec& spec) {
    std::string out;
    for (const auto& [channel, w] : spec.weights) out += channel + " = " + num(w) + "\n";
    out += "normalization = " + std::string(to_string(spec.normalization)) + "\n";
    out += "pool_k = " + std::to_string(spec.candidate_pool_k) + "\n";
    return out;
}

TrainConfig train_config_from(const KeyValues& kv) {
    TrainConfig c;
    for (const auto& [key, v] : kv) {
        if (key == "strategy") c.strategy = parse_strategy(v);
        else if (key == "batch_size") c.batch_size = to_size(key, v);
        else if (key == "lr") c.lr = to_double(key, v);
        else if (key == "alpha_lr") c.alpha_lr = to_double(key, v);
        else if (key == "weight_decay") c.weight_decay = to_double(key, v);
        else if (key == "warmup_steps") c.warmup_steps = to_size(key, v);
        else if (key == "decay_steps") c.decay_steps = to_size(key, v);
        else if (key == "tau_init") c.tau_init = to_double(key, v);
        else if (key == "alpha_init") c.alpha_init = to_double(key, v);
        else if (key == "seed") c.seed = to_size(key, v);
        else if (key == "patience") c.patience = to_size(key, v);
        else if (key == "max_epochs") c.max_epochs = to_size(key, v);
        else if (key == "mask_collisions") c.mask_collisions = to_bool(key, v);
        else throw format_error("unknown train config key '" + key + "'");
    }
    c.validate();
    return c;
}

std::string format_train_config(const TrainConfig& c) {
    std::string out;
    out += "strategy = " + std::string(to_string(c.strategy)) + "\n";
    out += "batch_size = " + std::to_string(c.batch_size) + "\n";
    out += "lr = " + num(c.lr) + "\n";
    out += "alpha_lr = " + num(c.alpha_lr) + "\n";
    out += "weight_decay = " + num(c.weight_decay) + "\n";
    out += "warmup_steps = " + std::to_string(c.warmup_steps) + "\n";
    out += "decay_steps = " + std::to_string(c.decay_steps) + "\n";
    out += "tau_init = " + num(c.tau_init) + "\n";
    out += "alpha_init = " + num(c.alpha_init) + "\n";
    out += "seed = " + std::to_string(c.seed) + "\n";
    out += "patience = " + std::to_string(c.patience) + "\n";
    out += "max_epochs = " + std::to_string(c.max_epochs) + "\n";
    out += "mask_collisions = " + std::string(c.mask_collisions ? "true" : "false") + "\n";
    return out;
}

}  // namespace xmr
