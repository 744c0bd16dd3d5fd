// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace xmr {

/// Coarse failure class; the CLI prints it as a machine-parseable tag.
enum class ErrorCategory {
    usage,
    io,
    format,
    validation,
    numeric,
};

constexpr std::string_view to_string(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::usage: return "usage";
        case ErrorCategory::io: return "io";
        case ErrorCategory::format: return "format";
        case ErrorCategory::validation: return "validation";
        case ErrorCategory::numeric: return "numeric";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& message)
        : std::runtime_error(message), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

inline Error io_error(const std::string& m) { return {ErrorCategory::io, m}; }
inline Error format_error(const std::string& m) { return {ErrorCategory::format, m}; }
inline Error validation_error(const std::string& m) { return {ErrorCategory::validation, m}; }
inline Error numeric_error(const std::string& m) { return {ErrorCategory::numeric, m}; }
inline Error usage_error(const std::string& m) { return {ErrorCategory::usage, m}; }

}  // namespace xmr
