// SPDX-License-Identifier: Apache-2.0
// xmr: retrieval, fusion, training and evaluation over precomputed
// multimodal embeddings.

#include <cstdio>
#include <exception>
#include <string>

#include "commands.hpp"

namespace {

// One line, `error: <category>: <message>`, with newlines flattened.
int fail(std::string_view category, std::string message, int code) {
    for (auto& c : message) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    std::fprintf(stderr, "error: %.*s: %s\n", static_cast<int>(category.size()), category.data(), message.c_str());
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Entity retrieval with mono-modal and cross-modal channel fusion."};
    app.set_version_flag("--version", XMR_VERSION);
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();
    xmr::cli::register_commands(app);
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", e.what(), xmr::cli::exit_code(xmr::ErrorCategory::usage));
    } catch (const xmr::Error& e) {
        return fail(xmr::to_string(e.category()), e.what(), xmr::cli::exit_code(e.category()));
    } catch (const std::exception& e) {
        return fail("internal", e.what(), 70);
    }
    return 0;
}
