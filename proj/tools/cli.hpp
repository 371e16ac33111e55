#pragma once

#include <iosfwd>
#include <string>

namespace martlab::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kInvalid = 2, kNumeric = 3 };

/// Runs one experiment described by a JSON config (see README). The primary
/// artifact goes to `out`; decompose also writes a CSV of its checks to
/// `reports` when given. Throws std::invalid_argument for bad configs.
void run_config(const std::string& config_json, std::ostream& out, std::ostream* reports = nullptr);

/// Full command line; returns the process exit code.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace martlab::cli
