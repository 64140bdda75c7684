#pragma once

// Command-line front end: generate, solve, study and check.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace sphere_ot::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

/// Runs one command. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Flat "key = value" file; blank lines, '#' comments and "[section]" headers
/// are skipped. Keys are normalized to use '-' instead of '_'.
std::map<std::string, std::string> read_config_file(const std::string& path);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& text);

}  // namespace sphere_ot::cli
