#pragma once

#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace golden {

// Config-file or config-value problems; maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A pipeline stage failed or a prerequisite artifact is missing; exit code 3.
class StageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

std::string sha256_hex(std::string_view bytes);

// Shortest-roundtrip decimal rendering; stable across runs and platforms.
std::string format_double(double v);
std::string format_float(float v);

std::vector<std::string> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Runs fn(i) for i in [0, n) across a few threads. Results must be written to
// pre-sized slots indexed by i so the outcome is order-independent.
void parallel_for(size_t n, const std::function<void(size_t)>& fn);

}  // namespace golden
