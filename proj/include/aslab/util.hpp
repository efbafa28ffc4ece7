#pragma once

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace aslab::util {

// ---------------------------------------------------------------------------
// Deterministic RNG. Self-contained so that seeded runs produce identical
// streams on every platform and standard library.
// ---------------------------------------------------------------------------

uint64_t splitmix64(uint64_t& state);

class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t next_u64();
  // Uniform in [0, 1).
  double next_double();
  // Uniform integer in [0, n); n must be > 0.
  uint64_t uniform_index(uint64_t n);
  // Box-Muller; draws two uniforms per call.
  double normal(double mean, double stddev);
  // Samples an index from unnormalized non-negative weights.
  size_t sample_discrete(const std::vector<double>& weights);

 private:
  uint64_t s_[4];
};

// Mixes arbitrary strings/integers into a single derived seed.
uint64_t derive_seed(std::initializer_list<std::string_view> parts);
uint64_t derive_seed(uint64_t base, std::initializer_list<std::string_view> parts);

// ---------------------------------------------------------------------------
// Hashing
// ---------------------------------------------------------------------------

std::string sha256_hex(std::string_view data);
uint64_t fnv1a64(std::string_view data);

// ---------------------------------------------------------------------------
// Strings
// ---------------------------------------------------------------------------

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string replace_all(std::string s, std::string_view from, std::string_view to);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
bool contains(std::string_view haystack, std::string_view needle);

// Shortest round-trip representation of a double (std::to_chars based).
std::string format_double(double value);
// Fixed-precision formatting for report tables.
std::string format_fixed(double value, int digits);

// CSV field escaping per RFC 4180.
std::string csv_escape(const std::string& field);

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

std::string read_file(const std::string& path);  // throws std::runtime_error
std::optional<std::string> try_read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);
// Sorted list of regular files under dir whose name ends with suffix.
std::vector<std::string> list_files(const std::string& dir, std::string_view suffix);

}  // namespace aslab::util
