#pragma once

// Shared plumbing: error types, logging, seed mixing, small numeric helpers.

#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace chipletdse {

// Configuration/input errors: bad JSON, missing files, inconsistent scenario.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Semantic validation errors: a structurally well-formed input violating a model
// precondition (cyclic workload graph, storage shortfall, bad placement).
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Numeric failures that should abort the run rather than produce garbage.
struct SolverError : std::runtime_error {
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

enum class Interposer { silicon, glass };

inline const char* to_string(Interposer ip) {
  return ip == Interposer::silicon ? "silicon" : "glass";
}

inline Interposer interposer_from_string(const std::string& s) {
  if (s == "silicon" || s == "si") return Interposer::silicon;
  if (s == "glass") return Interposer::glass;
  throw ConfigError("unknown interposer material '" + s + "'");
}

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

inline LogLevel& log_level() {
  static LogLevel lvl = [] {
    const char* env = std::getenv("CHIPLETDSE_LOG");
    if (!env) return LogLevel::info;
    std::string s(env);
    if (s == "quiet") return LogLevel::quiet;
    if (s == "debug") return LogLevel::debug;
    return LogLevel::info;
  }();
  return lvl;
}

inline void logf(LogLevel lvl, const char* fmt, ...) {
  if (static_cast<int>(lvl) > static_cast<int>(log_level())) return;
  va_list args;
  va_start(args, fmt);
  std::vfprintf(stderr, fmt, args);
  std::fputc('\n', stderr);
  va_end(args);
}

#define CDSE_INFO(...) ::chipletdse::logf(::chipletdse::LogLevel::info, __VA_ARGS__)
#define CDSE_DEBUG(...) ::chipletdse::logf(::chipletdse::LogLevel::debug, __VA_ARGS__)

// splitmix64: decorrelates derived seeds from structured inputs.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t mix_seed(std::uint64_t base, const std::vector<int>& key) {
  std::uint64_t h = fnv1a64(key.data(), key.size() * sizeof(int));
  return splitmix64(base ^ h);
}

// Stable float formatting for CSV output; %.12g round-trips every value we emit
// while keeping files byte-identical across runs.
inline std::string fmt_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline bool nearly_equal(double a, double b, double rel = 1e-9, double abs = 1e-12) {
  double diff = std::fabs(a - b);
  if (diff <= abs) return true;
  return diff <= rel * std::max(std::fabs(a), std::fabs(b));
}

}  // namespace chipletdse
