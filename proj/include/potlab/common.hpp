#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace potlab {

using RngSeed = std::uint64_t;

// Error categories; the CLI maps these onto process exit codes.
enum class ErrorKind {
  config,
  dataset,
  parse,
  eval,
  proposer_backend,
  invariance,
  internal,
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

private:
  ErrorKind kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error(ErrorKind::config, msg) {}
};

struct DatasetError : Error {
  explicit DatasetError(const std::string& msg) : Error(ErrorKind::dataset, msg) {}
};

// Parse failure with 1-based source position.
struct ParseError : Error {
  ParseError(int line, int column, const std::string& msg)
      : Error(ErrorKind::parse,
              "line " + std::to_string(line) + ", col " + std::to_string(column) + ": " + msg),
        line(line),
        column(column) {}
  int line;
  int column;
};

struct EvalError : Error {
  explicit EvalError(const std::string& msg) : Error(ErrorKind::eval, msg) {}
};

struct ProposerBackendError : Error {
  explicit ProposerBackendError(const std::string& msg)
      : Error(ErrorKind::proposer_backend, msg) {}
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Stable seed derivation for independent substreams keyed by run structure
// (e.g. master seed + iteration + candidate index).
inline RngSeed derive_seed(RngSeed base) { return splitmix64(base); }

template <typename... Rest>
RngSeed derive_seed(RngSeed base, std::uint64_t head, Rest... rest) {
  return derive_seed(splitmix64(base ^ (head + 0x9e3779b97f4a7c15ull)), rest...);
}

// mt19937_64 stream with hand-rolled distributions so sampled values do not
// depend on the standard library's distribution implementations.
class RngStream {
public:
  explicit RngStream(RngSeed seed) : engine_(seed) {}

  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Unbiased integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) throw Error(ErrorKind::internal, "uniform_index: empty range");
    std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform01();
    } while (u1 <= 0.0);
    u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  std::mt19937_64& engine() { return engine_; }

private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Shortest decimal form that round-trips the exact double value.
inline std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace potlab
