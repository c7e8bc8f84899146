#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace commonit {

// Bad user input: malformed files, violated preconditions, out-of-range
// parameters. The CLI maps these to a dedicated exit code.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// A line-oriented file could not be parsed. `line` is 1-based.
class ParseError : public InputError {
 public:
  ParseError(std::string source, std::size_t line, const std::string& message)
      : InputError(source + ":" + std::to_string(line) + ": " + message),
        source_(std::move(source)),
        line_(line) {}

  const std::string& source() const { return source_; }
  std::size_t line() const { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// 64-bit FNV-1a over raw bytes.
inline constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                       std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v);

// Seeded generator shared by every randomized stage. Independent streams are
// derived from (seed, stream tag, index) so that e.g. each epoch of a schedule
// gets its own sequence while the whole run stays reproducible from one seed.
//
// uniform_index() is implemented here rather than through
// std::uniform_int_distribution so the drawn sequence does not depend on the
// standard library in use.
class Rng {
 public:
  using engine_type = std::mt19937_64;
  static constexpr std::string_view kGeneratorId = "mt19937_64+splitmix64";

  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  static Rng derive(std::uint64_t seed, std::string_view stream,
                    std::uint64_t index = 0) {
    std::uint64_t s = splitmix64(seed ^ fnv1a64(stream));
    return Rng(s ^ splitmix64(index + 0x632be59bd9b4e019ULL));
  }

  std::uint64_t next() { return engine_(); }

  // Unbiased draw from [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() -
        std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return r % n;
  }

  double normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }

  engine_type& engine() { return engine_; }

 private:
  engine_type engine_;
};

// In-place Fisher-Yates shuffle driven by `rng`.
template <typename RandomIt>
void fisher_yates(RandomIt first, RandomIt last, Rng& rng) {
  const auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) {
    const std::uint64_t j = rng.uniform_index(i);
    using std::swap;
    swap(first[i - 1], first[j]);
  }
}

}  // namespace commonit
