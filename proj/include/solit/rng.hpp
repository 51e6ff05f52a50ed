#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>
#include <vector>

namespace solit {

/// Seed-deterministic standard normal stream.
///
/// The engine state is derived from a key tuple (master seed, stream
/// indices...) through std::seed_seq, whose algorithm is fixed by the
/// standard, so equal keys give bit-identical engines on every platform.
/// Normals come from the Box-Muller transform rather than
/// std::normal_distribution, whose algorithm is implementation-defined.
class NormalStream {
 public:
  explicit NormalStream(std::initializer_list<std::uint64_t> key) { reseed(key); }

  void reseed(std::initializer_list<std::uint64_t> key) {
    std::vector<std::uint32_t> words;
    words.reserve(2 * key.size());
    for (std::uint64_t k : key) {
      words.push_back(static_cast<std::uint32_t>(k & 0xffffffffu));
      words.push_back(static_cast<std::uint32_t>(k >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    engine_.seed(seq);
    has_spare_ = false;
  }

  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double radius = std::sqrt(-2.0 * std::log(uniform()));
    const double angle = 2.0 * std::numbers::pi * uniform();
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Rademacher sign, +1 or -1 with equal probability.
  double sign() { return (engine_() >> 63) ? 1.0 : -1.0; }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace solit
