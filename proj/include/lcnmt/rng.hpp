#ifndef LCNMT_RNG_HPP
#define LCNMT_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace lcnmt {

// Seeded random stream with pinned distributions. The standard
// distribution classes are implementation-defined, so uniform/gaussian
// draws are derived from the raw engine output directly; the same seed
// gives the same stream on every build.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next() { return eng_(); }

  // Uniform in [0, 1) from the top 53 bits.
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [lo, hi] by rejection.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % span;
    std::uint64_t raw;
    do {
      raw = eng_();
    } while (raw >= limit);
    return lo + static_cast<std::int64_t>(raw % span);
  }

  // Standard normal via Box-Muller, one value per call.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u;
    do {
      u = uniform();
    } while (u <= 0.0);
    const double v = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u));
    const double angle = 6.283185307179586476925287 * v;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  // Fisher-Yates, pinned (std::shuffle is implementation-defined).
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace lcnmt

#endif
