#ifndef DRMRR_RANDOM_HPP_
#define DRMRR_RANDOM_HPP_

#include <cmath>
#include <cstdint>
#include <vector>

namespace drmrr {

/*!
 * \brief Deterministic splitmix64 generator.
 *
 * Every randomized routine in the project draws from this generator so that
 * results are reproducible byte-for-byte across compilers and standard
 * libraries. Substreams derived with DeriveSeed let per-query work run in
 * any order without changing the output.
 */
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t NextU64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /*! \brief Uniform double in [0, 1). */
  double Uniform01() {
    return static_cast<double>(NextU64() >> 11) * (1.0 / 9007199254740992.0);
  }

  double Uniform(double lo, double hi) {
    return lo + (hi - lo) * Uniform01();
  }

  /*! \brief Standard normal via Box-Muller; exactly two draws per call. */
  double Gaussian() {
    const double u1 = 1.0 - Uniform01();  // (0, 1], keeps the log finite
    const double u2 = Uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
  }

  /*! \brief Uniform integer in [0, n). Requires n > 0. */
  int UniformInt(int n) {
    return static_cast<int>(NextU64() % static_cast<uint64_t>(n));
  }

  template <typename T>
  void Shuffle(std::vector<T>* values) {
    for (int i = static_cast<int>(values->size()) - 1; i > 0; --i) {
      const int j = UniformInt(i + 1);
      std::swap((*values)[i], (*values)[j]);
    }
  }

  /*! \brief Independent substream seed for stream index `stream`. */
  static uint64_t DeriveSeed(uint64_t seed, uint64_t stream) {
    Rng mixer(seed ^ (0xD1B54A32D192ED03ULL * (stream + 1)));
    return mixer.NextU64();
  }

 private:
  uint64_t state_;
};

}  // namespace drmrr

#endif  // DRMRR_RANDOM_HPP_
