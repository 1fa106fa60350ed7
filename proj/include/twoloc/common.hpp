#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace twoloc {

using Complex = std::complex<double>;
using Rng = std::mt19937_64;

/// Numeric thresholds shared across the library. The defaults are the
/// working configuration for every desk-scale instance we support.
struct Tolerances {
  double eps = 1e-9;           ///< relative tolerance for algebraic identities
  double eps_inv = 1e-8;       ///< smallest singular value accepted as invertible
  double delta_m = 1e-6;       ///< lower bound on ||y*x|| for annihilator witnesses
  double eps_auto = 1e-8;      ///< residual bound for automorphism agreement
  double rank_cutoff = 1e-10;  ///< relative SVD cutoff for nullspace rank decisions
  double singular_margin = 1e-10;  ///< relative sigma_min below which an element counts as singular
  int invertible_retries = 16;
};

inline const Tolerances& default_tolerances() {
  static const Tolerances t{};
  return t;
}

struct DescriptorMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct IndexError : std::out_of_range {
  using std::out_of_range::out_of_range;
};
struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct SingularElement : std::domain_error {
  using std::domain_error::domain_error;
};
struct NotJordan : std::domain_error {
  using std::domain_error::domain_error;
};
struct UndecidableSplit : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NotAutomorphism : std::domain_error {
  using std::domain_error::domain_error;
};
struct DecompositionFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// splitmix64 step; derives per-candidate seeds from (seed, index) so that
/// parallel runs stay reproducible.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Standard complex Gaussian (variance 1 overall).
inline Complex gaussian(Rng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  const double re = n01(rng);
  const double im = n01(rng);
  return Complex(re, im) / std::sqrt(2.0);
}

inline bool close(double value, double target, double tol) {
  return std::abs(value - target) <= tol * std::max(1.0, std::abs(target));
}

}  // namespace twoloc
