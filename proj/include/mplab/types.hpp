#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace mplab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// A point in latent (= data) space.
using Latent = Vector;
// A prediction of the injected standard-normal noise.
using EpsPrediction = Vector;

// Raised when an iterative procedure produces non-finite values or fails to
// converge; carries enough context to locate the failure.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

// splitmix64 finalizer; derives independent, reproducible substream seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Vector standard_normal(Rng& rng, Index n) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Vector out(n);
  for (Index i = 0; i < n; ++i) out[i] = dist(rng);
  return out;
}

inline Matrix standard_normal(Rng& rng, Index rows, Index cols) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix out(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) out(i, j) = dist(rng);
  return out;
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& x) {
  return x.allFinite();
}

}  // namespace mplab
