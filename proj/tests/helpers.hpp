#pragma once

#include "mplab/types.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace testing {

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

template <typename A, typename B>
double rel_err(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  const double scale = std::max({a.norm(), b.norm(), 1e-300});
  return (a - b).norm() / scale;
}

// Central differences of a scalar function over every entry of x.
inline mplab::Matrix fd_gradient(const std::function<double(const mplab::Matrix&)>& f, const mplab::Matrix& x,
                                 double h = 1e-5) {
  mplab::Matrix g(x.rows(), x.cols());
  for (mplab::Index i = 0; i < x.size(); ++i) {
    mplab::Matrix p = x, m = x;
    p.data()[i] += h;
    m.data()[i] -= h;
    g.data()[i] = (f(p) - f(m)) / (2 * h);
  }
  return g;
}

}  // namespace testing
