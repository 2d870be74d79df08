#pragma once

#include "mplab/types.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace mplab {

enum class ScheduleKind { LinearBeta, Cosine };

std::string to_string(ScheduleKind kind);
ScheduleKind schedule_kind_from_string(const std::string& name);

// Cumulative signal coefficients on the grid t = 0..T with alpha_bar[0] = 1.
template <typename Scalar>
class BasicNoiseSchedule {
public:
  using Array = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  BasicNoiseSchedule() = default;
  BasicNoiseSchedule(ScheduleKind kind, Array alpha_bar) : kind_(kind), alpha_bar_(std::move(alpha_bar)) {
    validate();
  }

  int steps() const { return static_cast<int>(alpha_bar_.size()) - 1; }
  ScheduleKind kind() const { return kind_; }
  const Array& alpha_bar() const { return alpha_bar_; }

  Scalar alpha_bar(int t) const {
    check_step(t, 0);
    return alpha_bar_[t];
  }

  // Continuous-time extension: piecewise-linear in t, exact on the grid.
  Scalar alpha_bar_at(Scalar t) const {
    if (!(t >= 0) || t > steps()) throw std::out_of_range("continuous time outside [0, T]");
    int lo = static_cast<int>(std::floor(t));
    if (lo >= steps()) return alpha_bar_[steps()];
    Scalar frac = t - lo;
    return alpha_bar_[lo] + frac * (alpha_bar_[lo + 1] - alpha_bar_[lo]);
  }

  // d alpha_bar / dt on the interval [k, k+1) containing t (left limit at t = T).
  Scalar alpha_bar_slope(Scalar t) const {
    int lo = std::min(static_cast<int>(std::floor(t)), steps() - 1);
    return alpha_bar_[lo + 1] - alpha_bar_[lo];
  }

  void check_step(int t, int lowest) const {
    if (t < lowest || t > steps())
      throw std::out_of_range("step " + std::to_string(t) + " outside [" + std::to_string(lowest) + ", " +
                              std::to_string(steps()) + "]");
  }

private:
  void validate() const {
    if (alpha_bar_.size() < 3) throw std::invalid_argument("schedule needs T >= 2");
    if (alpha_bar_[0] != Scalar(1)) throw std::invalid_argument("alpha_bar[0] must be exactly 1");
    for (Index t = 1; t < alpha_bar_.size(); ++t) {
      if (!(alpha_bar_[t] < alpha_bar_[t - 1])) throw std::invalid_argument("alpha_bar must strictly decrease");
      if (!(alpha_bar_[t] > 0)) throw std::invalid_argument("alpha_bar must stay positive");
    }
  }

  ScheduleKind kind_ = ScheduleKind::Cosine;
  Array alpha_bar_;
};

using NoiseSchedule = BasicNoiseSchedule<double>;

NoiseSchedule make_schedule(int T, ScheduleKind kind = ScheduleKind::Cosine);

// Forward noising: sqrt(ab_t) z0 + sqrt(1 - ab_t) eps.
template <typename Scalar, typename D1, typename D2>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> add_noise(const Eigen::MatrixBase<D1>& z0, int t,
                                                   const Eigen::MatrixBase<D2>& eps,
                                                   const BasicNoiseSchedule<Scalar>& sched) {
  const Scalar ab = sched.alpha_bar(t);
  return std::sqrt(ab) * z0 + std::sqrt(Scalar(1) - ab) * eps;
}

// Tweedie clean estimate (z_t - sqrt(1 - ab_t) eps_hat) / sqrt(ab_t).
template <typename Scalar, typename D1, typename D2>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> tweedie_denoise(const Eigen::MatrixBase<D1>& z_t,
                                                         const Eigen::MatrixBase<D2>& eps_hat, int t,
                                                         const BasicNoiseSchedule<Scalar>& sched) {
  sched.check_step(t, 1);
  const Scalar ab = sched.alpha_bar(t);
  return (z_t - std::sqrt(Scalar(1) - ab) * eps_hat) / std::sqrt(ab);
}

// Same estimate at a continuous time, used by objectives and the PF-ODE.
template <typename Scalar, typename D1, typename D2>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> tweedie_denoise_at(const Eigen::MatrixBase<D1>& z_t,
                                                            const Eigen::MatrixBase<D2>& eps_hat, Scalar t,
                                                            const BasicNoiseSchedule<Scalar>& sched) {
  const Scalar ab = sched.alpha_bar_at(t);
  return (z_t - std::sqrt(Scalar(1) - ab) * eps_hat) / std::sqrt(ab);
}

// Deterministic DDIM transition t -> t-1.
template <typename Scalar, typename D1, typename D2>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> ddim_step(const Eigen::MatrixBase<D1>& z_t,
                                                   const Eigen::MatrixBase<D2>& eps_hat, int t,
                                                   const BasicNoiseSchedule<Scalar>& sched) {
  sched.check_step(t, 1);
  const Scalar ab_prev = sched.alpha_bar(t - 1);
  return std::sqrt(ab_prev) * tweedie_denoise(z_t, eps_hat, t, sched) +
         std::sqrt(Scalar(1) - ab_prev) * eps_hat;
}

// Classifier-free guidance: w eps_cond + (1 - w) eps_uncond, evaluated as
// eps_uncond + w (eps_cond - eps_uncond). w = 1 returns eps_cond bitwise.
template <typename D1, typename D2>
Eigen::Matrix<typename D1::Scalar, Eigen::Dynamic, 1> cfg_combine(const Eigen::MatrixBase<D1>& eps_cond,
                                                                  const Eigen::MatrixBase<D2>& eps_uncond,
                                                                  typename D1::Scalar w) {
  if (w == typename D1::Scalar(1)) return eps_cond;
  return eps_uncond + w * (eps_cond - eps_uncond);
}

}  // namespace mplab
