#include "mplab/schedule.hpp"

#include <numbers>

namespace mplab {

std::string to_string(ScheduleKind kind) {
  return kind == ScheduleKind::Cosine ? "cosine" : "linear-beta";
}

ScheduleKind schedule_kind_from_string(const std::string& name) {
  if (name == "cosine") return ScheduleKind::Cosine;
  if (name == "linear-beta" || name == "linear") return ScheduleKind::LinearBeta;
  throw std::invalid_argument("unknown schedule kind: " + name);
}

NoiseSchedule make_schedule(int T, ScheduleKind kind) {
  if (T < 2) throw std::invalid_argument("make_schedule: T must be >= 2");
  NoiseSchedule::Array ab(T + 1);
  ab[0] = 1.0;
  if (kind == ScheduleKind::LinearBeta) {
    const double lo = 1e-4, hi = 0.02;
    for (int t = 1; t <= T; ++t) {
      double beta = lo + (hi - lo) * (t - 1) / static_cast<double>(T - 1);
      ab[t] = ab[t - 1] * (1.0 - beta);
    }
  } else {
    const double s0 = 0.008;
    auto f = [&](int t) {
      double c = std::cos((t / static_cast<double>(T) + s0) / (1.0 + s0) * std::numbers::pi / 2.0);
      return c * c;
    };
    const double f0 = f(0);
    // Betas clipped at 0.999 so the terminal coefficient stays positive.
    for (int t = 1; t <= T; ++t) {
      double beta = std::min(1.0 - (f(t) / f0) / (f(t - 1) / f0), 0.999);
      ab[t] = ab[t - 1] * (1.0 - beta);
    }
  }
  return NoiseSchedule(kind, std::move(ab));
}

}  // namespace mplab
