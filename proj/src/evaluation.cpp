#include "mplab/evaluation.hpp"

#include "mplab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace mplab {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;

struct OdeState {
  const Denoiser* net;
  const Condition* cond;
  int evaluations = 0;
};

// y = (x, accumulated divergence). Valid inside one grid interval, where the
// slope of alpha_bar is constant.
Vector rhs(OdeState& st, double tau, const Vector& y, double slope) {
  const NoiseSchedule& sched = st.net->schedule();
  const Index d = y.size() - 1;
  const double ab = sched.alpha_bar_at(tau);
  const double beta = -slope / ab;
  const double sigma = std::sqrt(1.0 - ab);
  const Latent x = y.head(d);
  const EpsPrediction eps = st.net->predict(x, tau, *st.cond);
  const double trace = st.net->jacobian_z(x, tau, *st.cond).trace();
  ++st.evaluations;
  Vector out(d + 1);
  out.head(d) = -0.5 * beta * (x - eps / sigma);
  out[d] = -0.5 * beta * (static_cast<double>(d) - trace / sigma);
  return out;
}

void integrate_interval(OdeState& st, double t0, double t1, Vector& y, const PfOdeOptions& opts, int& steps) {
  const double slope = st.net->schedule().alpha_bar_slope(t0);
  const double span = t1 - t0;
  double t = t0;
  double h = span / 8.0;
  Vector k1 = rhs(st, t, y, slope);
  while (t < t1) {
    if (t + h > t1) h = t1 - t;
    if (h < 1e-12 * std::max(1.0, span))
      throw NumericalError("pf_ode_loglik: step size underflow at t=" + std::to_string(t));
    if (++steps > opts.max_steps)
      throw NumericalError("pf_ode_loglik: step budget exhausted at t=" + std::to_string(t));
    const Vector k2 = rhs(st, t + c2 * h, y + h * a21 * k1, slope);
    const Vector k3 = rhs(st, t + c3 * h, y + h * (a31 * k1 + a32 * k2), slope);
    const Vector k4 = rhs(st, t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3), slope);
    const Vector k5 = rhs(st, t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4), slope);
    const Vector k6 = rhs(st, t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5), slope);
    const Vector y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Vector k7 = rhs(st, t + h, y_new, slope);
    const Vector err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const Vector scale = (opts.atol + opts.rtol * y.cwiseAbs().cwiseMax(y_new.cwiseAbs()).array()).matrix();
    const double norm = std::sqrt(err.cwiseQuotient(scale).squaredNorm() / static_cast<double>(err.size()));
    if (!std::isfinite(norm)) throw NumericalError("pf_ode_loglik: non-finite state at t=" + std::to_string(t));
    if (norm <= 1.0) {
      t += h;
      y = y_new;
      k1 = k7;   // first-same-as-last
    }
    const double factor = norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(norm, -0.2), 0.2, 5.0);
    h *= factor;
  }
}

std::vector<Latent> latents_of(const RunRecord& run, int cond) {
  std::vector<Latent> out;
  for (const auto& s : run.samples)
    if (s.cond == cond) out.push_back(s.z0);
  return out;
}

std::vector<int> conditions_in(const RunRecord& run) {
  std::vector<int> out;
  for (const auto& s : run.samples)
    if (std::find(out.begin(), out.end(), s.cond) == out.end()) out.push_back(s.cond);
  std::sort(out.begin(), out.end());
  return out;
}

double half_width(const std::vector<double>& x, const EvalOptions& opts, std::uint64_t stream) {
  return stats::bootstrap_half_width(x, opts.bootstrap_resamples, mix_seed(opts.seed, stream));
}

}  // namespace

LoglikResult pf_ode_loglik(const Denoiser& net, const Latent& x, const Condition& c, const PfOdeOptions& opts) {
  const int T = net.schedule().steps();
  if (!(opts.t_start > 0.0 && opts.t_start < T)) throw std::invalid_argument("pf_ode_loglik: t_start must lie in (0, T)");
  if (!all_finite(x)) throw std::invalid_argument("pf_ode_loglik: non-finite input");
  const Index d = x.size();
  OdeState st{&net, &c};
  Vector y(d + 1);
  y.head(d) = x;
  y[d] = 0.0;
  int steps = 0;
  double t = opts.t_start;
  while (t < T) {
    const double next = std::min<double>(std::floor(t) + 1.0, T);
    integrate_interval(st, t, next, y, opts, steps);
    t = next;
  }
  const Vector xT = y.head(d);
  const double log_prior = -0.5 * xT.squaredNorm() - 0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi);
  LoglikResult out;
  out.log_density = log_prior + y[d];
  out.bpd = -out.log_density / (static_cast<double>(d) * std::numbers::ln2);
  out.evaluations = st.evaluations;
  return out;
}

LoglikResult pf_ode_loglik(const DiffusionModel& model, const Latent& x, std::optional<int> cond,
                           const PfOdeOptions& opts) {
  return pf_ode_loglik(*model.eps, x, cond ? model.condition(*cond) : Condition::null(), opts);
}

PrecisionRecall precision_recall(const std::vector<Latent>& real, const std::vector<Latent>& gen, int k) {
  if (k < 1) throw std::invalid_argument("precision_recall: k must be >= 1");
  if (static_cast<int>(real.size()) < k + 1 || static_cast<int>(gen.size()) < k + 1)
    throw std::invalid_argument("precision_recall: both sets need at least k+1 points");
  const auto radii = [k](const std::vector<Latent>& set) {
    std::vector<double> r(set.size());
    std::vector<double> dist(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
      for (std::size_t j = 0; j < set.size(); ++j) dist[j] = (set[i] - set[j]).norm();
      std::nth_element(dist.begin(), dist.begin() + k, dist.end());   // index 0 is the point itself
      r[i] = dist[static_cast<std::size_t>(k)];
    }
    return r;
  };
  const auto coverage = [](const std::vector<Latent>& ref, const std::vector<double>& r, const std::vector<Latent>& q) {
    int inside = 0;
    for (const auto& p : q)
      for (std::size_t i = 0; i < ref.size(); ++i)
        if ((p - ref[i]).norm() <= r[i]) {
          ++inside;
          break;
        }
    return static_cast<double>(inside) / static_cast<double>(q.size());
  };
  return {coverage(real, radii(real), gen), coverage(gen, radii(gen), real)};
}

double in_batch_similarity(const std::vector<Latent>& batch) {
  if (batch.size() < 2) throw std::invalid_argument("in_batch_similarity needs at least 2 samples");
  for (const auto& x : batch)
    if (x.norm() == 0.0) throw std::invalid_argument("in_batch_similarity: zero-norm member");
  double acc = 0.0;
  int pairs = 0;
  for (std::size_t i = 0; i < batch.size(); ++i)
    for (std::size_t j = i + 1; j < batch.size(); ++j) {
      acc += batch[i].dot(batch[j]) / (batch[i].norm() * batch[j].norm());
      ++pairs;
    }
  return acc / pairs;
}

double condition_consistency(const ToyWorld& world, int cond, const std::vector<Latent>& samples) {
  world.condition(cond);
  if (samples.empty()) throw std::invalid_argument("condition_consistency needs samples");
  int hits = 0;
  for (const auto& x : samples) hits += most_likely_condition(world, x) == cond;
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

double minority_hit_rate(const ToyWorld& world, int cond, const std::vector<Latent>& samples) {
  world.condition(cond);
  if (samples.empty()) throw std::invalid_argument("minority_hit_rate needs samples");
  int hits = 0;
  for (const auto& x : samples) hits += classify_component(world, cond, x).tag == ComponentTag::Minority;
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

std::vector<double> true_log_densities(const ToyWorld& world, const RunRecord& run) {
  std::vector<double> out;
  for (const auto& s : run.samples) out.push_back(true_log_density(world, s.cond, s.z0));
  return out;
}

std::vector<double> model_bpds(const DiffusionModel& model, const RunRecord& run, const PfOdeOptions& opts) {
  std::vector<double> out;
  for (const auto& s : run.samples) out.push_back(pf_ode_loglik(model, s.z0, s.cond, opts).bpd);
  return out;
}

std::vector<double> group_similarities(const RunRecord& run, int group) {
  if (group < 2) throw std::invalid_argument("group_similarities: group must be >= 2");
  std::map<std::pair<int, int>, std::vector<Latent>> groups;
  for (const auto& s : run.samples) groups[{s.cond, s.index / group}].push_back(s.z0);
  std::vector<double> out;
  for (const auto& [key, members] : groups)
    if (members.size() >= 2) out.push_back(in_batch_similarity(members));
  return out;
}

EvalReport aggregate_report(const std::vector<NamedRun>& runs, const DiffusionModel& model, const EvalOptions& opts) {
  if (runs.empty()) throw std::invalid_argument("aggregate_report needs at least one run");
  for (const auto& m : opts.metrics)
    if (!kAllMetrics.count(m)) throw std::invalid_argument("unknown metric: " + m);
  const auto wants = [&](const char* m) { return opts.metrics.count(m) > 0; };
  const ToyWorld& world = model.world;
  EvalReport report;
  for (const auto& [method, run] : runs) {
    if (run.samples.empty()) throw std::invalid_argument("run '" + method + "' has no samples");
    MethodRow row;
    row.method = method;
    row.count = static_cast<int>(run.samples.size());
    for (const auto& s : run.samples)
      if (s.z0.size() != world.d) throw std::invalid_argument("run '" + method + "' has a latent of the wrong size");

    if (wants("bpd")) {
      const auto bpd = model_bpds(model, run, opts.ode);
      row.bpd_mean = stats::mean(bpd);
      row.bpd_median = stats::median(bpd);
      row.bpd_half_width = half_width(bpd, opts, 1);
    }
    if (wants("density")) {
      const auto logp = true_log_densities(world, run);
      row.log_density_mean = stats::mean(logp);
      row.log_density_half_width = half_width(logp, opts, 2);
    }
    std::vector<double> hit, consistent;
    for (const auto& s : run.samples) {
      hit.push_back(classify_component(world, s.cond, s.z0).tag == ComponentTag::Minority ? 1.0 : 0.0);
      consistent.push_back(most_likely_condition(world, s.z0) == s.cond ? 1.0 : 0.0);
    }
    if (wants("minority")) {
      row.minority_hit_rate = stats::mean(hit);
      row.minority_hit_half_width = half_width(hit, opts, 3);
    }
    if (wants("consistency")) {
      row.consistency = stats::mean(consistent);
      row.consistency_half_width = half_width(consistent, opts, 4);
    }
    if (wants("pr")) {
      double p = 0.0, r = 0.0;
      int weight = 0;
      for (int c : conditions_in(run)) {
        const auto gen = latents_of(run, c);
        if (static_cast<int>(gen.size()) < opts.pr_k + 1) continue;
        const auto real = sample_data(world, c, static_cast<int>(gen.size()), mix_seed(opts.seed, 100 + c));
        const PrecisionRecall pr = precision_recall(real, gen, opts.pr_k);
        p += pr.precision * static_cast<double>(gen.size());
        r += pr.recall * static_cast<double>(gen.size());
        weight += static_cast<int>(gen.size());
      }
      if (weight > 0) {
        row.precision = p / weight;
        row.recall = r / weight;
      }
    }
    if (wants("ibs")) {
      const int group = opts.ibs_group > 0 ? opts.ibs_group : run.config.batch;
      const auto sims = group_similarities(run, group);
      if (!sims.empty()) row.in_batch_similarity = stats::mean(sims);
    }
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace mplab
