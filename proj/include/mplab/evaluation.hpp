#pragma once

#include "mplab/samplers.hpp"

#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace mplab {

struct PfOdeOptions {
  double rtol = 1e-5;
  double atol = 1e-5;
  double t_start = 1e-2;   // ODE starts here instead of at the singular t = 0
  int max_steps = 200000;
};

struct LoglikResult {
  double log_density = 0.0;
  double bpd = 0.0;
  int evaluations = 0;   // right-hand-side evaluations
};

// Exact model likelihood through the probability-flow ODE on the linear
// interpolation of alpha_bar. The divergence uses the full Jacobian trace.
LoglikResult pf_ode_loglik(const Denoiser& net, const Latent& x, const Condition& c, const PfOdeOptions& opts = {});
// Conditions on the base prompt of `cond`, or runs unconditionally.
LoglikResult pf_ode_loglik(const DiffusionModel& model, const Latent& x, std::optional<int> cond,
                           const PfOdeOptions& opts = {});

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

// kNN-manifold precision and recall on raw coordinates.
PrecisionRecall precision_recall(const std::vector<Latent>& real, const std::vector<Latent>& gen, int k = 5);

// Mean cosine similarity over unordered pairs.
double in_batch_similarity(const std::vector<Latent>& batch);

double condition_consistency(const ToyWorld& world, int cond, const std::vector<Latent>& samples);
double minority_hit_rate(const ToyWorld& world, int cond, const std::vector<Latent>& samples);

struct MethodRow {
  std::string method;
  int count = 0;
  double bpd_mean = NAN, bpd_median = NAN, bpd_half_width = NAN;
  double log_density_mean = NAN, log_density_half_width = NAN;
  double minority_hit_rate = NAN, minority_hit_half_width = NAN;
  double consistency = NAN, consistency_half_width = NAN;
  double precision = NAN, recall = NAN;
  double in_batch_similarity = NAN;
};

struct EvalReport {
  std::vector<MethodRow> rows;
};

inline const std::set<std::string> kAllMetrics{"bpd", "density", "minority", "consistency", "pr", "ibs"};

struct EvalOptions {
  std::set<std::string> metrics = kAllMetrics;
  int bootstrap_resamples = 1000;
  std::uint64_t seed = 0;
  int pr_k = 5;
  int ibs_group = 0;   // 0: the run's diverse batch size
  PfOdeOptions ode;
};

struct NamedRun {
  std::string method;
  RunRecord run;
};

// Per-sample quantities reused by aggregate_report and the acceptance suite.
std::vector<double> true_log_densities(const ToyWorld& world, const RunRecord& run);
std::vector<double> model_bpds(const DiffusionModel& model, const RunRecord& run, const PfOdeOptions& opts = {});
// IBS of consecutive groups of `group` samples (by sample index).
std::vector<double> group_similarities(const RunRecord& run, int group);

EvalReport aggregate_report(const std::vector<NamedRun>& runs, const DiffusionModel& model, const EvalOptions& opts = {});

}  // namespace mplab
