#pragma once

#include "mplab/denoiser.hpp"

#include <string>
#include <vector>

namespace mplab {

// metric_cfg      CFG reconstruction metric on the base prompt, second branch frozen
// naive           metric_cfg with C_v in both branches
// ours            plain clean estimates, gradient through both branches
// ours_sg         crossed stop-gradient split of ours, J1 + lambda J2
// flaw_cfg/sg/cv  ours with exactly one of the naive choices switched on
// diversity       repulsion of clean estimates over a batch (all ordered pairs)
enum class ObjectiveKind { MetricCfg, Naive, Ours, OursSg, FlawCfg, FlawSg, FlawCv, Diversity };

std::string to_string(ObjectiveKind kind);
ObjectiveKind objective_kind_from_string(const std::string& name);

struct SSchedule {
  enum class Kind { Fixed, Inverse };
  Kind kind = Kind::Inverse;
  int fixed = 1;

  static SSchedule inverse() { return {}; }
  static SSchedule fixed_at(int s) { return {Kind::Fixed, s}; }
  // Inverse: clamp(T - t, 1, T).
  int at(int t, int T) const;
};

std::string to_string(const SSchedule& s);
SSchedule s_schedule_from_string(const std::string& text);   // "inverse" or "fixed:<s>"

struct ObjectiveSpec {
  ObjectiveKind kind = ObjectiveKind::OursSg;
  SSchedule s_schedule;
  double lambda = 1.0;
  double w = 7.5;          // used by the CFG-based kinds only
  int mc_samples = 1;

  void validate(int T) const;
};

bool uses_cfg(ObjectiveKind kind);

struct GradReport {
  double value = 0.0;
  Matrix grad;     // d value / d v, m x e (zero for metric_cfg)
  Matrix grad_z;   // d value / d z_t, d x B
  double j1 = 0.0;
  double j2 = 0.0;
};

// Everything an objective needs besides the latent: the model, the requested
// condition and the prompt carrying the placeholder slots.
struct ObjectiveContext {
  const DiffusionModel* model = nullptr;
  int cond = 0;
  Prompt prompt;   // with placeholders; prompt.base() is the plain user prompt

  ObjectiveContext(const DiffusionModel& m, int c, Prompt p) : model(&m), cond(c), prompt(std::move(p)) {}
};

// eps prediction with guidance scale w; w == 1 never touches the
// unconditional branch.
EpsPrediction guided_eps(const Denoiser& net, const Latent& z, double t, const Condition& c, double w);
EpsVjp guided_vjp(const Denoiser& net, const Latent& z, double t, const Condition& c, double w, const Vector& g);

// z: d x B. B must be 1 except for the diversity kind. eps_draws holds
// mc_samples vectors (ignored by diversity).
double eval_objective(const ObjectiveSpec& spec, const ObjectiveContext& ctx, const Matrix& z, int t, int s,
                      const LearnableToken& v, const std::vector<Vector>& eps_draws);

GradReport grad_v(const ObjectiveSpec& spec, const ObjectiveContext& ctx, const Matrix& z, int t, int s,
                  const LearnableToken& v, const std::vector<Vector>& eps_draws);

struct OptimizeResult {
  LearnableToken token;
  std::vector<double> values;   // objective at the start of each iteration
};

// K Adam ascent steps on v with fresh moments; one eps draw per iteration
// (mc_samples draws when mc_samples > 1) taken from `eps_rng`.
OptimizeResult optimize_emb(const ObjectiveContext& ctx, const Matrix& z, int t, int s, const LearnableToken& v0,
                            const ObjectiveSpec& spec, int K, double lr, Rng& eps_rng);
OptimizeResult optimize_emb(const ObjectiveContext& ctx, const Matrix& z, int t, int s, const LearnableToken& v0,
                            const ObjectiveSpec& spec, int K, double lr, std::uint64_t seed);

struct LatentOptimizeResult {
  Latent z;
  std::vector<double> values;
};

// K Adam ascent steps on the latent itself under the metric_cfg objective.
LatentOptimizeResult optimize_latent(const ObjectiveContext& ctx, const Latent& z, int t, int s,
                                     const ObjectiveSpec& spec, int K, double lr, Rng& eps_rng);

Prompt with_placeholders(const Prompt& base, int m, PlaceholderPosition position);

}  // namespace mplab
