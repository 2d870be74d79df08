#include "mplab/objectives.hpp"

#include <array>
#include <cmath>

namespace mplab {

namespace {

struct KindInfo {
  ObjectiveKind kind;
  const char* name;
};

constexpr std::array<KindInfo, 8> kKinds{{{ObjectiveKind::MetricCfg, "metric_cfg"},
                                         {ObjectiveKind::Naive, "naive"},
                                         {ObjectiveKind::Ours, "ours"},
                                         {ObjectiveKind::OursSg, "ours_sg"},
                                         {ObjectiveKind::FlawCfg, "flaw_cfg"},
                                         {ObjectiveKind::FlawSg, "flaw_sg"},
                                         {ObjectiveKind::FlawCv, "flaw_cv"},
                                         {ObjectiveKind::Diversity, "diversity"}}};

// Which of the naive choices a pair objective carries, and how much of the
// gradient reaches each side of the squared difference.
struct PairRule {
  bool cfg = false;
  bool cv = false;          // second branch conditioned on C_v
  bool frozen_second = false;
  double weight_second = 1.0;
  double value_scale = 1.0;
};

PairRule rule_for(const ObjectiveSpec& spec) {
  PairRule r;
  switch (spec.kind) {
    case ObjectiveKind::MetricCfg: r.cfg = true; r.frozen_second = true; break;
    case ObjectiveKind::Naive: r.cfg = r.cv = r.frozen_second = true; break;
    case ObjectiveKind::Ours: break;
    case ObjectiveKind::OursSg:
      r.weight_second = spec.lambda;
      r.value_scale = 1.0 + spec.lambda;
      break;
    case ObjectiveKind::FlawCfg: r.cfg = true; break;
    case ObjectiveKind::FlawSg: r.frozen_second = true; break;
    case ObjectiveKind::FlawCv: r.cv = true; break;
    case ObjectiveKind::Diversity: break;
  }
  if (r.frozen_second) r.weight_second = 0.0;
  return r;
}

struct Encoded {
  Condition cv;
  Condition base;
  TextEncoder::Trace trace;
};

Encoded encode_inputs(const ObjectiveContext& ctx, const LearnableToken& v, bool needs_token) {
  const DiffusionModel& model = *ctx.model;
  Encoded enc;
  enc.base = model.condition(ctx.cond, model.text.encode(ctx.prompt.base(), nullptr));
  if (needs_token) {
    if (ctx.prompt.placeholders != v.count())
      throw std::invalid_argument("learnable token count does not match the prompt's placeholders");
    enc.cv = model.condition(ctx.cond, model.text.encode(ctx.prompt, &v, &enc.trace));
  } else {
    enc.cv = enc.base;
  }
  return enc;
}

struct PairDraw {
  double dist2 = 0.0;
  Vector grad_cv;
  Vector grad_z;
};

PairDraw pair_draw(const DiffusionModel& model, const PairRule& rule, double w, const Latent& z, int t, int s,
                   const Encoded& enc, const Vector& eps, bool want_grad) {
  const Denoiser& net = *model.eps;
  const NoiseSchedule& sched = model.schedule;
  const double w_eff = rule.cfg ? w : 1.0;
  const double at = sched.alpha_bar(t), as = sched.alpha_bar(s);
  const double sig_t = std::sqrt(1.0 - at), sig_s = std::sqrt(1.0 - as);
  const double rt = std::sqrt(at), rs = std::sqrt(as);

  const EpsPrediction e1 = guided_eps(net, z, t, enc.cv, w_eff);
  const Vector a = tweedie_denoise(z, e1, t, sched);
  const Vector zs = rs * a + sig_s * eps;
  const Condition& c2 = rule.cv ? enc.cv : enc.base;
  const EpsPrediction e2 = guided_eps(net, zs, s, c2, w_eff);
  const Vector b = tweedie_denoise(zs, e2, s, sched);
  const Vector r = a - b;

  PairDraw out;
  out.dist2 = r.squaredNorm();
  if (!want_grad) return out;

  Vector ga = 2.0 * r;
  out.grad_cv = Vector::Zero(enc.cv.embedding->size());
  if (rule.weight_second != 0.0) {
    const Vector gb = -2.0 * rule.weight_second * r;
    const EpsVjp back = guided_vjp(net, zs, s, c2, w_eff, gb);
    const Vector gzs = (gb - sig_s * back.grad_z) / rs;
    if (rule.cv) out.grad_cv -= sig_s / rs * back.grad_c;
    ga += rs * gzs;
  }
  const EpsVjp front = guided_vjp(net, z, t, enc.cv, w_eff, ga);
  out.grad_cv -= sig_t / rt * front.grad_c;
  out.grad_z = (ga - sig_t * front.grad_z) / rt;
  return out;
}

void check_inputs(const ObjectiveSpec& spec, const ObjectiveContext& ctx, const Matrix& z, int t, int s,
                  const std::vector<Vector>& eps_draws) {
  if (!ctx.model || !ctx.model->eps) throw std::invalid_argument("objective needs a model");
  const int T = ctx.model->schedule.steps();
  spec.validate(T);
  ctx.model->schedule.check_step(t, 1);
  ctx.model->schedule.check_step(s, 1);
  if (z.rows() != ctx.model->dim()) throw std::invalid_argument("latent dimension mismatch");
  if (spec.kind == ObjectiveKind::Diversity) {
    if (z.cols() < 2) throw std::invalid_argument("diversity objective needs a batch of at least 2 latents");
    return;
  }
  if (z.cols() != 1) throw std::invalid_argument("pair objectives take a single latent");
  if (static_cast<int>(eps_draws.size()) != spec.mc_samples)
    throw std::invalid_argument("number of eps draws must equal mc_samples");
  for (const auto& e : eps_draws)
    if (e.size() != z.rows()) throw std::invalid_argument("eps draw dimension mismatch");
  if (uses_cfg(spec.kind) && spec.w != 1.0 && !ctx.model->eps->has_unconditional())
    throw std::invalid_argument("model has no unconditional branch; guidance scale must be 1");
}

GradReport run(const ObjectiveSpec& spec, const ObjectiveContext& ctx, const Matrix& z, int t, int s,
               const LearnableToken& v, const std::vector<Vector>& eps_draws, bool want_grad) {
  check_inputs(spec, ctx, z, t, s, eps_draws);
  const DiffusionModel& model = *ctx.model;
  const bool needs_token = spec.kind != ObjectiveKind::MetricCfg;
  const Encoded enc = encode_inputs(ctx, v, needs_token);

  GradReport report;
  Vector grad_cv = Vector::Zero(enc.cv.embedding->size());
  report.grad_z = Matrix::Zero(z.rows(), z.cols());

  if (spec.kind == ObjectiveKind::Diversity) {
    const NoiseSchedule& sched = model.schedule;
    const double at = sched.alpha_bar(t);
    const Index B = z.cols();
    Matrix a(z.rows(), B);
    for (Index i = 0; i < B; ++i) a.col(i) = tweedie_denoise(z.col(i), model.eps->predict(z.col(i), t, enc.cv), t, sched);
    const Vector sum = a.rowwise().sum();
    double value = 0.0;
    for (Index i = 0; i < B; ++i)
      for (Index j = 0; j < B; ++j)
        if (i != j) value += (a.col(i) - a.col(j)).squaredNorm();
    report.value = report.j1 = value;
    if (want_grad) {
      for (Index i = 0; i < B; ++i) {
        const Vector ga = 4.0 * (static_cast<double>(B) * a.col(i) - sum);
        const EpsVjp back = model.eps->vjp(z.col(i), t, enc.cv, ga);
        grad_cv -= std::sqrt(1.0 - at) / std::sqrt(at) * back.grad_c;
        report.grad_z.col(i) = (ga - std::sqrt(1.0 - at) * back.grad_z) / std::sqrt(at);
      }
    }
  } else {
    const PairRule rule = rule_for(spec);
    const double inv = 1.0 / static_cast<double>(eps_draws.size());
    double dist2 = 0.0;
    for (const auto& eps : eps_draws) {
      const PairDraw draw = pair_draw(model, rule, spec.w, z.col(0), t, s, enc, eps, want_grad);
      dist2 += inv * draw.dist2;
      if (want_grad) {
        grad_cv += inv * draw.grad_cv;
        report.grad_z.col(0) += inv * draw.grad_z;
      }
    }
    report.j1 = dist2;
    report.j2 = spec.kind == ObjectiveKind::OursSg ? dist2 : 0.0;
    report.value = rule.value_scale * dist2;
  }

  if (needs_token && want_grad)
    report.grad = model.text.vjp_token(enc.trace, grad_cv, ctx.prompt.placeholders);
  else
    report.grad = Matrix::Zero(v.count(), v.v.cols());
  return report;
}

}  // namespace

std::string to_string(ObjectiveKind kind) {
  for (const auto& k : kKinds)
    if (k.kind == kind) return k.name;
  return "ours_sg";
}

ObjectiveKind objective_kind_from_string(const std::string& name) {
  for (const auto& k : kKinds)
    if (name == k.name) return k.kind;
  throw std::invalid_argument("unknown objective kind: " + name);
}

int SSchedule::at(int t, int T) const {
  if (kind == Kind::Fixed) return fixed;
  return std::clamp(T - t, 1, T);
}

std::string to_string(const SSchedule& s) {
  return s.kind == SSchedule::Kind::Inverse ? "inverse" : "fixed:" + std::to_string(s.fixed);
}

SSchedule s_schedule_from_string(const std::string& text) {
  if (text == "inverse") return SSchedule::inverse();
  if (text.rfind("fixed:", 0) == 0) {
    std::size_t used = 0;
    const std::string num = text.substr(6);
    const int s = std::stoi(num, &used);
    if (used != num.size()) throw std::invalid_argument("bad s schedule: " + text);
    return SSchedule::fixed_at(s);
  }
  throw std::invalid_argument("bad s schedule: " + text + " (expected inverse or fixed:<s>)");
}

void ObjectiveSpec::validate(int T) const {
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  if (mc_samples < 1) throw std::invalid_argument("mc_samples must be >= 1");
  if (s_schedule.kind == SSchedule::Kind::Fixed && (s_schedule.fixed < 1 || s_schedule.fixed > T))
    throw std::invalid_argument("fixed s must lie in 1..T");
  if (!std::isfinite(w)) throw std::invalid_argument("guidance scale must be finite");
}

bool uses_cfg(ObjectiveKind kind) {
  return kind == ObjectiveKind::MetricCfg || kind == ObjectiveKind::Naive || kind == ObjectiveKind::FlawCfg;
}

EpsPrediction guided_eps(const Denoiser& net, const Latent& z, double t, const Condition& c, double w) {
  EpsPrediction cond = net.predict(z, t, c);
  if (w == 1.0) return cond;
  if (!net.has_unconditional()) throw std::invalid_argument("model has no unconditional branch; guidance scale must be 1");
  return cfg_combine(cond, net.predict(z, t, Condition::null()), w);
}

EpsVjp guided_vjp(const Denoiser& net, const Latent& z, double t, const Condition& c, double w, const Vector& g) {
  if (w == 1.0) return net.vjp(z, t, c, g);
  EpsVjp out = net.vjp(z, t, c, w * g);
  out.grad_z += net.vjp(z, t, Condition::null(), (1.0 - w) * g).grad_z;
  return out;
}

double eval_objective(const ObjectiveSpec& spec, const ObjectiveContext& ctx, const Matrix& z, int t, int s,
                      const LearnableToken& v, const std::vector<Vector>& eps_draws) {
  return run(spec, ctx, z, t, s, v, eps_draws, false).value;
}

GradReport grad_v(const ObjectiveSpec& spec, const ObjectiveContext& ctx, const Matrix& z, int t, int s,
                  const LearnableToken& v, const std::vector<Vector>& eps_draws) {
  return run(spec, ctx, z, t, s, v, eps_draws, true);
}

namespace {

std::vector<Vector> draw_eps(const ObjectiveSpec& spec, Index d, Rng& rng) {
  std::vector<Vector> draws;
  if (spec.kind == ObjectiveKind::Diversity) return draws;
  for (int k = 0; k < spec.mc_samples; ++k) draws.push_back(standard_normal(rng, d));
  return draws;
}

}  // namespace

OptimizeResult optimize_emb(const ObjectiveContext& ctx, const Matrix& z, int t, int s, const LearnableToken& v0,
                            const ObjectiveSpec& spec, int K, double lr, Rng& eps_rng) {
  if (K < 1) throw std::invalid_argument("optimize_emb: K must be >= 1");
  if (v0.count() < 1) throw std::invalid_argument("optimize_emb: needs at least one learnable token");
  OptimizeResult out{v0, {}};
  Adam adam(lr);
  for (int k = 0; k < K; ++k) {
    const auto draws = draw_eps(spec, z.rows(), eps_rng);
    GradReport g = grad_v(spec, ctx, z, t, s, out.token, draws);
    if (!std::isfinite(g.value) || !all_finite(g.grad))
      throw NumericalError("optimize_emb: non-finite objective or gradient at t=" + std::to_string(t) +
                           ", iteration " + std::to_string(k) + ", value " + std::to_string(g.value));
    out.values.push_back(g.value);
    if (lr == 0.0) continue;
    adam.step({{out.token.v.data(), out.token.v.size()}}, {{g.grad.data(), g.grad.size()}}, true);
  }
  return out;
}

OptimizeResult optimize_emb(const ObjectiveContext& ctx, const Matrix& z, int t, int s, const LearnableToken& v0,
                            const ObjectiveSpec& spec, int K, double lr, std::uint64_t seed) {
  Rng rng(seed);
  return optimize_emb(ctx, z, t, s, v0, spec, K, lr, rng);
}

LatentOptimizeResult optimize_latent(const ObjectiveContext& ctx, const Latent& z, int t, int s,
                                     const ObjectiveSpec& spec, int K, double lr, Rng& eps_rng) {
  if (K < 1) throw std::invalid_argument("optimize_latent: K must be >= 1");
  LatentOptimizeResult out{z, {}};
  LearnableToken none;
  none.v.resize(0, kTokenDim);
  Adam adam(lr);
  for (int k = 0; k < K; ++k) {
    const auto draws = draw_eps(spec, z.size(), eps_rng);
    GradReport g = grad_v(spec, ctx, out.z, t, s, none, draws);
    if (!std::isfinite(g.value) || !all_finite(g.grad_z))
      throw NumericalError("optimize_latent: non-finite objective or gradient at t=" + std::to_string(t) +
                           ", iteration " + std::to_string(k));
    out.values.push_back(g.value);
    if (lr == 0.0) continue;
    adam.step({{out.z.data(), out.z.size()}}, {{g.grad_z.data(), g.grad_z.size()}}, true);
  }
  return out;
}

Prompt with_placeholders(const Prompt& base, int m, PlaceholderPosition position) {
  if (m < 0) throw std::invalid_argument("placeholder count must be >= 0");
  Prompt p = base;
  p.placeholders = m;
  p.position = position;
  return p;
}

}  // namespace mplab
