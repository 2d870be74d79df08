#include "mplab/samplers.hpp"

#include <array>
#include <chrono>
#include <cmath>

namespace mplab {

namespace {

constexpr std::array<std::pair<SamplerKind, const char*>, 5> kSamplers{{{SamplerKind::Ddim, "ddim"},
                                                                       {SamplerKind::Minority, "minority"},
                                                                       {SamplerKind::Sgms, "sgms"},
                                                                       {SamplerKind::Cads, "cads"},
                                                                       {SamplerKind::Diverse, "diverse"}}};

void check_model(const DiffusionModel& model, int cond, const SamplerConfig& cfg) {
  cfg.validate();
  if (!model.eps) throw std::invalid_argument("sampler needs an eps model");
  if (cfg.T != model.schedule.steps())
    throw std::invalid_argument("sampler T (" + std::to_string(cfg.T) + ") differs from the model schedule (" +
                                std::to_string(model.schedule.steps()) + ")");
  if (cfg.w != 1.0 && !model.eps->has_unconditional())
    throw std::invalid_argument("model has no unconditional branch (trained without condition dropout); use w = 1");
  model.world.condition(cond);
}

Latent guided_ddim(const DiffusionModel& model, const Latent& z, int t, const Condition& c, double w) {
  return ddim_step(z, guided_eps(*model.eps, z, t, c, w), t, model.schedule);
}

SampleRecord blank_record(const DiffusionModel& model, int cond, std::uint64_t seed, const Prompt& prompt) {
  SampleRecord rec;
  rec.seed = seed;
  rec.cond = cond;
  rec.prompt = prompt_text(model, prompt);
  return rec;
}

// Word init without an explicit word uses the condition's first attribute word.
LearnableToken initial_token(const DiffusionModel& model, int cond, const SamplerConfig& cfg, std::uint64_t seed) {
  std::string word = cfg.init_word;
  if (cfg.init_mode == InitMode::Word && word.empty()) {
    for (const auto& [w, ref] : model.world.attribute_words)
      if (ref.condition == cond) {
        word = w;
        break;
      }
    if (word.empty()) throw std::invalid_argument("word init: condition has no attribute word");
  }
  return init_token(model.text.vocab(), cfg.init_mode, cfg.m, mix_seed(seed, 3), word);
}

template <typename Fn>
RunRecord collect(SamplerKind kind, const SamplerConfig& cfg, int n, Fn&& one) {
  if (n < 1) throw std::invalid_argument("sample count must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  RunRecord run;
  run.sampler = kind;
  run.config = cfg;
  for (int i = 0; i < n; ++i) {
    SampleRecord rec = one(sample_seed(cfg.seed, i));
    rec.index = rec.batch = i;
    run.samples.push_back(std::move(rec));
  }
  run.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

}  // namespace

std::string to_string(SamplerKind kind) {
  for (const auto& [k, name] : kSamplers)
    if (k == kind) return name;
  return "ddim";
}

SamplerKind sampler_kind_from_string(const std::string& name) {
  for (const auto& [k, n] : kSamplers)
    if (name == n) return k;
  throw std::invalid_argument("unknown sampler: " + name + " (expected ddim, minority, sgms, cads or diverse)");
}

void SamplerConfig::validate() const {
  if (T < 2) throw std::invalid_argument("T must be >= 2");
  if (N < 1) throw std::invalid_argument("N must be >= 1");
  if (K < 1) throw std::invalid_argument("K must be >= 1");
  if (m < 1) throw std::invalid_argument("m must be >= 1");
  if (!(lr >= 0.0) || !(sgms_lr >= 0.0)) throw std::invalid_argument("learning rates must be >= 0");
  if (!(sgms_s_fraction > 0.0 && sgms_s_fraction <= 1.0)) throw std::invalid_argument("sgms s fraction must lie in (0, 1]");
  if (!(0.0 <= cads_tau1 && cads_tau1 <= cads_tau2 && cads_tau2 <= 1.0))
    throw std::invalid_argument("CADS thresholds need 0 <= tau1 <= tau2 <= 1");
  if (!(cads_noise_scale >= 0.0)) throw std::invalid_argument("CADS noise scale must be >= 0");
  if (batch < 2) throw std::invalid_argument("diverse batch must be >= 2");
  objective_spec().validate(T);
}

ObjectiveSpec SamplerConfig::objective_spec() const {
  ObjectiveSpec spec;
  spec.kind = objective;
  spec.s_schedule = s_schedule;
  spec.lambda = lambda;
  spec.w = w;
  spec.mc_samples = mc_samples;
  return spec;
}

std::uint64_t sample_seed(std::uint64_t master, int index) {
  return mix_seed(master, 1000 + static_cast<std::uint64_t>(index));
}

Rng stream_rng(std::uint64_t seed, Stream stream) { return Rng(mix_seed(seed, static_cast<std::uint64_t>(stream))); }

double cads_gamma(double u, double tau1, double tau2) {
  // tau2 = 0 leaves no room for a noisy phase: the schedule is off.
  if (tau2 <= 0.0 || u <= tau1) return 1.0;
  if (u >= tau2) return 0.0;
  return (tau2 - u) / (tau2 - tau1);
}

std::string prompt_text(const DiffusionModel& model, const Prompt& prompt) {
  std::vector<std::string> words;
  for (int tok : prompt.content) words.push_back(model.text.vocab().words.at(static_cast<std::size_t>(tok)));
  std::vector<std::string> holes(static_cast<std::size_t>(prompt.placeholders), kPlaceholderWord);
  if (prompt.position == PlaceholderPosition::Prefix)
    words.insert(words.begin(), holes.begin(), holes.end());
  else
    words.insert(words.end(), holes.begin(), holes.end());
  std::string out;
  for (const auto& w : words) out += (out.empty() ? "" : " ") + w;
  return out;
}

SampleRecord run_ddim(const DiffusionModel& model, int cond, const SamplerConfig& cfg, std::uint64_t seed) {
  check_model(model, cond, cfg);
  SampleRecord rec = blank_record(model, cond, seed, model.text.base_prompt(cond, model.world));
  Rng noise = stream_rng(seed, Stream::InitialNoise);
  Latent z = standard_normal(noise, model.dim());
  const Condition c = model.condition(cond);
  for (int t = cfg.T; t >= 1; --t) z = guided_ddim(model, z, t, c, cfg.w);
  rec.z0 = std::move(z);
  return rec;
}

SampleRecord run_minority_prompt(const DiffusionModel& model, int cond, const SamplerConfig& cfg, std::uint64_t seed) {
  check_model(model, cond, cfg);
  const Prompt base = model.text.base_prompt(cond, model.world);
  const Prompt prompt = with_placeholders(base, cfg.m, cfg.position);
  SampleRecord rec = blank_record(model, cond, seed, prompt);
  const ObjectiveContext ctx(model, cond, prompt);
  const ObjectiveSpec spec = cfg.objective_spec();

  Rng noise = stream_rng(seed, Stream::InitialNoise);
  Rng eps_rng = stream_rng(seed, Stream::Objective);
  Latent z = standard_normal(noise, model.dim());
  const Condition c_base = model.condition(cond);
  LearnableToken token = initial_token(model, cond, cfg, seed);
  const Matrix v_init = token.v;
  std::optional<Condition> latest;
  // With lr = 0 the optimizer still runs (its objective values are recorded),
  // but C_v is never spliced in, so the trajectory is DDIM's.
  const bool splice = cfg.lr != 0.0;

  for (int t = cfg.T; t >= 1; --t) {
    const Condition* c = &c_base;
    if (t % cfg.N == 0) {
      const int s = spec.s_schedule.at(t, cfg.T);
      OptimizeResult res = optimize_emb(ctx, z, t, s, token, spec, cfg.K, cfg.lr, eps_rng);
      token = std::move(res.token);
      rec.objective.push_back({t, std::move(res.values)});
      ++rec.optimized_steps;
      if (splice) {
        latest = model.condition(cond, model.text.encode(prompt, &token));
        c = &*latest;
      }
    } else if (!cfg.fallback && latest) {
      c = &*latest;
    }
    z = guided_ddim(model, z, t, *c, cfg.w);
  }
  rec.z0 = std::move(z);
  rec.v_init_norm = v_init.norm();
  rec.v_final_norm = token.v.norm();
  rec.v_drift = (token.v - v_init).norm();
  return rec;
}

SampleRecord run_sgms(const DiffusionModel& model, int cond, const SamplerConfig& cfg, std::uint64_t seed) {
  check_model(model, cond, cfg);
  const Prompt base = model.text.base_prompt(cond, model.world);
  SampleRecord rec = blank_record(model, cond, seed, base);
  const ObjectiveContext ctx(model, cond, base);
  ObjectiveSpec spec = cfg.objective_spec();
  spec.kind = ObjectiveKind::MetricCfg;
  const int s = std::clamp(static_cast<int>(std::lround(cfg.sgms_s_fraction * cfg.T)), 1, cfg.T);
  spec.s_schedule = SSchedule::fixed_at(s);

  Rng noise = stream_rng(seed, Stream::InitialNoise);
  Rng eps_rng = stream_rng(seed, Stream::Objective);
  Latent z = standard_normal(noise, model.dim());
  const Condition c = model.condition(cond);
  for (int t = cfg.T; t >= 1; --t) {
    if (t % cfg.N == 0) {
      LatentOptimizeResult res = optimize_latent(ctx, z, t, s, spec, cfg.K, cfg.sgms_lr, eps_rng);
      z = std::move(res.z);
      rec.objective.push_back({t, std::move(res.values)});
      ++rec.optimized_steps;
    }
    z = guided_ddim(model, z, t, c, cfg.w);
  }
  rec.z0 = std::move(z);
  return rec;
}

SampleRecord run_cads(const DiffusionModel& model, int cond, const SamplerConfig& cfg, std::uint64_t seed) {
  check_model(model, cond, cfg);
  SampleRecord rec = blank_record(model, cond, seed, model.text.base_prompt(cond, model.world));
  Rng noise = stream_rng(seed, Stream::InitialNoise);
  Rng eta_rng = stream_rng(seed, Stream::CadsNoise);
  Latent z = standard_normal(noise, model.dim());
  const Condition c = model.condition(cond);
  for (int t = cfg.T; t >= 1; --t) {
    const double gamma = cads_gamma(static_cast<double>(t) / cfg.T, cfg.cads_tau1, cfg.cads_tau2);
    if (gamma == 1.0) {
      z = guided_ddim(model, z, t, c, cfg.w);
      continue;
    }
    const Vector eta = standard_normal(eta_rng, c.embedding->size());
    const Condition noisy =
        model.condition(cond, std::sqrt(gamma) * *c.embedding + cfg.cads_noise_scale * std::sqrt(1.0 - gamma) * eta);
    z = guided_ddim(model, z, t, noisy, cfg.w);
  }
  rec.z0 = std::move(z);
  return rec;
}

std::vector<SampleRecord> run_diverse_batch(const DiffusionModel& model, int cond, const SamplerConfig& cfg,
                                            const std::vector<std::uint64_t>& seeds) {
  check_model(model, cond, cfg);
  if (seeds.size() < 2) throw std::invalid_argument("diverse sampler needs a batch of at least 2");
  const Index B = static_cast<Index>(seeds.size());
  const Prompt base = model.text.base_prompt(cond, model.world);
  const Prompt prompt = with_placeholders(base, cfg.m, cfg.position);
  const ObjectiveContext ctx(model, cond, prompt);
  ObjectiveSpec spec = cfg.objective_spec();
  spec.kind = ObjectiveKind::Diversity;

  Matrix z(model.dim(), B);
  for (Index i = 0; i < B; ++i) {
    Rng noise = stream_rng(seeds[static_cast<std::size_t>(i)], Stream::InitialNoise);
    z.col(i) = standard_normal(noise, model.dim());
  }
  Rng eps_rng = stream_rng(seeds.front(), Stream::Objective);
  LearnableToken token = initial_token(model, cond, cfg, seeds.front());
  const Matrix v_init = token.v;
  const Condition c_base = model.condition(cond);
  std::optional<Condition> latest;
  std::vector<StepObjective> trace;
  int optimized = 0;

  for (int t = cfg.T; t >= 1; --t) {
    const Condition* c = &c_base;
    if (t % cfg.N == 0) {
      OptimizeResult res = optimize_emb(ctx, z, t, spec.s_schedule.at(t, cfg.T), token, spec, cfg.K, cfg.lr, eps_rng);
      token = std::move(res.token);
      trace.push_back({t, std::move(res.values)});
      ++optimized;
      if (cfg.lr != 0.0) {
        latest = model.condition(cond, model.text.encode(prompt, &token));
        c = &*latest;
      }
    } else if (!cfg.fallback && latest) {
      c = &*latest;
    }
    for (Index i = 0; i < B; ++i) z.col(i) = guided_ddim(model, z.col(i), t, *c, cfg.w);
  }

  std::vector<SampleRecord> out;
  for (Index i = 0; i < B; ++i) {
    SampleRecord rec = blank_record(model, cond, seeds[static_cast<std::size_t>(i)], prompt);
    rec.z0 = z.col(i);
    rec.objective = trace;
    rec.optimized_steps = optimized;
    rec.v_init_norm = v_init.norm();
    rec.v_final_norm = token.v.norm();
    rec.v_drift = (token.v - v_init).norm();
    out.push_back(std::move(rec));
  }
  return out;
}

RunRecord sample_ddim(const DiffusionModel& model, int cond, const SamplerConfig& cfg, int n) {
  return collect(SamplerKind::Ddim, cfg, n, [&](std::uint64_t s) { return run_ddim(model, cond, cfg, s); });
}

RunRecord sample_minority_prompt(const DiffusionModel& model, int cond, const SamplerConfig& cfg, int n) {
  return collect(SamplerKind::Minority, cfg, n, [&](std::uint64_t s) { return run_minority_prompt(model, cond, cfg, s); });
}

RunRecord sample_sgms(const DiffusionModel& model, int cond, const SamplerConfig& cfg, int n) {
  return collect(SamplerKind::Sgms, cfg, n, [&](std::uint64_t s) { return run_sgms(model, cond, cfg, s); });
}

RunRecord sample_cads(const DiffusionModel& model, int cond, const SamplerConfig& cfg, int n) {
  return collect(SamplerKind::Cads, cfg, n, [&](std::uint64_t s) { return run_cads(model, cond, cfg, s); });
}

RunRecord sample_diverse_batch(const DiffusionModel& model, int cond, const SamplerConfig& cfg, int n) {
  if (n < 2 || n % cfg.batch != 0)
    throw std::invalid_argument("diverse sampler: n must be a positive multiple of the batch size");
  const auto start = std::chrono::steady_clock::now();
  RunRecord run;
  run.sampler = SamplerKind::Diverse;
  run.config = cfg;
  for (int g = 0; g * cfg.batch < n; ++g) {
    std::vector<std::uint64_t> seeds;
    for (int j = 0; j < cfg.batch; ++j) seeds.push_back(sample_seed(cfg.seed, g * cfg.batch + j));
    auto group = run_diverse_batch(model, cond, cfg, seeds);
    for (int j = 0; j < cfg.batch; ++j) {
      group[static_cast<std::size_t>(j)].index = g * cfg.batch + j;
      group[static_cast<std::size_t>(j)].batch = g;
      run.samples.push_back(std::move(group[static_cast<std::size_t>(j)]));
    }
  }
  run.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

RunRecord run_sampler(SamplerKind kind, const DiffusionModel& model, int cond, const SamplerConfig& cfg, int n) {
  switch (kind) {
    case SamplerKind::Ddim: return sample_ddim(model, cond, cfg, n);
    case SamplerKind::Minority: return sample_minority_prompt(model, cond, cfg, n);
    case SamplerKind::Sgms: return sample_sgms(model, cond, cfg, n);
    case SamplerKind::Cads: return sample_cads(model, cond, cfg, n);
    case SamplerKind::Diverse: return sample_diverse_batch(model, cond, cfg, n);
  }
  throw std::invalid_argument("unknown sampler");
}

}  // namespace mplab
