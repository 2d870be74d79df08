#include "helpers.hpp"
#include "mplab/samplers.hpp"

#include <doctest.h>

using namespace mplab;

namespace {

const DiffusionModel& analytic() {
  static const DiffusionModel m = make_analytic_model(make_world(), make_schedule(50), 0);
  return m;
}

SamplerConfig base_config(double w = 1.0) {
  SamplerConfig cfg;
  cfg.w = w;
  cfg.seed = 123;
  return cfg;
}

bool same_latents(const RunRecord& a, const RunRecord& b) {
  if (a.samples.size() != b.samples.size()) return false;
  for (std::size_t i = 0; i < a.samples.size(); ++i)
    if (a.samples[i].z0 != b.samples[i].z0) return false;
  return true;
}

double minority_rate(const DiffusionModel& m, const RunRecord& run) {
  int hits = 0;
  for (const auto& s : run.samples) hits += classify_component(m.world, s.cond, s.z0).tag == ComponentTag::Minority ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(run.samples.size());
}

}  // namespace

TEST_CASE("DDIM on a standard normal world ends at a standard normal") {
  const DiffusionModel m = make_analytic_model(make_standard_normal_world(2), make_schedule(50), 0);
  const RunRecord run = sample_ddim(m, 0, base_config(), 2000);
  Vector mean = Vector::Zero(2);
  for (const auto& s : run.samples) mean += s.z0;
  mean /= 2000.0;
  Matrix cov = Matrix::Zero(2, 2);
  for (const auto& s : run.samples) cov += (s.z0 - mean) * (s.z0 - mean).transpose();
  cov /= 1999.0;
  CHECK(mean.norm() < 4.0 * std::sqrt(2.0 / 2000.0));
  CHECK((cov - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 0.1);
}

TEST_CASE("every sampler is deterministic under a fixed seed") {
  const DiffusionModel& m = analytic();
  SamplerConfig cfg = base_config(7.5);
  for (SamplerKind kind : {SamplerKind::Ddim, SamplerKind::Minority, SamplerKind::Sgms, SamplerKind::Cads,
                           SamplerKind::Diverse}) {
    const RunRecord a = run_sampler(kind, m, 1, cfg, 4), b = run_sampler(kind, m, 1, cfg, 4);
    CHECK(same_latents(a, b));
    CHECK(a.samples.size() == 4);
    for (const auto& s : a.samples) CHECK(all_finite(s.z0));
    cfg.seed = 124;
    CHECK_FALSE(same_latents(a, run_sampler(kind, m, 1, cfg, 4)));
    cfg.seed = 123;
  }
}

TEST_CASE("samples of a run are paired by index across samplers") {
  const DiffusionModel& m = analytic();
  const RunRecord a = sample_ddim(m, 0, base_config(), 3);
  const RunRecord b = sample_minority_prompt(m, 0, base_config(), 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(a.samples[static_cast<std::size_t>(i)].seed == sample_seed(123, i));
    CHECK(b.samples[static_cast<std::size_t>(i)].seed == sample_seed(123, i));
    CHECK(run_ddim(m, 0, base_config(), sample_seed(123, i)).z0 == a.samples[static_cast<std::size_t>(i)].z0);
  }
}

TEST_CASE("degenerate configurations reproduce DDIM bitwise") {
  const DiffusionModel& m = analytic();
  for (double w : {1.0, 7.5}) {
    const SamplerConfig cfg = base_config(w);
    const RunRecord ddim = sample_ddim(m, 2, cfg, 6);

    SamplerConfig never = cfg;
    never.N = 51;
    CHECK(same_latents(ddim, sample_minority_prompt(m, 2, never, 6)));

    SamplerConfig still = cfg;
    still.lr = 0.0;
    const RunRecord mp = sample_minority_prompt(m, 2, still, 6);
    CHECK(same_latents(ddim, mp));
    CHECK(mp.samples[0].optimized_steps > 0);
    CHECK(mp.samples[0].v_drift == 0.0);
    still.batch = 2;
    CHECK(same_latents(ddim, sample_diverse_batch(m, 2, still, 6)));

    SamplerConfig flat = cfg;
    flat.sgms_lr = 0.0;
    CHECK(same_latents(ddim, sample_sgms(m, 2, flat, 6)));

    SamplerConfig off = cfg;
    off.cads_tau1 = off.cads_tau2 = 0.0;
    CHECK(same_latents(ddim, sample_cads(m, 2, off, 6)));
  }
}

TEST_CASE("optimization moves the token and the output") {
  const DiffusionModel& m = analytic();
  const SamplerConfig cfg = base_config();
  const SampleRecord a = run_ddim(m, 0, cfg, 77), b = run_minority_prompt(m, 0, cfg, 77);
  CHECK(b.optimized_steps == 16);   // t = 48, 45, ..., 3
  CHECK(b.v_drift > 0.0);
  CHECK(b.objective.size() == 16);
  for (const auto& step : b.objective) CHECK(step.values.size() == 3);
  CHECK(a.z0 != b.z0);
  CHECK(b.prompt.find(kPlaceholderWord) != std::string::npos);
}

TEST_CASE("DDIM minority hit rate matches the minority mass") {
  const DiffusionModel& m = analytic();
  for (int cond = 0; cond < m.world.num_conditions(); ++cond) {
    SamplerConfig cfg = base_config();
    cfg.seed = 900 + static_cast<std::uint64_t>(cond);
    const double rate = minority_rate(m, sample_ddim(m, cond, cfg, 2000));
    CHECK(std::abs(rate - 0.10) <= 0.03);
  }
}

TEST_CASE("CADS schedule and variants") {
  CHECK(cads_gamma(0.5, 0.8, 1.0) == 1.0);
  CHECK(cads_gamma(0.9, 0.8, 1.0) == doctest::Approx(0.5));
  CHECK(cads_gamma(1.0, 0.8, 1.0) == 0.0);
  CHECK(cads_gamma(0.3, 0.0, 0.0) == 1.0);

  const DiffusionModel& m = analytic();
  SamplerConfig cfg = base_config(7.5);
  cfg.cads_noise_scale = 0.0;
  const RunRecord a = sample_cads(m, 3, cfg, 3), b = sample_cads(m, 3, cfg, 3);
  CHECK(same_latents(a, b));
  CHECK_FALSE(same_latents(a, sample_ddim(m, 3, cfg, 3)));
}

TEST_CASE("diverse sampler") {
  const DiffusionModel& m = analytic();
  const SamplerConfig cfg = base_config();
  // identical initial noise: the repulsion gradient vanishes and the token never moves
  const auto twins = run_diverse_batch(m, 0, cfg, {55, 55});
  CHECK(twins[0].z0 == twins[1].z0);
  CHECK(twins[0].v_drift == 0.0);
  CHECK(twins[0].optimized_steps > 0);

  const RunRecord run = sample_diverse_batch(m, 0, cfg, 8);
  CHECK(run.samples.size() == 8);
  CHECK(run.samples[5].batch == 1);
  CHECK_THROWS_AS(sample_diverse_batch(m, 0, cfg, 7), std::invalid_argument);

  int wider = 0;
  const int trials = 200;
  SamplerConfig pair = cfg;
  pair.batch = 2;
  for (int k = 0; k < trials; ++k) {
    const std::uint64_t s1 = sample_seed(31, 2 * k), s2 = sample_seed(31, 2 * k + 1);
    const auto d = run_diverse_batch(m, k % 4, pair, {s1, s2});
    const double ours = (d[0].z0 - d[1].z0).norm();
    const double base = (run_ddim(m, k % 4, pair, s1).z0 - run_ddim(m, k % 4, pair, s2).z0).norm();
    if (ours >= base) ++wider;
  }
  MESSAGE("diverse pairs wider than DDIM: ", wider, "/", trials);
  CHECK(wider >= 140);
}

TEST_CASE("configuration errors") {
  const DiffusionModel& m = analytic();
  SamplerConfig cfg = base_config();
  cfg.K = 0;
  CHECK_THROWS_AS(sample_minority_prompt(m, 0, cfg, 1), std::invalid_argument);
  cfg = base_config();
  cfg.T = 40;
  CHECK_THROWS_AS(sample_ddim(m, 0, cfg, 1), std::invalid_argument);
  cfg = base_config();
  cfg.cads_tau1 = 0.9;
  cfg.cads_tau2 = 0.5;
  CHECK_THROWS_AS(sample_cads(m, 0, cfg, 1), std::invalid_argument);
  CHECK_THROWS(sample_ddim(m, 7, base_config(), 1));
  CHECK_THROWS_AS(sampler_kind_from_string("euler"), std::invalid_argument);
  for (const char* name : {"ddim", "minority", "sgms", "cads", "diverse"})
    CHECK(to_string(sampler_kind_from_string(name)) == name);

  DiffusionModel cond_only = m;
  Rng rng(1);
  cond_only.eps = std::make_shared<MlpDenoiser>(m.schedule, Mlp({2 + kTimeEmbedDim + kCondDim, 4, 2}, false, rng),
                                                m.text.encode_null(), false);
  CHECK_THROWS_AS(sample_ddim(cond_only, 0, base_config(7.5), 1), std::invalid_argument);
  CHECK_NOTHROW(sample_minority_prompt(cond_only, 0, base_config(1.0), 1));
}

TEST_CASE("short schedules run") {
  const DiffusionModel m = make_analytic_model(make_world(), make_schedule(4), 0);
  SamplerConfig cfg = base_config();
  cfg.T = 4;
  cfg.N = 1;
  const RunRecord run = sample_minority_prompt(m, 0, cfg, 2);
  CHECK(run.samples[0].optimized_steps == 4);
  CHECK(all_finite(run.samples[1].z0));
}
