#pragma once

#include "mplab/objectives.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mplab {

enum class SamplerKind { Ddim, Minority, Sgms, Cads, Diverse };

std::string to_string(SamplerKind kind);
SamplerKind sampler_kind_from_string(const std::string& name);

struct SamplerConfig {
  int T = 50;
  double w = 7.5;
  int N = 3;
  int K = 3;
  double lr = 2e-3;
  double lambda = 1.0;
  SSchedule s_schedule = SSchedule::inverse();
  ObjectiveKind objective = ObjectiveKind::OursSg;
  InitMode init_mode = InitMode::Default;
  std::string init_word;   // empty: first attribute word of the condition
  int m = 1;
  PlaceholderPosition position = PlaceholderPosition::Postfix;
  bool fallback = true;   // base prompt on non-optimizing steps
  int mc_samples = 1;
  std::uint64_t seed = 0;

  // latent-optimization baseline
  double sgms_lr = 0.0075;
  double sgms_s_fraction = 0.75;

  // conditioning-noise baseline
  double cads_tau1 = 0.8;
  double cads_tau2 = 1.0;
  double cads_noise_scale = 0.1;

  int batch = 4;   // diverse sampler

  void validate() const;
  ObjectiveSpec objective_spec() const;
};

struct StepObjective {
  int t = 0;
  std::vector<double> values;
};

struct SampleRecord {
  int index = 0;
  int batch = 0;              // lockstep group (diverse sampler), otherwise == index
  std::uint64_t seed = 0;
  int cond = 0;
  std::string prompt;
  Latent z0;
  std::vector<StepObjective> objective;
  double v_init_norm = 0.0;
  double v_final_norm = 0.0;
  double v_drift = 0.0;       // |v_final - v_init|_F
  int optimized_steps = 0;
};

struct RunRecord {
  SamplerKind sampler = SamplerKind::Ddim;
  SamplerConfig config;
  std::vector<SampleRecord> samples;
  double wall_clock_seconds = 0.0;
};

// Seed of sample i of a run and the three named substreams.
std::uint64_t sample_seed(std::uint64_t master, int index);
enum class Stream : std::uint64_t { InitialNoise = 0, Objective = 1, CadsNoise = 2 };
Rng stream_rng(std::uint64_t sample_seed, Stream stream);

// Weight of the clean conditioning at normalized remaining time u.
double cads_gamma(double u, double tau1, double tau2);

// Single trajectories from an explicit per-sample seed.
SampleRecord run_ddim(const DiffusionModel& model, int cond, const SamplerConfig& cfg, std::uint64_t seed);
SampleRecord run_minority_prompt(const DiffusionModel& model, int cond, const SamplerConfig& cfg, std::uint64_t seed);
SampleRecord run_sgms(const DiffusionModel& model, int cond, const SamplerConfig& cfg, std::uint64_t seed);
SampleRecord run_cads(const DiffusionModel& model, int cond, const SamplerConfig& cfg, std::uint64_t seed);
// B trajectories in lockstep sharing one learnable token.
std::vector<SampleRecord> run_diverse_batch(const DiffusionModel& model, int cond, const SamplerConfig& cfg,
                                            const std::vector<std::uint64_t>& seeds);

// n samples; sample i uses sample_seed(cfg.seed, i), so runs of different
// samplers with the same master seed are paired.
RunRecord sample_ddim(const DiffusionModel& model, int cond, const SamplerConfig& cfg, int n);
RunRecord sample_minority_prompt(const DiffusionModel& model, int cond, const SamplerConfig& cfg, int n);
RunRecord sample_sgms(const DiffusionModel& model, int cond, const SamplerConfig& cfg, int n);
RunRecord sample_cads(const DiffusionModel& model, int cond, const SamplerConfig& cfg, int n);
// n samples in ceil(n / cfg.batch) lockstep groups.
RunRecord sample_diverse_batch(const DiffusionModel& model, int cond, const SamplerConfig& cfg, int n);

RunRecord run_sampler(SamplerKind kind, const DiffusionModel& model, int cond, const SamplerConfig& cfg, int n);

std::string prompt_text(const DiffusionModel& model, const Prompt& prompt);

}  // namespace mplab
