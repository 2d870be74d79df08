#pragma once

#include "mplab/io.hpp"

#include <string>
#include <vector>

namespace mplab {

struct ModelSource {
  std::string world_path;        // empty: default preset
  std::string checkpoint_path;   // empty: analytic model
  int T = 50;                    // analytic model only
  ScheduleKind schedule = ScheduleKind::Cosine;
  double tilt = AnalyticDenoiser::kDefaultTiltStrength;
  std::uint64_t text_seed = 0;
};

DiffusionModel load_model(const ModelSource& src);
// Model description for run manifests (hashes, variant, knobs).
Json describe_model(const ModelSource& src, const DiffusionModel& model);

enum class AblationAxis { Objective, Init, Position, Tokens, Flaws };
std::string to_string(AblationAxis axis);
AblationAxis ablation_axis_from_string(const std::string& name);

struct AblationRow {
  std::string label;
  SamplerKind sampler = SamplerKind::Minority;
  SamplerConfig config;
};

std::vector<AblationRow> ablation_rows(AblationAxis axis, const SamplerConfig& base);

struct AblationResult {
  std::vector<NamedRun> runs;
  EvalReport report;
};

// Every row runs on the same master seed, so the rows are paired.
AblationResult run_ablation(AblationAxis axis, const DiffusionModel& model, const SamplerConfig& base,
                            const std::vector<int>& conds, int n, const EvalOptions& eval);

// Samples n per listed condition and concatenates the records.
RunRecord sample_conditions(SamplerKind kind, const DiffusionModel& model, const std::vector<int>& conds,
                            const SamplerConfig& cfg, int n);

int run_cli(int argc, char** argv);

}  // namespace mplab
