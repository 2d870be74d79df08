#pragma once

#include "mplab/evaluation.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace mplab {

using Json = nlohmann::json;

inline constexpr int kCheckpointVersion = 1;
inline constexpr int kWorldVersion = 1;
inline constexpr int kManifestVersion = 1;

// 64-bit FNV-1a, printed as 16 hex digits.
std::uint64_t fnv1a(const std::string& bytes);
std::string hex64(std::uint64_t h);
std::string json_hash(const Json& j);
std::string file_hash(const std::filesystem::path& path);

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j);

Json world_to_json(const ToyWorld& world);
ToyWorld world_from_json(const Json& j);   // validates
std::string world_hash(const ToyWorld& world);

Json schedule_to_json(const NoiseSchedule& sched);
NoiseSchedule schedule_from_json(const Json& j);

Json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const Json& j);
Json train_report_to_json(const TrainReport& r);

// Trained models only; the analytic model is rebuilt from its world.
Json checkpoint_to_json(const DiffusionModel& model);
DiffusionModel model_from_checkpoint(const Json& j);

Json sampler_config_to_json(const SamplerConfig& cfg);
// Missing keys keep their defaults; unknown keys are rejected.
SamplerConfig sampler_config_from_json(const Json& j, SamplerConfig base = {});

Json sample_to_json(const SampleRecord& rec);
SampleRecord sample_from_json(const Json& j);

std::string report_csv(const EvalReport& report);
Json report_to_json(const EvalReport& report);

Json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const Json& j);

// Run directory layout: manifest.json, records.jsonl, timing.json and, for
// d = 2, one scatter_c<cond>.svg per condition.
struct RunFiles {
  std::filesystem::path manifest, records, timing;
  std::vector<std::filesystem::path> plots;
  std::string manifest_hash;
};

RunFiles write_run(const std::filesystem::path& dir, const RunRecord& run, const Json& manifest_extra,
                   const ToyWorld& world);
RunRecord read_run(const std::filesystem::path& dir);

// Scatter of one condition's samples with the minority components' 2-sigma
// circles, colored by the classified tag.
std::string scatter_svg(const ToyWorld& world, int cond, const std::vector<Latent>& samples);

}  // namespace mplab
