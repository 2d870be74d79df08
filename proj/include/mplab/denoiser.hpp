#pragma once

#include "mplab/conditioning.hpp"
#include "mplab/mlp.hpp"
#include "mplab/schedule.hpp"
#include "mplab/world.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mplab {

// Conditioning input of eps_theta. An empty embedding selects the
// unconditional branch. `id` names the world condition and is consumed by
// the analytic denoiser only.
struct Condition {
  std::optional<CondEmbedding> embedding;
  int id = -1;

  static Condition null() { return {}; }
  static Condition of(CondEmbedding c, int id) { return {std::move(c), id}; }
  bool is_null() const { return !embedding.has_value(); }
};

struct EpsVjp {
  Vector grad_z;
  Vector grad_c;   // empty for the unconditional branch
};

// eps_theta(z_t, t, C) with exact first derivatives. Time is continuous in
// (0, T]; integer times coincide with the discrete grid.
class Denoiser {
public:
  explicit Denoiser(NoiseSchedule schedule) : schedule_(std::move(schedule)) {}
  virtual ~Denoiser() = default;

  virtual std::string variant() const = 0;
  virtual int dim() const = 0;
  virtual bool has_unconditional() const { return true; }

  virtual EpsPrediction predict(const Latent& z, double t, const Condition& c) const = 0;
  // Gradients of <g, eps(z, t, C)> with respect to z and C.
  virtual EpsVjp vjp(const Latent& z, double t, const Condition& c, const Vector& g) const = 0;
  // d eps / d z (d x d). The default assembles it from d VJPs.
  virtual Matrix jacobian_z(const Latent& z, double t, const Condition& c) const;
  // d eps / d C (d x c_e), assembled from VJPs.
  Matrix jacobian_c(const Latent& z, double t, const Condition& c) const;

  const NoiseSchedule& schedule() const { return schedule_; }

protected:
  void check_time(double t) const;

private:
  NoiseSchedule schedule_;
};

// Exact posterior-mean denoiser of a ToyWorld. For a conditional call the
// mixture of condition c is reweighted by the conditioning vector:
//   log w_j(C) = log pi_j + <u_j, C - B_c>,
// where B_c encodes the base prompt of c and, for a component j carrying an
// attribute word a_j with anchor A_j = encode(base + a_j),
//   u_j = strength (A_j - B_c) / |A_j - B_c|^2   (zero otherwise).
// At C = B_c this is exactly the world's conditional distribution.
class AnalyticDenoiser final : public Denoiser {
public:
  static constexpr double kDefaultTiltStrength = 8.0;

  AnalyticDenoiser(ToyWorld world, NoiseSchedule schedule, const TextEncoder& text,
                   double tilt_strength = kDefaultTiltStrength);
  // Untilted variant (no encoder): conditional calls ignore C.
  AnalyticDenoiser(ToyWorld world, NoiseSchedule schedule);

  std::string variant() const override { return "analytic"; }
  int dim() const override { return world_.d; }
  EpsPrediction predict(const Latent& z, double t, const Condition& c) const override;
  EpsVjp vjp(const Latent& z, double t, const Condition& c, const Vector& g) const override;
  Matrix jacobian_z(const Latent& z, double t, const Condition& c) const override;

  const ToyWorld& world() const { return world_; }
  double tilt_strength() const { return tilt_strength_; }
  const CondEmbedding& anchor(int cond) const { return anchors_.at(static_cast<std::size_t>(cond)); }

private:
  struct Tilted {
    FlatMixture mix;
    Matrix directions;   // c_e x K (empty when untilted)
  };
  Tilted mixture_for(const Condition& c) const;

  ToyWorld world_;
  double tilt_strength_ = 0.0;
  std::vector<CondEmbedding> anchors_;      // B_c
  std::vector<Matrix> tilt_directions_;     // per condition: c_e x K_c
  FlatMixture unconditional_;
};

inline constexpr int kTimeEmbedDim = 32;

Vector time_embedding(double t, int T);

// eps-prediction MLP on concat(z, time embedding, C).
class MlpDenoiser final : public Denoiser {
public:
  MlpDenoiser(NoiseSchedule schedule, Mlp net, CondEmbedding null_embedding, bool unconditional_trained);

  std::string variant() const override { return "trained"; }
  int dim() const override { return net_.output_size(); }
  bool has_unconditional() const override { return unconditional_trained_; }
  EpsPrediction predict(const Latent& z, double t, const Condition& c) const override;
  EpsVjp vjp(const Latent& z, double t, const Condition& c, const Vector& g) const override;
  Matrix jacobian_z(const Latent& z, double t, const Condition& c) const override;

  const Mlp& net() const { return net_; }
  const CondEmbedding& null_embedding() const { return null_embedding_; }
  bool unconditional_trained() const { return unconditional_trained_; }

  // Network input for a batch (columns), shared with training.
  static Matrix assemble_input(const Matrix& z, const Vector& t, const Matrix& c, int T);

private:
  Vector input_for(const Latent& z, double t, const Condition& c) const;

  Mlp net_;
  CondEmbedding null_embedding_;
  bool unconditional_trained_ = true;
};

struct TrainConfig {
  int steps = 20000;
  int batch = 256;
  double lr = 1e-3;
  double dropout = 0.1;
  std::uint64_t seed = 0;
  double ema_decay = 0.0;        // 0 disables the EMA copy
  double attribute_prob = 0.5;   // attribute word appended for its component's samples
  int hidden = 128;
};

struct TrainReport {
  int steps = 0;
  double final_loss = 0.0;        // mean per-coordinate loss over the last 100 steps
  double validation_loss = 0.0;   // per-coordinate, fixed held-out batch
  bool null_branch_trained = true;
  std::vector<double> loss_trace;  // mean loss per 10-step block
};

// Everything needed to run a sampler: schedule, text stack, eps-model and
// the reference world.
struct DiffusionModel {
  ToyWorld world;
  NoiseSchedule schedule;
  TextEncoder text;
  std::shared_ptr<const Denoiser> eps;
  std::optional<TrainConfig> train_config;
  std::optional<TrainReport> train_report;

  int dim() const { return world.d; }
  Condition condition(int cond) const;   // base-prompt conditioning
  Condition condition(int cond, const CondEmbedding& c) const { return Condition::of(c, cond); }
};

DiffusionModel make_analytic_model(const ToyWorld& world, const NoiseSchedule& schedule, std::uint64_t text_seed = 0,
                                   double tilt_strength = AnalyticDenoiser::kDefaultTiltStrength);

struct TrainResult {
  DiffusionModel model;
  TrainReport report;
};

// Noise-prediction training with condition dropout; throws NumericalError
// naming the step when the loss becomes non-finite.
TrainResult train_denoiser(const ToyWorld& world, const NoiseSchedule& schedule, const TrainConfig& cfg);
TrainResult train_denoiser(const ToyWorld& world, const NoiseSchedule& schedule, TextEncoder text,
                           const TrainConfig& cfg);

// Discrete-step entry point: validates 1 <= t <= T.
EpsPrediction predict_eps(const Denoiser& model, const Latent& z_t, int t, const Condition& c);

}  // namespace mplab
