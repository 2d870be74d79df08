#pragma once

#include "mplab/schedule.hpp"
#include "mplab/types.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mplab {

enum class ComponentTag { Majority, Minority };

std::string to_string(ComponentTag tag);

struct GaussianComponent {
  Vector mean;
  double stdev = 1.0;   // isotropic
  double weight = 1.0;
  ComponentTag tag = ComponentTag::Majority;
};

struct ComponentRef {
  int condition = 0;
  int component = 0;
  friend bool operator==(const ComponentRef&, const ComponentRef&) = default;
};

struct WorldCondition {
  int id = 0;
  std::string word;
  std::vector<GaussianComponent> components;
};

// Per-condition isotropic Gaussian mixtures with labeled majority/minority
// components. Immutable once validated.
struct ToyWorld {
  int d = 2;
  std::vector<WorldCondition> conditions;
  // attribute word -> component it describes
  std::map<std::string, ComponentRef> attribute_words;

  int num_conditions() const { return static_cast<int>(conditions.size()); }
  const WorldCondition& condition(int cond) const;
  // Attribute word tied to a component, if any.
  std::optional<std::string> attribute_word_for(ComponentRef ref) const;
  // Throws std::invalid_argument describing the first violated invariant.
  void validate() const;
};

struct WorldPresetOptions {
  int num_conditions = 4;
  double radius = 2.5;
  double minority_offset = 1.5;
  double majority_weight = 0.9;
  double minority_weight = 0.05;   // each of the two minority components
  double majority_stdev = 0.15;
  double minority_stdev = 0.1;
};

// Default preset: d = 2, four conditions on a circle, one majority
// component (0.9, 0.15) and two minority components (0.05, 0.1) each.
ToyWorld make_world(const WorldPresetOptions& opts = {});
// Single condition holding one N(0, I) component of weight 1. This is an
// oracle fixture and deliberately skips validate() (it has no minority).
ToyWorld make_standard_normal_world(int d);
// Validating constructor for custom worlds.
ToyWorld make_world(ToyWorld world);
ToyWorld make_preset(const std::string& name);

std::vector<Latent> sample_data(const ToyWorld& world, int cond, int n, std::uint64_t seed);
// Same, also reporting which component produced each draw.
std::vector<Latent> sample_data(const ToyWorld& world, int cond, int n, std::uint64_t seed,
                                std::vector<int>* components);

double true_log_density(const ToyWorld& world, int cond, const Latent& x);

// A mixture flattened for posterior computations: log weights, means, stdevs.
struct FlatMixture {
  Vector log_weight;
  std::vector<Vector> mean;
  std::vector<double> stdev;
};

// Component set of one condition, or the equal-weight union over all
// conditions when `cond` is empty (the unconditional distribution).
FlatMixture mixture_of(const ToyWorld& world, std::optional<int> cond);

// Intermediate quantities of the noised-mixture posterior at z_t:
// responsibilities r_j and per-component scaled residuals
// g_j = (z_t - sqrt(ab) mu_j) / (ab s_j^2 + 1 - ab), so eps = sigma sum_j r_j g_j.
struct MixturePosterior {
  double sigma = 0.0;
  Vector resp;
  Matrix residual;   // d x K, column j = g_j
  Vector inv_var;    // 1 / (ab s_j^2 + 1 - ab)
  EpsPrediction eps;
};

MixturePosterior mixture_posterior(const FlatMixture& mix, const Latent& z_t, double alpha_bar);

// Exact eps for the mixture at continuous time t:
// eps = (z - sqrt(ab) E[z0 | z]) / sqrt(1 - ab).
EpsPrediction mixture_eps(const FlatMixture& mix, const Latent& z_t, double alpha_bar);

EpsPrediction analytic_eps(const ToyWorld& world, std::optional<int> cond, const Latent& z_t, int t,
                           const NoiseSchedule& sched);

// log density of z_t under the noised mixture N(sqrt(ab) mu, (ab s^2 + 1 - ab) I).
double noised_log_density(const FlatMixture& mix, const Latent& z_t, double alpha_bar);

struct ComponentClass {
  ComponentRef ref;
  ComponentTag tag = ComponentTag::Majority;
};

// Maximum posterior responsibility; ties go to the lowest component index.
ComponentClass classify_component(const ToyWorld& world, int cond, const Latent& x);

// Condition whose mixture density at x is largest (ties: lowest id).
int most_likely_condition(const ToyWorld& world, const Latent& x);

}  // namespace mplab
