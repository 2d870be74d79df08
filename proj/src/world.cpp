#include "mplab/world.hpp"

#include <cmath>
#include <numbers>
#include <set>

namespace mplab {

namespace {

double log_sum_exp(const Vector& x) {
  const double m = x.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((x.array() - m).exp().sum());
}

double isotropic_log_normal(const Vector& x, const Vector& mean, double var) {
  const double dd = static_cast<double>(x.size());
  return -0.5 * (x - mean).squaredNorm() / var - 0.5 * dd * std::log(2.0 * std::numbers::pi * var);
}

Vector component_log_terms(const ToyWorld& world, int cond, const Latent& x) {
  const auto& comps = world.condition(cond).components;
  Vector out(static_cast<Index>(comps.size()));
  for (std::size_t j = 0; j < comps.size(); ++j)
    out[j] = std::log(comps[j].weight) + isotropic_log_normal(x, comps[j].mean, comps[j].stdev * comps[j].stdev);
  return out;
}

void check_dim(const ToyWorld& world, const Latent& x) {
  if (x.size() != world.d) throw std::invalid_argument("latent dimension does not match world dimension");
}

}  // namespace

std::string to_string(ComponentTag tag) { return tag == ComponentTag::Majority ? "majority" : "minority"; }

const WorldCondition& ToyWorld::condition(int cond) const {
  if (cond < 0 || cond >= num_conditions()) throw std::out_of_range("unknown condition " + std::to_string(cond));
  return conditions[static_cast<std::size_t>(cond)];
}

std::optional<std::string> ToyWorld::attribute_word_for(ComponentRef ref) const {
  for (const auto& [word, target] : attribute_words)
    if (target == ref) return word;
  return std::nullopt;
}

void ToyWorld::validate() const {
  if (d < 1) throw std::invalid_argument("world dimension must be >= 1");
  if (conditions.empty()) throw std::invalid_argument("world needs at least one condition");
  std::set<std::string> words;
  for (std::size_t c = 0; c < conditions.size(); ++c) {
    const auto& cond = conditions[c];
    if (cond.id != static_cast<int>(c)) throw std::invalid_argument("condition ids must be 0..n-1 in order");
    if (!words.insert(cond.word).second) throw std::invalid_argument("duplicate word id: " + cond.word);
    if (cond.components.empty()) throw std::invalid_argument("condition " + cond.word + " has no components");
    double total = 0.0;
    int majority = 0, minority = 0;
    for (const auto& comp : cond.components) {
      if (comp.mean.size() != d) throw std::invalid_argument("component mean has wrong dimension");
      if (!comp.mean.allFinite()) throw std::invalid_argument("component mean must be finite");
      if (!(comp.stdev > 0)) throw std::invalid_argument("component stdev must be positive");
      if (!(comp.weight > 0 && comp.weight < 1)) throw std::invalid_argument("component weight must lie in (0, 1)");
      total += comp.weight;
      (comp.tag == ComponentTag::Majority ? majority : minority) += 1;
      if (comp.tag == ComponentTag::Majority && comp.weight < 0.5)
        throw std::invalid_argument("majority weight must be >= 0.5");
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("weights must sum to 1 in condition " + cond.word);
    if (majority != 1) throw std::invalid_argument("each condition needs exactly one majority component");
    if (minority < 1) throw std::invalid_argument("each condition needs at least one minority component");
  }
  for (const auto& [word, ref] : attribute_words) {
    if (!words.insert(word).second) throw std::invalid_argument("duplicate word id: " + word);
    if (ref.condition < 0 || ref.condition >= num_conditions())
      throw std::invalid_argument("attribute word " + word + " points at an unknown condition");
    const auto& comps = conditions[static_cast<std::size_t>(ref.condition)].components;
    if (ref.component < 0 || ref.component >= static_cast<int>(comps.size()))
      throw std::invalid_argument("attribute word " + word + " points at an unknown component");
  }
}

ToyWorld make_world(ToyWorld world) {
  world.validate();
  return world;
}

ToyWorld make_world(const WorldPresetOptions& opts) {
  ToyWorld world;
  world.d = 2;
  const double minority_weight = opts.minority_weight;
  int attr = 0;
  for (int c = 0; c < opts.num_conditions; ++c) {
    const double theta = std::numbers::pi / 4.0 + c * 2.0 * std::numbers::pi / opts.num_conditions;
    Vector center(2);
    center << opts.radius * std::cos(theta), opts.radius * std::sin(theta);
    WorldCondition cond;
    cond.id = c;
    cond.word = "cond_" + std::to_string(c);
    cond.components.push_back({center, opts.majority_stdev, opts.majority_weight, ComponentTag::Majority});
    // Minorities sit outward of the majority, rotated +-60 degrees.
    for (double delta : {std::numbers::pi / 3.0, -std::numbers::pi / 3.0}) {
      Vector mean(2);
      mean << center[0] + opts.minority_offset * std::cos(theta + delta),
          center[1] + opts.minority_offset * std::sin(theta + delta);
      cond.components.push_back({mean, opts.minority_stdev, minority_weight, ComponentTag::Minority});
      world.attribute_words["attr_" + std::to_string(attr++)] =
          ComponentRef{c, static_cast<int>(cond.components.size()) - 1};
    }
    world.conditions.push_back(std::move(cond));
  }
  world.validate();
  return world;
}

ToyWorld make_standard_normal_world(int d) {
  ToyWorld world;
  world.d = d;
  WorldCondition cond;
  cond.id = 0;
  cond.word = "cond_0";
  cond.components.push_back({Vector::Zero(d), 1.0, 1.0, ComponentTag::Majority});
  world.conditions.push_back(std::move(cond));
  return world;
}

ToyWorld make_preset(const std::string& name) {
  if (name == "default") return make_world(WorldPresetOptions{});
  if (name == "standard-normal") return make_standard_normal_world(2);
  throw std::invalid_argument("unknown world preset: " + name);
}

std::vector<Latent> sample_data(const ToyWorld& world, int cond, int n, std::uint64_t seed) {
  return sample_data(world, cond, n, seed, nullptr);
}

std::vector<Latent> sample_data(const ToyWorld& world, int cond, int n, std::uint64_t seed,
                                std::vector<int>* components) {
  if (n < 1) throw std::invalid_argument("sample_data: n must be >= 1");
  const auto& comps = world.condition(cond).components;
  std::vector<double> weights;
  for (const auto& c : comps) weights.push_back(c.weight);
  Rng rng(seed);
  std::discrete_distribution<int> pick(weights.begin(), weights.end());
  std::vector<Latent> out;
  out.reserve(static_cast<std::size_t>(n));
  if (components) components->clear();
  for (int i = 0; i < n; ++i) {
    const int j = pick(rng);
    const auto& comp = comps[static_cast<std::size_t>(j)];
    out.push_back(comp.mean + comp.stdev * standard_normal(rng, world.d));
    if (components) components->push_back(j);
  }
  return out;
}

double true_log_density(const ToyWorld& world, int cond, const Latent& x) {
  check_dim(world, x);
  return log_sum_exp(component_log_terms(world, cond, x));
}

FlatMixture mixture_of(const ToyWorld& world, std::optional<int> cond) {
  FlatMixture mix;
  std::vector<double> logw;
  auto append = [&](const WorldCondition& c, double scale) {
    for (const auto& comp : c.components) {
      logw.push_back(std::log(comp.weight * scale));
      mix.mean.push_back(comp.mean);
      mix.stdev.push_back(comp.stdev);
    }
  };
  if (cond) {
    append(world.condition(*cond), 1.0);
  } else {
    for (const auto& c : world.conditions) append(c, 1.0 / world.num_conditions());
  }
  mix.log_weight = Eigen::Map<Vector>(logw.data(), static_cast<Index>(logw.size()));
  return mix;
}

MixturePosterior mixture_posterior(const FlatMixture& mix, const Latent& z_t, double alpha_bar) {
  const Index K = mix.log_weight.size();
  const Index d = z_t.size();
  const double a = std::sqrt(alpha_bar);
  MixturePosterior post;
  post.sigma = std::sqrt(1.0 - alpha_bar);
  post.residual.resize(d, K);
  post.inv_var.resize(K);
  Vector logits(K);
  for (Index j = 0; j < K; ++j) {
    const double s2 = mix.stdev[static_cast<std::size_t>(j)] * mix.stdev[static_cast<std::size_t>(j)];
    const double var = alpha_bar * s2 + (1.0 - alpha_bar);
    const Vector diff = z_t - a * mix.mean[static_cast<std::size_t>(j)];
    post.inv_var[j] = 1.0 / var;
    post.residual.col(j) = diff / var;
    logits[j] = mix.log_weight[j] - 0.5 * diff.squaredNorm() / var -
                0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi * var);
  }
  post.resp = (logits.array() - log_sum_exp(logits)).exp();
  post.eps = post.sigma * (post.residual * post.resp);
  return post;
}

EpsPrediction mixture_eps(const FlatMixture& mix, const Latent& z_t, double alpha_bar) {
  return mixture_posterior(mix, z_t, alpha_bar).eps;
}

double noised_log_density(const FlatMixture& mix, const Latent& z_t, double alpha_bar) {
  const Index K = mix.log_weight.size();
  const double a = std::sqrt(alpha_bar);
  Vector logits(K);
  for (Index j = 0; j < K; ++j) {
    const double s2 = mix.stdev[static_cast<std::size_t>(j)] * mix.stdev[static_cast<std::size_t>(j)];
    logits[j] = mix.log_weight[j] + isotropic_log_normal(z_t, a * mix.mean[static_cast<std::size_t>(j)],
                                                         alpha_bar * s2 + 1.0 - alpha_bar);
  }
  return log_sum_exp(logits);
}

EpsPrediction analytic_eps(const ToyWorld& world, std::optional<int> cond, const Latent& z_t, int t,
                           const NoiseSchedule& sched) {
  sched.check_step(t, 1);
  check_dim(world, z_t);
  return mixture_eps(mixture_of(world, cond), z_t, sched.alpha_bar(t));
}

ComponentClass classify_component(const ToyWorld& world, int cond, const Latent& x) {
  check_dim(world, x);
  const Vector terms = component_log_terms(world, cond, x);
  Index best = 0;
  for (Index j = 1; j < terms.size(); ++j)
    if (terms[j] > terms[best]) best = j;
  return {ComponentRef{cond, static_cast<int>(best)},
          world.condition(cond).components[static_cast<std::size_t>(best)].tag};
}

int most_likely_condition(const ToyWorld& world, const Latent& x) {
  int best = 0;
  double best_val = true_log_density(world, 0, x);
  for (int c = 1; c < world.num_conditions(); ++c) {
    const double v = true_log_density(world, c, x);
    if (v > best_val) {
      best = c;
      best_val = v;
    }
  }
  return best;
}

}  // namespace mplab
