#include "mplab/denoiser.hpp"

#include <cmath>
#include <map>

namespace mplab {

namespace {

// One noised training batch: inputs, targets and the prompt used per column
// (-1 = null prompt).
struct Batch {
  Matrix z;
  Vector t;
  Matrix eps;
  std::vector<int> prompt;
};

struct PromptTable {
  std::vector<Prompt> prompts;   // index 0.. ; conditions first, then attribute prompts
  std::vector<int> base_of;      // condition -> prompt index
  std::map<std::pair<int, int>, int> attr_of;  // (cond, comp) -> prompt index
};

PromptTable build_prompts(const ToyWorld& world, const TextEncoder& text) {
  PromptTable table;
  for (int c = 0; c < world.num_conditions(); ++c) {
    table.base_of.push_back(static_cast<int>(table.prompts.size()));
    table.prompts.push_back(text.base_prompt(c, world));
  }
  for (const auto& [word, ref] : world.attribute_words) {
    Prompt p = text.base_prompt(ref.condition, world);
    p.content.push_back(text.vocab().index_of(word));
    table.attr_of[{ref.condition, ref.component}] = static_cast<int>(table.prompts.size());
    table.prompts.push_back(std::move(p));
  }
  return table;
}

Batch draw_batch(const ToyWorld& world, const NoiseSchedule& sched, const PromptTable& prompts, int size,
                 double dropout, double attribute_prob, Rng& rng) {
  Batch batch;
  batch.z.resize(world.d, size);
  batch.t.resize(size);
  batch.eps.resize(world.d, size);
  batch.prompt.resize(static_cast<std::size_t>(size));
  std::uniform_int_distribution<int> pick_cond(0, world.num_conditions() - 1);
  std::uniform_int_distribution<int> pick_t(1, sched.steps());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int b = 0; b < size; ++b) {
    const int c = pick_cond(rng);
    const auto& comps = world.condition(c).components;
    double u = unit(rng), acc = 0.0;
    std::size_t j = 0;
    for (; j + 1 < comps.size(); ++j) {
      acc += comps[j].weight;
      if (u < acc) break;
    }
    const Vector z0 = comps[j].mean + comps[j].stdev * standard_normal(rng, world.d);
    const int t = pick_t(rng);
    const Vector eps = standard_normal(rng, world.d);
    batch.z.col(b) = add_noise(z0, t, eps, sched);
    batch.t[b] = t;
    batch.eps.col(b) = eps;
    int prompt = prompts.base_of[static_cast<std::size_t>(c)];
    auto attr = prompts.attr_of.find({c, static_cast<int>(j)});
    if (attr != prompts.attr_of.end() && unit(rng) < attribute_prob) prompt = attr->second;
    if (unit(rng) < dropout) prompt = -1;
    batch.prompt[static_cast<std::size_t>(b)] = prompt;
  }
  return batch;
}

struct Encoded {
  std::vector<CondEmbedding> emb;        // per prompt index; last entry = null
  std::vector<TextEncoder::Trace> trace;
};

Encoded encode_all(const TextEncoder& text, const PromptTable& prompts) {
  Encoded out;
  const std::size_t n = prompts.prompts.size();
  out.emb.resize(n + 1);
  out.trace.resize(n + 1);
  for (std::size_t i = 0; i < n; ++i) out.emb[i] = text.encode(prompts.prompts[i], nullptr, &out.trace[i]);
  out.emb[n] = text.encode_null(&out.trace[n]);
  return out;
}

std::size_t slot_of(const PromptTable& prompts, int prompt) {
  return prompt < 0 ? prompts.prompts.size() : static_cast<std::size_t>(prompt);
}

double batch_loss(const Mlp& net, const Batch& batch, const Encoded& enc, const PromptTable& prompts, int T,
                  Mlp::Cache* cache, Matrix* residual) {
  Matrix c(kCondDim, batch.z.cols());
  for (Index b = 0; b < batch.z.cols(); ++b) c.col(b) = enc.emb[slot_of(prompts, batch.prompt[static_cast<std::size_t>(b)])];
  const Matrix pred = net.forward(MlpDenoiser::assemble_input(batch.z, batch.t, c, T), cache);
  const Matrix diff = pred - batch.eps;
  if (residual) *residual = diff;
  return diff.squaredNorm() / static_cast<double>(diff.size());
}

}  // namespace

TrainResult train_denoiser(const ToyWorld& world, const NoiseSchedule& schedule, const TrainConfig& cfg) {
  return train_denoiser(world, schedule, TextEncoder(world, mix_seed(cfg.seed, 7)), cfg);
}

TrainResult train_denoiser(const ToyWorld& world, const NoiseSchedule& schedule, TextEncoder text,
                           const TrainConfig& cfg) {
  if (cfg.steps < 1 || cfg.batch < 1) throw std::invalid_argument("TrainConfig: steps and batch must be >= 1");
  if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) throw std::invalid_argument("TrainConfig: dropout must lie in [0, 1)");
  if (!(cfg.lr > 0)) throw std::invalid_argument("TrainConfig: lr must be positive");
  world.validate();

  Rng init_rng(mix_seed(cfg.seed, 1));
  Mlp net({world.d + kTimeEmbedDim + kCondDim, cfg.hidden, cfg.hidden, world.d}, false, init_rng);
  const PromptTable prompts = build_prompts(world, text);
  const int T = schedule.steps();

  std::vector<ParamView> params = net.params();
  for (auto p : text.params()) params.push_back(p);
  Mlp net_grads = net.zeros_like();
  TextEncoder::Grads text_grads = text.zero_grads();
  std::vector<ParamView> grads = net_grads.params();
  for (auto g : TextEncoder::grad_views(text_grads)) grads.push_back(g);

  std::vector<Vector> ema;
  if (cfg.ema_decay > 0)
    for (const auto& p : params) ema.emplace_back(Eigen::Map<const Vector>(p.data, p.size));

  Adam adam(cfg.lr);
  Rng rng(mix_seed(cfg.seed, 2));
  TrainReport report;
  report.steps = cfg.steps;
  report.null_branch_trained = cfg.dropout > 0.0;
  double block = 0.0, tail = 0.0;
  int tail_count = 0;

  for (int step = 0; step < cfg.steps; ++step) {
    const Batch batch = draw_batch(world, schedule, prompts, cfg.batch, cfg.dropout, cfg.attribute_prob, rng);
    const Encoded enc = encode_all(text, prompts);
    Mlp::Cache cache;
    Matrix residual;
    const double loss = batch_loss(net, batch, enc, prompts, T, &cache, &residual);
    if (!std::isfinite(loss))
      throw NumericalError("training diverged: non-finite loss at step " + std::to_string(step));

    net_grads.set_zero();
    text_grads = text.zero_grads();
    grads = net_grads.params();
    for (auto g : TextEncoder::grad_views(text_grads)) grads.push_back(g);

    const Matrix gin = net.backward(cache, 2.0 * residual / static_cast<double>(residual.size()), &net_grads);
    std::vector<CondEmbedding> grad_c(enc.emb.size(), Vector::Zero(kCondDim));
    for (Index b = 0; b < gin.cols(); ++b)
      grad_c[slot_of(prompts, batch.prompt[static_cast<std::size_t>(b)])] += gin.col(b).tail(kCondDim);
    for (std::size_t i = 0; i < grad_c.size(); ++i)
      if (grad_c[i].squaredNorm() > 0) text.accumulate_param_grads(enc.trace[i], grad_c[i], text_grads);

    adam.step(params, grads);
    if (!ema.empty())
      for (std::size_t k = 0; k < params.size(); ++k)
        ema[k] = cfg.ema_decay * ema[k] + (1.0 - cfg.ema_decay) * Eigen::Map<const Vector>(params[k].data, params[k].size);

    block += loss;
    if ((step + 1) % 10 == 0) {
      report.loss_trace.push_back(block / 10.0);
      block = 0.0;
    }
    if (step >= cfg.steps - 100) {
      tail += loss;
      ++tail_count;
    }
  }
  report.final_loss = tail / tail_count;

  if (!ema.empty())
    for (std::size_t k = 0; k < params.size(); ++k) Eigen::Map<Vector>(params[k].data, params[k].size) = ema[k];

  Rng val_rng(mix_seed(cfg.seed, 3));
  const Batch val = draw_batch(world, schedule, prompts, 4096, cfg.dropout, cfg.attribute_prob, val_rng);
  report.validation_loss = batch_loss(net, val, encode_all(text, prompts), prompts, T, nullptr, nullptr);

  TrainResult result;
  result.model.world = world;
  result.model.schedule = schedule;
  result.model.text = std::move(text);
  result.model.eps =
      std::make_shared<MlpDenoiser>(schedule, std::move(net), result.model.text.encode_null(), report.null_branch_trained);
  result.model.train_config = cfg;
  result.model.train_report = report;
  result.report = report;
  return result;
}

}  // namespace mplab
