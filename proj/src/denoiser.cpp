#include "mplab/denoiser.hpp"

#include <cmath>

namespace mplab {

void Denoiser::check_time(double t) const {
  if (!(t > 0.0) || t > schedule_.steps()) throw std::out_of_range("denoiser time outside (0, T]");
}

Matrix Denoiser::jacobian_z(const Latent& z, double t, const Condition& c) const {
  const Index d = z.size();
  Matrix jac(d, d);
  for (Index i = 0; i < d; ++i) jac.row(i) = vjp(z, t, c, Vector::Unit(d, i)).grad_z.transpose();
  return jac;
}

Matrix Denoiser::jacobian_c(const Latent& z, double t, const Condition& c) const {
  if (c.is_null()) throw std::invalid_argument("jacobian_c needs a conditional input");
  const Index d = z.size();
  Matrix jac(d, c.embedding->size());
  for (Index i = 0; i < d; ++i) jac.row(i) = vjp(z, t, c, Vector::Unit(d, i)).grad_c.transpose();
  return jac;
}

EpsPrediction predict_eps(const Denoiser& model, const Latent& z_t, int t, const Condition& c) {
  model.schedule().check_step(t, 1);
  return model.predict(z_t, static_cast<double>(t), c);
}

// ---------------------------------------------------------------------------
// Analytic

AnalyticDenoiser::AnalyticDenoiser(ToyWorld world, NoiseSchedule schedule)
    : Denoiser(std::move(schedule)), world_(std::move(world)) {
  unconditional_ = mixture_of(world_, std::nullopt);
}

AnalyticDenoiser::AnalyticDenoiser(ToyWorld world, NoiseSchedule schedule, const TextEncoder& text,
                                   double tilt_strength)
    : AnalyticDenoiser(std::move(world), std::move(schedule)) {
  tilt_strength_ = tilt_strength;
  for (int c = 0; c < world_.num_conditions(); ++c) {
    const Prompt base = text.base_prompt(c, world_);
    const CondEmbedding anchor = text.encode(base, nullptr);
    const auto& comps = world_.condition(c).components;
    Matrix dirs = Matrix::Zero(anchor.size(), static_cast<Index>(comps.size()));
    for (std::size_t j = 0; j < comps.size(); ++j) {
      auto word = world_.attribute_word_for({c, static_cast<int>(j)});
      if (!word || !text.vocab().contains(*word)) continue;
      Prompt with_attr = base;
      with_attr.content.push_back(text.vocab().index_of(*word));
      const Vector delta = text.encode(with_attr, nullptr) - anchor;
      const double norm2 = delta.squaredNorm();
      if (norm2 > 0) dirs.col(static_cast<Index>(j)) = tilt_strength * delta / norm2;
    }
    anchors_.push_back(anchor);
    tilt_directions_.push_back(std::move(dirs));
  }
}

AnalyticDenoiser::Tilted AnalyticDenoiser::mixture_for(const Condition& c) const {
  if (c.is_null()) return {unconditional_, Matrix()};
  Tilted out{mixture_of(world_, c.id), Matrix()};
  if (anchors_.empty()) return out;
  const auto& dirs = tilt_directions_.at(static_cast<std::size_t>(c.id));
  if (c.embedding->size() != dirs.rows()) throw std::invalid_argument("conditioning vector has wrong size");
  out.mix.log_weight += dirs.transpose() * (*c.embedding - anchors_[static_cast<std::size_t>(c.id)]);
  out.directions = dirs;
  return out;
}

EpsPrediction AnalyticDenoiser::predict(const Latent& z, double t, const Condition& c) const {
  check_time(t);
  if (z.size() != dim()) throw std::invalid_argument("latent has wrong dimension");
  return mixture_posterior(mixture_for(c).mix, z, schedule().alpha_bar_at(t)).eps;
}

Matrix AnalyticDenoiser::jacobian_z(const Latent& z, double t, const Condition& c) const {
  check_time(t);
  if (z.size() != dim()) throw std::invalid_argument("latent has wrong dimension");
  const MixturePosterior post = mixture_posterior(mixture_for(c).mix, z, schedule().alpha_bar_at(t));
  // d eps / d z = sigma [ sum_j r_j / v_j I + gbar gbar^T - sum_j r_j g_j g_j^T ]
  const Vector gbar = post.residual * post.resp;
  Matrix jac = post.resp.dot(post.inv_var) * Matrix::Identity(z.size(), z.size()) + gbar * gbar.transpose() -
               post.residual * post.resp.asDiagonal() * post.residual.transpose();
  return post.sigma * jac;
}

EpsVjp AnalyticDenoiser::vjp(const Latent& z, double t, const Condition& c, const Vector& g) const {
  check_time(t);
  if (z.size() != dim()) throw std::invalid_argument("latent has wrong dimension");
  const Tilted tilted = mixture_for(c);
  const MixturePosterior post = mixture_posterior(tilted.mix, z, schedule().alpha_bar_at(t));
  const Vector gbar = post.residual * post.resp;
  EpsVjp out;
  // Jacobian is symmetric.
  out.grad_z = post.sigma * (post.resp.dot(post.inv_var) * g + gbar * gbar.dot(g) -
                             post.residual * (post.resp.asDiagonal() * (post.residual.transpose() * g)));
  if (!c.is_null()) {
    out.grad_c = Vector::Zero(c.embedding->size());
    if (tilted.directions.size() > 0) {
      // d r_j / d C = r_j (u_j - ubar)
      const Vector proj = post.sigma * (post.residual.transpose() * g);   // sigma g^T g_j
      const Vector ubar = tilted.directions * post.resp;
      const Vector coeff = post.resp.cwiseProduct(proj);
      out.grad_c = tilted.directions * coeff - ubar * coeff.sum();
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// MLP

Vector time_embedding(double t, int T) {
  Vector out(kTimeEmbedDim);
  const int half = kTimeEmbedDim / 2;
  const double scaled = 1000.0 * t / T;
  for (int k = 0; k < half; ++k) {
    const double freq = std::exp(-std::log(10000.0) * k / half);
    out[k] = std::sin(scaled * freq);
    out[half + k] = std::cos(scaled * freq);
  }
  return out;
}

MlpDenoiser::MlpDenoiser(NoiseSchedule schedule, Mlp net, CondEmbedding null_embedding, bool unconditional_trained)
    : Denoiser(std::move(schedule)),
      net_(std::move(net)),
      null_embedding_(std::move(null_embedding)),
      unconditional_trained_(unconditional_trained) {}

Matrix MlpDenoiser::assemble_input(const Matrix& z, const Vector& t, const Matrix& c, int T) {
  const Index B = z.cols();
  Matrix x(z.rows() + kTimeEmbedDim + c.rows(), B);
  for (Index b = 0; b < B; ++b) {
    x.col(b).head(z.rows()) = z.col(b);
    x.col(b).segment(z.rows(), kTimeEmbedDim) = time_embedding(t[b], T);
    x.col(b).tail(c.rows()) = c.col(b);
  }
  return x;
}

Vector MlpDenoiser::input_for(const Latent& z, double t, const Condition& c) const {
  check_time(t);
  if (z.size() != dim()) throw std::invalid_argument("latent has wrong dimension");
  const CondEmbedding& emb = c.is_null() ? null_embedding_ : *c.embedding;
  return assemble_input(z, Vector::Constant(1, t), emb, schedule().steps()).col(0);
}

EpsPrediction MlpDenoiser::predict(const Latent& z, double t, const Condition& c) const {
  return net_.forward(input_for(z, t, c)).col(0);
}

EpsVjp MlpDenoiser::vjp(const Latent& z, double t, const Condition& c, const Vector& g) const {
  Mlp::Cache cache;
  net_.forward(input_for(z, t, c), &cache);
  const Vector gin = net_.backward(cache, g).col(0);
  EpsVjp out;
  out.grad_z = gin.head(z.size());
  if (!c.is_null()) out.grad_c = gin.tail(c.embedding->size());
  return out;
}

Matrix MlpDenoiser::jacobian_z(const Latent& z, double t, const Condition& c) const {
  const Index d = z.size();
  const Vector x = input_for(z, t, c);
  Mlp::Cache cache;
  net_.forward(x.replicate(1, d), &cache);
  const Matrix gin = net_.backward(cache, Matrix::Identity(d, d));
  return gin.topRows(d).transpose();
}

// ---------------------------------------------------------------------------

Condition DiffusionModel::condition(int cond) const {
  return Condition::of(text.encode(text.base_prompt(cond, world), nullptr), cond);
}

DiffusionModel make_analytic_model(const ToyWorld& world, const NoiseSchedule& schedule, std::uint64_t text_seed,
                                   double tilt_strength) {
  DiffusionModel model;
  model.world = world;
  model.schedule = schedule;
  model.text = TextEncoder(world, text_seed);
  model.eps = std::make_shared<AnalyticDenoiser>(world, schedule, model.text, tilt_strength);
  return model;
}

}  // namespace mplab
