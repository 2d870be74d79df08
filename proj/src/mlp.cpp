#include "mplab/mlp.hpp"

#include <cmath>

namespace mplab {

namespace {

Matrix silu(const Matrix& x) { return (x.array() / (1.0 + (-x.array()).exp())).matrix(); }

Matrix silu_grad(const Matrix& x) {
  const Eigen::ArrayXXd s = 1.0 / (1.0 + (-x.array()).exp());
  return (s * (1.0 + x.array() * (1.0 - s))).matrix();
}

}  // namespace

Mlp::Mlp(std::vector<int> sizes, bool activate_output, Rng& rng) : activate_output_(activate_output) {
  if (sizes.size() < 2) throw std::invalid_argument("Mlp needs at least an input and an output size");
  std::normal_distribution<double> dist(0.0, 1.0);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int fan_in = sizes[l], fan_out = sizes[l + 1];
    const double scale = std::sqrt(1.0 / fan_in);
    Matrix w(fan_out, fan_in);
    for (Index j = 0; j < w.cols(); ++j)
      for (Index i = 0; i < w.rows(); ++i) w(i, j) = scale * dist(rng);
    weights_.push_back(std::move(w));
    biases_.push_back(Vector::Zero(fan_out));
  }
}

Matrix Mlp::forward(const Matrix& x, Cache* cache) const {
  if (x.rows() != input_size()) throw std::invalid_argument("Mlp::forward: input has wrong size");
  Matrix h = x;
  if (cache) {
    cache->pre.clear();
    cache->post.clear();
  }
  const std::size_t L = weights_.size();
  for (std::size_t l = 0; l < L; ++l) {
    Matrix pre = weights_[l] * h;
    pre.colwise() += biases_[l];
    if (cache) cache->post.push_back(h);
    const bool act = l + 1 < L || activate_output_;
    h = act ? silu(pre) : pre;
    if (cache) cache->pre.push_back(std::move(pre));
  }
  return h;
}

Matrix Mlp::backward(const Cache& cache, const Matrix& grad_out, Mlp* grads) const {
  Matrix g = grad_out;
  const std::size_t L = weights_.size();
  for (std::size_t l = L; l-- > 0;) {
    const bool act = l + 1 < L || activate_output_;
    if (act) g = (g.array() * silu_grad(cache.pre[l]).array()).matrix();
    if (grads) {
      grads->weights_[l].noalias() += g * cache.post[l].transpose();
      grads->biases_[l] += g.rowwise().sum();
    }
    g = weights_[l].transpose() * g;
  }
  return g;
}

Mlp Mlp::zeros_like() const {
  Mlp out = *this;
  out.set_zero();
  return out;
}

void Mlp::set_zero() {
  for (auto& w : weights_) w.setZero();
  for (auto& b : biases_) b.setZero();
}

std::vector<ParamView> Mlp::params() {
  std::vector<ParamView> out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back({weights_[l].data(), weights_[l].size()});
    out.push_back({biases_[l].data(), biases_[l].size()});
  }
  return out;
}

void Adam::step(const std::vector<ParamView>& params, const std::vector<ParamView>& grads, bool ascend) {
  if (params.size() != grads.size()) throw std::invalid_argument("Adam::step: parameter/gradient count mismatch");
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.push_back(Vector::Zero(p.size));
      v_.push_back(Vector::Zero(p.size));
    }
  }
  ++iter_;
  const double c1 = 1.0 - std::pow(beta1_, iter_);
  const double c2 = 1.0 - std::pow(beta2_, iter_);
  const double sign = ascend ? 1.0 : -1.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Eigen::Map<Vector> p(params[k].data, params[k].size);
    Eigen::Map<const Vector> g(grads[k].data, grads[k].size);
    m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * g;
    v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * g.cwiseProduct(g);
    p.array() += sign * lr_ * (m_[k].array() / c1) / ((v_[k].array() / c2).sqrt() + eps_);
  }
}

}  // namespace mplab
