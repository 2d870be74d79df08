#pragma once

#include "mplab/types.hpp"

#include <vector>

namespace mplab {

// A flat view of a parameter block; optimizers step over lists of these.
struct ParamView {
  double* data = nullptr;
  Index size = 0;
};

// Fully-connected network with SiLU hidden activations. Samples are stored
// column-wise: forward maps an (in x B) matrix to (out x B).
class Mlp {
public:
  struct Cache {
    std::vector<Matrix> pre;   // pre-activations per layer
    std::vector<Matrix> post;  // layer inputs; post[0] is the network input
  };

  Mlp() = default;
  // `activate_output` applies SiLU after the last layer too.
  Mlp(std::vector<int> sizes, bool activate_output, Rng& rng);

  Matrix forward(const Matrix& x, Cache* cache = nullptr) const;
  // Back-propagates `grad_out` (out x B); returns the input gradient and,
  // when `grads` is non-null, accumulates parameter gradients into it.
  Matrix backward(const Cache& cache, const Matrix& grad_out, Mlp* grads = nullptr) const;

  Mlp zeros_like() const;
  void set_zero();
  std::vector<ParamView> params();

  int input_size() const { return static_cast<int>(weights_.front().cols()); }
  int output_size() const { return static_cast<int>(weights_.back().rows()); }
  bool activate_output() const { return activate_output_; }
  const std::vector<Matrix>& weights() const { return weights_; }
  const std::vector<Vector>& biases() const { return biases_; }
  std::vector<Matrix>& weights() { return weights_; }
  std::vector<Vector>& biases() { return biases_; }

private:
  std::vector<Matrix> weights_;
  std::vector<Vector> biases_;
  bool activate_output_ = false;
};

// Adam over a list of parameter views. Moments are allocated on first use.
class Adam {
public:
  Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  // Descends the gradient; `ascend` flips the direction.
  void step(const std::vector<ParamView>& params, const std::vector<ParamView>& grads, bool ascend = false);
  int iterations() const { return iter_; }

private:
  double lr_, beta1_, beta2_, eps_;
  int iter_ = 0;
  std::vector<Vector> m_, v_;
};

}  // namespace mplab
