#include "helpers.hpp"
#include "mplab/denoiser.hpp"

#include <doctest.h>

using namespace mplab;
using testing::fd_gradient;
using testing::rel_err;

namespace {

const DiffusionModel& analytic() {
  static const DiffusionModel m = make_analytic_model(make_world(), make_schedule(50), 0);
  return m;
}

// A small, untrained network is enough to exercise the derivative code.
const MlpDenoiser& small_mlp() {
  static const MlpDenoiser net = [] {
    Rng rng(4);
    Mlp mlp({2 + kTimeEmbedDim + kCondDim, 24, 24, 2}, false, rng);
    return MlpDenoiser(make_schedule(50), std::move(mlp), Vector::Constant(kCondDim, 0.1), true);
  }();
  return net;
}

double close(const Vector& a, const Vector& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

void check_derivatives(const Denoiser& net, const Condition& c, double t, std::uint64_t seed, const Latent* at = nullptr) {
  Rng rng(seed);
  const Latent z = at ? *at : Latent(standard_normal(rng, net.dim()));
  const Vector g = standard_normal(rng, net.dim());
  const EpsVjp v = net.vjp(z, t, c, g);
  const Matrix fz = fd_gradient([&](const Matrix& x) { return g.dot(net.predict(x, t, c)); }, z);
  CHECK(close(v.grad_z, fz.col(0)) < 1e-6);
  CHECK(rel_err(net.jacobian_z(z, t, c).transpose() * g, v.grad_z) < 1e-10);
  if (c.is_null()) {
    CHECK(v.grad_c.size() == 0);
    return;
  }
  const Matrix fc = fd_gradient(
      [&](const Matrix& e) { return g.dot(net.predict(z, t, Condition::of(e.col(0), c.id))); }, *c.embedding);
  CHECK(close(v.grad_c, fc.col(0)) < 1e-6);
}

}  // namespace

TEST_CASE("analytic eps equals the world's posterior-mean eps at the base prompt") {
  const DiffusionModel& m = analytic();
  Rng rng(1);
  for (int cond = 0; cond < m.world.num_conditions(); ++cond)
    for (int t : {1, 10, 25, 50}) {
      const Latent z = standard_normal(rng, 2);
      const Vector expect = analytic_eps(m.world, cond, z, t, m.schedule);
      CHECK(rel_err(predict_eps(*m.eps, z, t, m.condition(cond)), expect) < 1e-12);
      CHECK(rel_err(predict_eps(*m.eps, z, t, Condition::null()), analytic_eps(m.world, std::nullopt, z, t, m.schedule)) <
            1e-12);
    }
}

TEST_CASE("standard normal world gives eps = sqrt(1-ab) z") {
  const NoiseSchedule s = make_schedule(50);
  const AnalyticDenoiser den(make_standard_normal_world(3), s);
  Rng rng(2);
  for (int t : {1, 20, 50}) {
    const Latent z = standard_normal(rng, 3);
    CHECK(rel_err(den.predict(z, t, Condition::null()), std::sqrt(1 - s.alpha_bar(t)) * z) < 1e-12);
  }
}

TEST_CASE("tilting toward an attribute anchor pulls the denoised estimate toward that component") {
  const DiffusionModel& m = analytic();
  const auto* den = dynamic_cast<const AnalyticDenoiser*>(m.eps.get());
  REQUIRE(den != nullptr);
  const int cond = 0;
  const Prompt base = m.text.base_prompt(cond, m.world);
  const auto& comps = m.world.condition(cond).components;
  Rng rng(3);
  const Latent z = standard_normal(rng, 2);
  const int t = 40;
  const Vector base_z0 = tweedie_denoise(z, predict_eps(*m.eps, z, t, m.condition(cond)), t, m.schedule);
  for (std::size_t j = 0; j < comps.size(); ++j) {
    const auto word = m.world.attribute_word_for(ComponentRef{cond, static_cast<int>(j)});
    if (!word) continue;
    Prompt p = base;
    p.content.push_back(m.text.vocab().index_of(*word));
    const CondEmbedding a = m.text.encode(p, nullptr);
    const Vector z0 = tweedie_denoise(z, predict_eps(*m.eps, z, t, m.condition(cond, a)), t, m.schedule);
    const Vector mu = comps[j].mean;
    CHECK((z0 - mu).norm() < (base_z0 - mu).norm());
  }
}

TEST_CASE("analytic derivatives match central differences") {
  const DiffusionModel& m = analytic();
  Rng rng(5);
  double largest = 0.0;
  for (int cond = 0; cond < m.world.num_conditions(); ++cond) {
    const Vector c = m.condition(cond).embedding.value() + 0.05 * standard_normal(rng, kCondDim);
    const auto& comps = m.world.condition(cond).components;
    for (double t : {1.0, 7.5, 30.0, 50.0}) {
      check_derivatives(*m.eps, m.condition(cond, c), t, 10 + cond);
      // between the majority and a minority mean, where responsibilities are not saturated
      const Latent mid = std::sqrt(m.schedule.alpha_bar_at(t)) * 0.5 * (comps[0].mean + comps[1].mean);
      const Vector gc = m.eps->vjp(mid, t, m.condition(cond, c), Vector::Ones(2)).grad_c;
      largest = std::max(largest, gc.norm());
      check_derivatives(*m.eps, m.condition(cond, c), t, 30 + cond, &mid);
    }
  }
  CHECK(largest > 1e-2);
  check_derivatives(*m.eps, Condition::null(), 12.0, 99);
}

TEST_CASE("mlp derivatives match central differences") {
  Rng rng(6);
  const Vector c = standard_normal(rng, kCondDim);
  for (double t : {1.0, 13.3, 50.0}) {
    check_derivatives(small_mlp(), Condition::of(c, 0), t, 20);
    check_derivatives(small_mlp(), Condition::null(), t, 21);
  }
}

TEST_CASE("time outside (0, T] is rejected") {
  const DiffusionModel& m = analytic();
  const Latent z = Latent::Zero(2);
  CHECK_THROWS_AS(predict_eps(*m.eps, z, 0, m.condition(0)), std::out_of_range);
  CHECK_THROWS_AS(predict_eps(*m.eps, z, 51, m.condition(0)), std::out_of_range);
  CHECK_THROWS_AS(small_mlp().predict(z, 50.5, Condition::null()), std::out_of_range);
  CHECK_THROWS_AS(m.eps->predict(z, 0.0, m.condition(0)), std::out_of_range);
  CHECK_THROWS_AS(predict_eps(*m.eps, Latent::Zero(3), 5, m.condition(0)), std::invalid_argument);
}

TEST_CASE("time embedding is smooth and distinguishes steps") {
  const Vector a = time_embedding(10.0, 50), b = time_embedding(10.0 + 1e-6, 50), c = time_embedding(11.0, 50);
  CHECK(a.size() == kTimeEmbedDim);
  CHECK((a - b).norm() < 1e-4);
  CHECK((a - c).norm() > 1e-3);
}
