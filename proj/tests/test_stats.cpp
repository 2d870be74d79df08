#include "mplab/stats.hpp"
#include "mplab/types.hpp"

#include <doctest.h>

#include <cmath>

using namespace mplab::stats;

namespace {
const std::vector<double> kX{1.2, 3.4, 2.2, 5.0, 2.2, 0.7, 4.1, 3.3};
const std::vector<double> kY{2.5, 4.4, 3.9, 6.1, 2.2, 1.9, 5.0, 3.3, 7.0, 4.4};
const std::vector<double> kA{1.0, 2.5, 3.1, 4.0, 5.2, 6.0, 7.7, 8.1, 9.0, 10.5};
const std::vector<double> kB{1.5, 2.0, 3.9, 4.0, 6.1, 6.8, 7.0, 9.9, 9.5, 12.0};
}  // namespace

TEST_CASE("basic summaries") {
  CHECK(mean(kX) == doctest::Approx(2.7625).epsilon(1e-15));
  CHECK(median(kX) == 2.75);
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(ranks(kX) == std::vector<double>{2, 6, 3.5, 8, 3.5, 1, 7, 5});
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
  CHECK_THROWS(mean({}));
}

// reference values from an independent statistics package (normal
// approximation, tie correction, no continuity correction)
TEST_CASE("mann-whitney matches reference values") {
  const TestResult less = mann_whitney(kX, kY, Alternative::Less);
  CHECK(less.statistic == 23.0);
  CHECK(less.p == doctest::Approx(0.06476280896677351).epsilon(1e-10));
  CHECK(mann_whitney(kX, kY, Alternative::Greater).p == doctest::Approx(0.9352371910332264).epsilon(1e-10));
  CHECK(mann_whitney(kX, kY, Alternative::TwoSided).p == doctest::Approx(0.12952561793354703).epsilon(1e-10));
}

TEST_CASE("wilcoxon signed-rank matches reference values") {
  CHECK(wilcoxon_signed_rank(kA, kB, Alternative::Less).p == doctest::Approx(0.02480092584819691).epsilon(1e-10));
  CHECK(wilcoxon_signed_rank(kA, kB, Alternative::Greater).p == doctest::Approx(0.9751990741518031).epsilon(1e-10));
  CHECK(wilcoxon_signed_rank(kA, kB, Alternative::TwoSided).p == doctest::Approx(0.04960185169639382).epsilon(1e-10));
  CHECK_THROWS(wilcoxon_signed_rank(kA, kX, Alternative::Less));
}

TEST_CASE("spearman and proportions") {
  CHECK(spearman(kX, {3, 1, 2, 5, 4, 0, 7, 6}) == doctest::Approx(0.6227656561948947).epsilon(1e-12));
  CHECK(spearman(kA, kA) == doctest::Approx(1.0));
  const TestResult r = two_proportion(30, 100, 15, 100, Alternative::Greater);
  CHECK(r.z == doctest::Approx(2.5400025400038095).epsilon(1e-12));
  CHECK(r.p == doctest::Approx(0.005542583190301356).epsilon(1e-9));
}

TEST_CASE("bootstrap half width") {
  mplab::Rng rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> x(400);
  for (double& v : x) v = n(rng);
  const double h = bootstrap_half_width(x, 1000, 7);
  CHECK(h == bootstrap_half_width(x, 1000, 7));
  CHECK(h == doctest::Approx(1.96 / std::sqrt(400.0)).epsilon(0.15));
  CHECK(bootstrap_half_width(std::vector<double>(10, 2.0), 100, 1) == 0.0);
}
