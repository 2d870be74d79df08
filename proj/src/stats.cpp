#include "mplab/stats.hpp"

#include "mplab/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mplab::stats {

namespace {

double p_value(double z, Alternative alt) {
  switch (alt) {
    case Alternative::Less: return normal_cdf(z);
    case Alternative::Greater: return 1.0 - normal_cdf(z);
    case Alternative::TwoSided: return std::min(1.0, 2.0 * normal_cdf(-std::abs(z)));
  }
  return 1.0;
}

// sum over tie groups of (t^3 - t)
double tie_term(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size();) {
    std::size_t j = i;
    while (j < x.size() && x[j] == x[i]) ++j;
    const double t = static_cast<double>(j - i);
    acc += t * t * t - t;
    i = j;
  }
  return acc;
}

}  // namespace

double mean(const std::vector<double>& x) {
  if (x.empty()) throw std::invalid_argument("mean of an empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double median(std::vector<double> x) {
  if (x.empty()) throw std::invalid_argument("median of an empty sample");
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  return n % 2 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

std::vector<double> ranks(const std::vector<double>& x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && x[order[j]] == x[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j + 1);
    for (std::size_t k = i; k < j; ++k) r[order[k]] = avg;
    i = j;
  }
  return r;
}

TestResult mann_whitney(const std::vector<double>& x, const std::vector<double>& y, Alternative alt) {
  if (x.empty() || y.empty()) throw std::invalid_argument("mann_whitney needs two non-empty samples");
  std::vector<double> all = x;
  all.insert(all.end(), y.begin(), y.end());
  const std::vector<double> r = ranks(all);
  const double n1 = static_cast<double>(x.size()), n2 = static_cast<double>(y.size()), n = n1 + n2;
  const double r1 = std::accumulate(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(x.size()), 0.0);
  TestResult out;
  out.statistic = r1 - n1 * (n1 + 1.0) / 2.0;
  const double var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term(all) / (n * (n - 1.0)));
  out.z = var > 0 ? (out.statistic - n1 * n2 / 2.0) / std::sqrt(var) : 0.0;
  out.p = var > 0 ? p_value(out.z, alt) : 1.0;
  return out;
}

TestResult wilcoxon_signed_rank(const std::vector<double>& x, const std::vector<double>& y, Alternative alt) {
  if (x.size() != y.size()) throw std::invalid_argument("wilcoxon needs paired samples");
  std::vector<double> diff, mag;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] != y[i]) {
      diff.push_back(x[i] - y[i]);
      mag.push_back(std::abs(x[i] - y[i]));
    }
  TestResult out;
  if (diff.empty()) return out;
  const std::vector<double> r = ranks(mag);
  double w_plus = 0.0;
  for (std::size_t i = 0; i < diff.size(); ++i)
    if (diff[i] > 0) w_plus += r[i];
  const double n = static_cast<double>(diff.size());
  out.statistic = w_plus;
  const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term(mag) / 48.0;
  out.z = var > 0 ? (w_plus - n * (n + 1.0) / 4.0) / std::sqrt(var) : 0.0;
  out.p = var > 0 ? p_value(out.z, alt) : 1.0;
  return out;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("spearman needs paired samples (n >= 2)");
  const std::vector<double> rx = ranks(x), ry = ranks(y);
  const double mx = mean(rx), my = mean(ry);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxx > 0 && syy > 0 ? sxy / std::sqrt(sxx * syy) : 0.0;
}

TestResult two_proportion(int hits1, int n1, int hits2, int n2, Alternative alt) {
  if (n1 < 1 || n2 < 1) throw std::invalid_argument("two_proportion needs non-empty groups");
  const double p1 = static_cast<double>(hits1) / n1, p2 = static_cast<double>(hits2) / n2;
  const double pooled = static_cast<double>(hits1 + hits2) / (n1 + n2);
  const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2));
  TestResult out;
  out.statistic = p1 - p2;
  out.z = se > 0 ? (p1 - p2) / se : 0.0;
  out.p = se > 0 ? p_value(out.z, alt) : 1.0;
  return out;
}

double bootstrap_half_width(const std::vector<double>& x, int resamples, std::uint64_t seed) {
  if (x.empty()) throw std::invalid_argument("bootstrap of an empty sample");
  if (x.size() == 1) return 0.0;
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, x.size() - 1);
  std::vector<double> means(static_cast<std::size_t>(resamples));
  for (auto& m : means) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[pick(rng)];
    m = acc / static_cast<double>(x.size());
  }
  std::sort(means.begin(), means.end());
  const auto at = [&](double q) {
    const double pos = q * static_cast<double>(means.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, means.size() - 1);
    return means[lo] + (pos - static_cast<double>(lo)) * (means[hi] - means[lo]);
  };
  return 0.5 * (at(0.975) - at(0.025));
}

}  // namespace mplab::stats
