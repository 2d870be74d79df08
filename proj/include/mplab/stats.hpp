#pragma once

#include <cstdint>
#include <vector>

namespace mplab::stats {

enum class Alternative { TwoSided, Less, Greater };

struct TestResult {
  double statistic = 0.0;
  double z = 0.0;
  double p = 1.0;
};

double mean(const std::vector<double>& x);
double median(std::vector<double> x);
double normal_cdf(double z);

// Average ranks (1-based), ties share the mean rank.
std::vector<double> ranks(const std::vector<double>& x);

// Mann-Whitney U with the normal approximation and tie correction.
// Less: x tends to be smaller than y.
TestResult mann_whitney(const std::vector<double>& x, const std::vector<double>& y, Alternative alt);

// Wilcoxon signed-rank on x - y (zero differences dropped), normal
// approximation with tie correction. Less: x tends to be smaller than y.
TestResult wilcoxon_signed_rank(const std::vector<double>& x, const std::vector<double>& y, Alternative alt);

double spearman(const std::vector<double>& x, const std::vector<double>& y);

// Pooled two-proportion z test. Greater: p1 > p2.
TestResult two_proportion(int hits1, int n1, int hits2, int n2, Alternative alt);

// Half-width of the percentile bootstrap 95% interval of the mean.
double bootstrap_half_width(const std::vector<double>& x, int resamples, std::uint64_t seed);

}  // namespace mplab::stats
