#include "mocha/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mocha/error.hpp"

namespace mocha {

double kolmogorov_survival(double x) {
  if (x < 1e-3) return 1.0;
  // Alternating series 2 sum (-1)^{j-1} exp(-2 j^2 x^2); converges fast for x > 0.3.
  if (x > 0.3) {
    double sum = 0.0;
    double sign = 1.0;
    for (int j = 1; j <= 100; ++j) {
      const double term = std::exp(-2.0 * j * j * x * x);
      sum += sign * term;
      if (term < 1e-16) break;
      sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
  }
  // Small x: CDF = sqrt(2 pi)/x sum exp(-(2j-1)^2 pi^2 / (8 x^2)).
  constexpr double kPi = 3.14159265358979323846;
  double cdf = 0.0;
  for (int j = 1; j <= 50; ++j) {
    const double k = 2.0 * j - 1.0;
    cdf += std::exp(-k * k * kPi * kPi / (8.0 * x * x));
  }
  cdf *= std::sqrt(2.0 * kPi) / x;
  return std::clamp(1.0 - cdf, 0.0, 1.0);
}

KsResult ks_test_exponential(std::span<const double> samples) {
  if (samples.empty()) throw Error(ErrorCode::InvalidArgument, "KS test needs samples");
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double cdf = x[i] > 0.0 ? -std::expm1(-x[i]) : 0.0;
    d = std::max(d, std::max(static_cast<double>(i + 1) / n - cdf, cdf - static_cast<double>(i) / n));
  }
  const double root = std::sqrt(n);
  KsResult result;
  result.statistic = d;
  result.p_value = kolmogorov_survival((root + 0.12 + 0.11 / root) * d);
  return result;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorCode::InvalidArgument, "scores and labels differ in length");
  }
  double positives = 0.0, negatives = 0.0, wins = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) continue;
    positives += 1.0;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j]) continue;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  for (int l : labels) negatives += l ? 0.0 : 1.0;
  if (positives == 0.0 || negatives == 0.0) return 0.5;
  return wins / (positives * negatives);
}

}  // namespace mocha
