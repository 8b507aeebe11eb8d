#pragma once

#include <span>

namespace mocha {

struct KsResult {
  double statistic{0.0};
  double p_value{1.0};
};

/// One-sample Kolmogorov-Smirnov test of `samples` against Exp(1). The p-value
/// uses the asymptotic Kolmogorov distribution with Stephens' small-sample
/// correction.
[[nodiscard]] KsResult ks_test_exponential(std::span<const double> samples);

/// P(K > x) for the Kolmogorov distribution.
[[nodiscard]] double kolmogorov_survival(double x);

/// Area under the ROC curve of `scores` against binary `labels` (ties count
/// one half). Returns 0.5 when either class is empty.
[[nodiscard]] double roc_auc(std::span<const double> scores, std::span<const int> labels);

}  // namespace mocha
