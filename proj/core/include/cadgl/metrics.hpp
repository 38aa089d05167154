#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>

namespace cadgl {

struct Metrics {
  double accuracy = 0.0;
  double f1 = 0.0;
  // Undefined (nullopt) unless both classes are present.
  std::optional<double> auroc;
  std::optional<double> auprc;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

// Accuracy and F1 at `threshold`; AUROC as the Mann-Whitney statistic with
// mid-ranks for ties; AUPRC as the step-wise sum of precision over recall
// increments at each distinct score.
Metrics compute_metrics(std::span<const double> scores, std::span<const int> labels,
                        double threshold = 0.5);

std::optional<double> auroc(std::span<const double> scores, std::span<const int> labels);
std::optional<double> auprc(std::span<const double> scores, std::span<const int> labels);

}  // namespace cadgl
