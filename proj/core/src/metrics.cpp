#include "terralabel/metrics.hpp"

#include "terralabel/error.hpp"

namespace terralabel {

Metrics metrics_from_confusion(const ConfusionCounts& counts) {
  Metrics m;
  m.confusion = counts;
  std::uint64_t diagonal = 0;
  std::array<std::uint64_t, kNumClasses> predicted_totals{};
  for (int t = 0; t < kNumClasses; ++t) {
    for (int p = 0; p < kNumClasses; ++p) {
      m.total += counts[t][p];
      predicted_totals[p] += counts[t][p];
    }
    diagonal += counts[t][t];
  }
  m.accuracy = m.total == 0 ? 0.0 : static_cast<double>(diagonal) / static_cast<double>(m.total);

  for (int t = 0; t < kNumClasses; ++t) {
    std::uint64_t row_total = 0;
    for (int p = 0; p < kNumClasses; ++p) row_total += counts[t][p];
    ClassStats& s = m.per_class[t];
    s.support = row_total;
    if (row_total > 0) {
      for (int p = 0; p < kNumClasses; ++p) {
        m.normalized[t][p] =
            static_cast<double>(counts[t][p]) / static_cast<double>(row_total);
      }
      s.recall = m.normalized[t][t];
      s.recall_defined = true;
    }
    if (predicted_totals[t] > 0) {
      s.precision = static_cast<double>(counts[t][t]) /
                    static_cast<double>(predicted_totals[t]);
      s.precision_defined = true;
    }
  }
  return m;
}

Metrics evaluate(std::span<const std::uint8_t> predicted,
                 std::span<const std::uint8_t> truth) {
  if (predicted.size() != truth.size()) {
    throw ArgumentError("predicted and true label lists differ in length");
  }
  if (truth.empty()) throw ArgumentError("cannot evaluate an empty label list");
  ConfusionCounts counts{};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!is_trainable(truth[i]) || !is_trainable(predicted[i])) {
      throw ArgumentError("evaluation labels must be trainable class codes");
    }
    ++counts[truth[i]][predicted[i]];
  }
  return metrics_from_confusion(counts);
}

double mean_accuracy(std::span<const double> accuracies) {
  if (accuracies.empty()) return 0.0;
  double sum = 0.0;
  for (double a : accuracies) sum += a;
  return sum / static_cast<double>(accuracies.size());
}

}  // namespace terralabel
