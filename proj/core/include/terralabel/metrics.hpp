#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "terralabel/taxonomy.hpp"

namespace terralabel {

using ConfusionCounts = std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses>;

// Precision or recall with a zero denominator is reported as 0 and flagged
// undefined so the report shape never changes.
struct ClassStats {
  double precision = 0.0;
  double recall = 0.0;
  bool precision_defined = false;
  bool recall_defined = false;
  std::uint64_t support = 0;  // true-class count
};

struct Metrics {
  std::uint64_t total = 0;
  double accuracy = 0.0;
  ConfusionCounts confusion{};  // [true][predicted]
  std::array<std::array<double, kNumClasses>, kNumClasses> normalized{};  // rows / true totals
  std::array<ClassStats, kNumClasses> per_class{};
};

// Throws ArgumentError on length mismatch, empty input or untrainable codes.
Metrics evaluate(std::span<const std::uint8_t> predicted,
                 std::span<const std::uint8_t> truth);

// Derives every field from confusion counts (used to pool scenes).
Metrics metrics_from_confusion(const ConfusionCounts& counts);

// Unweighted mean; 0 for an empty list.
double mean_accuracy(std::span<const double> accuracies);

}  // namespace terralabel
