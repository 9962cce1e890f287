#pragma once

#include <cstddef>
#include <vector>

namespace fedssta {

// rows = true class, cols = predicted class
struct ConfusionMatrix {
  std::size_t classes = 0;
  std::vector<std::size_t> counts;

  explicit ConfusionMatrix(std::size_t classes_ = 0)
      : classes(classes_), counts(classes_ * classes_, 0) {}

  void add(std::size_t true_class, std::size_t predicted_class);
  std::size_t at(std::size_t t, std::size_t p) const { return counts[t * classes + p]; }
  std::size_t total() const;
};

// macro-averaged one-vs-rest value plus the classes whose denominator was
// zero (those contribute 0 to the mean)
struct MacroMetric {
  double value = 0.0;
  std::vector<std::size_t> zero_denominator_classes;
};

double accuracy(const ConfusionMatrix& cm);
MacroMetric precision(const ConfusionMatrix& cm);
MacroMetric recall(const ConfusionMatrix& cm);

}  // namespace fedssta
