#include "fedssta/metrics.hpp"

#include <stdexcept>
#include <string>

namespace fedssta {

void ConfusionMatrix::add(std::size_t true_class, std::size_t predicted_class) {
  if (true_class >= classes || predicted_class >= classes) {
    throw std::out_of_range("confusion matrix: class index out of range (true " +
                            std::to_string(true_class) + ", predicted " +
                            std::to_string(predicted_class) + ", classes " +
                            std::to_string(classes) + ")");
  }
  ++counts[true_class * classes + predicted_class];
}

std::size_t ConfusionMatrix::total() const {
  std::size_t n = 0;
  for (std::size_t c : counts) n += c;
  return n;
}

double accuracy(const ConfusionMatrix& cm) {
  std::size_t n = cm.total();
  if (n == 0) throw std::domain_error("accuracy: empty confusion matrix");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < cm.classes; ++i) correct += cm.at(i, i);
  return static_cast<double>(correct) / static_cast<double>(n);
}

MacroMetric precision(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw std::domain_error("precision: empty confusion matrix");
  MacroMetric m;
  double sum = 0.0;
  for (std::size_t c = 0; c < cm.classes; ++c) {
    std::size_t denom = 0;  // everything predicted as c
    for (std::size_t t = 0; t < cm.classes; ++t) denom += cm.at(t, c);
    if (denom == 0) {
      m.zero_denominator_classes.push_back(c);
    } else {
      sum += static_cast<double>(cm.at(c, c)) / static_cast<double>(denom);
    }
  }
  m.value = sum / static_cast<double>(cm.classes);
  return m;
}

MacroMetric recall(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw std::domain_error("recall: empty confusion matrix");
  MacroMetric m;
  double sum = 0.0;
  for (std::size_t t = 0; t < cm.classes; ++t) {
    std::size_t denom = 0;  // everything truly t
    for (std::size_t c = 0; c < cm.classes; ++c) denom += cm.at(t, c);
    if (denom == 0) {
      m.zero_denominator_classes.push_back(t);
    } else {
      sum += static_cast<double>(cm.at(t, t)) / static_cast<double>(denom);
    }
  }
  m.value = sum / static_cast<double>(cm.classes);
  return m;
}

}  // namespace fedssta
