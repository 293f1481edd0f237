#include "ecgnet/losses_metrics.hpp"

#include "ecgnet/record_io.hpp"

namespace ecgnet {

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted) {
  require(truth < k_ && predicted < k_, "confusion matrix class index out of range");
  ++counts_[truth * k_ + predicted];
}

std::size_t ConfusionMatrix::total() const {
  std::size_t t = 0;
  for (const auto c : counts_) t += c;
  return t;
}

std::size_t ConfusionMatrix::true_positives(std::size_t k) const { return at(k, k); }

std::size_t ConfusionMatrix::false_positives(std::size_t k) const {
  std::size_t s = 0;
  for (std::size_t t = 0; t < k_; ++t)
    if (t != k) s += at(t, k);
  return s;
}

std::size_t ConfusionMatrix::false_negatives(std::size_t k) const {
  std::size_t s = 0;
  for (std::size_t p = 0; p < k_; ++p)
    if (p != k) s += at(k, p);
  return s;
}

std::size_t ConfusionMatrix::true_negatives(std::size_t k) const {
  return total() - true_positives(k) - false_positives(k) - false_negatives(k);
}

ConfusionMatrix confusion_matrix(std::span<const std::size_t> predictions, std::span<const std::size_t> labels,
                                 std::size_t classes) {
  require(predictions.size() == labels.size(), "predictions and labels differ in length");
  ConfusionMatrix cm(classes);
  for (std::size_t i = 0; i < labels.size(); ++i) cm.add(labels[i], predictions[i]);
  return cm;
}

namespace {
double ratio(std::size_t num, std::size_t den, double empty) {
  return den == 0 ? empty : static_cast<double>(num) / static_cast<double>(den);
}
}  // namespace

double specificity(const ConfusionMatrix& cm, std::size_t k) {
  const auto tn = cm.true_negatives(k);
  return ratio(tn, tn + cm.false_positives(k), 1.0);
}

double precision(const ConfusionMatrix& cm, std::size_t k) {
  const auto tp = cm.true_positives(k);
  return ratio(tp, tp + cm.false_positives(k), 0.0);
}

double recall(const ConfusionMatrix& cm, std::size_t k) {
  const auto tp = cm.true_positives(k);
  return ratio(tp, tp + cm.false_negatives(k), 0.0);
}

double f1(const ConfusionMatrix& cm, std::size_t k) {
  const auto tp = cm.true_positives(k);
  return ratio(2 * tp, 2 * tp + cm.false_negatives(k) + cm.false_positives(k), 0.0);
}

double weighted_f1(const ConfusionMatrix& cm) {
  const auto total = cm.total();
  if (total == 0) return 0.0;
  double s = 0.0;
  for (std::size_t k = 0; k < cm.classes(); ++k) s += static_cast<double>(cm.support(k)) * f1(cm, k);
  return s / static_cast<double>(total);
}

double accuracy(const ConfusionMatrix& cm) {
  std::size_t correct = 0;
  for (std::size_t k = 0; k < cm.classes(); ++k) correct += cm.true_positives(k);
  return ratio(correct, cm.total(), 0.0);
}

MetricsReport make_report(const ConfusionMatrix& cm) {
  MetricsReport r;
  r.confusion = cm;
  for (std::size_t k = 0; k < cm.classes(); ++k) {
    r.per_class.push_back({precision(cm, k), recall(cm, k), f1(cm, k), specificity(cm, k), cm.support(k)});
  }
  r.weighted_f1 = weighted_f1(cm);
  r.accuracy = accuracy(cm);
  return r;
}

nlohmann::json to_json(const ConfusionMatrix& cm) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t t = 0; t < cm.classes(); ++t) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t p = 0; p < cm.classes(); ++p) row.push_back(cm.at(t, p));
    rows.push_back(row);
  }
  nlohmann::json labels = nlohmann::json::array();
  for (std::size_t k = 0; k < cm.classes(); ++k) {
    labels.push_back(k < kNumClasses ? std::string(1, label_code(label_from_index(k))) : std::to_string(k));
  }
  return {{"labels", labels}, {"rows", "true"}, {"columns", "predicted"}, {"counts", rows}};
}

nlohmann::json to_json(const MetricsReport& report) {
  nlohmann::json per_class = nlohmann::json::object();
  for (std::size_t k = 0; k < report.per_class.size(); ++k) {
    const auto& m = report.per_class[k];
    const auto key = k < kNumClasses ? std::string(1, label_code(label_from_index(k))) : std::to_string(k);
    per_class[key] = {{"precision", m.precision},
                      {"recall", m.recall},
                      {"f1", m.f1},
                      {"specificity", m.specificity},
                      {"support", m.support}};
  }
  return {{"per_class", per_class},
          {"weighted_f1", report.weighted_f1},
          {"accuracy", report.accuracy},
          {"confusion_matrix", to_json(report.confusion)}};
}

}  // namespace ecgnet
