#include "ecgnet/training.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "ecgnet/nn/checkpoint.hpp"

#if defined(__SSE2__)
#include <xmmintrin.h>
#endif

namespace ecgnet {

void TrainConfig::validate() const {
  require(epochs >= 1, "epochs must be >= 1");
  require(batch_size >= 1, "batch size must be >= 1");
  require(eval_batch_size >= 1, "evaluation batch size must be >= 1");
  require(adam.lr > 0.0, "learning rate must be positive");
  require(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0,
          "adam betas must be in [0, 1)");
  require(adam.eps > 0.0, "adam epsilon must be positive");
  require(split_fraction > 0.0 && split_fraction <= 1.0, "split fraction must be in (0, 1]");
  focal.validate();
}

std::string format_real(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  ensure(ec == std::errc(), "failed to format a real number");
  return {buf, ptr};
}

std::string history_csv(const TrainHistory& history) {
  std::ostringstream out;
  out << "epoch,train_loss,val_loss,val_weighted_f1,val_specificity_N,val_specificity_A,val_specificity_O\n";
  for (const auto& e : history.epochs) {
    out << e.epoch << ',' << format_real(e.train_loss) << ',' << format_real(e.val_loss) << ','
        << format_real(e.val_weighted_f1);
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      out << ',' << format_real(k < e.val_specificity.size() ? e.val_specificity[k] : 0.0);
    }
    out << '\n';
  }
  return out.str();
}

void write_history_csv(const std::filesystem::path& path, const TrainHistory& history) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << history_csv(history);
}

ModelSnapshot snapshot(Classifier<float>& model) {
  ModelSnapshot snap;
  for (const auto& e : model.state()) {
    snap.names.push_back(e.name);
    snap.tensors.emplace_back(e.tensor->shape(), std::vector<float>(e.tensor->data().begin(), e.tensor->data().end()));
  }
  return snap;
}

void restore(Classifier<float>& model, const ModelSnapshot& snap) {
  const auto state = model.state();
  require(state.size() == snap.tensors.size(), "snapshot does not match model");
  for (std::size_t i = 0; i < state.size(); ++i) {
    require(state[i].name == snap.names[i] && state[i].tensor->shape() == snap.tensors[i].shape(),
            "snapshot entry '" + snap.names[i] + "' does not match model");
    std::copy(snap.tensors[i].data().begin(), snap.tensors[i].data().end(), state[i].tensor->data().begin());
  }
}

void save_snapshot(const std::filesystem::path& path, const ModelSnapshot& snap) {
  std::vector<nn::Tensor<float>> copies = snap.tensors;
  std::vector<nn::NamedTensor<float>> entries;
  for (std::size_t i = 0; i < copies.size(); ++i) entries.push_back({snap.names[i], &copies[i]});
  nn::save_checkpoint(path, entries);
}

namespace {

// Flush-to-zero and denormals-are-zero for the lifetime of the guard. Float
// training otherwise stalls on subnormal gradients.
class FlushDenormals {
 public:
  FlushDenormals() {
#if defined(__SSE2__)
    saved_ = _mm_getcsr();
    _mm_setcsr(saved_ | 0x8040u);
#endif
  }
  ~FlushDenormals() {
#if defined(__SSE2__)
    _mm_setcsr(saved_);
#endif
  }
  FlushDenormals(const FlushDenormals&) = delete;
  FlushDenormals& operator=(const FlushDenormals&) = delete;

 private:
  unsigned saved_ = 0;
};

nn::Tensor<float> gather(const std::vector<Segment>& segments, std::span<const std::size_t> idx,
                         std::size_t seg_len, std::vector<std::size_t>* targets) {
  nn::Tensor<float> x({idx.size(), seg_len});
  if (targets) targets->clear();
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto& s = segments[idx[r]];
    require(s.samples().size() == seg_len, "segment length does not match the model input");
    std::copy(s.samples().begin(), s.samples().end(), x.ptr() + r * seg_len);
    if (targets) targets->push_back(label_index(s.label()));
  }
  return x;
}

std::vector<std::size_t> argmax_rows(std::span<const float> probs, std::size_t classes) {
  std::vector<std::size_t> out(probs.size() / classes);
  for (std::size_t r = 0; r < out.size(); ++r) {
    const auto row = probs.subspan(r * classes, classes);
    out[r] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

}  // namespace

std::vector<float> predict(Classifier<float>& model, const std::vector<Segment>& segments, std::size_t batch_size) {
  require(batch_size >= 1, "batch size must be >= 1");
  const FlushDenormals ftz;
  const std::size_t k = model.config().num_classes;
  const std::size_t len = model.config().input_length;
  const bool was_training = model.training();
  model.set_training(false);
  std::vector<float> probs;
  probs.reserve(segments.size() * k);
  std::vector<std::size_t> idx(segments.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t start = 0; start < segments.size(); start += batch_size) {
    const auto n = std::min(batch_size, segments.size() - start);
    const auto y = model.forward(gather(segments, std::span(idx).subspan(start, n), len, nullptr));
    probs.insert(probs.end(), y.data().begin(), y.data().end());
  }
  model.set_training(was_training);
  return probs;
}

std::size_t aggregate_record(std::span<const float> probs, std::size_t rows, std::size_t classes) {
  require(rows >= 1 && probs.size() == rows * classes, "record aggregation needs at least one row");
  std::vector<double> mean(classes, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < classes; ++c) mean[c] += probs[r * classes + c];
  for (auto& m : mean) m /= static_cast<double>(rows);
  std::size_t best = 0;
  for (std::size_t c = 1; c < classes; ++c) {
    if (mean[c] > mean[best] + 1e-12) best = c;
  }
  return best;
}

EvaluationResult evaluate(Classifier<float>& model, const std::vector<Segment>& segments,
                          const std::map<std::string, SegmentRange>& per_record_index, const FocalConfig& focal,
                          std::size_t batch_size) {
  require(!segments.empty(), "nothing to evaluate: no segments");
  const std::size_t k = model.config().num_classes;
  const auto probs = predict(model, segments, batch_size);

  std::vector<std::size_t> labels;
  for (const auto& s : segments) labels.push_back(label_index(s.label()));
  const auto preds = argmax_rows(probs, k);

  EvaluationResult result;
  result.segment = make_report(confusion_matrix(preds, labels, k));
  const nn::Tensor<float> prob_tensor({segments.size(), k}, probs);
  result.loss = focal_loss(prob_tensor, labels, focal);

  ConfusionMatrix record_cm(k);
  for (const auto& [id, range] : per_record_index) {
    require(range.end <= segments.size() && range.begin <= range.end, "record index out of range for '" + id + "'");
    if (range.begin == range.end) {
      ++result.records_without_segments;
      continue;
    }
    const auto rows = range.end - range.begin;
    const auto pred = aggregate_record(std::span(probs).subspan(range.begin * k, rows * k), rows, k);
    record_cm.add(labels[range.begin], pred);
  }
  result.record = make_report(record_cm);
  return result;
}

nlohmann::json to_json(const EvaluationResult& result) {
  return {{"segment", to_json(result.segment)},
          {"record", to_json(result.record)},
          {"segment_loss", result.loss},
          {"records_without_segments", result.records_without_segments}};
}

TrainResult train(Classifier<float>& model, const std::vector<Segment>& train_set, const std::vector<Segment>& val,
                  const TrainConfig& cfg, const EpochCallback& on_epoch, const StopCondition& stop) {
  cfg.validate();
  require(!train_set.empty(), "training set is empty");
  const FlushDenormals ftz;
  const std::size_t len = model.config().input_length;
  const auto params = model.parameters();
  AdamState<float> adam;
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  const auto val_index = index_segments(val);

  TrainResult result;
  double best_f1 = -1.0;
  std::vector<std::size_t> targets;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    model.set_training(true);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const auto n = std::min(cfg.batch_size, order.size() - start);
      const auto x = gather(train_set, std::span(order).subspan(start, n), len, &targets);
      const auto probs = model.forward(x);
      const auto lg = focal_loss_with_grad(probs, targets, cfg.focal);
      if (!std::isfinite(lg.loss)) {
        throw Error("non-finite training loss at epoch " + std::to_string(epoch) + ", batch starting at " +
                    std::to_string(start));
      }
      loss_sum += lg.loss * static_cast<double>(n);
      nn::zero_grads(params);
      model.backward(lg.grad);
      adam_step(params, adam, cfg.adam);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(order.size());
    if (!val.empty()) {
      const auto ev = evaluate(model, val, val_index, cfg.focal, cfg.eval_batch_size);
      stats.val_loss = ev.loss;
      stats.val_weighted_f1 = ev.segment.weighted_f1;
      for (const auto& c : ev.segment.per_class) {
        stats.val_f1.push_back(c.f1);
        stats.val_specificity.push_back(c.specificity);
      }
    }
    model.set_training(false);
    if (val.empty() || stats.val_weighted_f1 > best_f1) {
      best_f1 = stats.val_weighted_f1;
      result.best = snapshot(model);
      result.best_epoch = epoch;
    }
    result.history.epochs.push_back(stats);
    if (on_epoch) on_epoch(stats);
    if (stop && stop(stats)) break;
  }
  return result;
}

Experiment run_experiment(Classifier<float>& model, const Dataset& ds, const PipelineConfig& pipeline,
                          const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  require(!ds.empty(), "dataset is empty");
  const auto [train_ds, val_ds] = split_dataset(ds, cfg.split_fraction, cfg.seed);
  Experiment ex;
  for (const auto& r : train_ds.records()) ex.train_ids.push_back(r.id);
  for (const auto& r : val_ds.records()) ex.val_ids.push_back(r.id);
  ex.train_segments = segment_dataset(train_ds, pipeline);
  ex.val_segments = segment_dataset(val_ds, pipeline);
  require(!ex.train_segments.segments.empty(), "no training segments: records are too short or too slow");
  ex.result = train(model, ex.train_segments.segments, ex.val_segments.segments, cfg, on_epoch);
  return ex;
}

}  // namespace ecgnet
