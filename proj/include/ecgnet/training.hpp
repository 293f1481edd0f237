#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ecgnet/losses_metrics.hpp"
#include "ecgnet/models.hpp"
#include "ecgnet/nn/tensor.hpp"
#include "ecgnet/segmenter.hpp"

namespace ecgnet {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainConfig {
  static constexpr std::size_t kReferenceBatchSize = 2048;

  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  AdamConfig adam;
  FocalConfig focal;
  std::uint64_t seed = 0;
  double split_fraction = 0.7;
  std::size_t eval_batch_size = 256;

  void validate() const;
};

// Per-parameter first and second moments plus the shared step count.
template <typename T>
struct AdamState {
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;
  std::size_t t = 0;
};

// One bias-corrected Adam update from the parameters' grad buffers.
template <typename T>
void adam_step(const std::vector<nn::NamedTensor<T>>& params, AdamState<T>& state, const AdamConfig& cfg) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.tensor->size(), T{0});
      state.v.emplace_back(p.tensor->size(), T{0});
    }
  }
  require(state.m.size() == params.size(), "adam state does not match parameter list");
  ++state.t;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i].tensor;
    require(p.has_grad(), "parameter '" + params[i].name + "' has no gradient buffer");
    require(state.m[i].size() == p.size(), "adam state shape mismatch for '" + params[i].name + "'");
    const auto g = p.grad();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double gk = static_cast<double>(g[k]);
      const double mk = cfg.beta1 * static_cast<double>(m[k]) + (1.0 - cfg.beta1) * gk;
      const double vk = cfg.beta2 * static_cast<double>(v[k]) + (1.0 - cfg.beta2) * gk * gk;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      const double update = cfg.lr * (mk / c1) / (std::sqrt(vk / c2) + cfg.eps);
      p[k] = static_cast<T>(static_cast<double>(p[k]) - update);
    }
  }
}

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_weighted_f1 = 0.0;
  std::vector<double> val_f1;
  std::vector<double> val_specificity;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
};

// CSV with header epoch,train_loss,val_loss,val_weighted_f1,val_specificity_N,
// val_specificity_A,val_specificity_O. Reals use the shortest round-trip form.
std::string history_csv(const TrainHistory& history);
void write_history_csv(const std::filesystem::path& path, const TrainHistory& history);
std::string format_real(double v);

// Named copies of a model's checkpointed tensors.
struct ModelSnapshot {
  std::vector<std::string> names;
  std::vector<nn::Tensor<float>> tensors;
};

ModelSnapshot snapshot(Classifier<float>& model);
void restore(Classifier<float>& model, const ModelSnapshot& snap);
void save_snapshot(const std::filesystem::path& path, const ModelSnapshot& snap);

struct TrainResult {
  TrainHistory history;
  ModelSnapshot best;       // state at the best validation weighted F1
  std::size_t best_epoch = 0;
};

using EpochCallback = std::function<void(const EpochStats&)>;
// Returning true after an epoch ends training early.
using StopCondition = std::function<bool(const EpochStats&)>;

// Seeded shuffle -> minibatch forward (train mode) -> focal loss -> backward ->
// Adam, then an eval-mode pass over `val`. The model ends in its last-epoch
// state; the best epoch's state is returned in the result.
TrainResult train(Classifier<float>& model, const std::vector<Segment>& train_set, const std::vector<Segment>& val,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {}, const StopCondition& stop = {});

// Eval-mode probabilities, row-major [N, classes].
std::vector<float> predict(Classifier<float>& model, const std::vector<Segment>& segments,
                           std::size_t batch_size = 256);

// Argmax of the mean probability rows; ties (within 1e-12) go to the lowest
// class index.
std::size_t aggregate_record(std::span<const float> probs, std::size_t rows, std::size_t classes);

struct EvaluationResult {
  MetricsReport segment;
  MetricsReport record;
  double loss = 0.0;  // mean focal loss over segments
  std::size_t records_without_segments = 0;
};

// Segment-level and record-level metrics. Records whose range is empty cannot
// be classified and are only counted.
EvaluationResult evaluate(Classifier<float>& model, const std::vector<Segment>& segments,
                          const std::map<std::string, SegmentRange>& per_record_index, const FocalConfig& focal,
                          std::size_t batch_size = 256);

nlohmann::json to_json(const EvaluationResult& result);

// The full training protocol on raw records: stratified split (seeded by
// cfg.seed), preprocessing, detection and segmentation of both halves, then
// training.
struct Experiment {
  std::vector<std::string> train_ids;
  std::vector<std::string> val_ids;
  SegmentedDataset train_segments;
  SegmentedDataset val_segments;
  TrainResult result;
};

Experiment run_experiment(Classifier<float>& model, const Dataset& ds, const PipelineConfig& pipeline,
                          const TrainConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace ecgnet
