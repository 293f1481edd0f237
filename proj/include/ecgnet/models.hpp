#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "ecgnet/error.hpp"
#include "ecgnet/nn/layers.hpp"
#include "ecgnet/nn/lstm.hpp"
#include "ecgnet/nn/tensor.hpp"

namespace ecgnet {

// BaselineLstm: BiLSTM on raw samples. ConcatA: CNN and BiLSTM run side by
// side on raw samples, pooled CNN features concatenated with the LSTM output.
// CascadeB: the CNN feature map is read by the BiLSTM as a sequence.
enum class Scheme { BaselineLstm, ConcatA, CascadeB };

std::string scheme_name(Scheme scheme);
Scheme parse_scheme(const std::string& name);

struct ConvBlockSpec {
  std::size_t out_channels = 0;
  std::size_t kernel = 0;
  bool pool = false;
  bool operator==(const ConvBlockSpec&) const = default;
};

// Each block: conv (same padding) -> batch norm -> ReLU -> [max pool 2] -> dropout.
struct CnnBackboneConfig {
  std::vector<ConvBlockSpec> layers{{32, 7, true}, {64, 5, true}, {128, 5, false}, {256, 3, false}};
  double dropout = 0.2;

  std::size_t feature_dim() const { return layers.empty() ? 0 : layers.back().out_channels; }
  std::size_t sequence_length(std::size_t input_length) const;
  bool operator==(const CnnBackboneConfig&) const = default;
};

struct ModelConfig {
  Scheme scheme = Scheme::CascadeB;
  CnnBackboneConfig cnn;
  std::size_t lstm_hidden = 100;
  std::size_t num_classes = 3;
  std::size_t input_length = 1000;
  double lstm_dropout = 0.2;

  void validate() const;
  // Width of the vector entering the classification head.
  std::size_t fusion_width() const;
  // Trainable parameter count derived from the configuration alone.
  std::size_t parameter_count() const;
  bool operator==(const ModelConfig&) const = default;

  // Desk-scale variant: channels 8/16/32/64, hidden 32.
  static ModelConfig tiny(Scheme scheme);
};

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

// The four-block convolutional feature extractor, returning the feature map
// [B, C, L'] before any global pooling.
template <typename T>
class CnnBackbone : public nn::Sequential<T> {
 public:
  CnnBackbone(const CnnBackboneConfig& cfg, std::size_t in_channels = 1) {
    std::size_t in = in_channels;
    for (const auto& spec : cfg.layers) {
      this->template add<nn::Conv1d<T>>(in, spec.out_channels, spec.kernel, 1, nn::Padding::Same);
      this->template add<nn::BatchNorm1d<T>>(spec.out_channels);
      this->template add<nn::ReLU<T>>();
      if (spec.pool) this->template add<nn::MaxPool1d<T>>(2, 2);
      dropouts_.push_back(&this->template add<nn::Dropout<T>>(cfg.dropout));
      in = spec.out_channels;
    }
  }

  const std::vector<nn::Dropout<T>*>& dropouts() const { return dropouts_; }

 private:
  std::vector<nn::Dropout<T>*> dropouts_;
};

// Full classifier: input [B, input_length] samples, output [B, classes]
// softmax probabilities.
template <typename T>
class Classifier : public nn::Layer<T> {
 public:
  Classifier(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    if (cfg_.scheme != Scheme::BaselineLstm) cnn_ = std::make_unique<CnnBackbone<T>>(cfg_.cnn);
    const std::size_t lstm_in = cfg_.scheme == Scheme::CascadeB ? cfg_.cnn.feature_dim() : 1;
    lstm_ = std::make_unique<nn::BiLstm<T>>(lstm_in, cfg_.lstm_hidden);
    lstm_dropout_ = std::make_unique<nn::Dropout<T>>(cfg_.lstm_dropout);
    head_ = std::make_unique<nn::Dense<T>>(cfg_.fusion_width(), cfg_.num_classes);
    initialize(seed);
  }

  const ModelConfig& config() const { return cfg_; }

  nn::Tensor<T> forward(const nn::Tensor<T>& x) override {
    require_input(x);
    batch_ = x.dim(0);
    const std::size_t len = x.dim(1);
    nn::Tensor<T> features;
    switch (cfg_.scheme) {
      case Scheme::BaselineLstm:
        features = lstm_dropout_->forward(lstm_->forward(x.reshaped({batch_, len, 1})));
        break;
      case Scheme::ConcatA: {
        const auto pooled = pool_.forward(cnn_->forward(x.reshaped({batch_, 1, len})));
        const auto temporal = lstm_dropout_->forward(lstm_->forward(x.reshaped({batch_, len, 1})));
        features = concat(pooled, temporal);
        break;
      }
      case Scheme::CascadeB:
        features = lstm_dropout_->forward(lstm_->forward(swap_.forward(cnn_->forward(x.reshaped({batch_, 1, len})))));
        break;
    }
    this->has_cache_ = true;
    return softmax_.forward(head_->forward(features));
  }

  nn::Tensor<T> backward(const nn::Tensor<T>& dprobs) override {
    this->require_forward("classifier");
    const auto dfeat = head_->backward(softmax_.backward(dprobs));
    const std::size_t len = cfg_.input_length;
    switch (cfg_.scheme) {
      case Scheme::BaselineLstm:
        return lstm_->backward(lstm_dropout_->backward(dfeat)).reshaped({batch_, len});
      case Scheme::ConcatA: {
        const std::size_t c = cfg_.cnn.feature_dim();
        const std::size_t h = cfg_.lstm_hidden;
        nn::Tensor<T> dpooled({batch_, c});
        nn::Tensor<T> dtemporal({batch_, h});
        for (std::size_t b = 0; b < batch_; ++b) {
          std::copy_n(dfeat.ptr() + b * (c + h), c, dpooled.ptr() + b * c);
          std::copy_n(dfeat.ptr() + b * (c + h) + c, h, dtemporal.ptr() + b * h);
        }
        auto dx = cnn_->backward(pool_.backward(dpooled)).reshaped({batch_, len});
        const auto dx_lstm = lstm_->backward(lstm_dropout_->backward(dtemporal));
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dx_lstm[i];
        return dx;
      }
      case Scheme::CascadeB:
        return cnn_->backward(swap_.backward(lstm_->backward(lstm_dropout_->backward(dfeat))))
            .reshaped({batch_, len});
    }
    throw InvariantError("unknown scheme");
  }

  std::vector<nn::NamedTensor<T>> parameters() override {
    std::vector<nn::NamedTensor<T>> out;
    if (cnn_) append(out, nn::prefixed(cnn_->parameters(), "cnn."));
    append(out, nn::prefixed(lstm_->parameters(), "lstm."));
    append(out, nn::prefixed(head_->parameters(), "head."));
    return out;
  }

  std::vector<nn::NamedTensor<T>> buffers() override {
    return cnn_ ? nn::prefixed(cnn_->buffers(), "cnn.") : std::vector<nn::NamedTensor<T>>{};
  }

  // Parameters followed by buffers: everything a checkpoint must hold.
  std::vector<nn::NamedTensor<T>> state() {
    auto out = parameters();
    append(out, buffers());
    return out;
  }

  void set_training(bool training) override {
    nn::Layer<T>::set_training(training);
    if (cnn_) cnn_->set_training(training);
    lstm_->set_training(training);
    lstm_dropout_->set_training(training);
    head_->set_training(training);
  }

  // Restarts every dropout stream from `seed`.
  void reseed_dropout(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    if (cnn_)
      for (auto* d : cnn_->dropouts()) d->reseed(rng());
    lstm_dropout_->reseed(rng());
  }

  // Feature map before pooling, [B, C, L']. Not available for the baseline.
  nn::Tensor<T> cnn_feature_map(const nn::Tensor<T>& x) {
    require_input(x);
    if (!cnn_) throw Error("the baseline scheme has no CNN branch");
    return cnn_->forward(x.reshaped({x.dim(0), 1, x.dim(1)}));
  }

  // Globally pooled CNN features, [B, C].
  nn::Tensor<T> cnn_features(const nn::Tensor<T>& x) { return pool_.forward(cnn_feature_map(x)); }

  // The vector fed to the classification head, [B, fusion_width].
  nn::Tensor<T> fused_features(const nn::Tensor<T>& x) {
    require_input(x);
    const std::size_t b = x.dim(0), len = x.dim(1);
    switch (cfg_.scheme) {
      case Scheme::BaselineLstm: return lstm_dropout_->forward(lstm_->forward(x.reshaped({b, len, 1})));
      case Scheme::ConcatA:
        return concat(cnn_features(x), lstm_dropout_->forward(lstm_->forward(x.reshaped({b, len, 1}))));
      case Scheme::CascadeB:
        return lstm_dropout_->forward(lstm_->forward(swap_.forward(cnn_feature_map(x))));
    }
    throw InvariantError("unknown scheme");
  }

  CnnBackbone<T>* cnn() { return cnn_.get(); }
  nn::BiLstm<T>& lstm() { return *lstm_; }
  nn::Dense<T>& head() { return *head_; }

 private:
  void require_input(const nn::Tensor<T>& x) const {
    if (x.rank() != 2 || x.dim(1) != cfg_.input_length) {
      throw Error("classifier expects [batch, " + std::to_string(cfg_.input_length) + "] input, got " +
                  nn::shape_string(x.shape()));
    }
  }

  static void append(std::vector<nn::NamedTensor<T>>& out, const std::vector<nn::NamedTensor<T>>& more) {
    out.insert(out.end(), more.begin(), more.end());
  }

  static nn::Tensor<T> concat(const nn::Tensor<T>& a, const nn::Tensor<T>& b) {
    const std::size_t batch = a.dim(0), na = a.dim(1), nb = b.dim(1);
    nn::Tensor<T> out({batch, na + nb});
    for (std::size_t i = 0; i < batch; ++i) {
      std::copy_n(a.ptr() + i * na, na, out.ptr() + i * (na + nb));
      std::copy_n(b.ptr() + i * nb, nb, out.ptr() + i * (na + nb) + na);
    }
    return out;
  }

  // Glorot-uniform conv, dense and LSTM weights (per gate block for the
  // LSTM), zero biases except the LSTM forget gate at +1.
  void initialize(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto glorot = [&](nn::Tensor<T>& t, std::size_t fan_in, std::size_t fan_out) {
      const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
      std::uniform_real_distribution<double> dist(-limit, limit);
      for (auto& v : t.data()) v = static_cast<T>(dist(rng));
    };
    if (cnn_) {
      for (std::size_t i = 0; i < cnn_->size(); ++i) {
        if (auto* conv = dynamic_cast<nn::Conv1d<T>*>(&cnn_->at(i))) {
          glorot(conv->weight, conv->in_channels() * conv->kernel_size(),
                 conv->out_channels() * conv->kernel_size());
          conv->bias.fill(T{0});
        }
      }
    }
    const std::size_t h = lstm_->hidden_size();
    for (auto* dir : {&lstm_->fwd, &lstm_->bwd}) {
      glorot(dir->w, lstm_->input_size(), h);
      glorot(dir->u, h, h);
      dir->b.fill(T{0});
      for (std::size_t j = h; j < 2 * h; ++j) dir->b[j] = T{1};
    }
    glorot(head_->weight, cfg_.fusion_width(), cfg_.num_classes);
    head_->bias.fill(T{0});
    reseed_dropout(rng());
  }

  ModelConfig cfg_;
  std::unique_ptr<CnnBackbone<T>> cnn_;
  std::unique_ptr<nn::BiLstm<T>> lstm_;
  std::unique_ptr<nn::Dropout<T>> lstm_dropout_;
  std::unique_ptr<nn::Dense<T>> head_;
  nn::GlobalAvgPool1d<T> pool_;
  nn::SwapLastAxes<T> swap_;
  nn::Softmax<T> softmax_;
  std::size_t batch_ = 0;
};

// Total element count of the model's trainable tensors.
template <typename T>
std::size_t count_parameters(Classifier<T>& model) {
  std::size_t n = 0;
  for (const auto& p : model.parameters()) n += p.tensor->size();
  return n;
}

}  // namespace ecgnet
