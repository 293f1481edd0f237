#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "ecgnet/error.hpp"
#include "ecgnet/nn/gemm.hpp"
#include "ecgnet/nn/tensor.hpp"

namespace ecgnet::nn {

// Forward caches whatever backward needs. Backward adds parameter gradients
// into the parameters' grad buffers and returns the input gradient, so
// repeated backward calls after one forward accumulate.
template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;

  virtual Tensor<T> forward(const Tensor<T>& x) = 0;
  virtual Tensor<T> backward(const Tensor<T>& grad_out) = 0;

  // Trainable tensors (grad enabled).
  virtual std::vector<NamedTensor<T>> parameters() { return {}; }
  // Non-trainable state saved in checkpoints.
  virtual std::vector<NamedTensor<T>> buffers() { return {}; }

  virtual void set_training(bool training) { training_ = training; }
  bool training() const { return training_; }

 protected:
  void require_forward(const char* what) const {
    if (!has_cache_) throw Error(std::string(what) + ": backward called before forward");
  }

  bool training_ = true;
  bool has_cache_ = false;
};

template <typename T>
void zero_grads(const std::vector<NamedTensor<T>>& params) {
  for (const auto& p : params) p.tensor->zero_grad();
}

template <typename T>
std::vector<NamedTensor<T>> prefixed(std::vector<NamedTensor<T>> list, const std::string& prefix) {
  for (auto& p : list) p.name = prefix + p.name;
  return list;
}

enum class Padding { Same, Valid };

// Cross-correlation over [batch, channels, length].
template <typename T>
class Conv1d : public Layer<T> {
 public:
  Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel_size, std::size_t stride = 1,
         Padding padding = Padding::Same)
      : weight({out_channels, in_channels, kernel_size}),
        bias({out_channels}),
        in_(in_channels),
        out_(out_channels),
        k_(kernel_size),
        stride_(stride),
        padding_(padding) {
    ensure(kernel_size >= 1 && stride >= 1, "conv1d kernel and stride must be >= 1");
    weight.enable_grad();
    bias.enable_grad();
  }

  std::size_t output_length(std::size_t length) const {
    if (padding_ == Padding::Same) return (length + stride_ - 1) / stride_;
    if (length < k_) throw Error("conv1d: input shorter than kernel");
    return (length - k_) / stride_ + 1;
  }

  Tensor<T> forward(const Tensor<T>& x) override {
    require_shape(x, 3, "conv1d");
    if (x.dim(1) != in_) throw Error("conv1d: expected " + std::to_string(in_) + " input channels, got " +
                                     shape_string(x.shape()));
    batch_ = x.dim(0);
    len_ = x.dim(2);
    out_len_ = output_length(len_);
    const std::size_t needed = (out_len_ - 1) * stride_ + k_;
    pad_left_ = 0;
    padded_len_ = len_;
    if (padding_ == Padding::Same && needed > len_) {
      pad_left_ = (needed - len_) / 2;
      padded_len_ = needed;
    }
    padded_.assign(batch_ * in_ * padded_len_, T{0});
    for (std::size_t b = 0; b < batch_; ++b)
      for (std::size_t c = 0; c < in_; ++c) {
        const T* src = x.ptr() + (b * in_ + c) * len_;
        std::copy(src, src + len_, padded_.data() + (b * in_ + c) * padded_len_ + pad_left_);
      }

    Tensor<T> y({batch_, out_, out_len_});
    for (std::size_t b = 0; b < batch_; ++b)
      for (std::size_t o = 0; o < out_; ++o) {
        T* yrow = y.ptr() + (b * out_ + o) * out_len_;
        std::fill(yrow, yrow + out_len_, bias[o]);
        for (std::size_t c = 0; c < in_; ++c) {
          const T* xrow = padded_.data() + (b * in_ + c) * padded_len_;
          const T* w = weight.ptr() + (o * in_ + c) * k_;
          for (std::size_t k = 0; k < k_; ++k) {
            const T wk = w[k];
            if (stride_ == 1) {
              const T* xs = xrow + k;
              for (std::size_t l = 0; l < out_len_; ++l) yrow[l] += wk * xs[l];
            } else {
              for (std::size_t l = 0; l < out_len_; ++l) yrow[l] += wk * xrow[l * stride_ + k];
            }
          }
        }
      }
    this->has_cache_ = true;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    this->require_forward("conv1d");
    if (dy.shape() != Shape{batch_, out_, out_len_}) throw Error("conv1d: upstream gradient shape mismatch");
    std::vector<T> dpad(padded_.size(), T{0});
    auto dw = weight.grad();
    auto db = bias.grad();
    for (std::size_t b = 0; b < batch_; ++b)
      for (std::size_t o = 0; o < out_; ++o) {
        const T* g = dy.ptr() + (b * out_ + o) * out_len_;
        T gsum{0};
        for (std::size_t l = 0; l < out_len_; ++l) gsum += g[l];
        db[o] += gsum;
        for (std::size_t c = 0; c < in_; ++c) {
          const T* xrow = padded_.data() + (b * in_ + c) * padded_len_;
          T* drow = dpad.data() + (b * in_ + c) * padded_len_;
          const std::size_t widx = (o * in_ + c) * k_;
          for (std::size_t k = 0; k < k_; ++k) {
            const T wk = weight[widx + k];
            T acc{0};
            if (stride_ == 1) {
              const T* xs = xrow + k;
              T* ds = drow + k;
              for (std::size_t l = 0; l < out_len_; ++l) {
                acc += g[l] * xs[l];
                ds[l] += wk * g[l];
              }
            } else {
              for (std::size_t l = 0; l < out_len_; ++l) {
                acc += g[l] * xrow[l * stride_ + k];
                drow[l * stride_ + k] += wk * g[l];
              }
            }
            dw[widx + k] += acc;
          }
        }
      }
    Tensor<T> dx({batch_, in_, len_});
    for (std::size_t b = 0; b < batch_; ++b)
      for (std::size_t c = 0; c < in_; ++c) {
        const T* src = dpad.data() + (b * in_ + c) * padded_len_ + pad_left_;
        std::copy(src, src + len_, dx.ptr() + (b * in_ + c) * len_);
      }
    return dx;
  }

  std::vector<NamedTensor<T>> parameters() override { return {{"weight", &weight}, {"bias", &bias}}; }

  std::size_t in_channels() const { return in_; }
  std::size_t out_channels() const { return out_; }
  std::size_t kernel_size() const { return k_; }

  Tensor<T> weight;  // [out, in, k]
  Tensor<T> bias;    // [out]

 private:
  std::size_t in_, out_, k_, stride_;
  Padding padding_;
  std::size_t batch_ = 0, len_ = 0, out_len_ = 0, pad_left_ = 0, padded_len_ = 0;
  std::vector<T> padded_;
};

// Per-channel normalisation over (batch, length) for [B, C, L] or [B, C].
template <typename T>
class BatchNorm1d : public Layer<T> {
 public:
  explicit BatchNorm1d(std::size_t channels, double eps = 1e-5, double momentum = 0.1)
      : gamma({channels}, T{1}),
        beta({channels}, T{0}),
        running_mean({channels}, T{0}),
        running_var({channels}, T{1}),
        channels_(channels),
        eps_(eps),
        momentum_(momentum) {
    gamma.enable_grad();
    beta.enable_grad();
  }

  Tensor<T> forward(const Tensor<T>& x) override {
    if (x.rank() != 2 && x.rank() != 3) throw Error("batchnorm: expected [B, C] or [B, C, L] input");
    if (x.dim(1) != channels_) throw Error("batchnorm: channel mismatch " + shape_string(x.shape()));
    shape_ = x.shape();
    batch_ = x.dim(0);
    len_ = x.rank() == 3 ? x.dim(2) : 1;
    const std::size_t n = batch_ * len_;
    xhat_.assign(x.size(), T{0});
    inv_std_.assign(channels_, T{0});
    cached_training_ = this->training_;
    Tensor<T> y(shape_);
    for (std::size_t c = 0; c < channels_; ++c) {
      T mean, var;
      if (this->training_) {
        double s = 0.0;
        for (std::size_t b = 0; b < batch_; ++b)
          for (std::size_t l = 0; l < len_; ++l) s += x[(b * channels_ + c) * len_ + l];
        const double m = s / static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t b = 0; b < batch_; ++b)
          for (std::size_t l = 0; l < len_; ++l) {
            const double d = x[(b * channels_ + c) * len_ + l] - m;
            ss += d * d;
          }
        mean = static_cast<T>(m);
        var = static_cast<T>(ss / static_cast<double>(n));
        running_mean[c] = static_cast<T>((1.0 - momentum_) * running_mean[c] + momentum_ * mean);
        running_var[c] = static_cast<T>((1.0 - momentum_) * running_var[c] + momentum_ * var);
      } else {
        mean = running_mean[c];
        var = running_var[c];
      }
      const T inv = static_cast<T>(1.0 / std::sqrt(static_cast<double>(var) + eps_));
      inv_std_[c] = inv;
      for (std::size_t b = 0; b < batch_; ++b)
        for (std::size_t l = 0; l < len_; ++l) {
          const std::size_t i = (b * channels_ + c) * len_ + l;
          xhat_[i] = (x[i] - mean) * inv;
          y[i] = gamma[c] * xhat_[i] + beta[c];
        }
    }
    this->has_cache_ = true;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    this->require_forward("batchnorm");
    if (dy.shape() != shape_) throw Error("batchnorm: upstream gradient shape mismatch");
    Tensor<T> dx(shape_);
    auto dgamma = gamma.grad();
    auto dbeta = beta.grad();
    const T n = static_cast<T>(batch_ * len_);
    for (std::size_t c = 0; c < channels_; ++c) {
      T sum_dy{0}, sum_dy_xhat{0};
      for (std::size_t b = 0; b < batch_; ++b)
        for (std::size_t l = 0; l < len_; ++l) {
          const std::size_t i = (b * channels_ + c) * len_ + l;
          sum_dy += dy[i];
          sum_dy_xhat += dy[i] * xhat_[i];
        }
      dbeta[c] += sum_dy;
      dgamma[c] += sum_dy_xhat;
      const T scale = gamma[c] * inv_std_[c];
      for (std::size_t b = 0; b < batch_; ++b)
        for (std::size_t l = 0; l < len_; ++l) {
          const std::size_t i = (b * channels_ + c) * len_ + l;
          dx[i] = cached_training_ ? scale * (dy[i] - sum_dy / n - xhat_[i] * sum_dy_xhat / n) : scale * dy[i];
        }
    }
    return dx;
  }

  std::vector<NamedTensor<T>> parameters() override { return {{"gamma", &gamma}, {"beta", &beta}}; }
  std::vector<NamedTensor<T>> buffers() override {
    return {{"running_mean", &running_mean}, {"running_var", &running_var}};
  }

  double momentum() const { return momentum_; }
  double eps() const { return eps_; }

  Tensor<T> gamma, beta, running_mean, running_var;

 private:
  std::size_t channels_;
  double eps_, momentum_;
  Shape shape_;
  std::size_t batch_ = 0, len_ = 0;
  std::vector<T> xhat_, inv_std_;
  bool cached_training_ = true;
};

template <typename T>
class ReLU : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x) override {
    Tensor<T> y = x;
    for (auto& v : y.data()) v = v > T{0} ? v : T{0};
    mask_.assign(x.size(), 0);
    for (std::size_t i = 0; i < x.size(); ++i) mask_[i] = x[i] > T{0} ? 1 : 0;
    shape_ = x.shape();
    this->has_cache_ = true;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    this->require_forward("relu");
    if (dy.shape() != shape_) throw Error("relu: upstream gradient shape mismatch");
    Tensor<T> dx(shape_);
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = mask_[i] ? dy[i] : T{0};
    return dx;
  }

 private:
  Shape shape_;
  std::vector<unsigned char> mask_;
};

// Max over windows of `kernel` samples along the last axis of [B, C, L].
template <typename T>
class MaxPool1d : public Layer<T> {
 public:
  explicit MaxPool1d(std::size_t kernel = 2, std::size_t stride = 2) : k_(kernel), stride_(stride) {
    ensure(kernel >= 1 && stride >= 1, "maxpool kernel and stride must be >= 1");
  }

  std::size_t output_length(std::size_t length) const {
    if (length < k_) throw Error("maxpool: input shorter than window");
    return (length - k_) / stride_ + 1;
  }

  Tensor<T> forward(const Tensor<T>& x) override {
    require_shape(x, 3, "maxpool");
    in_shape_ = x.shape();
    const std::size_t rows = x.dim(0) * x.dim(1);
    const std::size_t len = x.dim(2);
    const std::size_t out_len = output_length(len);
    Tensor<T> y({x.dim(0), x.dim(1), out_len});
    argmax_.assign(rows * out_len, 0);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t l = 0; l < out_len; ++l) {
        std::size_t best = r * len + l * stride_;
        for (std::size_t k = 1; k < k_; ++k) {
          const std::size_t i = r * len + l * stride_ + k;
          if (x[i] > x[best]) best = i;
        }
        argmax_[r * out_len + l] = best;
        y[r * out_len + l] = x[best];
      }
    this->has_cache_ = true;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    this->require_forward("maxpool");
    if (dy.size() != argmax_.size()) throw Error("maxpool: upstream gradient shape mismatch");
    Tensor<T> dx(in_shape_);
    for (std::size_t i = 0; i < dy.size(); ++i) dx[argmax_[i]] += dy[i];
    return dx;
  }

  const std::vector<std::size_t>& argmax() const { return argmax_; }

 private:
  std::size_t k_, stride_;
  Shape in_shape_;
  std::vector<std::size_t> argmax_;
};

// Inverted dropout: survivors are scaled by 1 / (1 - rate). Identity in eval.
template <typename T>
class Dropout : public Layer<T> {
 public:
  explicit Dropout(double rate, std::uint64_t seed = 0) : rate_(rate), rng_(seed) {
    require(rate >= 0.0 && rate < 1.0, "dropout rate must be in [0, 1)");
  }

  void reseed(std::uint64_t seed) { rng_.seed(seed); }
  double rate() const { return rate_; }

  Tensor<T> forward(const Tensor<T>& x) override {
    shape_ = x.shape();
    active_ = this->training_ && rate_ > 0.0;
    this->has_cache_ = true;
    if (!active_) return x;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const T scale = static_cast<T>(1.0 / (1.0 - rate_));
    mask_.assign(x.size(), T{0});
    Tensor<T> y(shape_);
    for (std::size_t i = 0; i < x.size(); ++i) {
      mask_[i] = unit(rng_) < rate_ ? T{0} : scale;
      y[i] = x[i] * mask_[i];
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    this->require_forward("dropout");
    if (dy.shape() != shape_) throw Error("dropout: upstream gradient shape mismatch");
    if (!active_) return dy;
    Tensor<T> dx(shape_);
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = dy[i] * mask_[i];
    return dx;
  }

 private:
  double rate_;
  std::mt19937_64 rng_;
  Shape shape_;
  std::vector<T> mask_;
  bool active_ = false;
};

// y = x W^T + b for x: [B, in], W: [out, in].
template <typename T>
class Dense : public Layer<T> {
 public:
  Dense(std::size_t in_features, std::size_t out_features)
      : weight({out_features, in_features}), bias({out_features}), in_(in_features), out_(out_features) {
    weight.enable_grad();
    bias.enable_grad();
  }

  Tensor<T> forward(const Tensor<T>& x) override {
    require_shape(x, 2, "dense");
    if (x.dim(1) != in_) throw Error("dense: expected " + std::to_string(in_) + " features, got " +
                                     shape_string(x.shape()));
    input_ = x;
    const std::size_t batch = x.dim(0);
    std::vector<T> wt(in_ * out_);
    transpose(weight.ptr(), wt.data(), out_, in_);
    Tensor<T> y({batch, out_});
    for (std::size_t b = 0; b < batch; ++b) std::copy(bias.ptr(), bias.ptr() + out_, y.ptr() + b * out_);
    gemm_nn(x.ptr(), wt.data(), y.ptr(), batch, in_, out_);
    this->has_cache_ = true;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    this->require_forward("dense");
    const std::size_t batch = input_.dim(0);
    if (dy.shape() != Shape{batch, out_}) throw Error("dense: upstream gradient shape mismatch");
    gemm_tn(dy.ptr(), input_.ptr(), weight.grad().data(), out_, batch, in_);
    auto db = bias.grad();
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t o = 0; o < out_; ++o) db[o] += dy[b * out_ + o];
    Tensor<T> dx({batch, in_});
    gemm_nn(dy.ptr(), weight.ptr(), dx.ptr(), batch, out_, in_);
    return dx;
  }

  std::vector<NamedTensor<T>> parameters() override { return {{"weight", &weight}, {"bias", &bias}}; }

  Tensor<T> weight;  // [out, in]
  Tensor<T> bias;    // [out]

 private:
  std::size_t in_, out_;
  Tensor<T> input_;
};

// Mean over the last axis: [B, C, L] -> [B, C].
template <typename T>
class GlobalAvgPool1d : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x) override {
    require_shape(x, 3, "global average pool");
    shape_ = x.shape();
    const std::size_t rows = x.dim(0) * x.dim(1);
    const std::size_t len = x.dim(2);
    Tensor<T> y({x.dim(0), x.dim(1)});
    for (std::size_t r = 0; r < rows; ++r) {
      T s{0};
      for (std::size_t l = 0; l < len; ++l) s += x[r * len + l];
      y[r] = s / static_cast<T>(len);
    }
    this->has_cache_ = true;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    this->require_forward("global average pool");
    const std::size_t len = shape_[2];
    if (dy.size() != shape_[0] * shape_[1]) throw Error("global average pool: upstream gradient shape mismatch");
    Tensor<T> dx(shape_);
    for (std::size_t r = 0; r < dy.size(); ++r)
      for (std::size_t l = 0; l < len; ++l) dx[r * len + l] = dy[r] / static_cast<T>(len);
    return dx;
  }

 private:
  Shape shape_;
};

// [B, C, L] <-> [B, L, C].
template <typename T>
class SwapLastAxes : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x) override {
    require_shape(x, 3, "swap axes");
    shape_ = x.shape();
    this->has_cache_ = true;
    return swap(x);
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    this->require_forward("swap axes");
    return swap(dy);
  }

 private:
  static Tensor<T> swap(const Tensor<T>& x) {
    const std::size_t b = x.dim(0), m = x.dim(1), n = x.dim(2);
    Tensor<T> y({b, n, m});
    for (std::size_t i = 0; i < b; ++i) transpose(x.ptr() + i * m * n, y.ptr() + i * m * n, m, n);
    return y;
  }

  Shape shape_;
};

// Row-wise softmax of [B, K] logits with max subtraction.
template <typename T>
class Softmax : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x) override {
    require_shape(x, 2, "softmax");
    probs_ = apply(x);
    this->has_cache_ = true;
    return probs_;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    this->require_forward("softmax");
    if (dy.shape() != probs_.shape()) throw Error("softmax: upstream gradient shape mismatch");
    const std::size_t rows = probs_.dim(0), k = probs_.dim(1);
    Tensor<T> dx(probs_.shape());
    for (std::size_t r = 0; r < rows; ++r) {
      T dot{0};
      for (std::size_t j = 0; j < k; ++j) dot += dy[r * k + j] * probs_[r * k + j];
      for (std::size_t j = 0; j < k; ++j) dx[r * k + j] = probs_[r * k + j] * (dy[r * k + j] - dot);
    }
    return dx;
  }

  static Tensor<T> apply(const Tensor<T>& x) {
    require_shape(x, 2, "softmax");
    const std::size_t rows = x.dim(0), k = x.dim(1);
    Tensor<T> p(x.shape());
    for (std::size_t r = 0; r < rows; ++r) {
      T mx = x[r * k];
      for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, x[r * k + j]);
      T sum{0};
      for (std::size_t j = 0; j < k; ++j) {
        p[r * k + j] = std::exp(x[r * k + j] - mx);
        sum += p[r * k + j];
      }
      for (std::size_t j = 0; j < k; ++j) p[r * k + j] /= sum;
    }
    return p;
  }

 private:
  Tensor<T> probs_;
};

// Runs layers in order; parameter names are prefixed with the layer index.
template <typename T>
class Sequential : public Layer<T> {
 public:
  template <typename L, typename... Args>
  L& add(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    layers_.push_back(std::move(layer));
    return ref;
  }

  Tensor<T> forward(const Tensor<T>& x) override {
    Tensor<T> h = x;
    for (auto& l : layers_) h = l->forward(h);
    this->has_cache_ = true;
    return h;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    this->require_forward("sequential");
    Tensor<T> g = dy;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
    return g;
  }

  std::vector<NamedTensor<T>> parameters() override { return collect(&Layer<T>::parameters); }
  std::vector<NamedTensor<T>> buffers() override { return collect(&Layer<T>::buffers); }

  void set_training(bool training) override {
    Layer<T>::set_training(training);
    for (auto& l : layers_) l->set_training(training);
  }

  std::size_t size() const { return layers_.size(); }
  Layer<T>& at(std::size_t i) { return *layers_.at(i); }

 private:
  std::vector<NamedTensor<T>> collect(std::vector<NamedTensor<T>> (Layer<T>::*fn)()) {
    std::vector<NamedTensor<T>> out;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      for (auto& p : prefixed(((*layers_[i]).*fn)(), std::to_string(i) + ".")) out.push_back(p);
    }
    return out;
  }

  std::vector<std::unique_ptr<Layer<T>>> layers_;
};

}  // namespace ecgnet::nn
