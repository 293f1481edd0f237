#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "ecgnet/error.hpp"
#include "ecgnet/nn/gemm.hpp"
#include "ecgnet/nn/layers.hpp"
#include "ecgnet/nn/tensor.hpp"

namespace ecgnet::nn {

// Bidirectional LSTM over [B, T, F] returning [B, H]: the sum of the forward
// direction's last hidden state and the backward direction's hidden state at
// t = 0. Gate blocks in the 4H axis are ordered input, forget, cell, output.
template <typename T>
class BiLstm : public Layer<T> {
 public:
  struct Direction {
    Tensor<T> w;  // [4H, F]
    Tensor<T> u;  // [4H, H]
    Tensor<T> b;  // [4H]
  };

  BiLstm(std::size_t input_size, std::size_t hidden_size)
      : fwd{make_direction(input_size, hidden_size)},
        bwd{make_direction(input_size, hidden_size)},
        features_(input_size),
        hidden_(hidden_size) {}

  std::size_t input_size() const { return features_; }
  std::size_t hidden_size() const { return hidden_; }

  Tensor<T> forward(const Tensor<T>& x) override {
    require_shape(x, 3, "bilstm");
    if (x.dim(2) != features_) throw Error("bilstm: expected " + std::to_string(features_) +
                                           " features per step, got " + shape_string(x.shape()));
    batch_ = x.dim(0);
    steps_ = x.dim(1);
    // Time-major copy so each step's batch rows are contiguous.
    x_tm_.assign(x.size(), T{0});
    for (std::size_t b = 0; b < batch_; ++b)
      for (std::size_t t = 0; t < steps_; ++t)
        std::copy(x.ptr() + (b * steps_ + t) * features_, x.ptr() + (b * steps_ + t + 1) * features_,
                  x_tm_.data() + (t * batch_ + b) * features_);

    run_direction(fwd, cache_[0], false);
    run_direction(bwd, cache_[1], true);

    Tensor<T> y({batch_, hidden_});
    const T* hf = cache_[0].h.data() + (steps_ - 1) * batch_ * hidden_;
    const T* hb = cache_[1].h.data();
    for (std::size_t i = 0; i < batch_ * hidden_; ++i) y[i] = hf[i] + hb[i];
    this->has_cache_ = true;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) override {
    this->require_forward("bilstm");
    if (dy.shape() != Shape{batch_, hidden_}) throw Error("bilstm: upstream gradient shape mismatch");
    std::vector<T> dx_tm(x_tm_.size(), T{0});
    backprop_direction(fwd, cache_[0], false, dy, dx_tm);
    backprop_direction(bwd, cache_[1], true, dy, dx_tm);
    Tensor<T> dx({batch_, steps_, features_});
    for (std::size_t b = 0; b < batch_; ++b)
      for (std::size_t t = 0; t < steps_; ++t)
        std::copy(dx_tm.data() + (t * batch_ + b) * features_, dx_tm.data() + (t * batch_ + b + 1) * features_,
                  dx.ptr() + (b * steps_ + t) * features_);
    return dx;
  }

  std::vector<NamedTensor<T>> parameters() override {
    return {{"fwd.w", &fwd.w}, {"fwd.u", &fwd.u}, {"fwd.b", &fwd.b},
            {"bwd.w", &bwd.w}, {"bwd.u", &bwd.u}, {"bwd.b", &bwd.b}};
  }

  Direction fwd;
  Direction bwd;

 private:
  struct Cache {
    std::vector<T> gates;  // [T, B, 4H] activated
    std::vector<T> c;      // [T, B, H]
    std::vector<T> h;      // [T, B, H]
  };

  static Direction make_direction(std::size_t f, std::size_t h) {
    Direction d{Tensor<T>({4 * h, f}), Tensor<T>({4 * h, h}), Tensor<T>({4 * h})};
    d.w.enable_grad();
    d.u.enable_grad();
    d.b.enable_grad();
    return d;
  }

  static T sigmoid(T v) { return T{1} / (T{1} + std::exp(-v)); }

  void run_direction(const Direction& d, Cache& cache, bool reverse) {
    const std::size_t g4 = 4 * hidden_;
    cache.gates.assign(steps_ * batch_ * g4, T{0});
    cache.c.assign(steps_ * batch_ * hidden_, T{0});
    cache.h.assign(steps_ * batch_ * hidden_, T{0});

    std::vector<T> wt(features_ * g4), ut(hidden_ * g4);
    transpose(d.w.ptr(), wt.data(), g4, features_);
    transpose(d.u.ptr(), ut.data(), g4, hidden_);

    auto& z = cache.gates;  // pre-activations first, activated in place
    for (std::size_t r = 0; r < steps_ * batch_; ++r) std::copy(d.b.ptr(), d.b.ptr() + g4, z.data() + r * g4);
    gemm_nn(x_tm_.data(), wt.data(), z.data(), steps_ * batch_, features_, g4);

    const std::vector<T> zeros(batch_ * hidden_, T{0});
    for (std::size_t s = 0; s < steps_; ++s) {
      const std::size_t t = reverse ? steps_ - 1 - s : s;
      const T* h_prev = s == 0 ? zeros.data() : cache.h.data() + (reverse ? t + 1 : t - 1) * batch_ * hidden_;
      const T* c_prev = s == 0 ? zeros.data() : cache.c.data() + (reverse ? t + 1 : t - 1) * batch_ * hidden_;
      T* zt = z.data() + t * batch_ * g4;
      gemm_nn(h_prev, ut.data(), zt, batch_, hidden_, g4);
      T* ct = cache.c.data() + t * batch_ * hidden_;
      T* ht = cache.h.data() + t * batch_ * hidden_;
      for (std::size_t b = 0; b < batch_; ++b) {
        T* g = zt + b * g4;
        for (std::size_t j = 0; j < hidden_; ++j) {
          const T i_g = sigmoid(g[j]);
          const T f_g = sigmoid(g[hidden_ + j]);
          const T c_g = std::tanh(g[2 * hidden_ + j]);
          const T o_g = sigmoid(g[3 * hidden_ + j]);
          g[j] = i_g;
          g[hidden_ + j] = f_g;
          g[2 * hidden_ + j] = c_g;
          g[3 * hidden_ + j] = o_g;
          const std::size_t k = b * hidden_ + j;
          ct[k] = f_g * c_prev[k] + i_g * c_g;
          ht[k] = o_g * std::tanh(ct[k]);
        }
      }
    }
  }

  void backprop_direction(Direction& d, const Cache& cache, bool reverse, const Tensor<T>& dy,
                          std::vector<T>& dx_tm) {
    const std::size_t g4 = 4 * hidden_;
    const std::size_t bh = batch_ * hidden_;
    std::vector<T> dz(steps_ * batch_ * g4, T{0});
    std::vector<T> dh(dy.data().begin(), dy.data().end());
    std::vector<T> dc(bh, T{0});
    std::vector<T> dh_prev(bh);
    const std::vector<T> zeros(bh, T{0});

    for (std::size_t s = steps_; s-- > 0;) {
      const std::size_t t = reverse ? steps_ - 1 - s : s;
      const bool first = s == 0;
      const T* c_prev = first ? zeros.data() : cache.c.data() + (reverse ? t + 1 : t - 1) * bh;
      const T* ct = cache.c.data() + t * bh;
      const T* gates = cache.gates.data() + t * batch_ * g4;
      T* dzt = dz.data() + t * batch_ * g4;
      for (std::size_t b = 0; b < batch_; ++b) {
        const T* g = gates + b * g4;
        T* dg = dzt + b * g4;
        for (std::size_t j = 0; j < hidden_; ++j) {
          const std::size_t k = b * hidden_ + j;
          const T i_g = g[j], f_g = g[hidden_ + j], c_g = g[2 * hidden_ + j], o_g = g[3 * hidden_ + j];
          const T tc = std::tanh(ct[k]);
          const T dct = dc[k] + dh[k] * o_g * (T{1} - tc * tc);
          dg[j] = dct * c_g * i_g * (T{1} - i_g);
          dg[hidden_ + j] = dct * c_prev[k] * f_g * (T{1} - f_g);
          dg[2 * hidden_ + j] = dct * i_g * (T{1} - c_g * c_g);
          dg[3 * hidden_ + j] = dh[k] * tc * o_g * (T{1} - o_g);
          dc[k] = dct * f_g;
        }
      }
      std::fill(dh_prev.begin(), dh_prev.end(), T{0});
      gemm_nn(dzt, d.u.ptr(), dh_prev.data(), batch_, g4, hidden_);
      dh.swap(dh_prev);
    }

    // dU sums dz_t^T h_prev(t) over steps; the first step's h_prev is zero.
    if (steps_ > 1) {
      const std::size_t rows = (steps_ - 1) * batch_;
      const T* dz_from = dz.data() + (reverse ? 0 : batch_ * g4);
      const T* h_from = cache.h.data() + (reverse ? bh : 0);
      gemm_tn(dz_from, h_from, d.u.grad().data(), g4, rows, hidden_);
    }
    gemm_tn(dz.data(), x_tm_.data(), d.w.grad().data(), g4, steps_ * batch_, features_);
    auto db = d.b.grad();
    for (std::size_t r = 0; r < steps_ * batch_; ++r)
      for (std::size_t j = 0; j < g4; ++j) db[j] += dz[r * g4 + j];
    gemm_nn(dz.data(), d.w.ptr(), dx_tm.data(), steps_ * batch_, g4, features_);
  }

  std::size_t features_, hidden_;
  std::size_t batch_ = 0, steps_ = 0;
  std::vector<T> x_tm_;
  Cache cache_[2];
};

}  // namespace ecgnet::nn
