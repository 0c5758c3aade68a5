#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ternconv/kernels.hpp"
#include "ternconv/tensor.hpp"
#include "ternconv/ternary_matrix.hpp"
#include "ternconv/weightgen.hpp"

// Layers of the time-channel separable residual block, with manual forward
// and backward passes. Forward passes tally executed multiplications,
// additions and weight bytes into a per-layer OpCounter; forward_cost()
// predicts the same numbers statically, and the two are asserted equal in
// tests. Division and square root are tallied as multiplications.

namespace ternconv {

template <class S>
struct ParamRef {
  std::string name;
  std::vector<S>* value;
  std::vector<S>* grad;
};

struct LayerCost {
  std::string name;
  std::uint64_t multiplications = 0;
  std::uint64_t additions = 0;
  std::uint64_t weight_bytes_read = 0;
  std::uint64_t activation_bytes_read = 0;
  std::uint64_t activation_bytes_written = 0;
};

// ---- depthwise temporal convolution -----------------------------------------

/// Per-channel 1D convolution across time, odd kernel, stride 1, zero-padded
/// to "same" length. Trainable.
template <class S>
class DepthwiseConv {
 public:
  DepthwiseConv(std::string name, int channels, int ksize)
      : name_(std::move(name)), channels_(channels), ksize_(ksize),
        pad_((ksize - 1) / 2),
        weight_(static_cast<std::size_t>(channels) * ksize, S(0)),
        grad_(weight_.size(), S(0)) {
    if (channels < 1) throw std::invalid_argument(name_ + ": channels must be >= 1");
    if (ksize < 1 || ksize % 2 == 0)
      throw std::invalid_argument(name_ + ": kernel length must be odd and >= 1");
  }

  const std::string& name() const noexcept { return name_; }
  int channels() const noexcept { return channels_; }
  int ksize() const noexcept { return ksize_; }
  std::vector<S>& weights() noexcept { return weight_; }

  Tensor<S> forward(const Tensor<S>& x) {
    if (x.channels() != channels_)
      throw std::invalid_argument(name_ + ": channel mismatch");
    const int B = x.batch(), T = x.time();
    Tensor<S> y(B, channels_, T);
    for (int b = 0; b < B; ++b) {
      for (int c = 0; c < channels_; ++c) {
        const S* w = weight_.data() + static_cast<std::size_t>(c) * ksize_;
        for (int t = 0; t < T; ++t) {
          const int klo = std::max(0, pad_ - t);
          const int khi = std::min(ksize_, T + pad_ - t);
          S acc = S(0);
          for (int k = klo; k < khi; ++k) acc += w[k] * x.at(b, c, t + k - pad_);
          y.at(b, c, t) = acc;
        }
      }
    }
    const std::uint64_t taps = taps_per_channel(T) * static_cast<std::uint64_t>(B) * channels_;
    counter_.multiplications += taps;
    counter_.additions += taps;
    counter_.weight_bytes_read += 4 * taps;
    cached_x_ = x;
    has_cache_ = true;
    return y;
  }

  Tensor<S> backward(const Tensor<S>& dy) {
    if (!has_cache_) throw std::logic_error(name_ + ": backward without forward");
    const Tensor<S>& x = cached_x_;
    if (!dy.same_shape(x)) throw std::invalid_argument(name_ + ": gradient shape mismatch");
    const int B = x.batch(), T = x.time();
    Tensor<S> dx(B, channels_, T);
    for (int b = 0; b < B; ++b) {
      for (int c = 0; c < channels_; ++c) {
        const S* w = weight_.data() + static_cast<std::size_t>(c) * ksize_;
        S* gw = grad_.data() + static_cast<std::size_t>(c) * ksize_;
        for (int t = 0; t < T; ++t) {
          const int klo = std::max(0, pad_ - t);
          const int khi = std::min(ksize_, T + pad_ - t);
          const S g = dy.at(b, c, t);
          for (int k = klo; k < khi; ++k) {
            dx.at(b, c, t + k - pad_) += w[k] * g;
            gw[k] += g * x.at(b, c, t + k - pad_);
          }
        }
      }
    }
    return dx;
  }

  void collect_params(std::vector<ParamRef<S>>& out) {
    out.push_back({name_ + ".weight", &weight_, &grad_});
  }

  LayerCost forward_cost(int batch, int time) const {
    const std::uint64_t taps =
        taps_per_channel(time) * static_cast<std::uint64_t>(batch) * channels_;
    LayerCost c{.name = name_};
    c.multiplications = taps;
    c.additions = taps;
    c.weight_bytes_read = 4 * taps;
    c.activation_bytes_read = 4ULL * batch * channels_ * time;
    c.activation_bytes_written = 4ULL * batch * channels_ * time;
    return c;
  }

  const OpCounter& counter() const noexcept { return counter_; }
  void reset_counter() noexcept { counter_.reset(); }

 private:
  std::uint64_t taps_per_channel(int T) const {
    std::uint64_t total = 0;
    for (int t = 0; t < T; ++t)
      total += std::min(ksize_, T + pad_ - t) - std::max(0, pad_ - t);
    return total;
  }

  std::string name_;
  int channels_, ksize_, pad_;
  std::vector<S> weight_, grad_;
  Tensor<S> cached_x_;
  bool has_cache_ = false;
  OpCounter counter_;
};

// ---- batch normalization -----------------------------------------------------

/// Per-channel batch normalization over all (batch, time) positions.
template <class S>
class BatchNorm {
 public:
  BatchNorm(std::string name, int channels, S eps = S(1e-5), S momentum = S(0.1))
      : name_(std::move(name)), channels_(channels), eps_(eps), momentum_(momentum),
        gamma_(channels, S(1)), beta_(channels, S(0)),
        ggrad_(channels, S(0)), bgrad_(channels, S(0)),
        running_mean_(channels, S(0)), running_var_(channels, S(1)) {}

  const std::string& name() const noexcept { return name_; }
  std::vector<S>& gamma() noexcept { return gamma_; }
  std::vector<S>& beta() noexcept { return beta_; }
  std::vector<S>& running_mean() noexcept { return running_mean_; }
  std::vector<S>& running_var() noexcept { return running_var_; }

  Tensor<S> forward(const Tensor<S>& x, bool training) {
    if (x.channels() != channels_)
      throw std::invalid_argument(name_ + ": channel mismatch");
    const int B = x.batch(), T = x.time();
    const std::size_t n = static_cast<std::size_t>(B) * T;
    if (training && n < 2)
      throw std::invalid_argument(name_ + ": batch*time must be >= 2 in training mode");
    Tensor<S> y(B, channels_, T);
    if (training) {
      cached_xhat_ = Tensor<S>(B, channels_, T);
      cached_inv_std_.assign(channels_, S(0));
    }
    for (int c = 0; c < channels_; ++c) {
      S mean, inv_std;
      if (training) {
        S sum = S(0);
        for (int b = 0; b < B; ++b)
          for (int t = 0; t < T; ++t) sum += x.at(b, c, t);
        mean = sum / static_cast<S>(n);
        S var_sum = S(0);
        for (int b = 0; b < B; ++b) {
          for (int t = 0; t < T; ++t) {
            const S d = x.at(b, c, t) - mean;
            var_sum += d * d;
          }
        }
        const S var = var_sum / static_cast<S>(n);
        inv_std = S(1) / std::sqrt(var + eps_);
        running_mean_[c] = (S(1) - momentum_) * running_mean_[c] + momentum_ * mean;
        running_var_[c] = (S(1) - momentum_) * running_var_[c] + momentum_ * var;
        cached_inv_std_[c] = inv_std;
      } else {
        mean = running_mean_[c];
        inv_std = S(1) / std::sqrt(running_var_[c] + eps_);
      }
      const S scale = gamma_[c] * inv_std;
      const S shift = beta_[c] - mean * scale;
      for (int b = 0; b < B; ++b) {
        for (int t = 0; t < T; ++t) {
          const S out = x.at(b, c, t) * scale + shift;
          y.at(b, c, t) = out;
          if (training) cached_xhat_.at(b, c, t) = (x.at(b, c, t) - mean) * inv_std;
        }
      }
    }
    counter_tally(B, T, training);
    cache_training_ = training;
    has_cache_ = training;
    return y;
  }

  /// Training-mode statistics gradient. Requires a preceding training forward.
  Tensor<S> backward(const Tensor<S>& dy) {
    if (!has_cache_ || !cache_training_)
      throw std::logic_error(name_ + ": backward requires a training-mode forward");
    const int B = dy.batch(), T = dy.time();
    if (!dy.same_shape(cached_xhat_))
      throw std::invalid_argument(name_ + ": gradient shape mismatch");
    const S n = static_cast<S>(static_cast<std::size_t>(B) * T);
    Tensor<S> dx(B, channels_, T);
    for (int c = 0; c < channels_; ++c) {
      S sum_dy = S(0), sum_dy_xhat = S(0);
      for (int b = 0; b < B; ++b) {
        for (int t = 0; t < T; ++t) {
          const S g = dy.at(b, c, t);
          sum_dy += g;
          sum_dy_xhat += g * cached_xhat_.at(b, c, t);
        }
      }
      bgrad_[c] += sum_dy;
      ggrad_[c] += sum_dy_xhat;
      const S k = gamma_[c] * cached_inv_std_[c] / n;
      for (int b = 0; b < B; ++b) {
        for (int t = 0; t < T; ++t) {
          dx.at(b, c, t) = k * (n * dy.at(b, c, t) - sum_dy -
                                cached_xhat_.at(b, c, t) * sum_dy_xhat);
        }
      }
    }
    return dx;
  }

  void collect_params(std::vector<ParamRef<S>>& out) {
    out.push_back({name_ + ".gamma", &gamma_, &ggrad_});
    out.push_back({name_ + ".beta", &beta_, &bgrad_});
  }

  LayerCost forward_cost(int batch, int time, bool training) const {
    const std::uint64_t n = static_cast<std::uint64_t>(batch) * time;
    LayerCost c{.name = name_};
    if (training) {
      c.multiplications = channels_ * (2 * n + 9);
      c.additions = channels_ * (4 * n + 4);
      c.weight_bytes_read = 8ULL * channels_;  // gamma, beta
    } else {
      c.multiplications = channels_ * (n + 4);
      c.additions = channels_ * (n + 2);
      c.weight_bytes_read = 16ULL * channels_;  // gamma, beta, running stats
    }
    c.activation_bytes_read = 4ULL * n * channels_ * (training ? 3 : 1);
    c.activation_bytes_written = 4ULL * n * channels_;
    return c;
  }

  const OpCounter& counter() const noexcept { return counter_; }
  void reset_counter() noexcept { counter_.reset(); }

 private:
  void counter_tally(int B, int T, bool training) {
    const LayerCost c = forward_cost(B, T, training);
    counter_.multiplications += c.multiplications;
    counter_.additions += c.additions;
    counter_.weight_bytes_read += c.weight_bytes_read;
  }

  std::string name_;
  int channels_;
  S eps_, momentum_;
  std::vector<S> gamma_, beta_, ggrad_, bgrad_;
  std::vector<S> running_mean_, running_var_;
  Tensor<S> cached_xhat_;
  std::vector<S> cached_inv_std_;
  bool has_cache_ = false;
  bool cache_training_ = false;
  OpCounter counter_;
};

// ---- rectifier ----------------------------------------------------------------

template <class S>
class Relu {
 public:
  explicit Relu(std::string name) : name_(std::move(name)) {}

  const std::string& name() const noexcept { return name_; }

  Tensor<S> forward(const Tensor<S>& x) {
    Tensor<S> y(x.batch(), x.channels(), x.time());
    const S* in = x.data();
    S* out = y.data();
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = in[i] > S(0) ? in[i] : S(0);
    cached_x_ = x;
    has_cache_ = true;
    return y;
  }

  /// Pre-activation of the most recent forward.
  const Tensor<S>& cached_input() const {
    if (!has_cache_) throw std::logic_error(name_ + ": no cached input");
    return cached_x_;
  }

  /// Subgradient 0 at the kink: positions with x <= 0 block the gradient.
  Tensor<S> backward(const Tensor<S>& dy) {
    if (!has_cache_) throw std::logic_error(name_ + ": backward without forward");
    if (!dy.same_shape(cached_x_))
      throw std::invalid_argument(name_ + ": gradient shape mismatch");
    Tensor<S> dx(dy.batch(), dy.channels(), dy.time());
    const S* in = cached_x_.data();
    const S* g = dy.data();
    S* out = dx.data();
    for (std::size_t i = 0; i < dy.size(); ++i) out[i] = in[i] > S(0) ? g[i] : S(0);
    return dx;
  }

  LayerCost forward_cost(int batch, int channels, int time) const {
    LayerCost c{.name = name_};
    c.activation_bytes_read = 4ULL * batch * channels * time;
    c.activation_bytes_written = 4ULL * batch * channels * time;
    return c;
  }

 private:
  std::string name_;
  Tensor<S> cached_x_;
  bool has_cache_ = false;
};

// ---- pointwise (1x1) convolution ----------------------------------------------

enum class PointwiseMode { TrainableFloat, FrozenTernary };

/// Channel-mixing layer applied to every time step. Either an ordinary
/// trainable float matrix, or a frozen random ternary matrix that is fully
/// determined by its WeightSpec, receives no gradient, and performs no
/// multiplications in either direction.
template <class S>
class PointwiseLayer {
 public:
  PointwiseLayer(std::string name, int out_channels, int in_channels)
      : name_(std::move(name)), mode_(PointwiseMode::TrainableFloat),
        out_(out_channels), in_(in_channels),
        weight_(static_cast<std::size_t>(out_channels) * in_channels, S(0)),
        grad_(weight_.size(), S(0)) {}

  PointwiseLayer(std::string name, const WeightSpec& spec)
      : name_(std::move(name)), mode_(PointwiseMode::FrozenTernary),
        out_(spec.rows), in_(spec.cols), spec_(spec) {
    validate(spec);
    const DenseTernary dense = generate(spec);
    tern_ = to_index_pairs(dense);
    tern_nnz_ = tern_.nnz();
    for (int r = 0; r < out_; ++r)
      tern_empty_rows_ += (tern_.plus_count(r) + tern_.minus_count(r) == 0);
  }

  const std::string& name() const noexcept { return name_; }
  PointwiseMode mode() const noexcept { return mode_; }
  bool frozen() const noexcept { return mode_ == PointwiseMode::FrozenTernary; }
  int out_channels() const noexcept { return out_; }
  int in_channels() const noexcept { return in_; }
  const WeightSpec& spec() const { return spec_; }
  std::vector<S>& weights() noexcept { return weight_; }
  const IndexPairMatrix& ternary() const { return tern_; }

  /// Regenerates the frozen matrix from its spec (for frozen-ness checks).
  DenseTernary materialize() const {
    if (!frozen()) throw std::logic_error(name_ + ": no ternary matrix to materialize");
    return generate(spec_);
  }

  Tensor<S> forward(const Tensor<S>& x) {
    if (x.channels() != in_) throw std::invalid_argument(name_ + ": channel mismatch");
    const int B = x.batch(), T = x.time();
    Tensor<S> y(B, out_, T);
    if (frozen()) {
      std::vector<S> xbuf(in_), ybuf(out_);
      for (int b = 0; b < B; ++b) {
        for (int t = 0; t < T; ++t) {
          for (int c = 0; c < in_; ++c) xbuf[c] = x.at(b, c, t);
          matvec(tern_, xbuf.data(), ybuf.data(), counter_);
          for (int r = 0; r < out_; ++r) y.at(b, r, t) = ybuf[r];
        }
      }
    } else {
      std::vector<S> xbuf(in_);
      for (int b = 0; b < B; ++b) {
        for (int t = 0; t < T; ++t) {
          for (int c = 0; c < in_; ++c) xbuf[c] = x.at(b, c, t);
          for (int r = 0; r < out_; ++r) {
            const S* w = weight_.data() + static_cast<std::size_t>(r) * in_;
            S acc = S(0);
            for (int c = 0; c < in_; ++c) acc += w[c] * xbuf[c];
            y.at(b, r, t) = acc;
          }
        }
      }
      const std::uint64_t macs =
          static_cast<std::uint64_t>(B) * T * out_ * in_;
      counter_.multiplications += macs;
      counter_.additions += macs;
      counter_.weight_bytes_read += 4 * macs;
    }
    cached_x_ = x;
    has_cache_ = true;
    return y;
  }

  Tensor<S> backward(const Tensor<S>& dy) {
    if (!has_cache_) throw std::logic_error(name_ + ": backward without forward");
    const Tensor<S>& x = cached_x_;
    if (dy.channels() != out_ || dy.batch() != x.batch() || dy.time() != x.time())
      throw std::invalid_argument(name_ + ": gradient shape mismatch");
    const int B = x.batch(), T = x.time();
    Tensor<S> dx(B, in_, T);
    if (frozen()) {
      std::vector<S> gbuf(out_), obuf(in_);
      for (int b = 0; b < B; ++b) {
        for (int t = 0; t < T; ++t) {
          for (int r = 0; r < out_; ++r) gbuf[r] = dy.at(b, r, t);
          matvec_transpose(tern_, gbuf.data(), obuf.data(), scratch_, counter_);
          for (int c = 0; c < in_; ++c) dx.at(b, c, t) = obuf[c];
        }
      }
      // frozen: no weight gradient exists
    } else {
      for (int b = 0; b < B; ++b) {
        for (int t = 0; t < T; ++t) {
          for (int r = 0; r < out_; ++r) {
            const S g = dy.at(b, r, t);
            const S* w = weight_.data() + static_cast<std::size_t>(r) * in_;
            S* gw = grad_.data() + static_cast<std::size_t>(r) * in_;
            for (int c = 0; c < in_; ++c) {
              dx.at(b, c, t) += w[c] * g;
              gw[c] += g * x.at(b, c, t);
            }
          }
        }
      }
    }
    return dx;
  }

  void collect_params(std::vector<ParamRef<S>>& out) {
    if (!frozen()) out.push_back({name_ + ".weight", &weight_, &grad_});
  }

  LayerCost forward_cost(int batch, int time) const {
    LayerCost c{.name = name_};
    const std::uint64_t positions = static_cast<std::uint64_t>(batch) * time;
    if (frozen()) {
      c.additions = positions * (tern_nnz_ + static_cast<std::uint64_t>(tern_empty_rows_));
      c.weight_bytes_read = positions * 4 * tern_nnz_;
    } else {
      const std::uint64_t macs = positions * out_ * in_;
      c.multiplications = macs;
      c.additions = macs;
      c.weight_bytes_read = 4 * macs;
    }
    c.activation_bytes_read = 4 * positions * static_cast<std::uint64_t>(in_);
    c.activation_bytes_written = 4 * positions * static_cast<std::uint64_t>(out_);
    return c;
  }

  const OpCounter& counter() const noexcept { return counter_; }
  void reset_counter() noexcept { counter_.reset(); }

 private:
  std::string name_;
  PointwiseMode mode_;
  int out_, in_;
  std::vector<S> weight_, grad_;  // trainable mode only
  WeightSpec spec_;               // frozen mode only
  IndexPairMatrix tern_;
  std::size_t tern_nnz_ = 0;
  int tern_empty_rows_ = 0;
  Tensor<S> cached_x_;
  bool has_cache_ = false;
  OpCounter counter_;
  TransposeScratch<S> scratch_;
};

}  // namespace ternconv
