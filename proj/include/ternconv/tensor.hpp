#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace ternconv {

/// Activation tensor with fixed [batch, channels, time] layout, batch-major
/// then channel then time, contiguous.
template <class S>
class Tensor {
 public:
  Tensor() = default;
  Tensor(int batch, int channels, int time)
      : batch_(batch), channels_(channels), time_(time),
        v_(checked_size(batch, channels, time), S(0)) {}

  int batch() const noexcept { return batch_; }
  int channels() const noexcept { return channels_; }
  int time() const noexcept { return time_; }
  std::size_t size() const noexcept { return v_.size(); }

  S& at(int b, int c, int t) {
    return v_[(static_cast<std::size_t>(b) * channels_ + c) * time_ + t];
  }
  S at(int b, int c, int t) const {
    return v_[(static_cast<std::size_t>(b) * channels_ + c) * time_ + t];
  }

  S* data() noexcept { return v_.data(); }
  const S* data() const noexcept { return v_.data(); }
  std::vector<S>& values() noexcept { return v_; }
  const std::vector<S>& values() const noexcept { return v_; }

  bool same_shape(const Tensor& o) const noexcept {
    return batch_ == o.batch_ && channels_ == o.channels_ && time_ == o.time_;
  }

  bool all_finite() const noexcept {
    for (S x : v_)
      if (!std::isfinite(static_cast<double>(x))) return false;
    return true;
  }

 private:
  static std::size_t checked_size(int b, int c, int t) {
    if (b < 1 || c < 1 || t < 1)
      throw std::invalid_argument("tensor dimensions must be >= 1");
    return static_cast<std::size_t>(b) * c * t;
  }

  int batch_ = 0;
  int channels_ = 0;
  int time_ = 0;
  std::vector<S> v_;
};

}  // namespace ternconv
