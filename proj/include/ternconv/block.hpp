#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ternconv/layers.hpp"

namespace ternconv {

enum class SkipMode { TrainedFloat, RandomTernary, Identity, None };

inline std::string to_string(SkipMode m) {
  switch (m) {
    case SkipMode::TrainedFloat: return "trained";
    case SkipMode::RandomTernary: return "ternary";
    case SkipMode::Identity: return "identity";
    case SkipMode::None: return "none";
  }
  return "?";
}

inline SkipMode skip_mode_from_string(const std::string& s) {
  if (s == "trained") return SkipMode::TrainedFloat;
  if (s == "ternary") return SkipMode::RandomTernary;
  if (s == "identity") return SkipMode::Identity;
  if (s == "none") return SkipMode::None;
  throw std::invalid_argument("unknown skip mode: " + s);
}

inline std::string to_string(PointwiseMode m) {
  return m == PointwiseMode::TrainableFloat ? "float" : "ternary";
}

inline PointwiseMode pointwise_mode_from_string(const std::string& s) {
  if (s == "float") return PointwiseMode::TrainableFloat;
  if (s == "ternary") return PointwiseMode::FrozenTernary;
  throw std::invalid_argument("unknown pointwise mode: " + s);
}

/// Shared parameters of all frozen ternary matrices in one model.
struct TernaryParams {
  std::uint64_t seed = 0;
  double threshold = 0.5;
  GeneratorKind generator = GeneratorKind::SequentialStream;
  int n = 0;
  int m = 0;
};

inline WeightSpec make_weight_spec(const TernaryParams& p, std::uint64_t layer_tag,
                                   int rows, int cols) {
  WeightSpec s;
  s.seed = p.seed;
  s.layer_tag = layer_tag;
  s.rows = rows;
  s.cols = cols;
  s.threshold = p.threshold;
  s.generator = p.generator;
  s.n = p.n;
  s.m = p.m;
  return s;
}

/// One residual block: M repetitions of depthwise -> pointwise -> BN (inner
/// repetitions followed by ReLU), a skip branch applied to the block input
/// and added to the last repetition's pre-activation, then the final ReLU.
/// Non-identity skip projections get their own BN.
template <class S>
class ResidualBlock {
 public:
  /// Consecutive layer_tags starting at `first_slot` label this block's
  /// pointwise repetitions (first_slot + j) and its skip (first_slot + M);
  /// slots are consumed whether or not the position is ternary.
  ResidualBlock(std::string name, int channels, int reps, int ksize,
                PointwiseMode pw_mode, SkipMode skip_mode,
                const TernaryParams& tern, std::uint64_t first_slot)
      : name_(std::move(name)), channels_(channels), reps_(reps),
        skip_mode_(skip_mode), final_relu_(name_ + ".relu_out") {
    if (reps < 1) throw std::invalid_argument(name_ + ": M must be >= 1");
    for (int j = 0; j < reps; ++j) {
      const std::string idx = std::to_string(j);
      dw_.emplace_back(name_ + ".dw" + idx, channels, ksize);
      if (pw_mode == PointwiseMode::FrozenTernary) {
        pw_.emplace_back(name_ + ".pw" + idx,
                         make_weight_spec(tern, first_slot + j, channels, channels));
      } else {
        pw_.emplace_back(name_ + ".pw" + idx, channels, channels);
      }
      bn_.emplace_back(name_ + ".bn" + idx, channels);
      if (j < reps - 1) inner_relu_.emplace_back(name_ + ".relu" + idx);
    }
    const std::uint64_t skip_tag = first_slot + static_cast<std::uint64_t>(reps);
    if (skip_mode == SkipMode::TrainedFloat) {
      skip_proj_ = std::make_unique<PointwiseLayer<S>>(name_ + ".skip", channels, channels);
      skip_bn_ = std::make_unique<BatchNorm<S>>(name_ + ".skip_bn", channels);
    } else if (skip_mode == SkipMode::RandomTernary) {
      skip_proj_ = std::make_unique<PointwiseLayer<S>>(
          name_ + ".skip", make_weight_spec(tern, skip_tag, channels, channels));
      skip_bn_ = std::make_unique<BatchNorm<S>>(name_ + ".skip_bn", channels);
    }
  }

  const std::string& name() const noexcept { return name_; }
  int channels() const noexcept { return channels_; }
  int reps() const noexcept { return reps_; }
  SkipMode skip_mode() const noexcept { return skip_mode_; }

  DepthwiseConv<S>& dw(int j) { return dw_[j]; }
  PointwiseLayer<S>& pw(int j) { return pw_[j]; }
  BatchNorm<S>& bn(int j) { return bn_[j]; }
  PointwiseLayer<S>* skip_proj() { return skip_proj_.get(); }
  BatchNorm<S>* skip_bn() { return skip_bn_.get(); }
  Relu<S>& inner_relu(int j) { return inner_relu_[j]; }
  Relu<S>& final_relu() { return final_relu_; }

  Tensor<S> forward(const Tensor<S>& x, bool training) {
    Tensor<S> h = x;
    for (int j = 0; j < reps_; ++j) {
      h = dw_[j].forward(h);
      h = pw_[j].forward(h);
      h = bn_[j].forward(h, training);
      if (j < reps_ - 1) h = inner_relu_[j].forward(h);
    }
    if (skip_mode_ != SkipMode::None) {
      Tensor<S> s = x;
      if (skip_mode_ != SkipMode::Identity) {
        s = skip_proj_->forward(x);
        s = skip_bn_->forward(s, training);
      }
      S* hp = h.data();
      const S* sp = s.data();
      for (std::size_t i = 0; i < h.size(); ++i) hp[i] += sp[i];
      junction_counter_.additions += h.size();
    }
    return final_relu_.forward(h);
  }

  Tensor<S> backward(const Tensor<S>& dy) {
    Tensor<S> d = final_relu_.backward(dy);
    Tensor<S> dmain = d;  // gradient splits at the junction
    for (int j = reps_ - 1; j >= 0; --j) {
      dmain = bn_[j].backward(dmain);
      dmain = pw_[j].backward(dmain);
      dmain = dw_[j].backward(dmain);
      if (j > 0) dmain = inner_relu_[j - 1].backward(dmain);
    }
    if (skip_mode_ == SkipMode::None) return dmain;
    Tensor<S> dskip = d;
    if (skip_mode_ != SkipMode::Identity) {
      dskip = skip_bn_->backward(dskip);
      dskip = skip_proj_->backward(dskip);
    }
    S* mp = dmain.data();
    const S* sp = dskip.data();
    for (std::size_t i = 0; i < dmain.size(); ++i) mp[i] += sp[i];
    return dmain;
  }

  void collect_params(std::vector<ParamRef<S>>& out) {
    for (int j = 0; j < reps_; ++j) {
      dw_[j].collect_params(out);
      pw_[j].collect_params(out);
      bn_[j].collect_params(out);
    }
    if (skip_proj_) skip_proj_->collect_params(out);
    if (skip_bn_) skip_bn_->collect_params(out);
  }

  void collect_frozen(std::vector<const PointwiseLayer<S>*>& out) const {
    for (const auto& pw : pw_)
      if (pw.frozen()) out.push_back(&pw);
    if (skip_proj_ && skip_proj_->frozen()) out.push_back(skip_proj_.get());
  }

  void forward_costs(int batch, int time, bool training, std::vector<LayerCost>& out) const {
    for (int j = 0; j < reps_; ++j) {
      out.push_back(dw_[j].forward_cost(batch, time));
      out.push_back(pw_[j].forward_cost(batch, time));
      out.push_back(bn_[j].forward_cost(batch, time, training));
      if (j < reps_ - 1) out.push_back(inner_relu_[j].forward_cost(batch, channels_, time));
    }
    if (skip_mode_ != SkipMode::None) {
      if (skip_mode_ != SkipMode::Identity) {
        out.push_back(skip_proj_->forward_cost(batch, time));
        out.push_back(skip_bn_->forward_cost(batch, time, training));
      }
      LayerCost junction{.name = name_ + ".add"};
      junction.additions = static_cast<std::uint64_t>(batch) * channels_ * time;
      junction.activation_bytes_read = 8ULL * batch * channels_ * time;
      junction.activation_bytes_written = 4ULL * batch * channels_ * time;
      out.push_back(junction);
    }
    out.push_back(final_relu_.forward_cost(batch, channels_, time));
  }

  void collect_counters(std::vector<std::pair<std::string, const OpCounter*>>& out) const {
    for (int j = 0; j < reps_; ++j) {
      out.push_back({dw_[j].name(), &dw_[j].counter()});
      out.push_back({pw_[j].name(), &pw_[j].counter()});
      out.push_back({bn_[j].name(), &bn_[j].counter()});
    }
    if (skip_proj_) out.push_back({skip_proj_->name(), &skip_proj_->counter()});
    if (skip_bn_) out.push_back({skip_bn_->name(), &skip_bn_->counter()});
    out.push_back({name_ + ".add", &junction_counter_});
  }

  void reset_counters() {
    for (auto& l : dw_) l.reset_counter();
    for (auto& l : pw_) l.reset_counter();
    for (auto& l : bn_) l.reset_counter();
    if (skip_proj_) skip_proj_->reset_counter();
    if (skip_bn_) skip_bn_->reset_counter();
    junction_counter_.reset();
  }

 private:
  std::string name_;
  int channels_, reps_;
  SkipMode skip_mode_;
  std::vector<DepthwiseConv<S>> dw_;
  std::vector<PointwiseLayer<S>> pw_;
  std::vector<BatchNorm<S>> bn_;
  std::vector<Relu<S>> inner_relu_;
  Relu<S> final_relu_;
  std::unique_ptr<PointwiseLayer<S>> skip_proj_;
  std::unique_ptr<BatchNorm<S>> skip_bn_;
  OpCounter junction_counter_;
};

}  // namespace ternconv
