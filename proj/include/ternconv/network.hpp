#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ternconv/block.hpp"
#include "ternconv/layers.hpp"
#include "ternconv/rng.hpp"

namespace ternconv {

/// N residual blocks of M depthwise-separable repetitions at W channels,
/// with per-block pointwise and skip modes.
struct ModelConfig {
  int N = 3;
  int M = 1;
  int W = 32;
  int in_channels = 16;
  int num_classes = 8;
  int K0 = 9;   // prologue kernel
  int K = 9;    // per-block kernel
  int K_e = 9;  // epilogue kernel
  std::vector<PointwiseMode> pointwise_mode;  // per block; empty = all ternary
  std::vector<SkipMode> skip_mode;            // per block; empty = all trained
  double threshold = 0.5;
  std::uint64_t seed = 1;
  GeneratorKind generator = GeneratorKind::SequentialStream;
  int n = 2;  // structured pattern parameters
  int m = 4;
};

/// Fills per-block mode lists and checks invariants.
inline ModelConfig resolve(ModelConfig cfg) {
  if (cfg.N < 1 || cfg.M < 1 || cfg.W < 1)
    throw std::invalid_argument("ModelConfig: N, M, W must be >= 1");
  if (cfg.in_channels < 1 || cfg.num_classes < 1)
    throw std::invalid_argument("ModelConfig: in_channels and num_classes must be >= 1");
  for (int k : {cfg.K0, cfg.K, cfg.K_e})
    if (k < 1 || k % 2 == 0)
      throw std::invalid_argument("ModelConfig: kernel sizes must be odd and >= 1");
  if (!(cfg.threshold >= 0.0 && cfg.threshold <= 1.0))
    throw std::invalid_argument("ModelConfig: threshold must lie in [0,1]");
  if (cfg.pointwise_mode.empty())
    cfg.pointwise_mode.assign(cfg.N, PointwiseMode::FrozenTernary);
  if (cfg.skip_mode.empty()) cfg.skip_mode.assign(cfg.N, SkipMode::TrainedFloat);
  if (static_cast<int>(cfg.pointwise_mode.size()) == 1 && cfg.N > 1)
    cfg.pointwise_mode.assign(cfg.N, cfg.pointwise_mode[0]);
  if (static_cast<int>(cfg.skip_mode.size()) == 1 && cfg.N > 1)
    cfg.skip_mode.assign(cfg.N, cfg.skip_mode[0]);
  if (static_cast<int>(cfg.pointwise_mode.size()) != cfg.N ||
      static_cast<int>(cfg.skip_mode.size()) != cfg.N)
    throw std::invalid_argument("ModelConfig: per-block mode lists must have N entries");
  if (cfg.generator == GeneratorKind::StructuredNofM &&
      (cfg.m < 1 || cfg.n < 0 || cfg.n > cfg.m || cfg.W % cfg.m != 0))
    throw std::invalid_argument("ModelConfig: structured pattern needs 0 <= n <= m and W % m == 0");
  return cfg;
}

template <class S>
struct Logits {
  int batch = 0;
  int classes = 0;
  std::vector<S> v;

  Logits() = default;
  Logits(int b, int k) : batch(b), classes(k), v(static_cast<std::size_t>(b) * k, S(0)) {}
  S& at(int b, int k) { return v[static_cast<std::size_t>(b) * classes + k]; }
  S at(int b, int k) const { return v[static_cast<std::size_t>(b) * classes + k]; }
};

/// Prologue (depthwise + float pointwise + BN + ReLU), N residual blocks,
/// epilogue of the same shape, global average pooling over time, and a
/// linear classifier. Frozen ternary layers take their layer_tag from a
/// fixed slot numbering over all pointwise/skip positions in network order.
template <class S>
class Network {
 public:
  explicit Network(const ModelConfig& raw)
      : cfg_(resolve(raw)),
        pro_dw_("prologue.dw", cfg_.in_channels, cfg_.K0),
        pro_pw_("prologue.pw", cfg_.W, cfg_.in_channels),
        pro_bn_("prologue.bn", cfg_.W),
        pro_relu_("prologue.relu"),
        epi_dw_("epilogue.dw", cfg_.W, cfg_.K_e),
        epi_pw_("epilogue.pw", cfg_.W, cfg_.W),
        epi_bn_("epilogue.bn", cfg_.W),
        epi_relu_("epilogue.relu"),
        head_w_(static_cast<std::size_t>(cfg_.num_classes) * cfg_.W, S(0)),
        head_wg_(head_w_.size(), S(0)),
        head_b_(cfg_.num_classes, S(0)),
        head_bg_(cfg_.num_classes, S(0)) {
    const TernaryParams tern{cfg_.seed, cfg_.threshold, cfg_.generator, cfg_.n, cfg_.m};
    blocks_.reserve(cfg_.N);
    for (int i = 0; i < cfg_.N; ++i) {
      // slot 0 is the (always float) prologue pointwise; each block consumes
      // M pointwise slots plus one skip slot
      const std::uint64_t first_slot =
          1 + static_cast<std::uint64_t>(i) * (cfg_.M + 1);
      blocks_.emplace_back("block" + std::to_string(i), cfg_.W, cfg_.M, cfg_.K,
                           cfg_.pointwise_mode[i], cfg_.skip_mode[i], tern, first_slot);
    }
    init_params();
  }

  const ModelConfig& config() const noexcept { return cfg_; }
  int num_blocks() const noexcept { return cfg_.N; }
  ResidualBlock<S>& block(int i) { return blocks_[i]; }
  DepthwiseConv<S>& prologue_dw() { return pro_dw_; }
  PointwiseLayer<S>& prologue_pw() { return pro_pw_; }
  BatchNorm<S>& prologue_bn() { return pro_bn_; }
  PointwiseLayer<S>& epilogue_pw() { return epi_pw_; }
  std::vector<S>& head_weights() noexcept { return head_w_; }
  std::vector<S>& head_bias() noexcept { return head_b_; }

  Logits<S> forward(const Tensor<S>& x, bool training) {
    if (x.channels() != cfg_.in_channels)
      throw std::invalid_argument("network: input channel mismatch");
    Tensor<S> h = pro_dw_.forward(x);
    h = pro_pw_.forward(h);
    h = pro_bn_.forward(h, training);
    h = pro_relu_.forward(h);
    for (auto& block : blocks_) h = block.forward(h, training);
    h = epi_dw_.forward(h);
    h = epi_pw_.forward(h);
    h = epi_bn_.forward(h, training);
    h = epi_relu_.forward(h);

    const int B = h.batch(), T = h.time(), W = cfg_.W;
    cached_time_ = T;
    pooled_ = Logits<S>(B, W);
    for (int b = 0; b < B; ++b) {
      for (int c = 0; c < W; ++c) {
        S acc = S(0);
        for (int t = 0; t < T; ++t) acc += h.at(b, c, t);
        pooled_.at(b, c) = acc / static_cast<S>(T);
      }
    }
    gap_counter_.additions += static_cast<std::uint64_t>(B) * W * T;
    gap_counter_.multiplications += static_cast<std::uint64_t>(B) * W;

    Logits<S> logits(B, cfg_.num_classes);
    for (int b = 0; b < B; ++b) {
      for (int k = 0; k < cfg_.num_classes; ++k) {
        const S* w = head_w_.data() + static_cast<std::size_t>(k) * W;
        S acc = head_b_[k];
        for (int c = 0; c < W; ++c) acc += w[c] * pooled_.at(b, c);
        logits.at(b, k) = acc;
      }
    }
    head_counter_.multiplications += static_cast<std::uint64_t>(B) * cfg_.num_classes * W;
    head_counter_.additions +=
        static_cast<std::uint64_t>(B) * cfg_.num_classes * (W + 1);
    head_counter_.weight_bytes_read +=
        4ULL * B * cfg_.num_classes * (static_cast<std::uint64_t>(W) + 1);
    return logits;
  }

  Tensor<S> backward(const Logits<S>& dlogits) {
    const int B = dlogits.batch, W = cfg_.W, T = cached_time_;
    if (T == 0) throw std::logic_error("network: backward without forward");
    Logits<S> dpooled(B, W);
    for (int b = 0; b < B; ++b) {
      for (int k = 0; k < cfg_.num_classes; ++k) {
        const S g = dlogits.at(b, k);
        head_bg_[k] += g;
        const S* w = head_w_.data() + static_cast<std::size_t>(k) * W;
        S* wg = head_wg_.data() + static_cast<std::size_t>(k) * W;
        for (int c = 0; c < W; ++c) {
          dpooled.at(b, c) += g * w[c];
          wg[c] += g * pooled_.at(b, c);
        }
      }
    }
    Tensor<S> dh(B, W, T);
    for (int b = 0; b < B; ++b) {
      for (int c = 0; c < W; ++c) {
        const S g = dpooled.at(b, c) / static_cast<S>(T);
        for (int t = 0; t < T; ++t) dh.at(b, c, t) = g;
      }
    }
    dh = epi_relu_.backward(dh);
    dh = epi_bn_.backward(dh);
    dh = epi_pw_.backward(dh);
    dh = epi_dw_.backward(dh);
    for (int i = cfg_.N - 1; i >= 0; --i) dh = blocks_[i].backward(dh);
    dh = pro_relu_.backward(dh);
    dh = pro_bn_.backward(dh);
    dh = pro_pw_.backward(dh);
    return pro_dw_.backward(dh);
  }

  std::vector<ParamRef<S>> parameters() {
    std::vector<ParamRef<S>> out;
    pro_dw_.collect_params(out);
    pro_pw_.collect_params(out);
    pro_bn_.collect_params(out);
    for (auto& block : blocks_) block.collect_params(out);
    epi_dw_.collect_params(out);
    epi_pw_.collect_params(out);
    epi_bn_.collect_params(out);
    out.push_back({"classifier.weight", &head_w_, &head_wg_});
    out.push_back({"classifier.bias", &head_b_, &head_bg_});
    return out;
  }

  void zero_grads() {
    for (auto& p : parameters())
      std::fill(p.grad->begin(), p.grad->end(), S(0));
  }

  std::vector<const PointwiseLayer<S>*> frozen_layers() const {
    std::vector<const PointwiseLayer<S>*> out;
    for (const auto& block : blocks_) block.collect_frozen(out);
    return out;
  }

  std::vector<LayerCost> forward_costs(int batch, int time, bool training) const {
    std::vector<LayerCost> out;
    out.push_back(pro_dw_.forward_cost(batch, time));
    out.push_back(pro_pw_.forward_cost(batch, time));
    out.push_back(pro_bn_.forward_cost(batch, time, training));
    out.push_back(pro_relu_.forward_cost(batch, cfg_.W, time));
    for (const auto& block : blocks_) block.forward_costs(batch, time, training, out);
    out.push_back(epi_dw_.forward_cost(batch, time));
    out.push_back(epi_pw_.forward_cost(batch, time));
    out.push_back(epi_bn_.forward_cost(batch, time, training));
    out.push_back(epi_relu_.forward_cost(batch, cfg_.W, time));

    LayerCost gap{.name = "gap"};
    gap.additions = static_cast<std::uint64_t>(batch) * cfg_.W * time;
    gap.multiplications = static_cast<std::uint64_t>(batch) * cfg_.W;
    gap.activation_bytes_read = 4ULL * batch * cfg_.W * time;
    gap.activation_bytes_written = 4ULL * batch * cfg_.W;
    out.push_back(gap);

    LayerCost head{.name = "classifier"};
    head.multiplications = static_cast<std::uint64_t>(batch) * cfg_.num_classes * cfg_.W;
    head.additions = static_cast<std::uint64_t>(batch) * cfg_.num_classes * (cfg_.W + 1);
    head.weight_bytes_read =
        4ULL * batch * cfg_.num_classes * (static_cast<std::uint64_t>(cfg_.W) + 1);
    head.activation_bytes_read = 4ULL * batch * cfg_.W;
    head.activation_bytes_written = 4ULL * batch * cfg_.num_classes;
    out.push_back(head);
    return out;
  }

  std::vector<std::pair<std::string, const OpCounter*>> counters() const {
    std::vector<std::pair<std::string, const OpCounter*>> out;
    out.push_back({pro_dw_.name(), &pro_dw_.counter()});
    out.push_back({pro_pw_.name(), &pro_pw_.counter()});
    out.push_back({pro_bn_.name(), &pro_bn_.counter()});
    for (const auto& block : blocks_) block.collect_counters(out);
    out.push_back({epi_dw_.name(), &epi_dw_.counter()});
    out.push_back({epi_pw_.name(), &epi_pw_.counter()});
    out.push_back({epi_bn_.name(), &epi_bn_.counter()});
    out.push_back({"gap", &gap_counter_});
    out.push_back({"classifier", &head_counter_});
    return out;
  }

  void reset_counters() {
    pro_dw_.reset_counter();
    pro_pw_.reset_counter();
    pro_bn_.reset_counter();
    for (auto& block : blocks_) block.reset_counters();
    epi_dw_.reset_counter();
    epi_pw_.reset_counter();
    epi_bn_.reset_counter();
    gap_counter_.reset();
    head_counter_.reset();
  }

 private:
  void init_params() {
    SplitMixStream rng(mix64(cfg_.seed) ^ 0xA5C39E1B7D240F68ULL);
    auto he_uniform = [&rng](std::vector<S>& w, int fan_in) {
      const double limit = std::sqrt(6.0 / fan_in);
      for (auto& v : w) v = static_cast<S>(limit * rng.next_uniform());
    };
    he_uniform(pro_dw_.weights(), cfg_.K0);
    he_uniform(pro_pw_.weights(), cfg_.in_channels);
    for (auto& block : blocks_) {
      for (int j = 0; j < cfg_.M; ++j) {
        he_uniform(block.dw(j).weights(), cfg_.K);
        if (!block.pw(j).frozen()) he_uniform(block.pw(j).weights(), cfg_.W);
      }
      if (block.skip_proj() && !block.skip_proj()->frozen())
        he_uniform(block.skip_proj()->weights(), cfg_.W);
    }
    he_uniform(epi_dw_.weights(), cfg_.K_e);
    he_uniform(epi_pw_.weights(), cfg_.W);
    he_uniform(head_w_, cfg_.W);
  }

  ModelConfig cfg_;
  DepthwiseConv<S> pro_dw_;
  PointwiseLayer<S> pro_pw_;
  BatchNorm<S> pro_bn_;
  Relu<S> pro_relu_;
  std::vector<ResidualBlock<S>> blocks_;
  DepthwiseConv<S> epi_dw_;
  PointwiseLayer<S> epi_pw_;
  BatchNorm<S> epi_bn_;
  Relu<S> epi_relu_;
  std::vector<S> head_w_, head_wg_, head_b_, head_bg_;
  Logits<S> pooled_;
  int cached_time_ = 0;
  OpCounter gap_counter_, head_counter_;
};

// ---- parameter accounting ----------------------------------------------------

struct ParamLayerRow {
  std::string name;
  std::string kind;
  std::uint64_t trainable_floats = 0;
  std::uint64_t frozen_entries = 0;
  std::uint64_t bytes_on_the_fly = 0;
  std::uint64_t bytes_materialized = 0;
};

/// Trainable and frozen-implicit parameter counts with stored-byte totals
/// under both storage policies: on-the-fly (16 bytes per frozen layer, one
/// WeightSpec) and materialized (2 bits per frozen entry).
struct ParamReport {
  std::vector<ParamLayerRow> layers;
  std::uint64_t trainable_float_count = 0;
  std::uint64_t frozen_implicit_count = 0;
  std::uint64_t stored_bytes_on_the_fly = 0;
  std::uint64_t stored_bytes_materialized = 0;
};

namespace detail {

inline ParamLayerRow float_row(std::string name, std::string kind, std::uint64_t count) {
  ParamLayerRow row;
  row.name = std::move(name);
  row.kind = std::move(kind);
  row.trainable_floats = count;
  row.bytes_on_the_fly = 4 * count;
  row.bytes_materialized = 4 * count;
  return row;
}

inline ParamLayerRow frozen_row(std::string name, std::string kind, std::uint64_t entries) {
  ParamLayerRow row;
  row.name = std::move(name);
  row.kind = std::move(kind);
  row.frozen_entries = entries;
  row.bytes_on_the_fly = 16;  // seed + layer_tag
  row.bytes_materialized = (2 * entries + 7) / 8;
  return row;
}

}  // namespace detail

template <class S>
ParamReport count_params(const Network<S>& network) {
  const ModelConfig& cfg = network.config();
  ParamReport report;
  auto add = [&report](ParamLayerRow row) {
    report.trainable_float_count += row.trainable_floats;
    report.frozen_implicit_count += row.frozen_entries;
    report.stored_bytes_on_the_fly += row.bytes_on_the_fly;
    report.stored_bytes_materialized += row.bytes_materialized;
    report.layers.push_back(std::move(row));
  };
  using detail::float_row;
  using detail::frozen_row;
  const std::uint64_t W = cfg.W;

  add(float_row("prologue.dw", "depthwise", static_cast<std::uint64_t>(cfg.in_channels) * cfg.K0));
  add(float_row("prologue.pw", "pointwise_float", W * cfg.in_channels));
  add(float_row("prologue.bn", "batchnorm", 2 * W));
  for (int i = 0; i < cfg.N; ++i) {
    const std::string base = "block" + std::to_string(i);
    for (int j = 0; j < cfg.M; ++j) {
      const std::string idx = std::to_string(j);
      add(float_row(base + ".dw" + idx, "depthwise", W * cfg.K));
      if (cfg.pointwise_mode[i] == PointwiseMode::FrozenTernary) {
        add(frozen_row(base + ".pw" + idx, "pointwise_ternary", W * W));
      } else {
        add(float_row(base + ".pw" + idx, "pointwise_float", W * W));
      }
      add(float_row(base + ".bn" + idx, "batchnorm", 2 * W));
    }
    switch (cfg.skip_mode[i]) {
      case SkipMode::TrainedFloat:
        add(float_row(base + ".skip", "skip_float", W * W));
        add(float_row(base + ".skip_bn", "batchnorm", 2 * W));
        break;
      case SkipMode::RandomTernary:
        add(frozen_row(base + ".skip", "skip_ternary", W * W));
        add(float_row(base + ".skip_bn", "batchnorm", 2 * W));
        break;
      case SkipMode::Identity:
      case SkipMode::None:
        break;
    }
  }
  add(float_row("epilogue.dw", "depthwise", W * cfg.K_e));
  add(float_row("epilogue.pw", "pointwise_float", W * W));
  add(float_row("epilogue.bn", "batchnorm", 2 * W));
  add(float_row("classifier", "classifier",
                static_cast<std::uint64_t>(cfg.num_classes) * (W + 1)));
  return report;
}

}  // namespace ternconv
