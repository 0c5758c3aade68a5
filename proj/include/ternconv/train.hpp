#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ternconv/network.hpp"
#include "ternconv/synthetic.hpp"

namespace ternconv {

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct MetricsHistory {
  std::vector<EpochMetrics> epochs;

  double final_val_accuracy() const {
    return epochs.empty() ? 0.0 : epochs.back().val_accuracy;
  }
  double final_train_accuracy() const {
    return epochs.empty() ? 0.0 : epochs.back().train_accuracy;
  }
};

/// CSV rows: epoch,split,loss,accuracy -- one train and one val row per epoch.
inline std::string metrics_csv(const MetricsHistory& h) {
  std::ostringstream out;
  out << "epoch,split,loss,accuracy\n";
  out.precision(9);
  for (const EpochMetrics& e : h.epochs) {
    out << e.epoch << ",train," << e.train_loss << ',' << e.train_accuracy << '\n';
    out << e.epoch << ",val," << e.val_loss << ',' << e.val_accuracy << '\n';
  }
  return out.str();
}

namespace detail {

/// Mean cross-entropy over the batch plus the logits gradient; softmax
/// statistics accumulate in double for stable, deterministic loss values.
template <class S>
double cross_entropy(const Logits<S>& logits, const int* labels, Logits<S>& dlogits,
                     int* correct) {
  const int B = logits.batch, K = logits.classes;
  dlogits = Logits<S>(B, K);
  double total = 0.0;
  for (int b = 0; b < B; ++b) {
    double max_logit = logits.at(b, 0);
    int argmax = 0;
    for (int k = 1; k < K; ++k) {
      if (logits.at(b, k) > max_logit) {
        max_logit = logits.at(b, k);
        argmax = k;
      }
    }
    if (correct && argmax == labels[b]) ++(*correct);
    double denom = 0.0;
    for (int k = 0; k < K; ++k) denom += std::exp(static_cast<double>(logits.at(b, k)) - max_logit);
    const double log_denom = std::log(denom);
    total += log_denom - (static_cast<double>(logits.at(b, labels[b])) - max_logit);
    for (int k = 0; k < K; ++k) {
      const double p = std::exp(static_cast<double>(logits.at(b, k)) - max_logit) / denom;
      dlogits.at(b, k) = static_cast<S>((p - (k == labels[b] ? 1.0 : 0.0)) / B);
    }
  }
  return total / B;
}

template <class S>
Tensor<S> gather_batch(const SyntheticDataset<S>& ds, const std::vector<int>& order,
                       int start, int count, std::vector<int>& labels) {
  Tensor<S> x(count, ds.in_channels, ds.time);
  labels.resize(count);
  const std::size_t sample_len = static_cast<std::size_t>(ds.in_channels) * ds.time;
  for (int i = 0; i < count; ++i) {
    const int idx = order[start + i];
    std::copy_n(ds.inputs[idx].data(), sample_len, x.data() + i * sample_len);
    labels[i] = ds.labels[idx];
  }
  return x;
}

}  // namespace detail

/// SGD with classical momentum: v <- mu v + g, w <- w - lr v.
template <class S>
class SgdMomentum {
 public:
  SgdMomentum(std::vector<ParamRef<S>> params, double lr, double mu)
      : params_(std::move(params)), lr_(static_cast<S>(lr)), mu_(static_cast<S>(mu)) {
    velocity_.reserve(params_.size());
    for (const auto& p : params_) velocity_.emplace_back(p.value->size(), S(0));
  }

  void step() {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      std::vector<S>& w = *params_[i].value;
      std::vector<S>& g = *params_[i].grad;
      std::vector<S>& v = velocity_[i];
      for (std::size_t j = 0; j < w.size(); ++j) {
        v[j] = mu_ * v[j] + g[j];
        w[j] -= lr_ * v[j];
      }
    }
  }

 private:
  std::vector<ParamRef<S>> params_;
  std::vector<std::vector<S>> velocity_;
  S lr_, mu_;
};

/// Deterministic training run: fixed per-epoch shuffles derived from the data
/// seed, fixed batch assembly and reduction orders. Frozen ternary layers are
/// untouched by construction (they expose no parameters). Aborts on a
/// non-finite loss.
template <class S>
MetricsHistory train(Network<S>& network, const SyntheticDataset<S>& ds,
                     const TrainConfig& tc) {
  validate(tc);
  if (ds.in_channels != network.config().in_channels)
    throw std::invalid_argument("train: dataset channels do not match the model");
  if (ds.class_count != network.config().num_classes)
    throw std::invalid_argument("train: dataset classes do not match the model");

  SgdMomentum<S> opt(network.parameters(), tc.learning_rate, tc.momentum);
  std::vector<int> order(ds.train_count);
  std::iota(order.begin(), order.end(), 0);

  MetricsHistory history;
  std::vector<int> labels;
  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    // Fisher-Yates with an epoch-indexed stream
    SplitMixStream shuffle_rng(stream_word(mix64(tc.data_seed) ^ 0x51D3B8A609C4E7F2ULL,
                                           static_cast<std::uint64_t>(epoch)));
    for (int i = ds.train_count - 1; i > 0; --i) {
      const int j = static_cast<int>(shuffle_rng.next_word() % static_cast<std::uint64_t>(i + 1));
      std::swap(order[i], order[j]);
    }

    double loss_sum = 0.0;
    int correct = 0, seen = 0;
    for (int start = 0; start < ds.train_count; start += tc.batch_size) {
      const int count = std::min(tc.batch_size, ds.train_count - start);
      const Tensor<S> x = detail::gather_batch(ds, order, start, count, labels);
      network.zero_grads();
      const Logits<S> logits = network.forward(x, /*training=*/true);
      Logits<S> dlogits;
      const double loss = detail::cross_entropy(logits, labels.data(), dlogits, &correct);
      if (!std::isfinite(loss))
        throw std::runtime_error("train: loss diverged (non-finite) at epoch " +
                                 std::to_string(epoch));
      loss_sum += loss * count;
      seen += count;
      network.backward(dlogits);
      opt.step();
    }

    EpochMetrics em;
    em.epoch = epoch;
    em.train_loss = loss_sum / seen;
    em.train_accuracy = static_cast<double>(correct) / seen;

    // validation in inference mode
    double val_loss_sum = 0.0;
    int val_correct = 0, val_seen = 0;
    std::vector<int> val_order(ds.val_count());
    std::iota(val_order.begin(), val_order.end(), ds.train_count);
    for (int start = 0; start < ds.val_count(); start += tc.batch_size) {
      const int count = std::min(tc.batch_size, ds.val_count() - start);
      const Tensor<S> x = detail::gather_batch(ds, val_order, start, count, labels);
      const Logits<S> logits = network.forward(x, /*training=*/false);
      Logits<S> dlogits;
      val_loss_sum += detail::cross_entropy(logits, labels.data(), dlogits, &val_correct) * count;
      val_seen += count;
    }
    em.val_loss = val_seen ? val_loss_sum / val_seen : 0.0;
    em.val_accuracy = val_seen ? static_cast<double>(val_correct) / val_seen : 0.0;
    history.epochs.push_back(em);
  }
  return history;
}

}  // namespace ternconv
