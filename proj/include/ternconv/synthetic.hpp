#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "ternconv/rng.hpp"
#include "ternconv/tensor.hpp"

namespace ternconv {

struct TrainConfig {
  int epochs = 30;
  int batch_size = 32;
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::uint64_t data_seed = 7;
  int dataset_size = 2048;
  int sequence_length = 64;
  int class_count = 8;
};

inline void validate(const TrainConfig& tc) {
  if (tc.epochs < 1 || tc.batch_size < 1 || tc.dataset_size < 1 ||
      tc.sequence_length < 1 || tc.class_count < 1)
    throw std::invalid_argument("TrainConfig: sizes must be positive");
  if (!(tc.learning_rate >= 0.0) || !(tc.momentum >= 0.0 && tc.momentum < 1.0))
    throw std::invalid_argument("TrainConfig: bad learning rate or momentum");
}

inline constexpr int kTemplateLength = 9;
inline constexpr double kTemplateAmplitude = 2.0;

/// Fixed per-class multi-channel pattern, a pure function of the class index.
inline std::vector<double> class_template(int class_index, int channels) {
  std::vector<double> tmpl(static_cast<std::size_t>(channels) * kTemplateLength);
  for (int c = 0; c < channels; ++c)
    for (int j = 0; j < kTemplateLength; ++j)
      tmpl[static_cast<std::size_t>(c) * kTemplateLength + j] = word_to_uniform(
          stream_word(static_cast<std::uint64_t>(class_index), static_cast<std::uint64_t>(c) * kTemplateLength + j));
  return tmpl;
}

/// Sequence classification at desk scale: unit-variance Gaussian noise plus
/// the class template inserted at a random time offset. Deterministic given
/// the data seed; labels cycle through the classes, so any split whose sizes
/// divide evenly stays balanced.
template <class S>
struct SyntheticDataset {
  int in_channels = 0;
  int time = 0;
  int class_count = 0;
  int train_count = 0;  // samples [0, train_count) train, the rest validate
  std::vector<std::vector<S>> inputs;  // each channels*time, channel-major
  std::vector<int> labels;

  int size() const noexcept { return static_cast<int>(inputs.size()); }
  int val_count() const noexcept { return size() - train_count; }

  Tensor<S> tensor(int i) const {
    Tensor<S> x(1, in_channels, time);
    std::copy(inputs[i].begin(), inputs[i].end(), x.data());
    return x;
  }
};

namespace detail {

inline double next_gaussian(SplitMixStream& rng) {
  const double u1 = 1.0 - rng.next_unit();  // (0, 1], keeps the log finite
  const double u2 = rng.next_unit();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace detail

template <class S>
SyntheticDataset<S> make_synthetic(const TrainConfig& tc, int in_channels,
                                   double amplitude = kTemplateAmplitude) {
  validate(tc);
  if (in_channels < 1) throw std::invalid_argument("make_synthetic: in_channels must be >= 1");
  const int T = tc.sequence_length;
  if (T < kTemplateLength)
    throw std::invalid_argument("make_synthetic: sequence shorter than the class template");

  std::vector<std::vector<double>> templates(tc.class_count);
  for (int k = 0; k < tc.class_count; ++k) templates[k] = class_template(k, in_channels);

  SyntheticDataset<S> ds;
  ds.in_channels = in_channels;
  ds.time = T;
  ds.class_count = tc.class_count;
  ds.inputs.reserve(tc.dataset_size);
  ds.labels.reserve(tc.dataset_size);
  const int val = tc.dataset_size / 4;
  ds.train_count = tc.dataset_size - val;

  for (int i = 0; i < tc.dataset_size; ++i) {
    const int label = i % tc.class_count;
    SplitMixStream rng(stream_word(mix64(tc.data_seed), static_cast<std::uint64_t>(i)));
    std::vector<S> x(static_cast<std::size_t>(in_channels) * T);
    for (auto& v : x) v = static_cast<S>(detail::next_gaussian(rng));
    const int offset = static_cast<int>(rng.next_word() % static_cast<std::uint64_t>(T - kTemplateLength + 1));
    const std::vector<double>& tmpl = templates[label];
    for (int c = 0; c < in_channels; ++c) {
      for (int j = 0; j < kTemplateLength; ++j) {
        x[static_cast<std::size_t>(c) * T + offset + j] +=
            static_cast<S>(amplitude * tmpl[static_cast<std::size_t>(c) * kTemplateLength + j]);
      }
    }
    ds.inputs.push_back(std::move(x));
    ds.labels.push_back(label);
  }
  return ds;
}

}  // namespace ternconv
