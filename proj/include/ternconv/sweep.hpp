#pragma once

#include <algorithm>
#include <atomic>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ternconv/network.hpp"
#include "ternconv/train.hpp"

namespace ternconv {

struct SweepRow {
  double t = 0.0;
  std::uint64_t params_trainable = 0;
  double accuracy = 0.0;
};

/// Trains one model per threshold with otherwise identical seeds and
/// configuration. Rows come back sorted by t. `jobs` > 1 trains models in
/// parallel; each training is self-contained, so results are unchanged.
template <class S>
std::vector<SweepRow> sparsity_sweep(const ModelConfig& cfg, std::vector<double> t_list,
                                     const TrainConfig& tc, int jobs = 1) {
  for (double t : t_list)
    if (!(t >= 0.0 && t <= 1.0))
      throw std::invalid_argument("sparsity_sweep: t values must lie in [0,1]");
  std::sort(t_list.begin(), t_list.end());
  const SyntheticDataset<S> ds = make_synthetic<S>(tc, resolve(cfg).in_channels);

  std::vector<SweepRow> rows(t_list.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next.fetch_add(1); i < t_list.size(); i = next.fetch_add(1)) {
      ModelConfig mc = cfg;
      mc.threshold = t_list[i];
      Network<S> net(mc);
      const MetricsHistory h = train(net, ds, tc);
      rows[i] = {t_list[i], count_params(net).trainable_float_count,
                 h.final_val_accuracy()};
    }
  };
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(t_list.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "t,params_trainable,accuracy\n";
  out.precision(9);
  for (const SweepRow& r : rows)
    out << r.t << ',' << r.params_trainable << ',' << r.accuracy << '\n';
  return out.str();
}

struct ParetoPoint {
  std::uint64_t params = 0;
  double accuracy = 0.0;
  bool is_pareto = false;
};

/// Flags points not dominated by any other: a dominator has <= params and
/// >= accuracy with at least one strict. Input order is preserved.
inline std::vector<ParetoPoint> pareto_report(
    const std::vector<std::pair<std::uint64_t, double>>& points) {
  const std::size_t n = points.size();
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (points[a].first != points[b].first) return points[a].first < points[b].first;
    return points[a].second > points[b].second;
  });

  std::vector<ParetoPoint> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = {points[i].first, points[i].second, false};

  double best_cheaper = -1.0;  // max accuracy over strictly smaller params
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    double group_max = points[idx[i]].second;
    while (j < n && points[idx[j]].first == points[idx[i]].first) {
      group_max = std::max(group_max, points[idx[j]].second);
      ++j;
    }
    for (std::size_t k = i; k < j; ++k) {
      const double acc = points[idx[k]].second;
      out[idx[k]].is_pareto = (acc >= group_max) && (acc > best_cheaper);
    }
    best_cheaper = std::max(best_cheaper, group_max);
    i = j;
  }
  return out;
}

}  // namespace ternconv
