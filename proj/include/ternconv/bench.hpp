#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "ternconv/kernels.hpp"
#include "ternconv/network.hpp"

namespace ternconv {

struct KernelBenchRow {
  std::string kernel;
  int rows = 0;
  int cols = 0;
  double t = 0.0;
  int reps = 0;
  std::uint64_t median_ns = 0;
  OpCounter ops;  // counters from a single validated call
};

inline std::string bench_csv(const std::vector<KernelBenchRow>& rows) {
  std::ostringstream out;
  out << "kernel,rows,cols,t,reps,median_ns,multiplications,additions,weight_bytes_read\n";
  out.precision(9);
  for (const KernelBenchRow& r : rows) {
    out << r.kernel << ',' << r.rows << ',' << r.cols << ',' << r.t << ',' << r.reps
        << ',' << r.median_ns << ',' << r.ops.multiplications << ',' << r.ops.additions
        << ',' << r.ops.weight_bytes_read << '\n';
  }
  return out.str();
}

namespace detail {

template <class F>
std::uint64_t median_run_ns(F&& fn, int reps) {
  using clock = std::chrono::steady_clock;
  fn();  // warmup
  std::vector<std::uint64_t> samples(reps);
  for (int i = 0; i < reps; ++i) {
    const auto start = clock::now();
    fn();
    samples[i] = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(clock::now() - start).count());
  }
  std::sort(samples.begin(), samples.end());
  return samples[samples.size() / 2];
}

inline void require_equal_outputs(const std::vector<float>& got,
                                  const std::vector<float>& want,
                                  const std::string& kernel) {
  if (got != want)
    throw std::runtime_error("bench: kernel '" + kernel +
                             "' disagrees with the float reference; aborting");
}

}  // namespace detail

/// Times the float reference against the three materialized representations
/// and the on-the-fly kernel. Every kernel's output is checked bit-exact
/// against the reference before any timing: correctness precedes speed.
inline std::vector<KernelBenchRow> bench_matvec(
    const std::vector<std::pair<int, int>>& shapes, const std::vector<double>& t_list,
    int reps, std::uint64_t seed = 1) {
  if (reps < 1) throw std::invalid_argument("bench_matvec: reps must be >= 1");
  std::vector<KernelBenchRow> rows;
  volatile float sink = 0.0f;
  for (const auto& [r, c] : shapes) {
    for (double t : t_list) {
      WeightSpec spec{.seed = seed, .layer_tag = 0, .rows = r, .cols = c,
                      .threshold = t, .generator = GeneratorKind::SequentialStream};
      validate(spec);
      const DenseTernary dense = generate(spec);
      const IndexPairMatrix index = to_index_pairs(dense);
      const PackedBitplanes planes = to_bitplanes(dense);
      SplitMixStream rng(mix64(seed) + 17);
      std::vector<float> x(c);
      for (auto& v : x) v = static_cast<float>(rng.next_uniform());
      std::vector<float> y(r), want(r);

      OpCounter ref_ops;
      reference_float_matvec(dense, x.data(), want.data(), ref_ops);

      auto time_kernel = [&](const std::string& name, auto&& call, const OpCounter& ops) {
        KernelBenchRow row{name, r, c, t, reps, 0, ops};
        row.median_ns = detail::median_run_ns(call, reps);
        sink = sink + y[static_cast<std::size_t>(r) - 1];
        rows.push_back(row);
      };

      {
        auto call = [&] { OpCounter o; reference_float_matvec(dense, x.data(), y.data(), o); };
        call();
        detail::require_equal_outputs(y, want, "float_reference");
        time_kernel("float_reference", call, ref_ops);
      }
      {
        OpCounter ops;
        matvec(dense, x.data(), y.data(), ops);
        detail::require_equal_outputs(y, want, "dense");
        time_kernel("dense", [&] { OpCounter o; matvec(dense, x.data(), y.data(), o); }, ops);
      }
      {
        OpCounter ops;
        matvec(index, x.data(), y.data(), ops);
        detail::require_equal_outputs(y, want, "index_pair");
        time_kernel("index_pair", [&] { OpCounter o; matvec(index, x.data(), y.data(), o); }, ops);
      }
      {
        OpCounter ops;
        matvec(planes, x.data(), y.data(), ops);
        detail::require_equal_outputs(y, want, "bitplane");
        time_kernel("bitplane", [&] { OpCounter o; matvec(planes, x.data(), y.data(), o); }, ops);
      }
      {
        OpCounter ops;
        matvec(spec, x.data(), y.data(), ops);
        detail::require_equal_outputs(y, want, "on_the_fly");
        time_kernel("on_the_fly", [&] { OpCounter o; matvec(spec, x.data(), y.data(), o); }, ops);
      }
    }
  }
  (void)sink;
  return rows;
}

/// Thread-parallel pointwise application over (batch, time) positions. Each
/// output vector keeps the canonical internal order, so results are
/// unchanged by the outer-loop parallelism.
template <class MatT, class S>
Tensor<S> pointwise_apply_parallel(const MatT& M, const Tensor<S>& X, OpCounter& counter,
                                   int threads) {
  const int rows = detail::mat_rows(M), cols = detail::mat_cols(M);
  if (X.channels() != cols)
    throw std::invalid_argument("pointwise_apply_parallel: channel mismatch");
  const int B = X.batch(), T = X.time();
  Tensor<S> Y(B, rows, T);
  const std::int64_t positions = static_cast<std::int64_t>(B) * T;
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(positions)));
  std::vector<OpCounter> locals(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      std::vector<S> xbuf(cols), ybuf(rows);
      const std::int64_t lo = positions * w / workers;
      const std::int64_t hi = positions * (w + 1) / workers;
      for (std::int64_t p = lo; p < hi; ++p) {
        const int b = static_cast<int>(p / T);
        const int t = static_cast<int>(p % T);
        for (int c = 0; c < cols; ++c) xbuf[c] = X.at(b, c, t);
        matvec(M, xbuf.data(), ybuf.data(), locals[w]);
        for (int r = 0; r < rows; ++r) Y.at(b, r, t) = ybuf[r];
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const OpCounter& l : locals) {
    counter.multiplications += l.multiplications;
    counter.additions += l.additions;
    counter.weight_bytes_read += l.weight_bytes_read;
  }
  return Y;
}

/// Pointwise-apply throughput at 1..max_threads workers, validated against
/// the single-threaded kernel.
inline std::vector<KernelBenchRow> bench_pointwise_scaling(int rows, int cols, double t,
                                                           int batch, int time, int reps,
                                                           int max_threads,
                                                           std::uint64_t seed = 1) {
  WeightSpec spec{.seed = seed, .layer_tag = 0, .rows = rows, .cols = cols,
                  .threshold = t, .generator = GeneratorKind::SequentialStream};
  validate(spec);
  const IndexPairMatrix index = to_index_pairs(generate(spec));
  SplitMixStream rng(mix64(seed) + 23);
  Tensor<float> X(batch, cols, time);
  for (auto& v : X.values()) v = static_cast<float>(rng.next_uniform());
  OpCounter base_ops;
  const Tensor<float> want = pointwise_apply(index, X, base_ops);

  std::vector<KernelBenchRow> out;
  for (int workers = 1; workers <= max_threads; ++workers) {
    OpCounter ops;
    const Tensor<float> got = pointwise_apply_parallel(index, X, ops, workers);
    if (got.values() != want.values())
      throw std::runtime_error("bench: parallel pointwise output mismatch");
    KernelBenchRow row{"pointwise_mt" + std::to_string(workers), rows, cols, t, reps, 0, ops};
    row.median_ns = detail::median_run_ns(
        [&] {
          OpCounter o;
          pointwise_apply_parallel(index, X, o, workers);
        },
        reps);
    out.push_back(row);
  }
  return out;
}

// ---- static model cost -------------------------------------------------------

struct CostReport {
  std::vector<LayerCost> layers;
  LayerCost total{.name = "total"};
};

/// Per-layer op and byte counts for one forward pass at the given input
/// shape. Predictions equal the dynamic OpCounter readings of a real run.
template <class S>
CostReport model_cost(const Network<S>& network, int batch, int time, bool training = false) {
  CostReport report;
  report.layers = network.forward_costs(batch, time, training);
  for (const LayerCost& l : report.layers) {
    report.total.multiplications += l.multiplications;
    report.total.additions += l.additions;
    report.total.weight_bytes_read += l.weight_bytes_read;
    report.total.activation_bytes_read += l.activation_bytes_read;
    report.total.activation_bytes_written += l.activation_bytes_written;
  }
  return report;
}

}  // namespace ternconv
