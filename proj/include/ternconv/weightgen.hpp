#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ternconv/rng.hpp"
#include "ternconv/ternary_matrix.hpp"

namespace ternconv {

enum class GeneratorKind : std::uint8_t {
  SequentialStream = 0,  // indexed SplitMix64 stream, entry index r*cols + c
  CoordinateHash = 1,    // order-free hash of (row, col)
  StructuredNofM = 2,    // exactly n nonzeros in every group of m columns
};

inline std::string to_string(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::SequentialStream: return "stream";
    case GeneratorKind::CoordinateHash: return "hash";
    case GeneratorKind::StructuredNofM: return "structured";
  }
  return "?";
}

inline GeneratorKind generator_from_string(const std::string& s) {
  if (s == "stream") return GeneratorKind::SequentialStream;
  if (s == "hash") return GeneratorKind::CoordinateHash;
  if (s == "structured") return GeneratorKind::StructuredNofM;
  throw std::invalid_argument("unknown generator kind: " + s);
}

/// Fully determines a ternary matrix without storing it. Two identical specs
/// produce bit-identical matrices on every platform.
struct WeightSpec {
  std::uint64_t seed = 0;
  std::uint64_t layer_tag = 0;
  int rows = 1;
  int cols = 1;
  double threshold = 0.5;  // t in [0,1], the expected fraction of zeros
  GeneratorKind generator = GeneratorKind::SequentialStream;
  int n = 0;  // StructuredNofM only
  int m = 0;
};

inline void validate(const WeightSpec& spec) {
  if (spec.rows < 1 || spec.cols < 1)
    throw std::invalid_argument("WeightSpec: rows and cols must be >= 1");
  if (!(spec.threshold >= 0.0 && spec.threshold <= 1.0))
    throw std::invalid_argument("WeightSpec: threshold must lie in [0,1]");
  if (spec.generator == GeneratorKind::StructuredNofM) {
    if (spec.m < 1 || spec.n < 0 || spec.n > spec.m)
      throw std::invalid_argument("WeightSpec: structured pattern needs 0 <= n <= m, m >= 1");
    if (spec.cols % spec.m != 0)
      throw std::invalid_argument("WeightSpec: cols must be divisible by m");
  }
}

/// Hash of the matrix entry coordinates; any entry is computable
/// independently of every other.
inline std::uint64_t coord_word(const WeightSpec& spec, int row, int col) {
  if (row < 0 || row >= spec.rows || col < 0 || col >= spec.cols)
    throw std::invalid_argument("coord_word: coordinates out of range");
  const std::uint64_t base = mix64(spec.seed ^ spec.layer_tag);
  return mix64(base ^ (static_cast<std::uint64_t>(row) * kGoldenGamma) ^
               (static_cast<std::uint64_t>(col) * kColumnSalt));
}

/// Thresholding rule: |w| <= t maps to zero, the rest to the sign of w.
/// The comparison is non-strict so that t = 1 yields the zero matrix and
/// t = 0 the dense binary matrix.
constexpr ternary_t ternarize(double w, double t) noexcept {
  if (std::abs(w) <= t) return 0;
  return w > 0.0 ? ternary_t{1} : ternary_t{-1};
}

/// t is, by construction of the uniform sampling, the expected zero fraction.
inline double expected_sparsity(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("t must lie in [0,1]");
  return t;
}

namespace detail {

inline std::uint64_t sequential_seed(const WeightSpec& spec) {
  return spec.seed ^ mix64(spec.layer_tag);
}

inline std::uint64_t raw_word(const WeightSpec& spec, int r, int c) {
  // StructuredNofM draws its raw words from the sequential stream as well.
  if (spec.generator == GeneratorKind::CoordinateHash) return coord_word(spec, r, c);
  return stream_word(sequential_seed(spec),
                     static_cast<std::uint64_t>(r) * spec.cols + c);
}

/// Fills one m-column group of a structured row: the n positions with the
/// numerically smallest raw words (ties broken by lower column) become
/// nonzero, signed by the word's least significant bit.
inline void structured_group(const WeightSpec& spec, int r, int group_start,
                             ternary_t* out) {
  const int m = spec.m;
  std::vector<std::pair<std::uint64_t, int>> ranked(m);
  for (int j = 0; j < m; ++j) {
    ranked[j] = {raw_word(spec, r, group_start + j), j};
  }
  std::sort(ranked.begin(), ranked.end());
  for (int j = 0; j < m; ++j) out[j] = 0;
  for (int k = 0; k < spec.n; ++k) {
    const auto& [word, j] = ranked[k];
    out[j] = (word & 1) ? ternary_t{1} : ternary_t{-1};
  }
}

}  // namespace detail

/// Random access to a single entry. For the structured pattern this computes
/// the entry's whole m-group.
inline ternary_t generate_entry(const WeightSpec& spec, int r, int c) {
  if (r < 0 || r >= spec.rows || c < 0 || c >= spec.cols)
    throw std::invalid_argument("generate_entry: coordinates out of range");
  if (spec.generator == GeneratorKind::StructuredNofM) {
    std::vector<ternary_t> group(spec.m);
    const int group_start = (c / spec.m) * spec.m;
    detail::structured_group(spec, r, group_start, group.data());
    return group[c - group_start];
  }
  return ternarize(word_to_uniform(detail::raw_word(spec, r, c)), spec.threshold);
}

/// Materializes the whole matrix. Deterministic and reproducible: equal specs
/// yield bit-identical results regardless of platform or call order.
inline DenseTernary generate(const WeightSpec& spec) {
  validate(spec);
  DenseTernary out(spec.rows, spec.cols);
  if (spec.generator == GeneratorKind::StructuredNofM) {
    std::vector<ternary_t> group(spec.m);
    for (int r = 0; r < spec.rows; ++r) {
      for (int g = 0; g < spec.cols / spec.m; ++g) {
        detail::structured_group(spec, r, g * spec.m, group.data());
        for (int j = 0; j < spec.m; ++j) out.set(r, g * spec.m + j, group[j]);
      }
    }
    return out;
  }
  for (int r = 0; r < spec.rows; ++r) {
    for (int c = 0; c < spec.cols; ++c) {
      out.set(r, c, ternarize(word_to_uniform(detail::raw_word(spec, r, c)),
                              spec.threshold));
    }
  }
  return out;
}

/// Zero fraction and the +1 share among nonzeros; reported by the CLI and
/// checked against the binomial law in tests.
struct SparsityStats {
  std::size_t zeros = 0;
  std::size_t plus = 0;
  std::size_t minus = 0;

  double zero_fraction() const {
    const std::size_t total = zeros + plus + minus;
    return total ? static_cast<double>(zeros) / static_cast<double>(total) : 0.0;
  }
  double plus_fraction_of_nonzeros() const {
    const std::size_t nnz = plus + minus;
    return nnz ? static_cast<double>(plus) / static_cast<double>(nnz) : 0.0;
  }
};

inline SparsityStats sparsity_stats(const DenseTernary& m) {
  SparsityStats s;
  for (ternary_t v : m.entries()) {
    if (v == 0) ++s.zeros;
    else if (v > 0) ++s.plus;
    else ++s.minus;
  }
  return s;
}

}  // namespace ternconv
