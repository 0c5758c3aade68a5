#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ternconv/tensor.hpp"
#include "ternconv/ternary_matrix.hpp"
#include "ternconv/weightgen.hpp"

// Multiplication-free application of ternary matrices. Every kernel follows
// the same canonical accumulation order -- plus-sum over ascending columns,
// minus-sum over ascending columns, one final subtraction -- so outputs are
// bit-identical across representations despite float non-associativity.
//
// Counting rule per output: additions increase by |I+| + |I-|, where the
// final subtraction is counted as one of them; a row with no nonzeros still
// executes the subtraction and counts 1.

namespace ternconv {

namespace detail {

inline std::uint64_t row_additions(std::size_t nnz) noexcept {
  return nnz == 0 ? 1 : static_cast<std::uint64_t>(nnz);
}

}  // namespace detail

// ---- matvec: y = M x --------------------------------------------------------

template <class S>
void matvec(const DenseTernary& M, const S* x, S* y, OpCounter& counter) {
  const int rows = M.rows(), cols = M.cols();
  for (int r = 0; r < rows; ++r) {
    S plus = S(0), minus = S(0);
    std::size_t nnz = 0;
    for (int c = 0; c < cols; ++c) {
      const ternary_t v = M.at(r, c);
      if (v > 0) {
        plus += x[c];
        ++nnz;
      } else if (v < 0) {
        minus += x[c];
        ++nnz;
      }
    }
    y[r] = plus - minus;
    counter.additions += detail::row_additions(nnz);
    counter.weight_bytes_read += static_cast<std::uint64_t>(cols);  // 1 byte/entry
  }
}

template <class S>
void matvec(const IndexPairMatrix& M, const S* x, S* y, OpCounter& counter) {
  const int rows = M.rows();
  for (int r = 0; r < rows; ++r) {
    S plus = S(0), minus = S(0);
    for (const std::uint32_t* p = M.plus_begin(r); p != M.plus_end(r); ++p) plus += x[*p];
    for (const std::uint32_t* p = M.minus_begin(r); p != M.minus_end(r); ++p) minus += x[*p];
    y[r] = plus - minus;
    const std::size_t nnz = M.plus_count(r) + M.minus_count(r);
    counter.additions += detail::row_additions(nnz);
    counter.weight_bytes_read += 4 * static_cast<std::uint64_t>(nnz);  // u32 indices
  }
}

template <class S>
void matvec(const PackedBitplanes& M, const S* x, S* y, OpCounter& counter) {
  const int rows = M.rows(), wpr = M.words_per_row();
  for (int r = 0; r < rows; ++r) {
    S plus = S(0), minus = S(0);
    std::size_t nnz = 0;
    for (int w = 0; w < wpr; ++w) {
      std::uint64_t pw = M.plus_word(r, w);
      while (pw) {
        plus += x[w * 64 + __builtin_ctzll(pw)];
        pw &= pw - 1;
        ++nnz;
      }
      std::uint64_t mw = M.minus_word(r, w);
      while (mw) {
        minus += x[w * 64 + __builtin_ctzll(mw)];
        mw &= mw - 1;
        ++nnz;
      }
    }
    y[r] = plus - minus;
    counter.additions += detail::row_additions(nnz);
    counter.weight_bytes_read += 16 * static_cast<std::uint64_t>(wpr);  // two masks
  }
}

/// On-the-fly kernel: regenerates each entry from the spec while
/// accumulating, reading no weight memory at all.
template <class S>
void matvec(const WeightSpec& spec, const S* x, S* y, OpCounter& counter) {
  validate(spec);
  const int rows = spec.rows, cols = spec.cols;
  std::vector<ternary_t> group;
  if (spec.generator == GeneratorKind::StructuredNofM) group.resize(spec.m);
  for (int r = 0; r < rows; ++r) {
    S plus = S(0), minus = S(0);
    std::size_t nnz = 0;
    auto route = [&](int c, ternary_t v) {
      if (v > 0) {
        plus += x[c];
        ++nnz;
      } else if (v < 0) {
        minus += x[c];
        ++nnz;
      }
    };
    if (spec.generator == GeneratorKind::StructuredNofM) {
      for (int g = 0; g < cols / spec.m; ++g) {
        detail::structured_group(spec, r, g * spec.m, group.data());
        for (int j = 0; j < spec.m; ++j) route(g * spec.m + j, group[j]);
      }
    } else {
      for (int c = 0; c < cols; ++c) {
        route(c, ternarize(word_to_uniform(detail::raw_word(spec, r, c)), spec.threshold));
      }
    }
    y[r] = plus - minus;
    counter.additions += detail::row_additions(nnz);
    // no weight_bytes_read: weights exist only transiently in registers
  }
}

namespace detail {

template <class MatT>
int mat_rows(const MatT& M) {
  if constexpr (requires { M.rows(); }) return M.rows();
  else return M.rows;
}

template <class MatT>
int mat_cols(const MatT& M) {
  if constexpr (requires { M.cols(); }) return M.cols();
  else return M.cols;
}

}  // namespace detail

template <class MatT, class S>
std::vector<S> matvec(const MatT& M, const std::vector<S>& x, OpCounter& counter) {
  if (static_cast<int>(x.size()) != detail::mat_cols(M))
    throw std::invalid_argument("matvec: dimension mismatch");
  std::vector<S> y(detail::mat_rows(M));
  matvec(M, x.data(), y.data(), counter);
  return y;
}

// ---- float reference --------------------------------------------------------

/// Test/bench oracle: weights cast to floats, products accumulated in the
/// same canonical plus/minus order. Dense semantics: every entry is read and
/// multiplied, so this kernel does report multiplications.
template <class S>
void reference_float_matvec(const DenseTernary& M, const S* x, S* y, OpCounter& counter) {
  const int rows = M.rows(), cols = M.cols();
  for (int r = 0; r < rows; ++r) {
    S plus = S(0), minus = S(0);
    for (int c = 0; c < cols; ++c) {
      const S w = static_cast<S>(M.at(r, c));
      if (M.at(r, c) < 0) {
        minus += -(w * x[c]);
      } else {
        plus += w * x[c];  // zero weights add +/-0.0, which leaves plus unchanged
      }
    }
    y[r] = plus - minus;
    counter.multiplications += static_cast<std::uint64_t>(cols);
    counter.additions += static_cast<std::uint64_t>(cols) + 1;
    counter.weight_bytes_read += 4 * static_cast<std::uint64_t>(cols);  // f32 weights
  }
}

template <class S>
std::vector<S> reference_float_matvec(const DenseTernary& M, const std::vector<S>& x,
                                      OpCounter& counter) {
  if (static_cast<int>(x.size()) != M.cols())
    throw std::invalid_argument("reference_float_matvec: dimension mismatch");
  std::vector<S> y(M.rows());
  reference_float_matvec(M, x.data(), y.data(), counter);
  return y;
}

// ---- transposed product: out = M^T g ---------------------------------------

/// Reusable buffers for the transpose kernels; sized on first use.
template <class S>
struct TransposeScratch {
  std::vector<S> plus, minus;
  std::vector<std::uint32_t> touches;

  void prepare(int cols) {
    plus.assign(cols, S(0));
    minus.assign(cols, S(0));
    touches.assign(cols, 0);
  }
};

namespace detail {

template <class S>
void finish_transpose(TransposeScratch<S>& s, S* out, int cols, OpCounter& counter) {
  for (int c = 0; c < cols; ++c) {
    out[c] = s.plus[c] - s.minus[c];
    counter.additions += row_additions(s.touches[c]);
  }
}

}  // namespace detail

template <class S>
void matvec_transpose(const DenseTernary& M, const S* g, S* out,
                      TransposeScratch<S>& scratch, OpCounter& counter) {
  const int rows = M.rows(), cols = M.cols();
  scratch.prepare(cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const ternary_t v = M.at(r, c);
      if (v > 0) {
        scratch.plus[c] += g[r];
        ++scratch.touches[c];
      } else if (v < 0) {
        scratch.minus[c] += g[r];
        ++scratch.touches[c];
      }
    }
    counter.weight_bytes_read += static_cast<std::uint64_t>(cols);
  }
  detail::finish_transpose(scratch, out, cols, counter);
}

template <class S>
void matvec_transpose(const IndexPairMatrix& M, const S* g, S* out,
                      TransposeScratch<S>& scratch, OpCounter& counter) {
  const int rows = M.rows(), cols = M.cols();
  scratch.prepare(cols);
  for (int r = 0; r < rows; ++r) {
    for (const std::uint32_t* p = M.plus_begin(r); p != M.plus_end(r); ++p) {
      scratch.plus[*p] += g[r];
      ++scratch.touches[*p];
    }
    for (const std::uint32_t* p = M.minus_begin(r); p != M.minus_end(r); ++p) {
      scratch.minus[*p] += g[r];
      ++scratch.touches[*p];
    }
    counter.weight_bytes_read += 4 * static_cast<std::uint64_t>(M.plus_count(r) + M.minus_count(r));
  }
  detail::finish_transpose(scratch, out, cols, counter);
}

template <class S>
void matvec_transpose(const PackedBitplanes& M, const S* g, S* out,
                      TransposeScratch<S>& scratch, OpCounter& counter) {
  const int rows = M.rows(), cols = M.cols(), wpr = M.words_per_row();
  scratch.prepare(cols);
  for (int r = 0; r < rows; ++r) {
    for (int w = 0; w < wpr; ++w) {
      std::uint64_t pw = M.plus_word(r, w);
      while (pw) {
        const int c = w * 64 + __builtin_ctzll(pw);
        scratch.plus[c] += g[r];
        ++scratch.touches[c];
        pw &= pw - 1;
      }
      std::uint64_t mw = M.minus_word(r, w);
      while (mw) {
        const int c = w * 64 + __builtin_ctzll(mw);
        scratch.minus[c] += g[r];
        ++scratch.touches[c];
        mw &= mw - 1;
      }
    }
    counter.weight_bytes_read += 16 * static_cast<std::uint64_t>(wpr);
  }
  detail::finish_transpose(scratch, out, cols, counter);
}

template <class MatT, class S>
std::vector<S> matvec_transpose(const MatT& M, const std::vector<S>& g, OpCounter& counter) {
  if (static_cast<int>(g.size()) != M.rows())
    throw std::invalid_argument("matvec_transpose: dimension mismatch");
  std::vector<S> out(M.cols());
  TransposeScratch<S> scratch;
  matvec_transpose(M, g.data(), out.data(), scratch, counter);
  return out;
}

// ---- pointwise (1x1) application over a tensor ------------------------------

/// Applies the ternary matrix to the channel vector of every (batch, time)
/// position: a 1x1-convolution. No multiplications are recorded.
template <class MatT, class S>
Tensor<S> pointwise_apply(const MatT& M, const Tensor<S>& X, OpCounter& counter) {
  const int rows = detail::mat_rows(M);
  const int cols = detail::mat_cols(M);
  if (X.channels() != cols)
    throw std::invalid_argument("pointwise_apply: channel count does not match matrix cols");
  const int B = X.batch(), T = X.time();
  Tensor<S> Y(B, rows, T);
  std::vector<S> xbuf(cols), ybuf(rows);
  for (int b = 0; b < B; ++b) {
    for (int t = 0; t < T; ++t) {
      for (int c = 0; c < cols; ++c) xbuf[c] = X.at(b, c, t);
      matvec(M, xbuf.data(), ybuf.data(), counter);
      for (int r = 0; r < rows; ++r) Y.at(b, r, t) = ybuf[r];
    }
  }
  return Y;
}

}  // namespace ternconv
