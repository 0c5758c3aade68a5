#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace ternconv {

using ternary_t = std::int8_t;  // admissible values: -1, 0, +1

constexpr bool is_ternary_value(int v) noexcept {
  return v == -1 || v == 0 || v == 1;
}

/// Instrumentation attached to every kernel call. Counts are monotonically
/// non-decreasing; ternary kernels never touch `multiplications`.
struct OpCounter {
  std::uint64_t multiplications = 0;
  std::uint64_t additions = 0;
  std::uint64_t weight_bytes_read = 0;

  void reset() noexcept { multiplications = additions = weight_bytes_read = 0; }
};

/// Row-major {-1,0,+1} matrix, one byte per entry.
class DenseTernary {
 public:
  DenseTernary() = default;
  DenseTernary(int rows, int cols)
      : rows_(rows), cols_(cols), entries_(checked_size(rows, cols), 0) {}

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }

  ternary_t at(int r, int c) const {
    return entries_[static_cast<std::size_t>(r) * cols_ + c];
  }
  void set(int r, int c, ternary_t v) {
    entries_[static_cast<std::size_t>(r) * cols_ + c] = v;
  }

  const std::vector<ternary_t>& entries() const noexcept { return entries_; }

  bool operator==(const DenseTernary& o) const = default;

 private:
  static std::size_t checked_size(int rows, int cols) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("matrix dims must be >= 1");
    return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<ternary_t> entries_;
};

/// Per-row index lists: `plus` holds the column indices carrying weight +1
/// and `minus` those carrying -1, each strictly ascending and disjoint.
/// Stored CSR-style in flat arrays.
class IndexPairMatrix {
 public:
  IndexPairMatrix() = default;
  IndexPairMatrix(int rows, int cols) : rows_(rows), cols_(cols) {
    plus_offsets_.assign(static_cast<std::size_t>(rows) + 1, 0);
    minus_offsets_.assign(static_cast<std::size_t>(rows) + 1, 0);
  }

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }

  const std::uint32_t* plus_begin(int r) const { return plus_.data() + plus_offsets_[r]; }
  const std::uint32_t* plus_end(int r) const { return plus_.data() + plus_offsets_[r + 1]; }
  const std::uint32_t* minus_begin(int r) const { return minus_.data() + minus_offsets_[r]; }
  const std::uint32_t* minus_end(int r) const { return minus_.data() + minus_offsets_[r + 1]; }

  std::size_t plus_count(int r) const { return plus_offsets_[r + 1] - plus_offsets_[r]; }
  std::size_t minus_count(int r) const { return minus_offsets_[r + 1] - minus_offsets_[r]; }
  std::size_t nnz() const noexcept { return plus_.size() + minus_.size(); }

  /// Rows must be appended in order; indices within a row in ascending order.
  void append_row(const std::vector<std::uint32_t>& plus,
                  const std::vector<std::uint32_t>& minus) {
    plus_.insert(plus_.end(), plus.begin(), plus.end());
    minus_.insert(minus_.end(), minus.begin(), minus.end());
    next_row_++;
    plus_offsets_[next_row_] = plus_.size();
    minus_offsets_[next_row_] = minus_.size();
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  int next_row_ = 0;
  std::vector<std::uint32_t> plus_, minus_;
  std::vector<std::size_t> plus_offsets_, minus_offsets_;
};

/// Two bitmasks per row: bit c of `plus_word(r, w)` set iff entry (r,c) = +1,
/// analogously for minus. Bits at or beyond `cols` are zero.
class PackedBitplanes {
 public:
  PackedBitplanes() = default;
  PackedBitplanes(int rows, int cols)
      : rows_(rows),
        cols_(cols),
        words_per_row_((cols + 63) / 64),
        plus_(static_cast<std::size_t>(rows) * words_per_row_, 0),
        minus_(static_cast<std::size_t>(rows) * words_per_row_, 0) {}

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  int words_per_row() const noexcept { return words_per_row_; }

  std::uint64_t plus_word(int r, int w) const {
    return plus_[static_cast<std::size_t>(r) * words_per_row_ + w];
  }
  std::uint64_t minus_word(int r, int w) const {
    return minus_[static_cast<std::size_t>(r) * words_per_row_ + w];
  }

  void set(int r, int c, ternary_t v) {
    const std::size_t idx = static_cast<std::size_t>(r) * words_per_row_ + (c >> 6);
    const std::uint64_t bit = 1ULL << (c & 63);
    if (v > 0) plus_[idx] |= bit;
    if (v < 0) minus_[idx] |= bit;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  int words_per_row_ = 0;
  std::vector<std::uint64_t> plus_, minus_;
};

// ---- conversions (all lossless) --------------------------------------------

inline IndexPairMatrix to_index_pairs(const DenseTernary& m) {
  IndexPairMatrix out(m.rows(), m.cols());
  std::vector<std::uint32_t> plus, minus;
  for (int r = 0; r < m.rows(); ++r) {
    plus.clear();
    minus.clear();
    for (int c = 0; c < m.cols(); ++c) {
      const ternary_t v = m.at(r, c);
      if (v > 0) plus.push_back(static_cast<std::uint32_t>(c));
      if (v < 0) minus.push_back(static_cast<std::uint32_t>(c));
    }
    out.append_row(plus, minus);
  }
  return out;
}

inline PackedBitplanes to_bitplanes(const DenseTernary& m) {
  PackedBitplanes out(m.rows(), m.cols());
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) out.set(r, c, m.at(r, c));
  return out;
}

inline DenseTernary to_dense(const IndexPairMatrix& m) {
  DenseTernary out(m.rows(), m.cols());
  for (int r = 0; r < m.rows(); ++r) {
    for (const std::uint32_t* p = m.plus_begin(r); p != m.plus_end(r); ++p)
      out.set(r, static_cast<int>(*p), 1);
    for (const std::uint32_t* p = m.minus_begin(r); p != m.minus_end(r); ++p)
      out.set(r, static_cast<int>(*p), -1);
  }
  return out;
}

inline DenseTernary to_dense(const PackedBitplanes& m) {
  DenseTernary out(m.rows(), m.cols());
  for (int r = 0; r < m.rows(); ++r) {
    for (int w = 0; w < m.words_per_row(); ++w) {
      std::uint64_t pw = m.plus_word(r, w);
      while (pw) {
        const int bit = __builtin_ctzll(pw);
        out.set(r, w * 64 + bit, 1);
        pw &= pw - 1;
      }
      std::uint64_t mw = m.minus_word(r, w);
      while (mw) {
        const int bit = __builtin_ctzll(mw);
        out.set(r, w * 64 + bit, -1);
        mw &= mw - 1;
      }
    }
  }
  return out;
}

inline PackedBitplanes to_bitplanes(const IndexPairMatrix& m) {
  PackedBitplanes out(m.rows(), m.cols());
  for (int r = 0; r < m.rows(); ++r) {
    for (const std::uint32_t* p = m.plus_begin(r); p != m.plus_end(r); ++p)
      out.set(r, static_cast<int>(*p), 1);
    for (const std::uint32_t* p = m.minus_begin(r); p != m.minus_end(r); ++p)
      out.set(r, static_cast<int>(*p), -1);
  }
  return out;
}

inline IndexPairMatrix to_index_pairs(const PackedBitplanes& m) {
  return to_index_pairs(to_dense(m));
}

/// Explicit transpose, used by the adjoint-identity oracle.
inline DenseTernary transpose_dense(const DenseTernary& m) {
  DenseTernary out(m.cols(), m.rows());
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) out.set(c, r, m.at(r, c));
  return out;
}

}  // namespace ternconv
