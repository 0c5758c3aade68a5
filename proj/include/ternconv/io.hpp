#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ternconv/ternary_matrix.hpp"
#include "ternconv/weightgen.hpp"

// Self-describing binary export of a ternary matrix.
//
//   offset  field
//   0       magic "TERN1" (5 bytes)
//   5       seed        u64 little-endian
//   13      layer_tag   u64
//   21      rows        u64
//   29      cols        u64
//   37      generator   u64 (0 = stream, 1 = hash, 2 = structured)
//   45      n           u64 (0 unless structured)
//   53      m           u64 (0 unless structured)
//   61      threshold   f64 little-endian
//   69      entries, 2 bits each (00 = 0, 01 = +1, 11 = -1), four per byte
//           starting at the low bits, row-major, each row padded to a byte
//           boundary; padding bits are zero.

namespace ternconv {

inline constexpr char kTern1Magic[5] = {'T', 'E', 'R', 'N', '1'};
inline constexpr std::size_t kTern1HeaderSize = 69;

/// Malformed-file error carrying the offset of the first violating byte.
class Tern1Error : public std::runtime_error {
 public:
  Tern1Error(std::size_t offset, const std::string& what)
      : std::runtime_error("malformed TERN1 file at offset " + std::to_string(offset) +
                           ": " + what),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

namespace detail {

inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

inline std::uint8_t encode_entry(ternary_t v) {
  if (v == 0) return 0b00;
  return v > 0 ? 0b01 : 0b11;
}

}  // namespace detail

inline std::size_t tern1_bytes_per_row(int cols) {
  return (static_cast<std::size_t>(cols) + 3) / 4;
}

inline std::vector<std::uint8_t> encode_tern1(const WeightSpec& spec,
                                              const DenseTernary& m) {
  std::vector<std::uint8_t> out;
  out.reserve(kTern1HeaderSize + static_cast<std::size_t>(m.rows()) * tern1_bytes_per_row(m.cols()));
  out.insert(out.end(), kTern1Magic, kTern1Magic + 5);
  detail::put_u64(out, spec.seed);
  detail::put_u64(out, spec.layer_tag);
  detail::put_u64(out, static_cast<std::uint64_t>(m.rows()));
  detail::put_u64(out, static_cast<std::uint64_t>(m.cols()));
  detail::put_u64(out, static_cast<std::uint64_t>(spec.generator));
  detail::put_u64(out, static_cast<std::uint64_t>(spec.n));
  detail::put_u64(out, static_cast<std::uint64_t>(spec.m));
  std::uint64_t tbits;
  static_assert(sizeof(double) == 8);
  std::memcpy(&tbits, &spec.threshold, 8);
  detail::put_u64(out, tbits);
  for (int r = 0; r < m.rows(); ++r) {
    std::uint8_t byte = 0;
    for (int c = 0; c < m.cols(); ++c) {
      byte |= static_cast<std::uint8_t>(detail::encode_entry(m.at(r, c)) << (2 * (c & 3)));
      if ((c & 3) == 3) {
        out.push_back(byte);
        byte = 0;
      }
    }
    if (m.cols() & 3) out.push_back(byte);
  }
  return out;
}

struct Tern1File {
  WeightSpec spec;
  DenseTernary matrix;
};

inline Tern1File decode_tern1(const std::uint8_t* data, std::size_t len) {
  for (std::size_t i = 0; i < 5; ++i) {
    if (i >= len || data[i] != static_cast<std::uint8_t>(kTern1Magic[i]))
      throw Tern1Error(i, "bad magic");
  }
  if (len < kTern1HeaderSize) throw Tern1Error(len, "truncated header");

  WeightSpec spec;
  spec.seed = detail::get_u64(data + 5);
  spec.layer_tag = detail::get_u64(data + 13);
  const std::uint64_t rows = detail::get_u64(data + 21);
  const std::uint64_t cols = detail::get_u64(data + 29);
  if (rows < 1 || rows > (1u << 30)) throw Tern1Error(21, "rows out of range");
  if (cols < 1 || cols > (1u << 30)) throw Tern1Error(29, "cols out of range");
  spec.rows = static_cast<int>(rows);
  spec.cols = static_cast<int>(cols);
  const std::uint64_t gen = detail::get_u64(data + 37);
  if (gen > 2) throw Tern1Error(37, "unknown generator id");
  spec.generator = static_cast<GeneratorKind>(gen);
  spec.n = static_cast<int>(detail::get_u64(data + 45));
  spec.m = static_cast<int>(detail::get_u64(data + 53));
  std::uint64_t tbits = detail::get_u64(data + 61);
  std::memcpy(&spec.threshold, &tbits, 8);
  if (!(spec.threshold >= 0.0 && spec.threshold <= 1.0))
    throw Tern1Error(61, "threshold outside [0,1]");

  const std::size_t bpr = tern1_bytes_per_row(spec.cols);
  const std::size_t expected = kTern1HeaderSize + bpr * static_cast<std::size_t>(spec.rows);
  if (len < expected) throw Tern1Error(len, "truncated entry data");
  if (len > expected) throw Tern1Error(expected, "trailing bytes after entry data");

  DenseTernary m(spec.rows, spec.cols);
  for (int r = 0; r < spec.rows; ++r) {
    const std::size_t row_base = kTern1HeaderSize + bpr * static_cast<std::size_t>(r);
    for (int c = 0; c < spec.cols; ++c) {
      const std::size_t off = row_base + (c >> 2);
      const std::uint8_t code = (data[off] >> (2 * (c & 3))) & 0b11;
      switch (code) {
        case 0b00: break;
        case 0b01: m.set(r, c, 1); break;
        case 0b11: m.set(r, c, -1); break;
        default: throw Tern1Error(off, "invalid entry code 10");
      }
    }
    // padding bits beyond the last column must be zero
    if (spec.cols & 3) {
      const std::size_t off = row_base + bpr - 1;
      const int used = 2 * (spec.cols & 3);
      if (data[off] >> used) throw Tern1Error(off, "nonzero padding bits");
    }
  }
  return {spec, std::move(m)};
}

inline void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("write failed: " + path);
}

inline std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

inline void write_tern1(const std::string& path, const WeightSpec& spec,
                        const DenseTernary& m) {
  write_file(path, encode_tern1(spec, m));
}

inline Tern1File read_tern1(const std::string& path) {
  const auto bytes = read_file(path);
  return decode_tern1(bytes.data(), bytes.size());
}

/// Plain-text inspection format: one row per line, characters '-', '0', '+'.
inline std::string to_text(const DenseTernary& m) {
  std::string out;
  out.reserve(static_cast<std::size_t>(m.rows()) * (m.cols() + 1));
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      const ternary_t v = m.at(r, c);
      out.push_back(v == 0 ? '0' : (v > 0 ? '+' : '-'));
    }
    out.push_back('\n');
  }
  return out;
}

}  // namespace ternconv
