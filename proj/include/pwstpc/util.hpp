#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pwstpc/error.hpp"

namespace pwstpc {

using Bytes = std::vector<std::uint8_t>;
using BitVec = std::vector<std::uint8_t>;  // one bit per element, 0 or 1

/// Nearest integer with ties away from zero.
inline long double round_half_up(long double v) {
  return v < 0 ? -std::floor(-v + 0.5L) : std::floor(v + 0.5L);
}

/// ceil(log2(v)) for v >= 1; 0 for v <= 1.
inline unsigned ceil_log2(std::uint64_t v) {
  if (v <= 1) return 0;
  return static_cast<unsigned>(std::bit_width(v - 1));
}

inline bool is_pow2(std::uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

/// Unsigned value to `width` bits, least significant first.
inline BitVec to_bits(std::uint64_t v, unsigned width) {
  BitVec out(width);
  for (unsigned i = 0; i < width; ++i) out[i] = i < 64 ? (v >> i) & 1u : 0;
  return out;
}

inline std::uint64_t from_bits(std::span<const std::uint8_t> bits) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < bits.size() && i < 64; ++i)
    v |= static_cast<std::uint64_t>(bits[i] & 1u) << i;
  return v;
}

/// Two's complement interpretation of `bits` (LSB first).
inline std::int64_t from_bits_signed(std::span<const std::uint8_t> bits) {
  if (bits.empty()) return 0;
  if (bits.size() > 64) throw InvalidArgument("from_bits_signed: more than 64 bits");
  std::uint64_t v = from_bits(bits);
  if (bits.back() && bits.size() < 64) v |= ~std::uint64_t{0} << bits.size();
  return static_cast<std::int64_t>(v);
}

// Big-endian helpers used by the wire formats.
inline void put_u32(Bytes& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

inline std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t off) {
  if (off + 4 > in.size()) throw FormatError("truncated u32");
  return (std::uint32_t{in[off]} << 24) | (std::uint32_t{in[off + 1]} << 16) |
         (std::uint32_t{in[off + 2]} << 8) | std::uint32_t{in[off + 3]};
}

/// Sequential reader over a byte payload.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::span<const std::uint8_t> take(std::size_t n) {
    if (pos_ + n > data_.size()) throw FormatError("payload truncated");
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint32_t u32() {
    auto v = get_u32(data_, pos_);
    pos_ += 4;
    return v;
  }
  std::uint8_t u8() { return take(1)[0]; }
  bool done() const { return pos_ == data_.size(); }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace pwstpc
