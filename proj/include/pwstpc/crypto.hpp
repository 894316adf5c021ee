#pragma once

#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <cstring>
#include <memory>
#include <span>
#include <string_view>

#include <gmpxx.h>

#include "pwstpc/util.hpp"

namespace pwstpc {

using Digest = std::array<std::uint8_t, 32>;

/// Incremental SHA-256.
class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1)
      throw Error("sha256 init failed");
  }

  Sha256& update(std::span<const std::uint8_t> data) {
    EVP_DigestUpdate(ctx_.get(), data.data(), data.size());
    return *this;
  }
  Sha256& update(std::string_view s) {
    EVP_DigestUpdate(ctx_.get(), s.data(), s.size());
    return *this;
  }
  Sha256& update_u64(std::uint64_t v) {
    std::uint8_t b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(v >> (56 - 8 * i));
    return update(b);
  }

  Digest finish() {
    Digest d{};
    unsigned len = 0;
    EVP_DigestFinal_ex(ctx_.get(), d.data(), &len);
    return d;
  }

  static Digest hash(std::span<const std::uint8_t> data) { return Sha256().update(data).finish(); }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

/// Seedable CSPRNG: AES-128 in counter mode keyed by SHA-256(label || seed).
/// Two generators built from the same (seed, label) emit identical streams.
class Prg {
 public:
  Prg(std::uint64_t seed, std::string_view label) : ctx_(EVP_CIPHER_CTX_new(), &EVP_CIPHER_CTX_free) {
    Digest key = Sha256().update(label).update_u64(seed).finish();
    std::uint8_t iv[16] = {};
    if (!ctx_ || EVP_EncryptInit_ex(ctx_.get(), EVP_aes_128_ctr(), nullptr, key.data(), iv) != 1)
      throw Error("prg init failed");
  }
  Prg(Prg&&) noexcept = default;
  Prg& operator=(Prg&&) noexcept = default;

  void fill(std::span<std::uint8_t> out) {
    std::memset(out.data(), 0, out.size());
    int len = 0;
    EVP_EncryptUpdate(ctx_.get(), out.data(), &len, out.data(), static_cast<int>(out.size()));
  }

  Bytes bytes(std::size_t n) {
    Bytes b(n);
    fill(b);
    return b;
  }

  std::uint64_t next_u64() {
    std::uint8_t b[8];
    fill(b);
    std::uint64_t v = 0;
    for (auto x : b) v = (v << 8) | x;
    return v;
  }

  bool bit() { return next_u64() & 1u; }

  /// Uniform integer in [0, 2^bits).
  mpz_class bits(unsigned nbits) {
    if (nbits == 0) return 0;
    Bytes b = bytes((nbits + 7) / 8);
    mpz_class v;
    mpz_import(v.get_mpz_t(), b.size(), 1, 1, 1, 0, b.data());
    mpz_fdiv_r_2exp(v.get_mpz_t(), v.get_mpz_t(), nbits);
    return v;
  }

  /// Uniform integer in [0, bound) by rejection.
  mpz_class below(const mpz_class& bound) {
    unsigned nb = static_cast<unsigned>(mpz_sizeinbase(bound.get_mpz_t(), 2));
    for (;;) {
      mpz_class v = bits(nb);
      if (v < bound) return v;
    }
  }

 private:
  std::unique_ptr<EVP_CIPHER_CTX, decltype(&EVP_CIPHER_CTX_free)> ctx_;
};

/// Fixed-width big-endian encoding of a non-negative integer.
inline Bytes mpz_to_bytes(const mpz_class& v, std::size_t width) {
  if (v < 0) throw InvalidArgument("mpz_to_bytes: negative value");
  std::size_t need = (mpz_sizeinbase(v.get_mpz_t(), 2) + 7) / 8;
  if (v == 0) need = 0;
  if (need > width) throw InvalidArgument("mpz_to_bytes: value wider than field");
  Bytes out(width, 0);
  std::size_t count = 0;
  if (need) mpz_export(out.data() + (width - need), &count, 1, 1, 1, 0, v.get_mpz_t());
  return out;
}

inline mpz_class mpz_from_bytes(std::span<const std::uint8_t> in) {
  mpz_class v;
  if (!in.empty()) mpz_import(v.get_mpz_t(), in.size(), 1, 1, 1, 0, in.data());
  return v;
}

/// Two's complement value to `width` bits (LSB first).
inline BitVec mpz_to_bits(const mpz_class& v, unsigned width) {
  mpz_class m;
  mpz_fdiv_r_2exp(m.get_mpz_t(), v.get_mpz_t(), width);
  BitVec out(width);
  for (unsigned i = 0; i < width; ++i) out[i] = mpz_tstbit(m.get_mpz_t(), i);
  return out;
}

inline mpz_class mpz_from_bits(std::span<const std::uint8_t> bits, bool is_signed) {
  mpz_class v = 0;
  for (std::size_t i = bits.size(); i-- > 0;) {
    v <<= 1;
    if (bits[i]) v += 1;
  }
  if (is_signed && !bits.empty() && bits.back()) {
    mpz_class m = 1;
    m <<= bits.size();
    v -= m;
  }
  return v;
}

}  // namespace pwstpc
