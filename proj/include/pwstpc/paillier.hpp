#pragma once

#include <cstddef>
#include <span>

#include <gmpxx.h>

#include "pwstpc/crypto.hpp"
#include "pwstpc/error.hpp"

namespace pwstpc {

struct PaillierPublicKey {
  unsigned T = 0;  // modulus bits
  mpz_class n, n2;

  std::size_t ciphertext_bytes() const { return 2 * T / 8; }
  std::size_t key_bytes() const { return T / 8; }

  Bytes serialize() const { return mpz_to_bytes(n, key_bytes()); }
  static PaillierPublicKey parse(std::span<const std::uint8_t> in, unsigned T) {
    if (in.size() != T / 8) throw FormatError("public key has the wrong length");
    PaillierPublicKey pk;
    pk.T = T;
    pk.n = mpz_from_bytes(in);
    pk.n2 = pk.n * pk.n;
    if (mpz_sizeinbase(pk.n.get_mpz_t(), 2) != T || mpz_even_p(pk.n.get_mpz_t()))
      throw FormatError("public key modulus is malformed");
    return pk;
  }
};

struct PaillierSecretKey {
  mpz_class p, q;
  mpz_class p2, q2;
  mpz_class hp, hq;  // CRT decryption constants
  mpz_class q_inv_p;  // q^{-1} mod p
};

struct Keypair {
  PaillierPublicKey pk;
  PaillierSecretKey sk;
};

struct Ciphertext {
  mpz_class c;
};

namespace detail {

inline mpz_class random_prime(Prg& prg, unsigned bits) {
  mpz_class v = prg.bits(bits);
  mpz_setbit(v.get_mpz_t(), bits - 1);
  mpz_setbit(v.get_mpz_t(), bits - 2);  // keeps p*q at full length
  mpz_class p;
  mpz_nextprime(p.get_mpz_t(), v.get_mpz_t());
  return p;
}

inline mpz_class powm(const mpz_class& b, const mpz_class& e, const mpz_class& m) {
  mpz_class r;
  mpz_powm(r.get_mpz_t(), b.get_mpz_t(), e.get_mpz_t(), m.get_mpz_t());
  return r;
}

inline mpz_class invert(const mpz_class& a, const mpz_class& m) {
  mpz_class r;
  if (mpz_invert(r.get_mpz_t(), a.get_mpz_t(), m.get_mpz_t()) == 0) throw InvalidArgument("value not invertible");
  return r;
}

// L(u) = (u - 1) / m
inline mpz_class paillier_l(const mpz_class& u, const mpz_class& m) { return (u - 1) / m; }

}  // namespace detail

/// Key generation with g = N + 1. T below 256 requires insecure_test_keys.
inline Keypair keygen(unsigned T, Prg& prg, bool insecure_test_keys = false) {
  if (T % 16 != 0) throw InvalidArgument("modulus bits must be a multiple of 16");
  if (T < 64 || (T < 256 && !insecure_test_keys)) throw InvalidArgument("modulus too small");
  Keypair kp;
  for (;;) {
    mpz_class p = detail::random_prime(prg, T / 2);
    mpz_class q = detail::random_prime(prg, T / 2);
    if (p == q) continue;
    mpz_class n = p * q;
    if (mpz_sizeinbase(n.get_mpz_t(), 2) != T) continue;
    mpz_class g;
    mpz_gcd(g.get_mpz_t(), n.get_mpz_t(), mpz_class((p - 1) * (q - 1)).get_mpz_t());
    if (g != 1) continue;
    kp.pk.T = T;
    kp.pk.n = n;
    kp.pk.n2 = n * n;
    auto& sk = kp.sk;
    sk.p = p;
    sk.q = q;
    sk.p2 = p * p;
    sk.q2 = q * q;
    // hp = L_p((N+1)^(p-1) mod p^2)^{-1} mod p
    sk.hp = detail::invert(detail::paillier_l(detail::powm(n + 1, p - 1, sk.p2), p), p);
    sk.hq = detail::invert(detail::paillier_l(detail::powm(n + 1, q - 1, sk.q2), q), q);
    sk.q_inv_p = detail::invert(q, p);
    return kp;
  }
}

inline void check_ciphertext(const PaillierPublicKey& pk, const Ciphertext& c) {
  if (c.c <= 0 || c.c >= pk.n2) throw CiphertextOutOfGroup("ciphertext outside [1, N^2)");
  mpz_class g;
  mpz_gcd(g.get_mpz_t(), c.c.get_mpz_t(), pk.n.get_mpz_t());
  if (g != 1) throw CiphertextOutOfGroup("ciphertext shares a factor with N");
}

/// Encryption of m with (N+1)^m = 1 + mN and a fresh r^N.
inline Ciphertext encrypt(const PaillierPublicKey& pk, const mpz_class& m, Prg& prg) {
  if (m < 0 || m >= pk.n) throw InvalidArgument("plaintext outside [0, N)");
  mpz_class r;
  do r = prg.below(pk.n);
  while (r == 0 || gcd(r, pk.n) != 1);
  mpz_class gm = (1 + m * pk.n) % pk.n2;
  return {gm * detail::powm(r, pk.n, pk.n2) % pk.n2};
}

/// Deterministic encryption with randomness 1; only for adding public constants.
inline Ciphertext encrypt_trivial(const PaillierPublicKey& pk, const mpz_class& m) {
  mpz_class mm = m % pk.n;
  if (mm < 0) mm += pk.n;
  return {(1 + mm * pk.n) % pk.n2};
}

inline mpz_class decrypt(const Keypair& kp, const Ciphertext& c) {
  const auto& sk = kp.sk;
  check_ciphertext(kp.pk, c);
  const mpz_class mp = detail::paillier_l(detail::powm(c.c, sk.p - 1, sk.p2), sk.p) * sk.hp % sk.p;
  const mpz_class mq = detail::paillier_l(detail::powm(c.c, sk.q - 1, sk.q2), sk.q) * sk.hq % sk.q;
  // CRT recombination
  mpz_class h = (mp - mq) * sk.q_inv_p % sk.p;
  if (h < 0) h += sk.p;
  return mq + h * sk.q;
}

inline Ciphertext add(const PaillierPublicKey& pk, const Ciphertext& a, const Ciphertext& b) {
  return {a.c * b.c % pk.n2};
}

/// [[a]]^s; negative s uses the inverse ciphertext.
inline Ciphertext scalar_mul(const PaillierPublicKey& pk, const Ciphertext& a, const mpz_class& s) {
  if (s >= 0) return {detail::powm(a.c, s, pk.n2)};
  return {detail::powm(detail::invert(a.c, pk.n2), mpz_class(-s), pk.n2)};
}

/// Multiplies in a fresh encryption of zero.
inline Ciphertext rerandomize(const PaillierPublicKey& pk, const Ciphertext& a, Prg& prg) {
  return add(pk, a, encrypt(pk, 0, prg));
}

inline mpz_class encode_signed(const PaillierPublicKey& pk, const mpz_class& v) {
  if (2 * abs(v) >= pk.n) throw MagnitudeOverflow("|v| must be below N/2");
  return v >= 0 ? v : pk.n + v;
}

inline mpz_class decode_signed(const PaillierPublicKey& pk, const mpz_class& m) {
  if (m < 0 || m >= pk.n) throw InvalidArgument("plaintext outside [0, N)");
  return 2 * m >= pk.n ? m - pk.n : m;
}

inline Bytes serialize(const PaillierPublicKey& pk, const Ciphertext& c) {
  return mpz_to_bytes(c.c, pk.ciphertext_bytes());
}

inline Ciphertext parse_ciphertext(const PaillierPublicKey& pk, ByteReader& in) {
  Ciphertext c{mpz_from_bytes(in.take(pk.ciphertext_bytes()))};
  check_ciphertext(pk, c);
  return c;
}

}  // namespace pwstpc
