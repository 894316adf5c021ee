#pragma once

#include <span>
#include <utility>
#include <vector>

#include <gmpxx.h>

#include "pwstpc/crypto.hpp"
#include "pwstpc/transport.hpp"

namespace pwstpc {

// Semi-honest 1-of-2 OT in the style of Chou and Orlandi's "simplest OT":
//   sender   -> A = g^a
//   chooser  -> B_j = g^b_j (choice 0) or A * g^b_j (choice 1)
//   sender   -> e0_j = m0_j ^ H(j, B_j^a), e1_j = m1_j ^ H(j, (B_j / A)^a)
// The chooser unmasks e_c with H(j, A^b_j). Runs as three batched messages.

namespace ot_group {

/// 1024-bit MODP group from RFC 2409 (Oakley group 2), generator 2.
inline const mpz_class& prime() {
  static const mpz_class p(
      "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74020BBEA63B139B22514A08798E3404DDEF9519B3"
      "CD3A431B302B0A6DF25F14374FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7EDEE386BFB5A899FA5"
      "AE9F24117C4B1FE649286651ECE65381FFFFFFFFFFFFFFFF",
      16);
  return p;
}
inline constexpr unsigned kElementBytes = 128;
inline constexpr unsigned kExponentBits = 256;

inline mpz_class powm(const mpz_class& base, const mpz_class& e) {
  mpz_class r;
  mpz_powm(r.get_mpz_t(), base.get_mpz_t(), e.get_mpz_t(), prime().get_mpz_t());
  return r;
}

inline mpz_class read_element(ByteReader& in) {
  mpz_class v = mpz_from_bytes(in.take(kElementBytes));
  if (v <= 1 || v >= prime() - 1) throw FormatError("OT group element out of range");
  return v;
}

}  // namespace ot_group

inline Bytes ot_key(std::size_t index, const mpz_class& shared, std::size_t len) {
  Digest d = Sha256().update("ot").update_u64(index).update(mpz_to_bytes(shared, ot_group::kElementBytes)).finish();
  if (len > d.size()) throw InvalidArgument("OT messages longer than 32 bytes");
  return Bytes(d.begin(), d.begin() + len);
}

/// Sender side; every message pair must have the same length `len`.
inline void ot_send(Channel& ch, std::span<const std::pair<Bytes, Bytes>> pairs, std::size_t len, Prg& prg) {
  using namespace ot_group;
  const mpz_class a = prg.bits(kExponentBits) | 1;
  const mpz_class A = powm(2, a);
  ch.send(msg::kOt, mpz_to_bytes(A, kElementBytes));

  Bytes in = ch.expect(msg::kOt);
  ByteReader r(in);
  if (r.u32() != pairs.size()) throw FormatError("OT batch size mismatch");
  mpz_class a_inv;
  mpz_invert(a_inv.get_mpz_t(), A.get_mpz_t(), prime().get_mpz_t());
  Bytes out;
  for (std::size_t j = 0; j < pairs.size(); ++j) {
    const mpz_class B = read_element(r);
    const mpz_class k0 = powm(B, a);
    const mpz_class k1 = powm(mpz_class(B * a_inv % prime()), a);
    const Bytes h0 = ot_key(j, k0, len), h1 = ot_key(j, k1, len);
    const auto& [m0, m1] = pairs[j];
    if (m0.size() != len || m1.size() != len) throw InvalidArgument("OT message length mismatch");
    for (std::size_t i = 0; i < len; ++i) out.push_back(m0[i] ^ h0[i]);
    for (std::size_t i = 0; i < len; ++i) out.push_back(m1[i] ^ h1[i]);
  }
  if (!r.done()) throw FormatError("trailing bytes in OT message");
  ch.send(msg::kOt, std::move(out));
}

/// Chooser side; returns m_{choice_j} for every j.
inline std::vector<Bytes> ot_receive(Channel& ch, std::span<const std::uint8_t> choices, std::size_t len, Prg& prg) {
  using namespace ot_group;
  Bytes first = ch.expect(msg::kOt);
  ByteReader r0(first);
  const mpz_class A = read_element(r0);

  std::vector<mpz_class> b(choices.size());
  Bytes out;
  put_u32(out, static_cast<std::uint32_t>(choices.size()));
  for (std::size_t j = 0; j < choices.size(); ++j) {
    b[j] = prg.bits(kExponentBits) | 1;
    mpz_class B = powm(2, b[j]);
    if (choices[j]) B = B * A % prime();
    const Bytes enc = mpz_to_bytes(B, kElementBytes);
    out.insert(out.end(), enc.begin(), enc.end());
  }
  ch.send(msg::kOt, std::move(out));

  Bytes in = ch.expect(msg::kOt);
  if (in.size() != choices.size() * 2 * len) throw FormatError("OT reply has the wrong size");
  std::vector<Bytes> result;
  for (std::size_t j = 0; j < choices.size(); ++j) {
    const Bytes h = ot_key(j, powm(A, b[j]), len);
    const std::uint8_t* e = in.data() + (2 * j + (choices[j] ? 1 : 0)) * len;
    Bytes m(len);
    for (std::size_t i = 0; i < len; ++i) m[i] = e[i] ^ h[i];
    result.push_back(std::move(m));
  }
  return result;
}

}  // namespace pwstpc
