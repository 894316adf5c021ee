#pragma once

#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <gmpxx.h>

#include "pwstpc/builders.hpp"
#include "pwstpc/encode.hpp"
#include "pwstpc/garble.hpp"
#include "pwstpc/ot.hpp"
#include "pwstpc/paillier.hpp"
#include "pwstpc/transport.hpp"

namespace pwstpc {

struct ProtocolConfig {
  unsigned t = 80;      // label bits
  unsigned T = 1024;    // Paillier modulus bits
  unsigned tau = 80;    // statistical obfuscation margin
  bool test_decode = false;
};

/// Homomorphic work done by one party.
struct HeOps {
  std::size_t encryptions = 0;
  std::size_t decryptions = 0;
  std::size_t exponentiations = 0;    // ciphertext^scalar
  std::size_t rerandomizations = 0;   // fresh encryptions of zero multiplied in
  std::size_t ciphertexts_sent = 0;
};

struct SessionResult {
  Transcript transcript;
  GateCount gates;
  std::size_t material_bytes = 0;
  std::size_t hashes = 0;
  std::size_t const_labels = 0;  // constant-wire labels sent with the garbler's inputs
  HeOps he;

  // evaluator, full GC
  std::vector<Label> output_labels;
  std::optional<std::uint32_t> decoded;

  // garbler, hybrid: [[k * P(delta)]]
  std::optional<Ciphertext> k_poly;
  // evaluator, hybrid test mode: k * P(delta) and floor(k * P(delta) / k)
  std::optional<mpz_class> k_poly_value;
  std::optional<mpz_class> descaled;
};

// ---------------------------------------------------------------------------
// Input secrets

/// Garbler side: one OT per evaluator input wire.
inline void send_input_secrets(Channel& ch, const Circuit& c, const GarblerSecrets& s, Prg& prg) {
  std::vector<std::pair<Bytes, Bytes>> pairs;
  const unsigned n = label_bytes(s.t);
  for (auto w : c.inputs_a) {
    const Label l0 = s.label(w, false), l1 = s.label(w, true);
    pairs.emplace_back(Bytes(l0.b.begin(), l0.b.begin() + n), Bytes(l1.b.begin(), l1.b.begin() + n));
  }
  ot_send(ch, pairs, n, prg);
}

/// Evaluator side: obtains the labels of its own input bits.
inline std::vector<Label> provide_input_secrets(Channel& ch, std::span<const std::uint8_t> bits, unsigned t, Prg& prg) {
  std::vector<Label> out;
  for (const auto& m : ot_receive(ch, bits, label_bytes(t), prg)) {
    Label l;
    std::copy(m.begin(), m.end(), l.b.begin());
    out.push_back(l);
  }
  return out;
}

namespace detail {

inline Bytes encode_labels(std::span<const Label> garbler_inputs, std::span<const Label> consts, unsigned t) {
  Bytes out;
  put_u32(out, static_cast<std::uint32_t>(garbler_inputs.size()));
  for (const auto& l : garbler_inputs) put_label(out, l, t);
  put_u32(out, static_cast<std::uint32_t>(consts.size()));
  for (const auto& l : consts) put_label(out, l, t);
  return out;
}

inline std::pair<std::vector<Label>, std::vector<Label>> decode_labels(std::span<const std::uint8_t> in, unsigned t) {
  ByteReader r(in);
  std::vector<Label> a, b;
  for (std::uint32_t n = r.u32(); n > 0; --n) a.push_back(get_label(r, t));
  for (std::uint32_t n = r.u32(); n > 0; --n) b.push_back(get_label(r, t));
  if (!r.done()) throw FormatError("trailing bytes in label message");
  return {std::move(a), std::move(b)};
}

inline void check_circuit_hash(Channel& ch, const Circuit& c) {
  Bytes h = ch.expect(msg::kCircuit);
  const Digest mine = circuit_hash(c);
  if (h.size() != mine.size() || !std::equal(h.begin(), h.end(), mine.begin()))
    throw CircuitMismatch("peer compiled a different circuit (plans differ?)");
}

inline std::vector<Label> garbler_labels(const Circuit& c, const GarblerSecrets& s, std::span<const std::uint8_t> bits) {
  std::vector<Label> out;
  for (std::size_t i = 0; i < c.inputs_b.size(); ++i) out.push_back(s.label(c.inputs_b[i], bits[i]));
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Full garbled-circuit protocol

inline SessionResult run_full_gc_garbler(const ApproxPlan& plan, Channel& ch, Prg& prg, const ProtocolConfig& cfg) {
  const CompiledCircuit cc = compile_full_gc(plan);
  const GarbleResult g = garble(cc.circuit, prg, cfg.t);
  ch.send(msg::kCircuit, Bytes(g.gc.circuit_hash.begin(), g.gc.circuit_hash.end()));
  send_input_secrets(ch, cc.circuit, g.secrets, prg);
  ch.send(msg::kGarbled, g.gc.serialize());
  ch.send(msg::kLabels, detail::encode_labels({}, g.secrets.const_labels(), cfg.t));
  if (cfg.test_decode) ch.send(msg::kTestDecode, g.decode.serialize());

  SessionResult r;
  r.transcript = ch.transcript();
  r.gates = cc.total();
  r.material_bytes = g.gc.material.size();
  r.hashes = g.hashes;
  r.const_labels = g.secrets.const_wires.size();
  return r;
}

inline SessionResult run_full_gc_evaluator(const ApproxPlan& plan, std::uint32_t x, Channel& ch, Prg& prg,
                                           const ProtocolConfig& cfg) {
  if (x >> plan.widths.lx) throw InvalidArgument("input exceeds 2^lx - 1");
  const CompiledCircuit cc = compile_full_gc(plan);
  detail::check_circuit_hash(ch, cc.circuit);
  const std::vector<Label> mine = provide_input_secrets(ch, to_bits(x, plan.widths.lx), cfg.t, prg);
  const GarbledCircuit gc = GarbledCircuit::parse(ch.expect(msg::kGarbled), cfg.t);
  auto [theirs, consts] = detail::decode_labels(ch.expect(msg::kLabels), cfg.t);
  EvalResult ev = evaluate(cc.circuit, gc, mine, theirs, consts);

  SessionResult r;
  if (cfg.test_decode) {
    Bytes payload = ch.expect(msg::kTestDecode);
    ByteReader in(payload);
    const DecodeMap map = DecodeMap::parse(in);
    r.decoded = static_cast<std::uint32_t>(from_bits(decode(ev.outputs, map, cfg.t)));
  }
  r.output_labels = std::move(ev.outputs);
  r.transcript = ch.transcript();
  r.gates = cc.total();
  r.material_bytes = gc.material.size();
  r.hashes = ev.hashes;
  return r;
}

// ---------------------------------------------------------------------------
// Hybrid protocol

/// Largest plaintexts the hybrid protocol can produce, and whether the key
/// leaves room for them.
struct CapacityReport {
  mpz_class y_ob_bound;         // |y_ob| stays below this
  mpz_class power_bound;        // (delta + r)^d stays below this
  mpz_class formula_bound;      // k * 2^(ly + d lv + 2) * 2^(tau + 2)
  bool fits = false;
};

inline CapacityReport hybrid_capacity(const BitWidthPlan& w, unsigned tau, const mpz_class& n) {
  const HybridLayout lay = hybrid_layout(w, tau);
  CapacityReport c;
  c.y_ob_bound = 0;
  for (unsigned i = 0; i <= w.degree; ++i) {
    mpz_class e = 1;
    if (i == 1) e = detail::pow2(lay.d_out_bits);
    if (i >= 2) e = detail::pow2(i * w.lv) + detail::pow2(i * w.lv + tau);
    c.y_ob_bound += detail::pow2(w.shift(i)) * detail::pow2(lay.c_out_bits[i] - 1) * e;
  }
  c.power_bound = detail::pow2(w.degree * lay.d_out_bits);
  c.formula_bound = detail::pow2(w.lk + w.ly + w.degree * w.lv + 2 + tau + 2);
  c.fits = 2 * c.y_ob_bound < n && c.power_bound < n && 2 * c.formula_bound < n;
  return c;
}

inline void check_capacity(const BitWidthPlan& w, unsigned tau, const PaillierPublicKey& pk) {
  if (!hybrid_capacity(w, tau, pk.n).fits)
    throw CapacityExceeded("Paillier modulus too small for the obfuscated hybrid values; raise T or lower tau");
}

/// The garbler's obfuscation values.
struct HybridRandomness {
  mpz_class r;                   // lv + tau bits
  std::vector<mpz_class> ra;     // 1 + lu_i + i lv + tau bits, i = 0..d
  std::vector<mpz_class> rdelta; // i lv + tau bits for i >= 2; entries 0 and 1 unused

  static HybridRandomness sample(const BitWidthPlan& w, unsigned tau, Prg& prg) {
    const HybridLayout lay = hybrid_layout(w, tau);
    HybridRandomness h;
    h.r = prg.bits(lay.r_bits);
    for (auto bits : lay.ra_bits) h.ra.push_back(prg.bits(bits));
    h.rdelta.assign(w.degree + 1, 0);
    for (unsigned i = 2; i <= w.degree; ++i) h.rdelta[i] = prg.bits(i * w.lv + tau);
    return h;
  }

  BitVec garbler_input_bits(const HybridLayout& lay) const {
    BitVec bits = mpz_to_bits(r, lay.r_bits);
    for (std::size_t i = 0; i < ra.size(); ++i) {
      BitVec b = mpz_to_bits(ra[i], lay.ra_bits[i]);
      bits.insert(bits.end(), b.begin(), b.end());
    }
    return bits;
  }
};

namespace detail {

inline void send_ciphertexts(Channel& ch, std::uint8_t type, const PaillierPublicKey& pk,
                             const std::vector<Ciphertext>& cts, HeOps& ops) {
  Bytes out;
  for (const auto& c : cts) {
    Bytes b = serialize(pk, c);
    out.insert(out.end(), b.begin(), b.end());
  }
  ops.ciphertexts_sent += cts.size();
  ch.send(type, std::move(out));
}

inline std::vector<Ciphertext> recv_ciphertexts(Channel& ch, std::uint8_t type, const PaillierPublicKey& pk,
                                                std::size_t count) {
  Bytes in = ch.expect(type);
  if (in.size() != count * pk.ciphertext_bytes()) throw FormatError("unexpected ciphertext count");
  ByteReader r(in);
  std::vector<Ciphertext> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(parse_ciphertext(pk, r));
  return out;
}

inline mpz_class binomial(unsigned n, unsigned k) {
  mpz_class b;
  mpz_bin_uiui(b.get_mpz_t(), n, k);
  return b;
}

}  // namespace detail

/// Bob: garbles the selection circuit, strips the obfuscations under
/// encryption and ends with [[k * P(delta)]].
inline SessionResult run_hybrid_garbler(const ApproxPlan& plan, Channel& ch, Prg& prg, const ProtocolConfig& cfg) {
  const auto& w = plan.widths;
  const unsigned d = w.degree;
  if (d == 0) throw InvalidArgument("the hybrid protocol needs a degree >= 1 plan");
  SessionResult res;
  HeOps& ops = res.he;

  const PaillierPublicKey pk = PaillierPublicKey::parse(ch.expect(msg::kPublicKey), cfg.T);
  check_capacity(w, cfg.tau, pk);

  const HybridLayout lay = hybrid_layout(w, cfg.tau);
  const CompiledCircuit cc = compile_hybrid_gc(plan, cfg.tau);
  const HybridRandomness rnd = HybridRandomness::sample(w, cfg.tau, prg);
  const GarbleResult g = garble(cc.circuit, prg, cfg.t);
  ch.send(msg::kCircuit, Bytes(g.gc.circuit_hash.begin(), g.gc.circuit_hash.end()));
  send_input_secrets(ch, cc.circuit, g.secrets, prg);

  // R1: garbled circuit, Bob's input secrets, decoding of the obfuscated outputs.
  ch.send(msg::kGarbled, g.gc.serialize());
  const BitVec my_bits = rnd.garbler_input_bits(lay);
  ch.send(msg::kLabels, detail::encode_labels(detail::garbler_labels(cc.circuit, g.secrets, my_bits),
                                              g.secrets.const_labels(), cfg.t));
  ch.send(msg::kR1, g.decode.serialize());

  // powers[i] = [[delta^i]]
  std::vector<Ciphertext> powers(d + 1);
  auto strip_r = [&](const Ciphertext& enc_d) { return add(pk, enc_d, encrypt_trivial(pk, -rnd.r)); };
  if (d >= 2) {
    // R2 in, R3 out: de-obfuscate (delta + r)^i with the binomial expansion.
    const auto obf_powers = detail::recv_ciphertexts(ch, msg::kR2, pk, d);
    powers[1] = strip_r(obf_powers[0]);
    for (unsigned i = 2; i <= d; ++i) {
      Ciphertext acc = obf_powers[i - 1];
      for (unsigned m = 1; m < i; ++m) {
        mpz_class rp;
        mpz_pow_ui(rp.get_mpz_t(), rnd.r.get_mpz_t(), i - m);
        acc = add(pk, acc, scalar_mul(pk, powers[m], -detail::binomial(i, m) * rp));
        ++ops.exponentiations;
      }
      mpz_class ri;
      mpz_pow_ui(ri.get_mpz_t(), rnd.r.get_mpz_t(), i);
      powers[i] = add(pk, acc, encrypt_trivial(pk, -ri));
    }
    std::vector<Ciphertext> masked;
    for (unsigned i = 2; i <= d; ++i) {
      masked.push_back(rerandomize(pk, add(pk, powers[i], encrypt_trivial(pk, rnd.rdelta[i])), prg));
      ++ops.rerandomizations;
    }
    detail::send_ciphertexts(ch, msg::kR3, pk, masked, ops);
  }

  // R4 in: [[y_ob]], [[-(k/k_i) C_i]] for i = 1..d, and [[delta + r]] when d = 1.
  const auto r4 = detail::recv_ciphertexts(ch, msg::kR4, pk, d == 1 ? 3 : d + 1);
  if (d == 1) powers[1] = strip_r(r4[2]);

  Ciphertext acc = add(pk, r4[0], encrypt_trivial(pk, -(detail::pow2(w.shift(0)) * rnd.ra[0])));
  for (unsigned i = 1; i <= d; ++i) {
    const mpz_class rho = i == 1 ? rnd.r : rnd.rdelta[i];
    acc = add(pk, acc, scalar_mul(pk, powers[i], -(detail::pow2(w.shift(i)) * rnd.ra[i])));
    acc = add(pk, acc, scalar_mul(pk, r4[i], rho));
    ops.exponentiations += 2;
  }
  if (cfg.test_decode) ch.send(msg::kTestDecode, serialize(pk, acc));

  res.k_poly = acc;
  res.transcript = ch.transcript();
  res.gates = cc.total();
  res.material_bytes = g.gc.material.size();
  res.hashes = g.hashes;
  res.const_labels = g.secrets.const_wires.size();
  return res;
}

/// Alice: evaluates the circuit, works on the obfuscated values in the clear
/// and under her own key.
inline SessionResult run_hybrid_evaluator(const ApproxPlan& plan, std::uint32_t x, Channel& ch, Prg& prg,
                                          const ProtocolConfig& cfg, const Keypair& keys) {
  const auto& w = plan.widths;
  const unsigned d = w.degree;
  if (d == 0) throw InvalidArgument("the hybrid protocol needs a degree >= 1 plan");
  if (x >> w.lx) throw InvalidArgument("input exceeds 2^lx - 1");
  if (keys.pk.T != cfg.T) throw InvalidArgument("key length differs from the configured T");
  check_capacity(w, cfg.tau, keys.pk);
  const auto& pk = keys.pk;
  SessionResult res;
  HeOps& ops = res.he;

  ch.send(msg::kPublicKey, pk.serialize());
  const HybridLayout lay = hybrid_layout(w, cfg.tau);
  const CompiledCircuit cc = compile_hybrid_gc(plan, cfg.tau);
  detail::check_circuit_hash(ch, cc.circuit);
  const std::vector<Label> mine = provide_input_secrets(ch, to_bits(x, w.lx), cfg.t, prg);

  // R1
  const GarbledCircuit gc = GarbledCircuit::parse(ch.expect(msg::kGarbled), cfg.t);
  auto [theirs, consts] = detail::decode_labels(ch.expect(msg::kLabels), cfg.t);
  Bytes map_bytes = ch.expect(msg::kR1);
  ByteReader map_in(map_bytes);
  const DecodeMap map = DecodeMap::parse(map_in);
  EvalResult ev = evaluate(cc.circuit, gc, mine, theirs, consts);
  const BitVec out = decode(ev.outputs, map, cfg.t);

  std::size_t off = 0;
  auto take = [&](unsigned bits, bool is_signed) {
    mpz_class v = mpz_from_bits(std::span(out).subspan(off, bits), is_signed);
    off += bits;
    return v;
  };
  const mpz_class D = take(lay.d_out_bits, false);
  std::vector<mpz_class> C;
  for (unsigned i = 0; i <= d; ++i) C.push_back(take(lay.c_out_bits[i], true));

  // E[i] = delta^i + rho_i as seen by Alice
  std::vector<mpz_class> E(d + 1);
  E[0] = 1;
  E[1] = D;
  if (d >= 2) {
    std::vector<Ciphertext> pw;
    mpz_class p = 1;
    for (unsigned i = 1; i <= d; ++i) {
      p *= D;
      pw.push_back(encrypt(pk, p, prg));
      ++ops.encryptions;
    }
    detail::send_ciphertexts(ch, msg::kR2, pk, pw, ops);
    const auto masked = detail::recv_ciphertexts(ch, msg::kR3, pk, d - 1);
    for (unsigned i = 2; i <= d; ++i) {
      E[i] = decrypt(keys, masked[i - 2]);
      ++ops.decryptions;
    }
  }

  // R4
  mpz_class y_ob = 0;
  for (unsigned i = 0; i <= d; ++i) y_ob += detail::pow2(w.shift(i)) * C[i] * E[i];
  std::vector<Ciphertext> r4;
  r4.push_back(encrypt(pk, encode_signed(pk, y_ob), prg));
  for (unsigned i = 1; i <= d; ++i) r4.push_back(encrypt(pk, encode_signed(pk, -(detail::pow2(w.shift(i)) * C[i])), prg));
  if (d == 1) r4.push_back(encrypt(pk, D, prg));
  ops.encryptions += r4.size();
  detail::send_ciphertexts(ch, msg::kR4, pk, r4, ops);

  if (cfg.test_decode) {
    Bytes payload = ch.expect(msg::kTestDecode);
    ByteReader in(payload);
    const mpz_class v = decode_signed(pk, decrypt(keys, parse_ciphertext(pk, in)));
    mpz_class q;
    mpz_fdiv_q_2exp(q.get_mpz_t(), v.get_mpz_t(), w.lk);
    res.k_poly_value = v;
    res.descaled = q;
  }
  res.transcript = ch.transcript();
  res.gates = cc.total();
  res.material_bytes = gc.material.size();
  res.hashes = ev.hashes;
  return res;
}

// ---------------------------------------------------------------------------
// Running both parties in one process

enum class TransportKind { local, tcp };

struct PairResult {
  SessionResult garbler, evaluator;
};

namespace detail {

/// Runs the garbler on a second thread; a failure on either side closes both
/// channel ends so the peer unblocks, then the first error is rethrown.
template <class G, class E>
PairResult run_pair(TransportKind kind, G&& garbler, E&& evaluator) {
  std::unique_ptr<Channel> gch, ech;
  std::unique_ptr<TcpListener> listener;
  if (kind == TransportKind::local) {
    auto [a, b] = make_local_pair();
    gch = std::move(a);
    ech = std::move(b);
  } else {
    listener = std::make_unique<TcpListener>("127.0.0.1", 0);
  }
  PairResult out;
  std::exception_ptr gerr, eerr;
  std::thread th([&] {
    try {
      if (listener) gch = listener->accept();
      out.garbler = garbler(*gch);
    } catch (...) {
      gerr = std::current_exception();
      if (gch) gch->close();
    }
  });
  try {
    if (listener) ech = tcp_connect("127.0.0.1", listener->port());
    out.evaluator = evaluator(*ech);
  } catch (...) {
    eerr = std::current_exception();
    if (ech) ech->close();
  }
  th.join();
  // the side that failed first closes its end; the peer then sees a TransportError
  auto is_transport = [](const std::exception_ptr& e) {
    try {
      std::rethrow_exception(e);
    } catch (const TransportError&) {
      return true;
    } catch (...) {
      return false;
    }
  };
  if (gerr && eerr && is_transport(gerr) && !is_transport(eerr)) std::rethrow_exception(eerr);
  if (gerr) std::rethrow_exception(gerr);
  if (eerr) std::rethrow_exception(eerr);
  return out;
}

}  // namespace detail

/// Per-party generators derived from one session seed.
inline Prg garbler_prg(std::uint64_t seed) { return Prg(seed, "party:garbler"); }
inline Prg evaluator_prg(std::uint64_t seed) { return Prg(seed, "party:evaluator"); }
inline Keypair evaluator_keys(std::uint64_t seed, unsigned T) {
  Prg prg(seed, "party:evaluator:keygen");
  return keygen(T, prg, T < 256);
}

inline PairResult run_full_gc(const ApproxPlan& plan, std::uint32_t x, std::uint64_t seed, const ProtocolConfig& cfg,
                              TransportKind kind = TransportKind::local) {
  return detail::run_pair(
      kind,
      [&](Channel& ch) {
        Prg prg = garbler_prg(seed);
        return run_full_gc_garbler(plan, ch, prg, cfg);
      },
      [&](Channel& ch) {
        Prg prg = evaluator_prg(seed);
        return run_full_gc_evaluator(plan, x, ch, prg, cfg);
      });
}

inline PairResult run_hybrid(const ApproxPlan& plan, std::uint32_t x, std::uint64_t seed, const ProtocolConfig& cfg,
                             const Keypair& keys, TransportKind kind = TransportKind::local) {
  return detail::run_pair(
      kind,
      [&](Channel& ch) {
        Prg prg = garbler_prg(seed);
        return run_hybrid_garbler(plan, ch, prg, cfg);
      },
      [&](Channel& ch) {
        Prg prg = evaluator_prg(seed);
        return run_hybrid_evaluator(plan, x, ch, prg, cfg, keys);
      });
}

}  // namespace pwstpc
