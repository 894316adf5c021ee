#pragma once

#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "pwstpc/circuit.hpp"
#include "pwstpc/crypto.hpp"
#include "pwstpc/error.hpp"
#include "pwstpc/util.hpp"

namespace pwstpc {

/// A t-bit wire secret; only the first t/8 bytes are used. The permute bit is
/// the least significant bit of byte 0.
struct Label {
  std::array<std::uint8_t, 16> b{};

  bool permute() const { return b[0] & 1u; }
  Label operator^(const Label& o) const {
    Label r;
    for (std::size_t i = 0; i < b.size(); ++i) r.b[i] = b[i] ^ o.b[i];
    return r;
  }
  Label& operator^=(const Label& o) { return *this = *this ^ o; }
  bool operator==(const Label&) const = default;
};

inline unsigned label_bytes(unsigned t) { return t / 8; }

inline void check_security_bits(unsigned t) {
  if (t == 0 || t % 8 != 0 || t > 128) throw InvalidArgument("label length t must be a multiple of 8 in [8, 128]");
}

inline Label random_label(Prg& prg, unsigned t) {
  Label l;
  prg.fill(std::span(l.b.data(), label_bytes(t)));
  return l;
}

inline void put_label(Bytes& out, const Label& l, unsigned t) { out.insert(out.end(), l.b.begin(), l.b.begin() + label_bytes(t)); }

inline Label get_label(ByteReader& in, unsigned t) {
  Label l;
  auto s = in.take(label_bytes(t));
  std::copy(s.begin(), s.end(), l.b.begin());
  return l;
}

/// Gate hash: SHA-256(gate index || A || B) truncated to t bits.
inline Label gate_hash(std::uint64_t gate, const Label& a, const Label& b, unsigned t) {
  std::uint8_t buf[8 + 32];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<std::uint8_t>(gate >> (56 - 8 * i));
  const unsigned n = label_bytes(t);
  std::copy(a.b.begin(), a.b.begin() + n, buf + 8);
  std::copy(b.b.begin(), b.b.begin() + n, buf + 8 + n);
  std::uint8_t md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  if (EVP_Digest(buf, 8 + 2 * n, md, &len, EVP_sha256(), nullptr) != 1) throw Error("sha256 failed");
  Label out;
  std::copy(md, md + n, out.b.begin());
  return out;
}

using OutputTag = std::array<std::uint8_t, 8>;

inline OutputTag output_tag(std::uint64_t index, const Label& l, unsigned t) {
  Digest d = Sha256().update("out").update_u64(index).update(std::span<const std::uint8_t>(l.b.data(), label_bytes(t))).finish();
  OutputTag tag;
  std::copy(d.begin(), d.begin() + tag.size(), tag.begin());
  return tag;
}

/// Garbled tables: three t-bit rows per non-XOR gate, in circuit order.
struct GarbledCircuit {
  Digest circuit_hash{};
  unsigned t = 80;
  Bytes material;

  std::size_t row_bytes() const { return label_bytes(t); }

  Bytes serialize() const {
    Bytes out(circuit_hash.begin(), circuit_hash.end());
    out.insert(out.end(), material.begin(), material.end());
    return out;
  }
  static GarbledCircuit parse(std::span<const std::uint8_t> data, unsigned t) {
    if (data.size() < 32) throw FormatError("garbled material shorter than circuit hash");
    GarbledCircuit g;
    g.t = t;
    std::copy(data.begin(), data.begin() + 32, g.circuit_hash.begin());
    g.material.assign(data.begin() + 32, data.end());
    return g;
  }
};

/// Lets the holder turn output labels into bits and detect foreign labels.
struct DecodeMap {
  BitVec permute;
  std::vector<OutputTag> tag0, tag1;

  Bytes serialize() const {
    Bytes out;
    put_u32(out, static_cast<std::uint32_t>(permute.size()));
    for (std::size_t i = 0; i < permute.size(); ++i) {
      out.push_back(permute[i]);
      out.insert(out.end(), tag0[i].begin(), tag0[i].end());
      out.insert(out.end(), tag1[i].begin(), tag1[i].end());
    }
    return out;
  }
  static DecodeMap parse(ByteReader& in) {
    DecodeMap m;
    const std::uint32_t n = in.u32();
    for (std::uint32_t i = 0; i < n; ++i) {
      m.permute.push_back(in.u8() & 1u);
      OutputTag a, b;
      auto s0 = in.take(a.size());
      std::copy(s0.begin(), s0.end(), a.begin());
      auto s1 = in.take(b.size());
      std::copy(s1.begin(), s1.end(), b.begin());
      m.tag0.push_back(a);
      m.tag1.push_back(b);
    }
    return m;
  }
};

/// Everything the garbler keeps after garbling.
struct GarblerSecrets {
  unsigned t = 80;
  Label delta;
  std::vector<Label> zero;  // 0-label of every wire
  std::vector<std::uint32_t> const_wires;
  BitVec const_values;

  Label label(std::uint32_t wire, bool bit) const { return bit ? zero.at(wire) ^ delta : zero.at(wire); }
  std::vector<Label> const_labels() const {
    std::vector<Label> out;
    for (std::size_t i = 0; i < const_wires.size(); ++i) out.push_back(label(const_wires[i], const_values[i]));
    return out;
  }
};

struct GarbleResult {
  GarbledCircuit gc;
  GarblerSecrets secrets;
  DecodeMap decode;
  std::size_t hashes = 0;
};

/// Free-XOR with point-and-permute and three-row reduction: the row selected
/// by permute bits (0,0) is the hash itself and is never transmitted.
inline GarbleResult garble(const Circuit& c, Prg& prg, unsigned t = 80) {
  check_security_bits(t);
  GarbleResult r;
  r.gc.t = t;
  r.gc.circuit_hash = circuit_hash(c);
  auto& s = r.secrets;
  s.t = t;
  s.delta = random_label(prg, t);
  s.delta.b[0] |= 1u;
  s.zero.assign(c.wire_count, Label{});
  for (auto w : c.inputs_a) s.zero[w] = random_label(prg, t);
  for (auto w : c.inputs_b) s.zero[w] = random_label(prg, t);

  const std::size_t rb = label_bytes(t);
  std::uint64_t index = 0;
  for (const auto& g : c.gates) {
    switch (g.kind) {
      case GateKind::Xor: s.zero[g.out] = s.zero[g.in0] ^ s.zero[g.in1]; break;
      case GateKind::Not: s.zero[g.out] = s.zero[g.in0] ^ s.delta; break;
      case GateKind::Const:
        s.zero[g.out] = random_label(prg, t);
        s.const_wires.push_back(g.out);
        s.const_values.push_back(g.mask & 1u);
        break;
      case GateKind::Table: {
        const bool pa = s.zero[g.in0].permute(), pb = s.zero[g.in1].permute();
        Label rows[2][2];
        bool val[2][2];
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) {
            const bool va = i ^ pa, vb = j ^ pb;
            val[i][j] = table_bit(g.mask, va, vb);
            rows[i][j] = gate_hash(index, s.label(g.in0, va), s.label(g.in1, vb), t);
          }
        r.hashes += 4;
        const Label c0 = val[0][0] ? rows[0][0] ^ s.delta : rows[0][0];
        s.zero[g.out] = c0;
        const int order[3][2] = {{0, 1}, {1, 0}, {1, 1}};
        for (auto [i, j] : order) {
          const Label row = rows[i][j] ^ s.label(g.out, val[i][j]);
          r.gc.material.insert(r.gc.material.end(), row.b.begin(), row.b.begin() + rb);
        }
        break;
      }
    }
    if (g.kind == GateKind::Table || g.kind == GateKind::Const) ++index;
  }
  for (std::size_t i = 0; i < c.outputs.size(); ++i) {
    const std::uint32_t w = c.outputs[i];
    r.decode.permute.push_back(s.zero[w].permute());
    r.decode.tag0.push_back(output_tag(i, s.label(w, false), t));
    r.decode.tag1.push_back(output_tag(i, s.label(w, true), t));
  }
  return r;
}

inline GarbleResult garble(const Circuit& c, std::uint64_t seed, unsigned t = 80) {
  Prg prg(seed, "garble");
  return garble(c, prg, t);
}

struct EvalResult {
  std::vector<Label> outputs;
  std::size_t hashes = 0;
};

/// Evaluates with one active label per input wire of each party and one per
/// constant gate (in gate order).
inline EvalResult evaluate(const Circuit& c, const GarbledCircuit& gc, std::span<const Label> a_labels,
                           std::span<const Label> b_labels, std::span<const Label> const_labels) {
  if (gc.circuit_hash != circuit_hash(c)) throw CircuitMismatch("garbled material belongs to a different circuit");
  if (a_labels.size() != c.inputs_a.size() || b_labels.size() != c.inputs_b.size())
    throw InvalidArgument("evaluate: input label count mismatch");
  const unsigned t = gc.t;
  const std::size_t rb = label_bytes(t);
  const std::size_t tables = count_gates(c).non_xor_count;
  if (gc.material.size() != tables * 3 * rb) throw FormatError("garbled material has the wrong size");

  EvalResult r;
  std::vector<Label> v(c.wire_count);
  for (std::size_t i = 0; i < a_labels.size(); ++i) v[c.inputs_a[i]] = a_labels[i];
  for (std::size_t i = 0; i < b_labels.size(); ++i) v[c.inputs_b[i]] = b_labels[i];
  std::size_t next_const = 0, next_row = 0;
  std::uint64_t index = 0;
  for (const auto& g : c.gates) {
    switch (g.kind) {
      case GateKind::Xor: v[g.out] = v[g.in0] ^ v[g.in1]; break;
      case GateKind::Not: v[g.out] = v[g.in0]; break;
      case GateKind::Const:
        if (next_const >= const_labels.size()) throw InvalidArgument("evaluate: missing constant labels");
        v[g.out] = const_labels[next_const++];
        ++index;
        break;
      case GateKind::Table: {
        const Label& a = v[g.in0];
        const Label& b = v[g.in1];
        Label out = gate_hash(index, a, b, t);
        ++r.hashes;
        const int sel = 2 * a.permute() + b.permute();
        if (sel != 0) {
          const std::uint8_t* row = gc.material.data() + (next_row + sel - 1) * rb;
          for (std::size_t k = 0; k < rb; ++k) out.b[k] ^= row[k];
        }
        next_row += 3;
        v[g.out] = out;
        ++index;
        break;
      }
    }
  }
  if (next_const != const_labels.size()) throw InvalidArgument("evaluate: surplus constant labels");
  for (auto w : c.outputs) r.outputs.push_back(v[w]);
  return r;
}

/// Recovers output bits; a label matching neither tag means the material or
/// the labels were corrupted.
inline BitVec decode(std::span<const Label> outputs, const DecodeMap& map, unsigned t) {
  if (outputs.size() != map.permute.size()) throw InvalidArgument("decode: output count mismatch");
  BitVec bits(outputs.size());
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const bool bit = outputs[i].permute() ^ map.permute[i];
    const OutputTag tag = output_tag(i, outputs[i], t);
    if (tag != (bit ? map.tag1[i] : map.tag0[i]))
      throw RowAuthFailure("output label " + std::to_string(i) + " does not authenticate");
    bits[i] = bit;
  }
  return bits;
}

}  // namespace pwstpc
