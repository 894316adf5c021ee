#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "pwstpc/crypto.hpp"
#include "pwstpc/error.hpp"
#include "pwstpc/util.hpp"

namespace pwstpc {

enum class GateKind : std::uint8_t { Xor, Not, Table, Const };

/// Two-input gates index their truth table by 2*in0 + in1.
namespace mask {
inline constexpr std::uint8_t And = 0x8;
inline constexpr std::uint8_t AndNot = 0x4;  // in0 & !in1
inline constexpr std::uint8_t Or = 0xE;
inline constexpr std::uint8_t Xor = 0x6;
inline constexpr std::uint8_t Xnor = 0x9;
}  // namespace mask

inline bool table_bit(std::uint8_t m, bool a, bool b) { return (m >> (2 * a + b)) & 1u; }

struct Gate {
  GateKind kind = GateKind::Xor;
  std::uint8_t mask = 0;  // truth table for Table, value for Const
  std::uint32_t in0 = 0, in1 = 0, out = 0;
};

struct GateCount {
  std::size_t xor_count = 0;
  std::size_t non_xor_count = 0;
  std::size_t not_count = 0;

  GateCount& operator+=(const GateCount& o) {
    xor_count += o.xor_count;
    non_xor_count += o.non_xor_count;
    not_count += o.not_count;
    return *this;
  }
  friend GateCount operator-(GateCount a, const GateCount& b) {
    a.xor_count -= b.xor_count;
    a.non_xor_count -= b.non_xor_count;
    a.not_count -= b.not_count;
    return a;
  }
  bool operator==(const GateCount&) const = default;
};

/// Gate-list circuit. Party A (evaluator) and party B (garbler) each own an
/// ordered list of input wires; gates appear in topological order.
struct Circuit {
  std::uint32_t wire_count = 0;
  std::vector<std::uint32_t> inputs_a, inputs_b, outputs;
  std::vector<Gate> gates;

  /// Checks that every wire is driven exactly once before being read.
  void validate() const {
    std::vector<std::uint8_t> driven(wire_count, 0);
    auto drive = [&](std::uint32_t w) {
      if (w >= wire_count) throw FormatError("wire id out of range");
      if (driven[w]) throw FormatError("wire " + std::to_string(w) + " driven twice");
      driven[w] = 1;
    };
    auto read = [&](std::uint32_t w) {
      if (w >= wire_count || !driven[w]) throw FormatError("wire " + std::to_string(w) + " read before driven");
    };
    for (auto w : inputs_a) drive(w);
    for (auto w : inputs_b) drive(w);
    for (const auto& g : gates) {
      switch (g.kind) {
        case GateKind::Xor:
        case GateKind::Table:
          read(g.in0);
          read(g.in1);
          if (g.kind == GateKind::Table && g.mask == mask::Xor)
            throw FormatError("XOR must not be encoded as a table gate");
          break;
        case GateKind::Not:
          read(g.in0);
          break;
        case GateKind::Const:
          break;
      }
      drive(g.out);
    }
    for (auto w : outputs) read(w);
  }
};

inline GateCount count_gates(const Circuit& c) {
  GateCount n;
  for (const auto& g : c.gates) {
    if (g.kind == GateKind::Xor) ++n.xor_count;
    if (g.kind == GateKind::Table) ++n.non_xor_count;
    if (g.kind == GateKind::Not) ++n.not_count;
  }
  return n;
}

inline BitVec plaintext_eval(const Circuit& c, std::span<const std::uint8_t> a_bits,
                             std::span<const std::uint8_t> b_bits) {
  if (a_bits.size() != c.inputs_a.size() || b_bits.size() != c.inputs_b.size())
    throw InvalidArgument("plaintext_eval: input length mismatch");
  std::vector<std::uint8_t> v(c.wire_count, 0);
  for (std::size_t i = 0; i < a_bits.size(); ++i) v[c.inputs_a[i]] = a_bits[i] & 1u;
  for (std::size_t i = 0; i < b_bits.size(); ++i) v[c.inputs_b[i]] = b_bits[i] & 1u;
  for (const auto& g : c.gates) {
    switch (g.kind) {
      case GateKind::Xor: v[g.out] = v[g.in0] ^ v[g.in1]; break;
      case GateKind::Not: v[g.out] = v[g.in0] ^ 1u; break;
      case GateKind::Table: v[g.out] = table_bit(g.mask, v[g.in0], v[g.in1]); break;
      case GateKind::Const: v[g.out] = g.mask & 1u; break;
    }
  }
  BitVec out(c.outputs.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = v[c.outputs[i]];
  return out;
}

// Text format:
//   wires <n>
//   inputsA <k> <ids...> / inputsB <m> <ids...>
//   outputs <o> <ids...>
// followed by one gate per line: X a b out | T <mask-hex> a b out | N a out | C <0|1> out
inline void write_circuit(std::ostream& os, const Circuit& c) {
  os << "wires " << c.wire_count << '\n';
  os << "inputsA " << c.inputs_a.size();
  for (auto w : c.inputs_a) os << ' ' << w;
  os << " / inputsB " << c.inputs_b.size();
  for (auto w : c.inputs_b) os << ' ' << w;
  os << '\n' << "outputs " << c.outputs.size();
  for (auto w : c.outputs) os << ' ' << w;
  os << '\n';
  static const char* hex = "0123456789abcdef";
  for (const auto& g : c.gates) {
    switch (g.kind) {
      case GateKind::Xor: os << "X " << g.in0 << ' ' << g.in1 << ' ' << g.out << '\n'; break;
      case GateKind::Table:
        os << "T " << hex[g.mask & 0xF] << ' ' << g.in0 << ' ' << g.in1 << ' ' << g.out << '\n';
        break;
      case GateKind::Not: os << "N " << g.in0 << ' ' << g.out << '\n'; break;
      case GateKind::Const: os << "C " << int(g.mask & 1u) << ' ' << g.out << '\n'; break;
    }
  }
}

inline std::string circuit_to_text(const Circuit& c) {
  std::ostringstream os;
  write_circuit(os, c);
  return os.str();
}

inline Circuit read_circuit(std::istream& is) {
  Circuit c;
  std::string tag;
  auto expect = [&](const char* want) {
    if (!(is >> tag) || tag != want) throw FormatError(std::string("circuit header: expected '") + want + "'");
  };
  auto read_list = [&](std::vector<std::uint32_t>& out) {
    std::size_t n = 0;
    if (!(is >> n)) throw FormatError("circuit header: bad list length");
    out.resize(n);
    for (auto& w : out)
      if (!(is >> w)) throw FormatError("circuit header: bad wire id");
  };
  expect("wires");
  if (!(is >> c.wire_count)) throw FormatError("circuit header: bad wire count");
  expect("inputsA");
  read_list(c.inputs_a);
  expect("/");
  expect("inputsB");
  read_list(c.inputs_b);
  expect("outputs");
  read_list(c.outputs);
  while (is >> tag) {
    Gate g;
    if (tag == "X") {
      g.kind = GateKind::Xor;
      is >> g.in0 >> g.in1 >> g.out;
    } else if (tag == "T") {
      std::string m;
      g.kind = GateKind::Table;
      is >> m >> g.in0 >> g.in1 >> g.out;
      g.mask = static_cast<std::uint8_t>(std::stoul(m, nullptr, 16));
    } else if (tag == "N") {
      g.kind = GateKind::Not;
      is >> g.in0 >> g.out;
    } else if (tag == "C") {
      int v = 0;
      g.kind = GateKind::Const;
      is >> v >> g.out;
      g.mask = static_cast<std::uint8_t>(v & 1);
    } else {
      throw FormatError("unknown gate tag '" + tag + "'");
    }
    if (!is) throw FormatError("truncated gate line");
    c.gates.push_back(g);
  }
  c.validate();
  return c;
}

inline Circuit circuit_from_text(const std::string& text) {
  std::istringstream is(text);
  return read_circuit(is);
}

/// Identifies a circuit on the wire; both parties derive it independently.
inline Digest circuit_hash(const Circuit& c) {
  const std::string text = circuit_to_text(c);
  return Sha256().update(text).finish();
}

/// A wire reference that may also be a compile-time constant.
struct Bit {
  static constexpr std::uint32_t kZero = 0xFFFFFFFFu;
  static constexpr std::uint32_t kOne = 0xFFFFFFFEu;
  std::uint32_t id = kZero;

  static Bit zero() { return {kZero}; }
  static Bit one() { return {kOne}; }
  static Bit constant(bool v) { return v ? one() : zero(); }
  bool is_const() const { return id >= kOne; }
  bool value() const { return id == kOne; }
  bool operator==(const Bit&) const = default;
};

using Word = std::vector<Bit>;  // least significant bit first

/// Emits gates with constant folding; NOT is free and double negation cancels.
class CircuitBuilder {
 public:
  Bit input_a() {
    Bit b{c_.wire_count++};
    c_.inputs_a.push_back(b.id);
    return b;
  }
  Bit input_b() {
    Bit b{c_.wire_count++};
    c_.inputs_b.push_back(b.id);
    return b;
  }
  Word inputs_a(unsigned n) {
    Word w;
    for (unsigned i = 0; i < n; ++i) w.push_back(input_a());
    return w;
  }
  Word inputs_b(unsigned n) {
    Word w;
    for (unsigned i = 0; i < n; ++i) w.push_back(input_b());
    return w;
  }

  Bit xor_(Bit a, Bit b) {
    if (a.is_const() && b.is_const()) return Bit::constant(a.value() ^ b.value());
    if (a.is_const()) std::swap(a, b);
    if (b.is_const()) return b.value() ? not_(a) : a;
    if (a == b) return Bit::zero();
    return emit({GateKind::Xor, 0, a.id, b.id, 0});
  }

  Bit not_(Bit a) {
    if (a.is_const()) return Bit::constant(!a.value());
    if (auto it = negation_.find(a.id); it != negation_.end()) return Bit{it->second};
    Bit out = emit({GateKind::Not, 0, a.id, 0, 0});
    negation_[a.id] = out.id;
    negation_[out.id] = a.id;
    return out;
  }

  /// Arbitrary two-input gate given by its truth table.
  Bit table(std::uint8_t m, Bit a, Bit b) {
    m &= 0xF;
    if (a.is_const() && b.is_const()) return Bit::constant(table_bit(m, a.value(), b.value()));
    if (a.is_const()) return unary(table_bit(m, a.value(), false), table_bit(m, a.value(), true), b);
    if (b.is_const()) return unary(table_bit(m, false, b.value()), table_bit(m, true, b.value()), a);
    if (a == b) return unary(table_bit(m, false, false), table_bit(m, true, true), a);
    const bool dep_a = table_bit(m, 0, 0) != table_bit(m, 1, 0) || table_bit(m, 0, 1) != table_bit(m, 1, 1);
    const bool dep_b = table_bit(m, 0, 0) != table_bit(m, 0, 1) || table_bit(m, 1, 0) != table_bit(m, 1, 1);
    if (!dep_a && !dep_b) return Bit::constant(m & 1u);
    if (!dep_b) return unary(table_bit(m, 0, 0), table_bit(m, 1, 0), a);
    if (!dep_a) return unary(table_bit(m, 0, 0), table_bit(m, 0, 1), b);
    if (m == mask::Xor) return xor_(a, b);
    if (m == mask::Xnor) return not_(xor_(a, b));
    return emit({GateKind::Table, m, a.id, b.id, 0});
  }

  Bit and_(Bit a, Bit b) { return table(mask::And, a, b); }
  Bit andn(Bit a, Bit b) { return table(mask::AndNot, a, b); }
  Bit or_(Bit a, Bit b) { return table(mask::Or, a, b); }

  /// Turns a possibly-constant bit into a real wire.
  std::uint32_t materialize(Bit b) {
    if (!b.is_const()) return b.id;
    auto& slot = b.value() ? const_one_ : const_zero_;
    if (slot == Bit::kZero) slot = emit({GateKind::Const, static_cast<std::uint8_t>(b.value()), 0, 0, 0}).id;
    return slot;
  }

  void output(Bit b) { c_.outputs.push_back(materialize(b)); }
  void output(const Word& w) {
    for (auto b : w) output(b);
  }

  GateCount count() const { return count_gates(c_); }
  const Circuit& peek() const { return c_; }

  Circuit finish() {
    c_.validate();
    return std::move(c_);
  }

 private:
  Bit emit(Gate g) {
    g.out = c_.wire_count++;
    c_.gates.push_back(g);
    return Bit{g.out};
  }
  Bit unary(bool on0, bool on1, Bit x) {
    if (on0 == on1) return Bit::constant(on0);
    return on0 ? not_(x) : x;
  }

  Circuit c_;
  std::unordered_map<std::uint32_t, std::uint32_t> negation_;
  std::uint32_t const_zero_ = Bit::kZero, const_one_ = Bit::kZero;
};

}  // namespace pwstpc
