#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include <gmpxx.h>

#include "pwstpc/circuit.hpp"
#include "pwstpc/encode.hpp"
#include "pwstpc/partition.hpp"

namespace pwstpc {

// ---------------------------------------------------------------------------
// Word-level arithmetic. All words are least significant bit first.

inline Word constant_word(const mpz_class& v, unsigned width) {
  Word w(width);
  BitVec bits = mpz_to_bits(v, width);
  for (unsigned i = 0; i < width; ++i) w[i] = Bit::constant(bits[i]);
  return w;
}

inline Word zero_extend(Word w, unsigned width) {
  w.resize(width, Bit::zero());
  return w;
}

inline Word sign_extend(Word w, unsigned width) {
  const Bit sign = w.empty() ? Bit::zero() : w.back();
  w.resize(width, sign);
  return w;
}

/// a + b mod 2^w for equal-width operands; one AND per carry.
inline Word add_mod(CircuitBuilder& cb, const Word& a, const Word& b) {
  if (a.size() != b.size()) throw InvalidArgument("add_mod: operand widths differ");
  Word sum(a.size());
  Bit carry = Bit::zero();
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum[i] = cb.xor_(cb.xor_(a[i], b[i]), carry);
    if (i + 1 < a.size()) carry = cb.xor_(carry, cb.and_(cb.xor_(a[i], carry), cb.xor_(b[i], carry)));
  }
  return sum;
}

/// Low `keep` bits of x - s (ripple borrow; the sign is dropped).
inline Word sub_low(CircuitBuilder& cb, const Word& x, const Word& s, unsigned keep) {
  Word xs = zero_extend(x, keep), ss = zero_extend(s, keep);
  Word diff(keep);
  Bit borrow = Bit::zero();
  for (unsigned i = 0; i < keep; ++i) {
    diff[i] = cb.xor_(cb.xor_(xs[i], ss[i]), borrow);
    // borrow out = majority(!x, s, borrow)
    if (i + 1 < keep)
      borrow = cb.xor_(borrow, cb.and_(cb.xor_(cb.not_(xs[i]), borrow), cb.xor_(ss[i], borrow)));
  }
  return diff;
}

/// Signed v (two's complement) times unsigned delta; result has
/// v.size() + delta.size() bits. Row-by-row shift-and-add: the low bit of the
/// accumulator retires after every row, so each row costs one AND array and
/// one (w+1)-bit adder.
inline Word mul_signed_unsigned(CircuitBuilder& cb, const Word& v, const Word& delta) {
  const unsigned w = static_cast<unsigned>(v.size());
  const unsigned n = static_cast<unsigned>(delta.size());
  if (n == 0 || w == 0) return Word(w + n, Bit::zero());
  auto partial = [&](Bit d) {
    Word p(w);
    for (unsigned k = 0; k < w; ++k) p[k] = cb.and_(v[k], d);
    return p;
  };
  Word acc = partial(delta[0]);
  Word low;
  for (unsigned j = 1; j < n; ++j) {
    low.push_back(acc[0]);
    Word hi(acc.begin() + 1, acc.end());
    acc = add_mod(cb, sign_extend(hi, w + 1), sign_extend(partial(delta[j]), w + 1));
  }
  Word out = low;
  out.insert(out.end(), acc.begin(), acc.end());
  return sign_extend(out, w + n);
}

/// Unsigned product, a.size() + b.size() bits.
inline Word mul_unsigned(CircuitBuilder& cb, const Word& a, const Word& b) {
  const Word& longer = a.size() >= b.size() ? a : b;
  const Word& shorter = a.size() >= b.size() ? b : a;
  Word p = mul_signed_unsigned(cb, zero_extend(longer, static_cast<unsigned>(longer.size()) + 1), shorter);
  p.resize(a.size() + b.size());
  return p;
}

// ---------------------------------------------------------------------------
// Interval detection: one-hot leaf selector following the bisection tree.

/// Returns one wire per leaf; exactly the containing leaf's wire is 1.
/// Every non-root internal node contributes two gates, so the tree costs
/// 2(N-2) non-XOR gates.
inline Word interval_tree(CircuitBuilder& cb, const PartitionTree& tree, const Word& x) {
  Word out;
  out.reserve(tree.leaves.size());
  std::size_t next = 0;
  auto visit = [&](auto&& self, std::uint32_t sl, unsigned depth, Bit path) -> void {
    const Segment& leaf = tree.leaves.at(next);
    if (leaf.sl == sl && leaf.depth == depth) {
      out.push_back(path);
      ++next;
      return;
    }
    const Bit b = x.at(tree.lx - 1 - depth);
    const std::uint32_t half = std::uint32_t{1} << (tree.lx - depth - 1);
    self(self, sl, depth + 1, cb.andn(path, b));
    self(self, sl + half, depth + 1, cb.and_(path, b));
  };
  visit(visit, 0, 0, Bit::one());
  if (next != tree.leaves.size()) throw InvalidArgument("interval_tree: leaves do not form a bisection tree");
  return out;
}

/// XOR-only selection of the payload of the hot leaf. Columns with more
/// contributors than non-contributors use the complement, since the leaf
/// wires are one-hot.
inline Word select_params(CircuitBuilder& cb, const ApproxPlan& plan, const Word& leaf_wires) {
  const std::size_t n = leaf_wires.size();
  if (n != plan.payloads.size()) throw InvalidArgument("select_params: leaf count mismatch");
  Word out(plan.widths.lp);
  for (unsigned b = 0; b < plan.widths.lp; ++b) {
    std::vector<std::size_t> ones, zeros;
    for (std::size_t j = 0; j < n; ++j) (plan.payloads[j][b] ? ones : zeros).push_back(j);
    const bool complement = ones.size() > zeros.size();
    const auto& terms = complement ? zeros : ones;
    Bit acc = Bit::zero();
    for (auto j : terms) acc = cb.xor_(acc, leaf_wires[j]);
    out[b] = complement ? cb.not_(acc) : acc;
  }
  return out;
}

/// Slice of the selected payload holding coefficient i.
inline Word coefficient_field(const BitWidthPlan& w, const Word& payload, unsigned i) {
  const unsigned off = w.field_offset(i);
  return Word(payload.begin() + off, payload.begin() + off + w.field_width(i));
}

inline Word left_extreme_field(const BitWidthPlan& w, const Word& payload) {
  return Word(payload.begin(), payload.begin() + w.lx);
}

/// Register widths of the Horner recurrence: entry 0 holds v_0 = A_d, entry i
/// the output of block i. Each block grows by lv bits starting from d*lv + ly,
/// widened further if the plan's coefficients could exceed that.
inline std::vector<unsigned> horner_widths(const ApproxPlan& plan) {
  const auto& w = plan.widths;
  const unsigned d = w.degree;
  auto signed_bits = [](const mpz_class& bound) {
    return static_cast<unsigned>(bound == 0 ? 1 : mpz_sizeinbase(bound.get_mpz_t(), 2) + 1);
  };
  std::vector<unsigned> out(d + 1);
  for (unsigned i = 0; i <= d; ++i) {
    mpz_class bound = 0;
    for (std::size_t j = 0; j < plan.tree.leaves.size(); ++j) {
      const mpz_class dmax = static_cast<unsigned long>(plan.tree.leaves[j].width - 1);
      mpz_class sum = 0, pw = 1;
      for (unsigned m = 0; m <= i; ++m) {
        mpz_class a = abs(plan.int_coeffs[j][d - i + m]);
        a <<= w.shift(d - i + m);
        sum += a * pw;
        pw *= dmax;
      }
      if (sum > bound) bound = sum;
    }
    unsigned width = std::max((d + i) * w.lv + w.ly, signed_bits(bound));
    if (i == 0) width = std::max(width, w.field_width(d));
    out[i] = width;
  }
  return out;
}

/// Horner evaluation v_i = A_{d-i} + delta * v_{i-1}, with A_i the selected
/// coefficient shifted left by lk - lk_i (constant-zero low bits). Returns the
/// full k-amplified sum v_d in two's complement.
inline Word horner(CircuitBuilder& cb, const ApproxPlan& plan, const Word& payload, const Word& delta) {
  const auto& w = plan.widths;
  const unsigned d = w.degree;
  if (d == 0) throw InvalidArgument("horner: degree 0 plans need no evaluation stage");
  const auto widths = horner_widths(plan);
  auto scaled = [&](unsigned i, unsigned width) {
    Word a(w.shift(i), Bit::zero());
    Word f = coefficient_field(w, payload, i);
    a.insert(a.end(), f.begin(), f.end());
    return sign_extend(a, width);
  };
  Word v = scaled(d, widths[0]);
  for (unsigned i = 1; i <= d; ++i) {
    Word prod = sign_extend(mul_signed_unsigned(cb, v, delta), widths[i]);
    prod.resize(widths[i]);
    v = add_mod(cb, scaled(d - i, widths[i]), prod);
  }
  return v;
}

/// floor(v / 2^lk) clamped to [0, 2^ly).
inline Word clamp_output(CircuitBuilder& cb, const Word& v, unsigned lk, unsigned ly) {
  const std::size_t top = v.size() - 1;
  auto bit = [&](std::size_t k) { return v[std::min(k, top)]; };
  const Bit neg = v[top];
  Bit over = Bit::zero();
  for (std::size_t k = lk + ly; k < top; ++k) over = cb.or_(over, v[k]);
  Word out(ly);
  for (unsigned b = 0; b < ly; ++b) out[b] = cb.andn(cb.or_(bit(lk + b), over), neg);
  return out;
}

// ---------------------------------------------------------------------------
// Whole-protocol circuits.

struct CompiledCircuit {
  Circuit circuit;
  std::vector<std::pair<std::string, GateCount>> stages;

  GateCount stage(const std::string& name) const {
    for (const auto& [n, c] : stages)
      if (n == name) return c;
    return {};
  }
  GateCount total() const { return count_gates(circuit); }
};

namespace detail {

class StageTracker {
 public:
  explicit StageTracker(CircuitBuilder& cb) : cb_(cb), last_(cb.count()) {}
  void mark(const std::string& name, CompiledCircuit& out) {
    GateCount now = cb_.count();
    out.stages.emplace_back(name, now - last_);
    last_ = now;
  }

 private:
  CircuitBuilder& cb_;
  GateCount last_;
};

}  // namespace detail

/// Tree, selection, subtraction, Horner and clamp. The evaluator's inputs are
/// the lx bits of x; the garbler contributes only constants. Output: ly bits.
inline CompiledCircuit compile_full_gc(const ApproxPlan& plan) {
  const auto& w = plan.widths;
  CompiledCircuit out;
  CircuitBuilder cb;
  detail::StageTracker st(cb);
  Word x = cb.inputs_a(w.lx);
  Word leaves = interval_tree(cb, plan.tree, x);
  st.mark("tree", out);
  Word payload = select_params(cb, plan, leaves);
  st.mark("select", out);
  Word y;
  if (w.degree == 0) {
    y = zero_extend(coefficient_field(w, payload, 0), w.ly);
    y.resize(w.ly);
  } else {
    Word delta = sub_low(cb, x, left_extreme_field(w, payload), w.lv);
    st.mark("subtract", out);
    Word v = horner(cb, plan, payload, delta);
    st.mark("horner", out);
    y = clamp_output(cb, v, w.lk, w.ly);
    st.mark("clamp", out);
  }
  cb.output(y);
  out.circuit = cb.finish();
  return out;
}

/// Input/output layout of the garbled part of the hybrid protocol.
struct HybridLayout {
  unsigned tau = 80;
  unsigned r_bits = 0;               // obfuscation of delta
  std::vector<unsigned> ra_bits;     // obfuscation of coefficient i
  unsigned d_out_bits = 0;           // delta + r, unsigned
  std::vector<unsigned> c_out_bits;  // A'_i + r_a[i], signed

  unsigned garbler_input_bits() const {
    unsigned n = r_bits;
    for (auto b : ra_bits) n += b;
    return n;
  }
};

inline HybridLayout hybrid_layout(const BitWidthPlan& w, unsigned tau) {
  HybridLayout l;
  l.tau = tau;
  l.r_bits = w.lv + tau;
  l.d_out_bits = l.r_bits + 1;
  for (unsigned i = 0; i <= w.degree; ++i) {
    l.ra_bits.push_back(1 + w.lui[i] + i * w.lv + tau);
    l.c_out_bits.push_back(l.ra_bits.back() + 2);
  }
  return l;
}

/// Tree, selection, subtraction and the obfuscation adders. Garbler inputs:
/// r then r_a[0..d]. Outputs: delta + r, then A'_i + r_a[i] for i = 0..d.
inline CompiledCircuit compile_hybrid_gc(const ApproxPlan& plan, unsigned tau) {
  const auto& w = plan.widths;
  const HybridLayout lay = hybrid_layout(w, tau);
  CompiledCircuit out;
  CircuitBuilder cb;
  detail::StageTracker st(cb);
  Word x = cb.inputs_a(w.lx);
  Word r = cb.inputs_b(lay.r_bits);
  std::vector<Word> ra;
  for (auto bits : lay.ra_bits) ra.push_back(cb.inputs_b(bits));
  Word leaves = interval_tree(cb, plan.tree, x);
  st.mark("tree", out);
  Word payload = select_params(cb, plan, leaves);
  st.mark("select", out);
  Word delta = sub_low(cb, x, left_extreme_field(w, payload), w.lv);
  st.mark("subtract", out);
  cb.output(add_mod(cb, zero_extend(delta, lay.d_out_bits), zero_extend(r, lay.d_out_bits)));
  for (unsigned i = 0; i <= w.degree; ++i) {
    const unsigned width = lay.c_out_bits[i];
    cb.output(add_mod(cb, sign_extend(coefficient_field(w, payload, i), width), zero_extend(ra[i], width)));
  }
  st.mark("obfuscate", out);
  out.circuit = cb.finish();
  return out;
}

// ---------------------------------------------------------------------------
// Standalone circuits for the individual building blocks.

inline Circuit build_interval_tree(const PartitionTree& tree) {
  CircuitBuilder cb;
  Word x = cb.inputs_a(tree.lx);
  cb.output(interval_tree(cb, tree, x));
  return cb.finish();
}

/// Inputs: the N one-hot leaf bits. Outputs: lp payload bits.
inline Circuit build_param_select(const ApproxPlan& plan) {
  CircuitBuilder cb;
  Word leaves = cb.inputs_a(static_cast<unsigned>(plan.leaves()));
  cb.output(select_params(cb, plan, leaves));
  return cb.finish();
}

/// Inputs: x (party A), s (party B), both `width` bits. Outputs: low `keep` bits of x - s.
inline Circuit build_subtractor(unsigned width, unsigned keep) {
  CircuitBuilder cb;
  Word x = cb.inputs_a(width);
  Word s = cb.inputs_b(width);
  cb.output(sub_low(cb, x, s, keep));
  return cb.finish();
}

/// Unsigned a + b with a carry-out bit.
inline Circuit build_adder(unsigned wa, unsigned wb) {
  CircuitBuilder cb;
  Word a = cb.inputs_a(wa);
  Word b = cb.inputs_b(wb);
  const unsigned w = std::max(wa, wb) + 1;
  cb.output(add_mod(cb, zero_extend(a, w), zero_extend(b, w)));
  return cb.finish();
}

/// Unsigned a * b, wa + wb output bits.
inline Circuit build_multiplier(unsigned wa, unsigned wb) {
  CircuitBuilder cb;
  Word a = cb.inputs_a(wa);
  Word b = cb.inputs_b(wb);
  cb.output(mul_unsigned(cb, a, b));
  return cb.finish();
}

/// Inputs: payload (lp bits) then delta (lv bits), both party A.
/// Outputs: the full two's complement v_d.
inline Circuit build_horner(const ApproxPlan& plan) {
  CircuitBuilder cb;
  Word payload = cb.inputs_a(plan.widths.lp);
  Word delta = cb.inputs_a(plan.widths.lv);
  cb.output(horner(cb, plan, payload, delta));
  return cb.finish();
}

/// Closed-form estimate of the Horner stage's non-XOR gates.
inline double horner_gate_formula(unsigned d, unsigned lv, unsigned ly) {
  const double dd = d, v = lv, y = ly;
  return 3 * dd * dd * v * v - dd * v * v + 2 * dd * v * y - 0.5 * dd * dd * v + 0.5 * dd * v;
}

}  // namespace pwstpc
