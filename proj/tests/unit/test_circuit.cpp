#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "pwstpc/builders.hpp"

using namespace pwstpc;
using fixtures::sinc_plan;

namespace {

std::uint64_t eval_u(const Circuit& c, std::uint64_t a, std::uint64_t b = 0) {
  const auto out = plaintext_eval(c, to_bits(a, static_cast<unsigned>(c.inputs_a.size())),
                                  to_bits(b, static_cast<unsigned>(c.inputs_b.size())));
  return from_bits(out);
}

}  // namespace

TEST(CircuitBuilder, FoldsConstantsAndKeepsXorFree) {
  CircuitBuilder cb;
  Bit a = cb.input_a(), b = cb.input_b();
  EXPECT_TRUE(cb.and_(a, Bit::zero()).is_const());
  EXPECT_EQ(cb.and_(a, Bit::one()).id, a.id);
  EXPECT_EQ(cb.xor_(a, Bit::zero()).id, a.id);
  Bit x = cb.xor_(a, b);
  Bit n = cb.not_(x);
  Bit t = cb.or_(a, n);
  cb.output(t);
  const auto c = cb.finish();
  EXPECT_NO_THROW(c.validate());
  const auto g = count_gates(c);
  EXPECT_EQ(g.xor_count, 1u);
  EXPECT_EQ(g.not_count, 1u);
  EXPECT_EQ(g.non_xor_count, 1u);
  for (int ab = 0; ab < 4; ++ab) {
    const bool va = ab & 1, vb = ab >> 1;
    EXPECT_EQ(plaintext_eval(c, BitVec{va}, BitVec{vb})[0], va || !(va ^ vb));
  }
}

TEST(CircuitText, RoundTrip) {
  const auto& plan = sinc_plan(1);
  const auto cc = compile_full_gc(plan);
  const auto text = circuit_to_text(cc.circuit);
  const auto back = circuit_from_text(text);
  EXPECT_EQ(circuit_to_text(back), text);
  EXPECT_EQ(circuit_hash(back), circuit_hash(cc.circuit));
  EXPECT_THROW(circuit_from_text("wires 2\ninputsA 1 0\ninputsB 0\noutputs 1 1\nQ 0 1\n"), FormatError);
}

TEST(CircuitValidate, DetectsDoubleDrive) {
  Circuit c;
  c.wire_count = 2;
  c.inputs_a = {0};
  c.gates.push_back({GateKind::Not, 0, 0, 0, 0});
  EXPECT_THROW(c.validate(), FormatError);
}

TEST(IntervalTree, FiveLeafTreeCostsSixGates) {
  const auto tree = fixtures::five_leaf_tree();
  const auto c = build_interval_tree(tree);
  EXPECT_EQ(count_gates(c).non_xor_count, 6u);
  for (std::uint64_t x = 0; x < 8; ++x) {
    const auto out = plaintext_eval(c, to_bits(x, 3), {});
    for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(out[j], tree.leaves[j].contains(x) ? 1 : 0) << x << ' ' << j;
  }
}

TEST(IntervalTree, OneHotAndTwoNMinusTwoOnSinc) {
  for (unsigned d = 0; d <= 3; ++d) {
    for (double eps : {0.1, 0.05, 0.01}) {
      const auto& tree = sinc_plan(d, eps).tree;
      const auto c = build_interval_tree(tree);
      EXPECT_EQ(count_gates(c).non_xor_count, 2 * (tree.size() - 2)) << d << ' ' << eps;
      for (std::uint64_t x = 0; x < 256; ++x) {
        const auto out = plaintext_eval(c, to_bits(x, 8), {});
        std::size_t hot = 0;
        for (auto v : out) hot += v;
        ASSERT_EQ(hot, 1u);
        ASSERT_EQ(out[tree.find_leaf(x)], 1);
      }
    }
  }
}

TEST(ParamSelect, XorOnlyAndSelectsHotPayload) {
  for (unsigned d = 0; d <= 2; ++d) {
    const auto& plan = sinc_plan(d, 0.05);
    const auto c = build_param_select(plan);
    EXPECT_EQ(count_gates(c).non_xor_count, 0u);
    for (std::size_t j = 0; j < plan.leaves(); ++j) {
      BitVec onehot(plan.leaves(), 0);
      onehot[j] = 1;
      EXPECT_EQ(plaintext_eval(c, onehot, {}), plan.payloads[j]);
    }
  }
}

TEST(Subtractor, LowBitsOfDifference) {
  const auto c = build_subtractor(8, 5);
  EXPECT_EQ(count_gates(c).non_xor_count, 4u);
  std::mt19937_64 rng(7);
  for (int k = 0; k < 1000; ++k) {
    const std::uint64_t s = rng() & 0xE0, x = s + (rng() & 31);
    ASSERT_EQ(eval_u(c, x, s), x - s);
  }
}

TEST(Adder, RandomCases) {
  for (auto [wa, wb] : {std::pair{8u, 8u}, {16u, 9u}, {5u, 31u}}) {
    const auto c = build_adder(wa, wb);
    EXPECT_EQ(count_gates(c).non_xor_count, std::max(wa, wb));
    std::mt19937_64 rng(wa * 100 + wb);
    for (int k = 0; k < 1000; ++k) {
      const std::uint64_t a = rng() & ((1ull << wa) - 1), b = rng() & ((1ull << wb) - 1);
      ASSERT_EQ(eval_u(c, a, b), a + b);
    }
  }
}

TEST(Multiplier, RandomCases) {
  for (auto [wa, wb] : {std::pair{8u, 8u}, {12u, 5u}, {3u, 20u}}) {
    const auto c = build_multiplier(wa, wb);
    std::mt19937_64 rng(wa * 100 + wb);
    for (int k = 0; k < 1000; ++k) {
      const std::uint64_t a = rng() & ((1ull << wa) - 1), b = rng() & ((1ull << wb) - 1);
      ASSERT_EQ(eval_u(c, a, b), a * b);
    }
  }
}

TEST(Multiplier, SignedByUnsignedRowCost) {
  CircuitBuilder cb;
  Word v = cb.inputs_a(10), dl = cb.inputs_b(6);
  cb.output(mul_signed_unsigned(cb, v, dl));
  const auto c = cb.finish();
  // n rows of w ANDs plus (n-1) w-bit signed adders
  EXPECT_EQ(count_gates(c).non_xor_count, (2u * 6 - 1) * 10);
  std::mt19937_64 rng(3);
  for (int k = 0; k < 1000; ++k) {
    const std::int64_t a = static_cast<std::int64_t>(rng() % 1024) - 512;
    const std::uint64_t b = rng() & 63;
    const auto out = plaintext_eval(c, to_bits(static_cast<std::uint64_t>(a) & 1023, 10), to_bits(b, 6));
    ASSERT_EQ(from_bits_signed(out), a * static_cast<std::int64_t>(b));
  }
}

TEST(Horner, MatchesIntegerPolynomialOnEveryLeaf) {
  for (unsigned d = 1; d <= 3; ++d) {
    const auto& plan = sinc_plan(d, 0.05);
    const auto& w = plan.widths;
    const auto c = build_horner(plan);
    for (std::size_t j = 0; j < plan.leaves(); ++j) {
      const auto& s = plan.tree.leaves[j];
      for (std::uint32_t delta = 0; delta < s.width; ++delta) {
        BitVec in = plan.payloads[j];
        const auto db = to_bits(delta, w.lv);
        in.insert(in.end(), db.begin(), db.end());
        mpz_class expect = 0, power = 1;
        for (unsigned i = 0; i <= d; ++i) {
          expect += (plan.int_coeffs[j][i] << w.shift(i)) * power;
          power *= delta;
        }
        ASSERT_EQ(mpz_from_bits(plaintext_eval(c, in, {}), true), expect) << "d=" << d << " leaf=" << j;
      }
    }
  }
}

TEST(Horner, GateCountNearFormula) {
  for (unsigned d = 1; d <= 2; ++d) {
    const auto& plan = sinc_plan(d);
    const double n = static_cast<double>(count_gates(build_horner(plan)).non_xor_count);
    const double f = horner_gate_formula(d, plan.widths.lv, plan.widths.ly);
    EXPECT_LE(std::fabs(n - f), 0.15 * f) << "d=" << d;
  }
  EXPECT_DOUBLE_EQ(horner_gate_formula(1, 7, 8), 210.0);
  EXPECT_DOUBLE_EQ(horner_gate_formula(2, 7, 8), 707.0);
}

TEST(FullGc, MeasuredStageCounts) {
  // sinc l = 8, eps = 0.1
  const auto c0 = compile_full_gc(sinc_plan(0));
  EXPECT_EQ(c0.stage("tree").non_xor_count, 22u);
  EXPECT_EQ(c0.stage("select").non_xor_count, 0u);
  EXPECT_EQ(c0.total().non_xor_count, 22u);

  const auto c1 = compile_full_gc(sinc_plan(1));
  EXPECT_EQ(c1.stage("tree").non_xor_count, 8u);
  EXPECT_EQ(c1.stage("subtract").non_xor_count, 2u);
  EXPECT_EQ(c1.stage("horner").non_xor_count, 209u);
  EXPECT_EQ(c1.stage("clamp").non_xor_count, 21u);
  EXPECT_EQ(c1.total().non_xor_count, 240u);

  const auto c2 = compile_full_gc(sinc_plan(2));
  EXPECT_EQ(c2.stage("tree").non_xor_count, 6u);
  EXPECT_EQ(c2.stage("horner").non_xor_count, 684u);
  EXPECT_EQ(c2.total().non_xor_count, 718u);
}

TEST(FullGc, PlaintextEqualsReferenceEverywhere) {
  for (unsigned d = 0; d <= 3; ++d) {
    for (double eps : {0.1, 0.05}) {
      for (auto kind : {FitKind::plain, FitKind::continuous}) {
        if (kind == FitKind::continuous && (d == 0 || d == 3)) continue;
        const auto& plan = sinc_plan(d, eps, 8, kind);
        const auto cc = compile_full_gc(plan);
        EXPECT_NO_THROW(cc.circuit.validate());
        ASSERT_EQ(cc.circuit.outputs.size(), 8u);
        for (std::uint64_t x = 0; x < 256; ++x)
          ASSERT_EQ(eval_u(cc.circuit, x), reference_eval(plan, x)) << "d=" << d << " eps=" << eps << " x=" << x;
      }
    }
  }
}

TEST(FullGc, ClampHandlesOutOfRangeValues) {
  PartitionTree t;
  t.lx = 3;
  t.ly = 3;
  t.degree = 1;
  Segment s;
  s.width = 8;
  s.coeffs = {3.0, -1.0};
  t.leaves.push_back(s);
  auto plan = make_plan(t);
  auto cc = compile_full_gc(plan);
  for (std::uint64_t x = 0; x < 8; ++x) EXPECT_EQ(eval_u(cc.circuit, x), reference_eval(plan, x));
  t.leaves[0].coeffs = {4.0, 1.0};
  plan = make_plan(t);
  cc = compile_full_gc(plan);
  for (std::uint64_t x = 0; x < 8; ++x) EXPECT_EQ(eval_u(cc.circuit, x), std::min<std::uint64_t>(4 + x, 7));
}

TEST(HybridGc, OutputsObfuscatedValues) {
  const unsigned tau = 16;
  for (unsigned d = 1; d <= 2; ++d) {
    const auto& plan = sinc_plan(d);
    const auto lay = hybrid_layout(plan.widths, tau);
    const auto cc = compile_hybrid_gc(plan, tau);
    EXPECT_EQ(cc.circuit.inputs_b.size(), lay.garbler_input_bits());
    std::mt19937_64 rng(d);
    for (int k = 0; k < 64; ++k) {
      const std::uint64_t x = rng() & 255;
      BitVec b;
      mpz_class r = static_cast<unsigned long>(rng() & ((1ull << lay.r_bits) - 1));
      auto rb = mpz_to_bits(r, lay.r_bits);
      b.insert(b.end(), rb.begin(), rb.end());
      std::vector<mpz_class> ra;
      for (unsigned i = 0; i <= d; ++i) {
        mpz_class v = static_cast<unsigned long>(rng() & ((1ull << std::min(lay.ra_bits[i], 63u)) - 1));
        auto bits = mpz_to_bits(v, lay.ra_bits[i]);
        b.insert(b.end(), bits.begin(), bits.end());
        ra.push_back(v);
      }
      const auto out = plaintext_eval(cc.circuit, to_bits(x, 8), b);
      const std::size_t j = plan.tree.find_leaf(x);
      std::size_t off = 0;
      EXPECT_EQ(mpz_from_bits(std::span(out).subspan(0, lay.d_out_bits), false),
                r + static_cast<unsigned long>(x - plan.tree.leaves[j].sl));
      off += lay.d_out_bits;
      for (unsigned i = 0; i <= d; ++i) {
        EXPECT_EQ(mpz_from_bits(std::span(out).subspan(off, lay.c_out_bits[i]), true), plan.int_coeffs[j][i] + ra[i]);
        off += lay.c_out_bits[i];
      }
    }
  }
}
