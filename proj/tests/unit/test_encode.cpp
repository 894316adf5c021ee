#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"

using namespace pwstpc;
using fixtures::sinc_plan;

namespace {

PartitionTree single_leaf(unsigned lx, unsigned ly, std::vector<double> coeffs) {
  PartitionTree t;
  t.lx = lx;
  t.ly = ly;
  t.degree = static_cast<unsigned>(coeffs.size() - 1);
  Segment s;
  s.width = 1u << lx;
  s.coeffs = std::move(coeffs);
  t.leaves.push_back(s);
  return t;
}

}  // namespace

TEST(Bitwidths, SincMatchesOracle) {
  const auto& w1 = sinc_plan(1).widths;
  EXPECT_EQ(w1.lv, 7u);
  EXPECT_EQ(w1.lki, (std::vector<unsigned>{0, 7}));
  EXPECT_EQ(w1.lui, (std::vector<unsigned>{9, 4}));
  EXPECT_EQ(w1.lk, 7u);
  EXPECT_EQ(w1.lp, 30u);

  const auto& w2 = sinc_plan(2).widths;
  EXPECT_EQ(w2.lv, 7u);
  EXPECT_EQ(w2.lki, (std::vector<unsigned>{1, 8, 15}));
  EXPECT_EQ(w2.lui, (std::vector<unsigned>{9, 3, 0}));
  EXPECT_EQ(w2.lp, 47u);

  const auto& w0 = sinc_plan(0).widths;
  EXPECT_EQ(w0.lp, 8u + w0.field_width(0));
  EXPECT_EQ(w0.lki, (std::vector<unsigned>{0}));
}

TEST(Bitwidths, LuIsBumpedWhenTheRoundedExtremeHitsAPowerOfTwo) {
  // 7.6 rounds to 8 = 2^3, which needs four magnitude bits
  const auto w = compute_bitwidths(single_leaf(3, 4, {7.6}));
  EXPECT_EQ(w.lui[0], 4u);
  EXPECT_NO_THROW(make_plan(single_leaf(3, 4, {7.6})));
}

TEST(Encode, PayloadLayoutIsLsbFirstTwosComplement) {
  const auto plan = make_plan(single_leaf(2, 3, {3.0, -1.0}));
  const auto& w = plan.widths;
  ASSERT_EQ(w.lv, 2u);
  ASSERT_EQ(w.lki, (std::vector<unsigned>{0, 2}));
  EXPECT_EQ(plan.int_coeffs[0][0], 3);
  EXPECT_EQ(plan.int_coeffs[0][1], -4);
  const auto& p = plan.payloads[0];
  ASSERT_EQ(p.size(), w.lp);
  EXPECT_EQ(from_bits(std::span(p).subspan(0, w.lx)), 0u);
  EXPECT_EQ(mpz_from_bits(std::span(p).subspan(w.field_offset(0), w.field_width(0)), true), 3);
  EXPECT_EQ(mpz_from_bits(std::span(p).subspan(w.field_offset(1), w.field_width(1)), true), -4);
}

TEST(Encode, ReferenceEvalExamples) {
  // 3 - x on [0,4): floor((3*4 - 4x) / 4) = 3 - x
  const auto plan = make_plan(single_leaf(2, 3, {3.0, -1.0}));
  for (std::uint64_t x = 0; x < 4; ++x) EXPECT_EQ(reference_eval(plan, x), 3 - x);
  EXPECT_THROW(reference_eval(plan, 4), InvalidArgument);

  // a slope of -2 drives x = 3 to -3, which clamps to zero
  const auto neg = make_plan(single_leaf(2, 3, {3.0, -2.0}));
  EXPECT_EQ(reference_eval_raw(neg, 3), -3);
  EXPECT_EQ(reference_eval(neg, 3), 0u);

  const auto big = make_plan(single_leaf(2, 3, {6.0, 1.0}));
  EXPECT_EQ(reference_eval_raw(big, 3), 9);
  EXPECT_EQ(reference_eval(big, 3), 7u);
}

TEST(Encode, ConstantPlanIsExactOnLeaves) {
  const auto plan = make_plan(fixtures::five_leaf_tree());
  const std::uint32_t expect[] = {1, 1, 4, 4, 7, 7, 10, 13};
  for (std::uint64_t x = 0; x < 8; ++x) EXPECT_EQ(reference_eval(plan, x), expect[x]);
}

TEST(EncodeProperty, IntegerEvalTracksRealFitOnSinc) {
  // the integer form differs from the real polynomial by rounding only: each
  // coefficient is off by at most half a unit of its own scale
  for (unsigned d = 0; d <= 3; ++d) {
    for (double eps : {0.1, 0.05, 0.01}) {
      const auto& plan = sinc_plan(d, eps);
      const auto& w = plan.widths;
      for (std::uint64_t x = 0; x < 256; ++x) {
        const auto& s = plan.tree.leaves[plan.tree.find_leaf(x)];
        const double delta = static_cast<double>(x - s.sl);
        double slack = 1.0;
        for (unsigned i = 0; i <= d; ++i) slack += std::ldexp(std::pow(delta, i), -static_cast<int>(w.lki[i]) - 1);
        const double raw = reference_eval_raw(plan, x).get_d();
        ASSERT_LE(std::fabs(raw - eval_real(plan.tree, x)), slack) << "d=" << d << " eps=" << eps << " x=" << x;
      }
    }
  }
}

TEST(EncodeProperty, CoefficientsFitTheirFields) {
  for (unsigned d = 0; d <= 3; ++d) {
    for (double eps : {0.1, 0.01, 0.005}) {
      const auto& plan = sinc_plan(d, eps, 12);
      const auto& w = plan.widths;
      EXPECT_EQ(w.lv, ceil_log2(plan.tree.max_width()));
      for (std::size_t j = 0; j < plan.leaves(); ++j) {
        const auto& p = plan.payloads[j];
        ASSERT_EQ(p.size(), w.lp);
        EXPECT_EQ(from_bits(std::span(p).subspan(0, w.lx)), plan.tree.leaves[j].sl);
        for (unsigned i = 0; i <= d; ++i) {
          ASSERT_LT(abs(plan.int_coeffs[j][i]), mpz_class(1) << (w.lui[i] + w.lki[i]));
          ASSERT_EQ(mpz_from_bits(std::span(p).subspan(w.field_offset(i), w.field_width(i)), true),
                    plan.int_coeffs[j][i]);
        }
      }
    }
  }
}

TEST(Encode, RejectsMismatchedPlan) {
  auto w = compute_bitwidths(sinc_plan(1).tree);
  w.degree = 2;
  EXPECT_THROW(quantize_coeffs(sinc_plan(1).tree, w), InvalidArgument);
  auto w1 = compute_bitwidths(sinc_plan(1).tree);
  w1.lui[0] = 2;
  EXPECT_THROW(quantize_coeffs(sinc_plan(1).tree, w1), WidthOverflow);
}
