#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <gmpxx.h>

#include "pwstpc/crypto.hpp"
#include "pwstpc/error.hpp"
#include "pwstpc/partition.hpp"
#include "pwstpc/util.hpp"

namespace pwstpc {

/// Bit-width allocation for the integer form of the approximation.
///
/// Coefficient i is stored as A'_i = round(k_i * a_i) with k_i = 2^lki[i]; all
/// terms are brought to the common scale k = 2^lk by shifting left by
/// lk - lki[i] before the final truncating division by k.
struct BitWidthPlan {
  unsigned lx = 0, ly = 0, degree = 0;
  unsigned lv = 0;               // bits of the widest segment offset
  unsigned lk = 0;               // fractional bits of the top coefficient
  std::vector<unsigned> lki;     // per-degree fractional bits
  std::vector<unsigned> lui;     // per-degree magnitude bits
  unsigned lp = 0;               // payload bits per leaf

  /// Two's complement width of coefficient field i (sign + magnitude + fraction).
  unsigned field_width(unsigned i) const { return lui[i] + lki[i] + 1; }
  unsigned shift(unsigned i) const { return lk - lki[i]; }
  unsigned field_offset(unsigned i) const {
    unsigned off = lx;
    for (unsigned j = 0; j < i; ++j) off += field_width(j);
    return off;
  }
};

/// Integer-quantized approximation plan ready for circuit compilation.
struct ApproxPlan {
  PartitionTree tree;
  BitWidthPlan widths;
  std::vector<std::vector<mpz_class>> int_coeffs;  // per leaf, degree 0..d
  std::vector<BitVec> payloads;                    // per leaf, lp bits

  unsigned degree() const { return tree.degree; }
  std::size_t leaves() const { return tree.leaves.size(); }
};

namespace detail {

// round_half_up(a * 2^frac) as an exact integer.
inline mpz_class scale_and_round(double a, unsigned frac) {
  double v = std::ldexp(a, static_cast<int>(frac));
  if (std::fabs(v) < 4503599627370496.0) v = static_cast<double>(round_half_up(v));  // below 2^52
  mpz_class out;
  mpz_set_d(out.get_mpz_t(), v);
  return out;
}

inline mpz_class pow2(unsigned e) {
  mpz_class v = 1;
  v <<= e;
  return v;
}

}  // namespace detail

/// Computes the per-degree fractional and magnitude widths. `extra_fraction_bits`
/// adds the same number of fractional bits to every degree.
inline BitWidthPlan compute_bitwidths(const PartitionTree& tree, unsigned extra_fraction_bits = 0) {
  tree.validate();
  BitWidthPlan w;
  w.lx = tree.lx;
  w.ly = tree.ly;
  w.degree = tree.degree;
  w.lv = ceil_log2(tree.max_width());
  const unsigned d = tree.degree;
  const int base = static_cast<int>(ceil_log2(d + 1)) - 1;
  w.lki.resize(d + 1);
  w.lui.resize(d + 1);
  for (unsigned i = 0; i <= d; ++i) {
    const int lk = static_cast<int>(i * w.lv) + base;
    w.lki[i] = static_cast<unsigned>(std::max(lk, 0)) + extra_fraction_bits;
  }
  w.lk = w.lki[d];
  for (unsigned i = 0; i <= d; ++i) {
    double amax = 0.0;
    for (const auto& s : tree.leaves) amax = std::max(amax, std::fabs(s.coeffs[i]));
    unsigned lu = amax < 1.0 ? 0u : static_cast<unsigned>(std::ceil(std::log2(amax)));
    // ceil(log2) is one short when the rounded extreme lands exactly on a power of two
    for (;;) {
      const mpz_class bound = detail::pow2(lu + w.lki[i]);
      bool fits = true;
      for (const auto& s : tree.leaves) {
        mpz_class v = detail::scale_and_round(s.coeffs[i], w.lki[i]);
        if (abs(v) >= bound) {
          fits = false;
          break;
        }
      }
      if (fits) break;
      ++lu;
    }
    w.lui[i] = lu;
  }
  w.lp = w.lx;
  for (unsigned i = 0; i <= d; ++i) w.lp += w.field_width(i);
  return w;
}

/// Payload bit-string of one leaf: s_l (lx bits) then each coefficient field,
/// two's complement, least significant bit first.
inline BitVec pack_payload(const Segment& seg, const std::vector<mpz_class>& coeffs, const BitWidthPlan& w) {
  BitVec bits = to_bits(seg.sl, w.lx);
  for (unsigned i = 0; i <= w.degree; ++i) {
    BitVec f = mpz_to_bits(coeffs[i], w.field_width(i));
    bits.insert(bits.end(), f.begin(), f.end());
  }
  return bits;
}

/// Rounds every leaf coefficient to its integer form and packs the payloads.
inline ApproxPlan quantize_coeffs(const PartitionTree& tree, const BitWidthPlan& widths) {
  tree.validate();
  if (widths.degree != tree.degree || widths.lki.size() != tree.degree + 1)
    throw InvalidArgument("bit-width plan does not match the partition degree");
  ApproxPlan plan;
  plan.tree = tree;
  plan.widths = widths;
  for (const auto& seg : tree.leaves) {
    std::vector<mpz_class> ints(tree.degree + 1);
    for (unsigned i = 0; i <= tree.degree; ++i) {
      ints[i] = detail::scale_and_round(seg.coeffs[i], widths.lki[i]);
      if (abs(ints[i]) >= detail::pow2(widths.lui[i] + widths.lki[i]))
        throw WidthOverflow("coefficient " + std::to_string(i) + " of leaf at " + std::to_string(seg.sl) +
                            " exceeds its field width");
    }
    plan.payloads.push_back(pack_payload(seg, ints, widths));
    plan.int_coeffs.push_back(std::move(ints));
  }
  return plan;
}

inline ApproxPlan make_plan(const PartitionTree& tree) { return quantize_coeffs(tree, compute_bitwidths(tree)); }

/// Rebuilds payloads from the stored integer coefficients (used after loading).
inline void repack_payloads(ApproxPlan& plan) {
  plan.payloads.clear();
  for (std::size_t j = 0; j < plan.tree.leaves.size(); ++j)
    plan.payloads.push_back(pack_payload(plan.tree.leaves[j], plan.int_coeffs[j], plan.widths));
}

/// floor(sum_i 2^(lk - lk_i) * A'_i * delta^i / k) before clamping to the codomain.
inline mpz_class reference_eval_raw(const ApproxPlan& plan, std::uint64_t x) {
  const auto& w = plan.widths;
  if (x >> w.lx) throw InvalidArgument("reference_eval: input exceeds 2^lx - 1");
  const std::size_t j = plan.tree.find_leaf(x);
  const mpz_class delta = static_cast<unsigned long>(x - plan.tree.leaves[j].sl);
  mpz_class sum = 0, power = 1;
  for (unsigned i = 0; i <= w.degree; ++i) {
    mpz_class term = plan.int_coeffs[j][i] * power;
    term <<= w.shift(i);
    sum += term;
    power *= delta;
  }
  mpz_class out;
  mpz_fdiv_q_2exp(out.get_mpz_t(), sum.get_mpz_t(), w.lk);
  return out;
}

/// The integer approximation f~(x), clamped to [0, 2^ly).
inline std::uint32_t reference_eval(const ApproxPlan& plan, std::uint64_t x) {
  mpz_class v = reference_eval_raw(plan, x);
  const mpz_class top = detail::pow2(plan.widths.ly) - 1;
  if (v < 0) return 0;
  if (v > top) return static_cast<std::uint32_t>(top.get_ui());
  return static_cast<std::uint32_t>(v.get_ui());
}

}  // namespace pwstpc
