#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "pwstpc/error.hpp"
#include "pwstpc/util.hpp"

namespace pwstpc {

/// A bounded real function together with the bit-lengths used to discretize it.
struct FunctionSpec {
  std::function<double(double)> evaluator;
  double xa = 0.0, xb = 1.0;  // domain [xa, xb)
  double ya = 0.0, yb = 1.0;  // codomain [ya, yb)
  unsigned lx = 8, ly = 8;

  double qx() const { return std::ldexp(1.0, static_cast<int>(lx)) / (xb - xa); }
  double qy() const { return std::ldexp(1.0, static_cast<int>(ly)) / (yb - ya); }
  /// Left edge of input cell i.
  double sample_point(std::uint64_t i) const { return static_cast<double>(i) / qx() + xa; }

  void validate() const {
    if (!evaluator) throw InvalidArgument("function spec has no evaluator");
    if (!(xa < xb)) throw InvalidArgument("domain bounds must satisfy xa < xb");
    if (!(ya < yb)) throw InvalidArgument("codomain bounds must satisfy ya < yb");
    if (lx < 2 || lx > 24) throw InvalidArgument("lx must lie in [2, 24]");
    if (ly < 2 || ly > 24) throw InvalidArgument("ly must lie in [2, 24]");
  }
};

/// The discretized function: values[i] = f^(i) over [0, 2^lx), each < 2^ly.
struct QuantizedTable {
  std::vector<std::uint32_t> values;
  unsigned lx = 0, ly = 0;
  double xa = 0, xb = 1, ya = 0, yb = 1;
  std::size_t clamped = 0;  // entries that rounded to 2^ly and were pulled down

  double qx() const { return std::ldexp(1.0, static_cast<int>(lx)) / (xb - xa); }
  double qy() const { return std::ldexp(1.0, static_cast<int>(ly)) / (yb - ya); }
  std::size_t size() const { return values.size(); }
  std::uint32_t operator[](std::size_t i) const { return values[i]; }

  void validate() const {
    if (lx < 2 || lx > 24 || ly < 2 || ly > 24) throw InvalidArgument("table bit-lengths out of range");
    if (values.size() != (std::size_t{1} << lx)) throw InvalidArgument("table length must be 2^lx");
    for (auto v : values)
      if (v >> ly) throw InvalidArgument("table entry exceeds 2^ly - 1");
    if (!(xa < xb) || !(ya < yb)) throw InvalidArgument("table bounds are not ordered");
  }
};

inline QuantizedTable quantize_function(const FunctionSpec& spec) {
  spec.validate();
  QuantizedTable t;
  t.lx = spec.lx;
  t.ly = spec.ly;
  t.xa = spec.xa;
  t.xb = spec.xb;
  t.ya = spec.ya;
  t.yb = spec.yb;
  const std::size_t n = std::size_t{1} << spec.lx;
  const long double top = static_cast<long double>((std::uint64_t{1} << spec.ly) - 1);
  const long double qy = spec.qy();
  t.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = spec.sample_point(i);
    const double y = spec.evaluator(x);
    if (!std::isfinite(y) || y < spec.ya || y >= spec.yb)
      throw CodomainViolation("f(" + std::to_string(x) + ") = " + std::to_string(y) +
                              " lies outside [" + std::to_string(spec.ya) + ", " +
                              std::to_string(spec.yb) + ")");
    long double v = round_half_up(qy * (static_cast<long double>(y) - spec.ya));
    if (v > top) {
      v = top;
      ++t.clamped;
    }
    t.values[i] = static_cast<std::uint32_t>(std::max(v, 0.0L));
  }
  return t;
}

inline double descale_output(std::uint64_t y, const QuantizedTable& table) {
  if (y >> table.ly) throw InvalidArgument("descale_output: value exceeds 2^ly - 1");
  return static_cast<double>(y) / table.qy() + table.ya;
}

inline double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

/// Sets ya/yb from the sampled minimum and maximum, leaving yb just above the maximum.
inline void fit_codomain_to_samples(FunctionSpec& spec) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  const std::uint64_t n = std::uint64_t{1} << spec.lx;
  for (std::uint64_t i = 0; i < n; ++i) {
    const double y = spec.evaluator(spec.sample_point(i));
    if (!std::isfinite(y)) throw CodomainViolation("function is not finite on the domain");
    lo = std::min(lo, y);
    hi = std::max(hi, y);
  }
  spec.ya = lo;
  spec.yb = hi + std::max(1e-9, 1e-9 * (hi - lo));
}

/// sinc on [0, 10) with the codomain fitted to the sampled range.
inline FunctionSpec sinc_spec(unsigned lx, unsigned ly) {
  FunctionSpec s;
  s.evaluator = sinc;
  s.xa = 0.0;
  s.xb = 10.0;
  s.lx = lx;
  s.ly = ly;
  fit_codomain_to_samples(s);
  return s;
}

}  // namespace pwstpc
