#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pwstpc/error.hpp"
#include "pwstpc/quantize.hpp"
#include "pwstpc/util.hpp"

namespace pwstpc {

enum class FitKind { plain, continuous };

inline const char* to_string(FitKind k) { return k == FitKind::plain ? "plain" : "continuous"; }

inline FitKind fit_kind_from_string(const std::string& s) {
  if (s == "plain") return FitKind::plain;
  if (s == "continuous") return FitKind::continuous;
  throw InvalidArgument("unknown fit kind: " + s);
}

/// Polynomial in the shifted variable (x - s_l): coeffs[i] multiplies (x - s_l)^i.
struct Fit {
  std::vector<double> coeffs;
  double max_err = 0.0;
};

/// A leaf of the bisection tree: the half-open range [sl, sl + width).
struct Segment {
  std::uint32_t sl = 0;
  std::uint32_t width = 1;
  unsigned depth = 0;
  std::vector<double> coeffs;
  double max_err = 0.0;

  std::uint32_t sr() const { return sl + width; }
  bool contains(std::uint64_t x) const { return x >= sl && x < sr(); }
};

struct PartitionTree {
  std::vector<Segment> leaves;  // ascending, tiling [0, 2^lx)
  unsigned degree = 0;
  double eps = 0.0;
  double threshold = 0.0;  // eps * q_y, in codomain units
  FitKind fit = FitKind::plain;
  unsigned lx = 0, ly = 0;

  std::size_t size() const { return leaves.size(); }

  /// Index of the leaf containing x.
  std::size_t find_leaf(std::uint64_t x) const {
    auto it = std::upper_bound(leaves.begin(), leaves.end(), x,
                               [](std::uint64_t v, const Segment& s) { return v < s.sl; });
    if (it == leaves.begin() || x >> lx) throw InvalidArgument("input outside the partitioned domain");
    return static_cast<std::size_t>(std::distance(leaves.begin(), it) - 1);
  }

  std::uint32_t max_width() const {
    std::uint32_t w = 0;
    for (const auto& s : leaves) w = std::max(w, s.width);
    return w;
  }

  /// Checks tiling, alignment and depth/width consistency.
  void validate() const {
    if (leaves.empty()) throw InvalidArgument("partition has no leaves");
    std::uint64_t next = 0;
    for (const auto& s : leaves) {
      if (s.sl != next) throw InvalidArgument("leaves do not tile the domain");
      if (s.depth > lx || s.width != (std::uint32_t{1} << (lx - s.depth)))
        throw InvalidArgument("leaf width does not match its depth");
      if (s.sl % s.width) throw InvalidArgument("leaf is not aligned to its width");
      if (s.coeffs.size() != degree + 1) throw InvalidArgument("leaf has wrong coefficient count");
      next += s.width;
    }
    if (next != (std::uint64_t{1} << lx)) throw InvalidArgument("leaves do not cover the domain");
  }
};

namespace detail {

// Least-squares polynomial of degree `deg` over points at offsets 0..n-1, via
// normal equations in the scaled variable u = offset / scale.
inline std::vector<double> least_squares(std::span<const std::uint32_t> pts, unsigned deg) {
  const std::size_t n = pts.size();
  const unsigned m = deg + 1;
  const long double scale = n > 1 ? static_cast<long double>(n - 1) : 1.0L;
  std::array<long double, 7> pw_sums{};
  std::array<long double, 4> rhs{};
  for (std::size_t k = 0; k < n; ++k) {
    const long double u = static_cast<long double>(k) / scale;
    long double p = 1.0L;
    for (unsigned e = 0; e <= 2 * deg; ++e) {
      pw_sums[e] += p;
      if (e < m) rhs[e] += p * pts[k];
      p *= u;
    }
  }
  std::array<std::array<long double, 5>, 4> a{};
  for (unsigned r = 0; r < m; ++r) {
    for (unsigned c = 0; c < m; ++c) a[r][c] = pw_sums[r + c];
    a[r][m] = rhs[r];
  }
  for (unsigned col = 0; col < m; ++col) {
    unsigned piv = col;
    for (unsigned r = col + 1; r < m; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    std::swap(a[col], a[piv]);
    if (a[col][col] == 0.0L) throw Error("singular normal equations");
    for (unsigned r = 0; r < m; ++r) {
      if (r == col) continue;
      const long double f = a[r][col] / a[col][col];
      for (unsigned c = col; c <= m; ++c) a[r][c] -= f * a[col][c];
    }
  }
  std::vector<double> coeffs(m);
  long double sp = 1.0L;
  for (unsigned i = 0; i < m; ++i) {
    coeffs[i] = static_cast<double>(a[i][m] / a[i][i] / sp);
    sp *= scale;
  }
  return coeffs;
}

}  // namespace detail

/// Exact maximum absolute residual of the polynomial over the points.
inline double max_error(std::span<const std::uint32_t> pts, std::span<const double> coeffs) {
  long double worst = 0.0L;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    long double acc = 0.0L;
    for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * static_cast<long double>(k) + coeffs[i];
    worst = std::max(worst, std::fabs(acc - static_cast<long double>(pts[k])));
  }
  return static_cast<double>(worst);
}

/// Minimax constant: midpoint of the extremes.
inline Fit fit_constant(std::span<const std::uint32_t> pts) {
  if (pts.empty()) throw InvalidArgument("fit_constant: empty segment");
  auto [lo, hi] = std::minmax_element(pts.begin(), pts.end());
  const double c = (static_cast<double>(*hi) + static_cast<double>(*lo)) / 2.0;
  return {{c}, (static_cast<double>(*hi) - static_cast<double>(*lo)) / 2.0};
}

/// Least-squares polynomial of degree d; fewer than d+1 points fit the largest
/// supported degree and zero-pad the rest.
inline Fit fit_poly(std::span<const std::uint32_t> pts, unsigned d) {
  if (pts.empty()) throw InvalidArgument("fit_poly: empty segment");
  if (d > 3) throw InvalidArgument("fit_poly: degree above 3");
  const unsigned used = static_cast<unsigned>(std::min<std::size_t>(d, pts.size() - 1));
  Fit f;
  f.coeffs = detail::least_squares(pts, used);
  f.coeffs.resize(d + 1, 0.0);
  f.max_err = max_error(pts, f.coeffs);
  return f;
}

/// Least-squares line: coeffs = {q, m}.
inline Fit fit_linear(std::span<const std::uint32_t> pts) { return fit_poly(pts, 1); }

/// Line interpolating the first and last point of the segment.
inline Fit fit_continuous_linear(std::span<const std::uint32_t> pts) {
  if (pts.empty()) throw InvalidArgument("fit_continuous_linear: empty segment");
  Fit f;
  if (pts.size() == 1) {
    f.coeffs = {static_cast<double>(pts[0]), 0.0};
    return f;
  }
  const double yl = pts.front(), yr = pts.back();
  f.coeffs = {yl, (yr - yl) / static_cast<double>(pts.size() - 1)};
  f.max_err = max_error(pts, f.coeffs);
  return f;
}

/// Continuous-linear fit plus the least-squares multiple of (x - s_l)(x - s_r),
/// which vanishes at both extremes.
inline Fit fit_continuous_quadratic(std::span<const std::uint32_t> pts) {
  Fit lin = fit_continuous_linear(pts);
  const long double span_r = pts.size() > 1 ? static_cast<long double>(pts.size() - 1) : 0.0L;
  long double num = 0.0L, den = 0.0L;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const long double x = static_cast<long double>(k);
    const long double e1 = pts[k] - (lin.coeffs[0] + lin.coeffs[1] * x);
    const long double w = x * (x - span_r);
    num += e1 * w;
    den += w * w;
  }
  const long double b2 = den > 0.0L ? num / den : 0.0L;
  Fit f;
  f.coeffs = {lin.coeffs[0], static_cast<double>(lin.coeffs[1] - b2 * span_r), static_cast<double>(b2)};
  f.max_err = max_error(pts, f.coeffs);
  return f;
}

/// Dispatches to the fit named by (degree, kind).
inline Fit fit_segment(std::span<const std::uint32_t> pts, unsigned degree, FitKind kind) {
  if (kind == FitKind::continuous) {
    if (degree == 1) return fit_continuous_linear(pts);
    if (degree == 2) return fit_continuous_quadratic(pts);
    throw InvalidArgument("continuous fits support degree 1 or 2");
  }
  if (degree == 0) return fit_constant(pts);
  return fit_poly(pts, degree);
}

/// Recursive halving of the domain until every segment's fit stays within
/// eps * q_y of the table. Single-point segments are always accepted.
inline PartitionTree bisect(const QuantizedTable& table, unsigned degree, double eps,
                            FitKind kind = FitKind::plain) {
  table.validate();
  if (degree > 3) throw InvalidArgument("degree must lie in [0, 3]");
  if (kind == FitKind::continuous && (degree < 1 || degree > 2))
    throw InvalidArgument("continuous fits support degree 1 or 2");
  const double threshold = eps * table.qy();
  if (!(threshold >= 1.0))
    throw InvalidArgument("target error below one codomain quantization step (eps * q_y < 1)");

  PartitionTree tree;
  tree.degree = degree;
  tree.eps = eps;
  tree.threshold = threshold;
  tree.fit = kind;
  tree.lx = table.lx;
  tree.ly = table.ly;

  std::span<const std::uint32_t> all(table.values);
  struct Pending {
    std::uint32_t sl;
    unsigned depth;
  };
  std::vector<Pending> stack{{0, 0}};
  while (!stack.empty()) {
    const Pending cur = stack.back();
    stack.pop_back();
    const std::uint32_t width = std::uint32_t{1} << (table.lx - cur.depth);
    auto pts = all.subspan(cur.sl, width);
    Fit fit = fit_segment(pts, degree, kind);
    if (width == 1 || fit.max_err <= threshold) {
      tree.leaves.push_back({cur.sl, width, cur.depth, std::move(fit.coeffs), fit.max_err});
    } else {
      // right pushed first so the left half is emitted first
      stack.push_back({cur.sl + width / 2, cur.depth + 1});
      stack.push_back({cur.sl, cur.depth + 1});
    }
  }
  return tree;
}

/// Real-coefficient approximation at x.
inline double eval_real(const PartitionTree& tree, std::uint64_t x) {
  const Segment& s = tree.leaves[tree.find_leaf(x)];
  long double acc = 0.0L;
  const long double delta = static_cast<long double>(x - s.sl);
  for (std::size_t i = s.coeffs.size(); i-- > 0;) acc = acc * delta + s.coeffs[i];
  return static_cast<double>(acc);
}

}  // namespace pwstpc
