#pragma once

#include <map>
#include <tuple>

#include "pwstpc/encode.hpp"
#include "pwstpc/partition.hpp"
#include "pwstpc/quantize.hpp"

namespace fixtures {

inline const pwstpc::QuantizedTable& sinc_table(unsigned l) {
  static std::map<unsigned, pwstpc::QuantizedTable> cache;
  auto it = cache.find(l);
  if (it == cache.end()) it = cache.emplace(l, pwstpc::quantize_function(pwstpc::sinc_spec(l, l))).first;
  return it->second;
}

inline const pwstpc::ApproxPlan& sinc_plan(unsigned d, double eps = 0.1, unsigned l = 8,
                                           pwstpc::FitKind kind = pwstpc::FitKind::plain) {
  static std::map<std::tuple<unsigned, double, unsigned, int>, pwstpc::ApproxPlan> cache;
  const auto key = std::make_tuple(d, eps, l, static_cast<int>(kind));
  auto it = cache.find(key);
  if (it == cache.end())
    it = cache.emplace(key, pwstpc::make_plan(pwstpc::bisect(sinc_table(l), d, eps, kind))).first;
  return it->second;
}

// lx = 3 tree with leaves [0,2) [2,4) [4,6) [6,7) [7,8).
inline pwstpc::PartitionTree five_leaf_tree(unsigned degree = 0) {
  pwstpc::PartitionTree t;
  t.lx = 3;
  t.ly = 4;
  t.degree = degree;
  t.eps = 0.1;
  t.threshold = 1.6;
  const std::uint32_t sl[] = {0, 2, 4, 6, 7};
  const unsigned depth[] = {2, 2, 2, 3, 3};
  for (int j = 0; j < 5; ++j) {
    pwstpc::Segment s;
    s.sl = sl[j];
    s.depth = depth[j];
    s.width = 1u << (3 - depth[j]);
    s.coeffs.assign(degree + 1, 0.0);
    s.coeffs[0] = 3.0 * j + 1;
    t.leaves.push_back(s);
  }
  return t;
}

}  // namespace fixtures
