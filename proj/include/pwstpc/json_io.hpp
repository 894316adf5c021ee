#pragma once

#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include <json.hpp>

#include "pwstpc/encode.hpp"
#include "pwstpc/partition.hpp"
#include "pwstpc/quantize.hpp"

namespace pwstpc {

using json = nlohmann::json;

// Reals are written with 17 significant digits (nlohmann's default round-trip
// formatting), so values survive a save/load cycle bit for bit.

inline json to_json(const QuantizedTable& t) {
  return {{"lx", t.lx}, {"ly", t.ly}, {"xa", t.xa}, {"xb", t.xb}, {"ya", t.ya}, {"yb", t.yb}, {"values", t.values}};
}

inline QuantizedTable table_from_json(const json& j) {
  try {
    QuantizedTable t;
    t.lx = j.at("lx").get<unsigned>();
    t.ly = j.at("ly").get<unsigned>();
    t.xa = j.at("xa").get<double>();
    t.xb = j.at("xb").get<double>();
    t.ya = j.at("ya").get<double>();
    t.yb = j.at("yb").get<double>();
    t.values = j.at("values").get<std::vector<std::uint32_t>>();
    t.validate();
    return t;
  } catch (const json::exception& e) {
    throw FormatError(std::string("table JSON: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("table JSON: ") + e.what());
  }
}

inline json to_json(const PartitionTree& tree) {
  json leaves = json::array();
  for (const auto& s : tree.leaves)
    leaves.push_back({{"sl", s.sl}, {"depth", s.depth}, {"coeffs", s.coeffs}, {"maxErr", s.max_err}});
  return {{"degree", tree.degree}, {"eps", tree.eps},   {"threshold", tree.threshold}, {"fit", to_string(tree.fit)},
          {"lx", tree.lx},         {"ly", tree.ly},     {"leaves", leaves}};
}

inline PartitionTree tree_from_json(const json& j) {
  try {
    PartitionTree t;
    t.degree = j.at("degree").get<unsigned>();
    t.eps = j.at("eps").get<double>();
    t.threshold = j.value("threshold", 0.0);
    t.fit = fit_kind_from_string(j.value("fit", std::string("plain")));
    t.lx = j.at("lx").get<unsigned>();
    t.ly = j.at("ly").get<unsigned>();
    for (const auto& l : j.at("leaves")) {
      Segment s;
      s.sl = l.at("sl").get<std::uint32_t>();
      s.depth = l.at("depth").get<unsigned>();
      if (s.depth > t.lx) throw FormatError("leaf depth exceeds lx");
      s.width = std::uint32_t{1} << (t.lx - s.depth);
      s.coeffs = l.at("coeffs").get<std::vector<double>>();
      s.max_err = l.value("maxErr", 0.0);
      t.leaves.push_back(std::move(s));
    }
    t.validate();
    return t;
  } catch (const json::exception& e) {
    throw FormatError(std::string("partition JSON: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("partition JSON: ") + e.what());
  }
}

namespace detail {

// Integers that fit in int64 are plain JSON numbers; wider ones are decimal strings.
inline json mpz_to_json(const mpz_class& v) {
  if (v.fits_slong_p()) return static_cast<std::int64_t>(v.get_si());
  return v.get_str();
}

inline mpz_class mpz_from_json(const json& j) {
  if (j.is_number_integer()) return mpz_class(std::to_string(j.get<std::int64_t>()));
  if (j.is_string()) {
    mpz_class v;
    if (v.set_str(j.get<std::string>(), 10) != 0) throw FormatError("bad integer string in plan");
    return v;
  }
  throw FormatError("integer coefficient must be a number or a decimal string");
}

}  // namespace detail

/// A plan plus the real-valued function bounds needed to descale its outputs.
struct PlanDocument {
  ApproxPlan plan;
  std::string function;  // free-form description
  double xa = 0, xb = 1, ya = 0, yb = 1;

  double qy() const { return std::ldexp(1.0, static_cast<int>(plan.widths.ly)) / (yb - ya); }
  double descale(const mpz_class& y) const { return y.get_d() / qy() + ya; }
};

inline json to_json(const PlanDocument& doc) {
  const auto& p = doc.plan;
  const auto& w = p.widths;
  json coeffs = json::array();
  for (const auto& leaf : p.int_coeffs) {
    json row = json::array();
    for (const auto& c : leaf) row.push_back(detail::mpz_to_json(c));
    coeffs.push_back(row);
  }
  return {{"function", doc.function},
          {"xa", doc.xa},
          {"xb", doc.xb},
          {"ya", doc.ya},
          {"yb", doc.yb},
          {"tree", to_json(p.tree)},
          {"lx", w.lx},
          {"ly", w.ly},
          {"lv", w.lv},
          {"lk", w.lk},
          {"lki", w.lki},
          {"lui", w.lui},
          {"lp", w.lp},
          {"intCoeffs", coeffs}};
}

/// Rebuilds a plan; payload bit-strings are recomputed, never read.
inline PlanDocument plan_from_json(const json& j) {
  try {
    PlanDocument doc;
    doc.function = j.value("function", std::string());
    doc.xa = j.value("xa", 0.0);
    doc.xb = j.value("xb", 1.0);
    doc.ya = j.value("ya", 0.0);
    doc.yb = j.value("yb", 1.0);
    auto& p = doc.plan;
    p.tree = tree_from_json(j.at("tree"));
    auto& w = p.widths;
    w.lx = j.at("lx").get<unsigned>();
    w.ly = j.at("ly").get<unsigned>();
    w.degree = p.tree.degree;
    w.lv = j.at("lv").get<unsigned>();
    w.lk = j.at("lk").get<unsigned>();
    w.lki = j.at("lki").get<std::vector<unsigned>>();
    w.lui = j.at("lui").get<std::vector<unsigned>>();
    w.lp = j.at("lp").get<unsigned>();
    if (w.lx != p.tree.lx || w.ly != p.tree.ly) throw FormatError("plan and tree bit-lengths disagree");
    if (w.lv != ceil_log2(p.tree.max_width())) throw FormatError("lv does not match the widest leaf");
    if (w.lki.size() != w.degree + 1 || w.lui.size() != w.degree + 1) throw FormatError("width arrays have wrong length");
    for (unsigned i = 0; i <= w.degree; ++i)
      if (w.lki[i] > w.lk) throw FormatError("lki exceeds lk");
    unsigned lp = w.lx;
    for (unsigned i = 0; i <= w.degree; ++i) lp += w.field_width(i);
    if (lp != w.lp) throw FormatError("lp does not match the field widths");
    const auto& rows = j.at("intCoeffs");
    if (rows.size() != p.tree.leaves.size()) throw FormatError("intCoeffs has wrong leaf count");
    for (const auto& row : rows) {
      if (row.size() != w.degree + 1) throw FormatError("intCoeffs row has wrong length");
      std::vector<mpz_class> leaf;
      for (unsigned i = 0; i <= w.degree; ++i) {
        mpz_class v = detail::mpz_from_json(row[i]);
        if (abs(v) >= detail::pow2(w.lui[i] + w.lki[i])) throw FormatError("coefficient exceeds its field width");
        leaf.push_back(v);
      }
      p.int_coeffs.push_back(std::move(leaf));
    }
    repack_payloads(p);
    return doc;
  } catch (const json::exception& e) {
    throw FormatError(std::string("plan JSON: ") + e.what());
  }
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  out << j.dump(1) << '\n';
}

}  // namespace pwstpc
