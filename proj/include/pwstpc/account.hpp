#pragma once

#include <cstdint>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "pwstpc/builders.hpp"
#include "pwstpc/encode.hpp"
#include "pwstpc/protocol.hpp"

namespace pwstpc {

/// Security parameters and the per-primitive costs charged by the model.
struct CostModel {
  unsigned t = 80;    // symmetric security / label bits
  unsigned T = 1024;  // Paillier modulus bits
  unsigned tau = 80;  // statistical obfuscation bits

  double gc_bits_per_gate() const { return 3.0 * t; }
  double ot_online_bits() const { return 2.0 * t; }
  double ot_offline_bits() const { return 6.0 * t; }
  double he_to_gc_bits(unsigned l) const { return 2.0 * T + 7.0 * l * t; }
  double gc_to_he_bits(unsigned l) const { return 2.0 * T + (l + tau) * 5.0 * t; }
  double garbler_hashes_per_gate() const { return 3.0; }
  double evaluator_hashes_per_gate() const { return 0.75; }
  std::size_t ciphertext_bytes() const { return 2 * T / 8; }
};

struct FullGcCost {
  std::vector<std::pair<std::string, std::size_t>> stage_gates;  // non-XOR gates per stage
  std::size_t non_xor = 0;
  std::size_t bytes = 0;  // garbled tables only
  double hashes_garbler = 0, hashes_evaluator = 0;
  std::size_t hashes_total = 0;  // rounded up
  double ot_online_bytes = 0;    // evaluator input, reported apart from the tables
};

inline FullGcCost model_full_gc(const CompiledCircuit& cc, unsigned lx, const CostModel& m = {}) {
  FullGcCost c;
  for (const auto& [name, gc] : cc.stages) c.stage_gates.emplace_back(name, gc.non_xor_count);
  c.non_xor = cc.total().non_xor_count;
  c.bytes = 3 * m.t * c.non_xor / 8;
  c.hashes_garbler = m.garbler_hashes_per_gate() * c.non_xor;
  c.hashes_evaluator = m.evaluator_hashes_per_gate() * c.non_xor;
  c.hashes_total = (15 * c.non_xor + 3) / 4;  // ceil(3.75 g)
  c.ot_online_bytes = lx * m.ot_online_bits() / 8;
  return c;
}

inline FullGcCost model_full_gc(const ApproxPlan& plan, const CostModel& m = {}) {
  return model_full_gc(compile_full_gc(plan), plan.widths.lx, m);
}

struct HybridCost {
  unsigned degree = 0;
  std::size_t gc_non_xor = 0;
  std::size_t gc_bytes = 0;            // garbled tables
  std::size_t garbler_input_bits = 0;  // r and r_a
  std::size_t garbler_label_bytes = 0;
  std::size_t ciphertexts = 0;
  std::size_t he_bytes = 0;
  std::size_t bytes = 0;  // tables + garbler labels + ciphertexts
  unsigned rounds = 0;

  // homomorphic work
  std::size_t power_encryptions = 0;    // Alice, [[(delta + r)^i]]
  std::size_t power_deobfuscation = 0;  // Bob, binomial chain
  std::size_t decryptions = 0;          // Alice, masked powers
  std::size_t param_encryptions = 0;    // Alice, y_ob and the C_i terms
  std::size_t final_exponentiations = 0;
  std::size_t exponentiations = 0;

  double hashes_garbler = 0, hashes_evaluator = 0;
  std::size_t hashes_total = 0;
};

inline HybridCost model_hybrid(const ApproxPlan& plan, const CostModel& m = {}) {
  const auto& w = plan.widths;
  const unsigned d = w.degree;
  if (d == 0) throw InvalidArgument("the hybrid protocol needs a degree >= 1 plan");
  HybridCost c;
  c.degree = d;
  c.gc_non_xor = compile_hybrid_gc(plan, m.tau).total().non_xor_count;
  c.gc_bytes = 3 * m.t * c.gc_non_xor / 8;
  c.garbler_input_bits = hybrid_layout(w, m.tau).garbler_input_bits();
  c.garbler_label_bytes = c.garbler_input_bits * m.t / 8;
  c.ciphertexts = d == 1 ? 3 : 3 * d;
  c.he_bytes = c.ciphertexts * m.ciphertext_bytes();
  c.bytes = c.gc_bytes + c.garbler_label_bytes + c.he_bytes;
  c.rounds = d == 1 ? 2 : 4;

  c.power_encryptions = d;
  c.power_deobfuscation = d * (d - 1) / 2;
  c.decryptions = d - 1;
  c.param_encryptions = d + 1;
  c.final_exponentiations = 2 * d;
  c.exponentiations =
      c.power_encryptions + c.power_deobfuscation + c.decryptions + c.param_encryptions + c.final_exponentiations;

  const std::size_t n = plan.leaves();
  double gates = 2.0 * (n >= 2 ? n - 2 : 0) + w.lx;
  for (unsigned i = 0; i <= d; ++i) gates += (i + 1) * w.lv + m.tau;
  c.hashes_garbler = 3.0 * gates;
  c.hashes_evaluator = c.hashes_garbler / 4.0;
  c.hashes_total = static_cast<std::size_t>(std::llround(c.hashes_garbler + c.hashes_evaluator));
  return c;
}

/// One line of a measured-versus-model comparison.
struct CostLine {
  std::string item;
  double measured = 0;
  double model = 0;
  bool in_model = true;  // false: implementation overhead the model does not charge
  double delta() const { return measured - model; }
};

struct CostComparison {
  std::vector<CostLine> lines;

  const CostLine* find(const std::string& item) const {
    for (const auto& l : lines)
      if (l.item == item) return &l;
    return nullptr;
  }

  std::string to_text() const {
    std::ostringstream os;
    os << std::left << std::setw(34) << "item" << std::right << std::setw(12) << "measured" << std::setw(12)
       << "model" << std::setw(12) << "delta" << '\n';
    for (const auto& l : lines) {
      os << std::left << std::setw(34) << l.item << std::right << std::setw(12) << l.measured;
      if (l.in_model)
        os << std::setw(12) << l.model << std::setw(12) << l.delta();
      else
        os << std::setw(12) << "-" << std::setw(12) << "(extra)";
      os << '\n';
    }
    return os.str();
  }
};

namespace detail {

inline void add_transport_lines(CostComparison& r, const Transcript& g) {
  r.lines.push_back({"circuit hash bytes", double(g.payload_bytes_of(msg::kCircuit)), 0, false});
  r.lines.push_back({"OT bytes (base OT)", double(g.payload_bytes_of(msg::kOt)), 0, false});
  r.lines.push_back({"test-decode bytes", double(g.payload_bytes_of(msg::kTestDecode)), 0, false});
  r.lines.push_back({"framing bytes", double(g.messages() * kFrameHeader), 0, false});
  r.lines.push_back({"total bytes both directions", double(g.bytes(true) + g.bytes(false)), 0, false});
}

}  // namespace detail

/// Compares a finished full-GC session (garbler's view) with the model.
inline CostComparison compare_measured(const SessionResult& garbler, const FullGcCost& model) {
  CostComparison r;
  const Transcript& g = garbler.transcript;
  const double material = double(g.payload_bytes_of(msg::kGarbled)) - 32;  // minus the circuit hash prefix
  r.lines.push_back({"garbled table bytes", material, double(model.bytes)});
  r.lines.push_back({"non-XOR gates", double(garbler.gates.non_xor_count), double(model.non_xor)});
  r.lines.push_back({"garbler hashes (4 per gate, GRR3)", double(garbler.hashes), model.hashes_garbler, true});
  r.lines.push_back({"constant-label bytes", double(g.payload_bytes_of(msg::kLabels)), 0, false});
  detail::add_transport_lines(r, g);
  r.lines.push_back({"rounds", double(g.rounds()), 1});
  return r;
}

/// Compares a finished hybrid session (garbler's view) with the model.
inline CostComparison compare_measured(const SessionResult& garbler, const HybridCost& model, const CostModel& m,
                                       const SessionResult* evaluator = nullptr) {
  CostComparison r;
  const Transcript& g = garbler.transcript;
  const double material = double(g.payload_bytes_of(msg::kGarbled)) - 32;
  r.lines.push_back({"garbled table bytes", material, double(model.gc_bytes)});
  const double ct_bytes = double(g.payload_bytes_of(msg::kR2) + g.payload_bytes_of(msg::kR3) +
                                 g.payload_bytes_of(msg::kR4));
  r.lines.push_back({"ciphertext bytes", ct_bytes, double(model.he_bytes)});
  r.lines.push_back({"ciphertexts", ct_bytes / double(m.ciphertext_bytes()), double(model.ciphertexts)});
  const double const_bytes = double(garbler.const_labels * label_bytes(m.t));
  r.lines.push_back({"garbler input label bytes", double(g.payload_bytes_of(msg::kLabels)) - 8 - const_bytes,
                     double(model.garbler_label_bytes)});
  r.lines.push_back({"constant-label bytes", const_bytes, 0, false});
  r.lines.push_back({"output decode map bytes", double(g.payload_bytes_of(msg::kR1)), 0, false});
  r.lines.push_back({"public key bytes", double(g.payload_bytes_of(msg::kPublicKey)), 0, false});
  detail::add_transport_lines(r, g);
  r.lines.push_back({"rounds", double(g.rounds()), double(model.rounds)});
  std::size_t exps = garbler.he.exponentiations;
  if (evaluator) exps += evaluator->he.encryptions + evaluator->he.decryptions + evaluator->he.exponentiations;
  if (evaluator)
    r.lines.push_back({"exponentiations", double(exps), double(model.exponentiations)});
  r.lines.push_back({"rerandomizations", double(garbler.he.rerandomizations), 0, false});
  return r;
}

}  // namespace pwstpc
