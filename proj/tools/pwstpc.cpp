// Command-line front end: approx, compile, run, report, selftest.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include "pwstpc/pwstpc.hpp"

using namespace pwstpc;

namespace {

enum Exit { kOk = 0, kFailure = 1, kInvalid = 2, kCodomain = 3, kTransport = 4, kMismatch = 5 };

std::string hex(std::span<const std::uint8_t> b) {
  std::ostringstream os;
  for (auto v : b) os << std::hex << std::setw(2) << std::setfill('0') << int(v);
  return os.str();
}

/// --seed wins, then PWSTPC_SEED, then 0.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("PWSTPC_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw InvalidArgument("PWSTPC_SEED is not an unsigned integer");
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct ApproxArgs {
  std::string function = "sinc";
  unsigned lx = 8;
  std::optional<unsigned> ly;
  double eps = 0.1;
  unsigned degree = 1;
  bool continuous = false;
  std::string out;
  std::string dump_table;
  std::optional<double> xa, xb, ya, yb;
};

int cmd_approx(const ApproxArgs& a) {
  QuantizedTable table;
  std::string description = a.function;
  if (a.function.rfind("table:", 0) == 0) {
    table = table_from_json(read_json_file(a.function.substr(6)));
  } else {
    FunctionSpec spec;
    spec.lx = a.lx;
    spec.ly = a.ly.value_or(a.lx);
    if (a.function == "sinc") {
      spec.evaluator = sinc;
      spec.xa = 0.0;
      spec.xb = 10.0;
    } else {
      spec.evaluator = parse_expression(a.function);
      spec.xa = 0.0;
      spec.xb = 1.0;
    }
    if (a.xa) spec.xa = *a.xa;
    if (a.xb) spec.xb = *a.xb;
    if (a.ya.has_value() != a.yb.has_value()) throw InvalidArgument("--ya and --yb must be given together");
    if (a.ya) {
      spec.ya = *a.ya;
      spec.yb = *a.yb;
    } else {
      if (!(spec.xa < spec.xb)) throw InvalidArgument("domain bounds must satisfy xa < xb");
      fit_codomain_to_samples(spec);
    }
    table = quantize_function(spec);
  }
  if (!a.dump_table.empty()) write_json_file(a.dump_table, to_json(table));

  const PartitionTree tree = bisect(table, a.degree, a.eps, a.continuous ? FitKind::continuous : FitKind::plain);
  PlanDocument doc{make_plan(tree), description, table.xa, table.xb, table.ya, table.yb};
  const auto& w = doc.plan.widths;
  if (!a.out.empty()) write_json_file(a.out, to_json(doc));

  std::cout << "N=" << tree.size() << " lv=" << w.lv << " lp=" << w.lp << '\n';
  std::cout << "degree=" << w.degree << " fit=" << to_string(tree.fit) << " lk=" << w.lk << " threshold="
            << tree.threshold << '\n';
  if (table.clamped) std::cout << "warning: " << table.clamped << " table entries clamped to 2^ly - 1\n";
  return kOk;
}

// ---------------------------------------------------------------------------

int cmd_compile(const std::string& plan_path, const std::string& out, bool hybrid, unsigned tau) {
  const PlanDocument doc = plan_from_json(read_json_file(plan_path));
  const CompiledCircuit cc = hybrid ? compile_hybrid_gc(doc.plan, tau) : compile_full_gc(doc.plan);
  if (!out.empty()) {
    std::ofstream os(out);
    if (!os) throw FormatError("cannot write " + out);
    write_circuit(os, cc.circuit);
  }
  const GateCount total = cc.total();
  std::cout << (hybrid ? "hybrid" : "full-GC") << " circuit: " << cc.circuit.wire_count << " wires, "
            << cc.circuit.inputs_a.size() << " evaluator inputs, " << cc.circuit.inputs_b.size()
            << " garbler inputs, " << cc.circuit.outputs.size() << " outputs\n";
  std::cout << std::left << std::setw(12) << "stage" << std::right << std::setw(10) << "non-XOR" << std::setw(10)
            << "XOR" << '\n';
  for (const auto& [name, c] : cc.stages)
    std::cout << std::left << std::setw(12) << name << std::right << std::setw(10) << c.non_xor_count
              << std::setw(10) << c.xor_count << '\n';
  std::cout << std::left << std::setw(12) << "total" << std::right << std::setw(10) << total.non_xor_count
            << std::setw(10) << total.xor_count << '\n';
  const auto& w = doc.plan.widths;
  if (!hybrid && w.degree > 0)
    std::cout << "Horner estimate 3d^2lv^2 - dlv^2 + 2dlvly - d^2lv/2 + dlv/2 = "
              << horner_gate_formula(w.degree, w.lv, w.ly) << '\n';
  std::cout << "non-XOR: " << total.non_xor_count << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------

struct RunArgs {
  std::string role, protocol = "gc", plan, listen, connect;
  std::optional<std::uint32_t> input;
  std::optional<std::uint64_t> seed;
  bool test_decode = false;
  unsigned t = 80, T = 1024, tau = 80;
};

void print_transcript(const Transcript& tr) {
  std::cout << "sent=" << tr.bytes(true) << " received=" << tr.bytes(false) << " messages=" << tr.messages()
            << " rounds=" << tr.rounds() << '\n';
  std::cout << "transcript=" << hex(tr.digest()) << '\n';
}

int cmd_run(const RunArgs& a) {
  const PlanDocument doc = plan_from_json(read_json_file(a.plan));
  const ApproxPlan& plan = doc.plan;
  const std::uint64_t seed = resolve_seed(a.seed);
  ProtocolConfig cfg;
  cfg.t = a.t;
  cfg.T = a.T;
  cfg.tau = a.tau;
  cfg.test_decode = a.test_decode;
  const bool hybrid = a.protocol == "hybrid";
  const bool garbler = a.role == "garbler";
  if (a.listen.empty() == a.connect.empty()) throw InvalidArgument("give exactly one of --listen or --connect");
  if (!garbler && !a.input) throw InvalidArgument("the evaluator needs --input");
  if (a.input && (*a.input >> plan.widths.lx)) throw InvalidArgument("--input exceeds 2^lx - 1");

  // key generation and the capacity check need no peer, so bad settings fail before connecting
  std::optional<Keypair> keys;
  if (hybrid && !garbler) {
    keys = evaluator_keys(seed, cfg.T);
    check_capacity(plan.widths, cfg.tau, keys->pk);
  }

  std::unique_ptr<TcpListener> listener;
  std::unique_ptr<Channel> ch;
  if (!a.listen.empty()) {
    auto [host, port] = parse_endpoint(a.listen);
    listener = std::make_unique<TcpListener>(host, port);
    std::cout << "listening on " << host << ':' << listener->port() << std::endl;
    ch = listener->accept();
  } else {
    auto [host, port] = parse_endpoint(a.connect);
    ch = tcp_connect(host, port);
  }

  if (garbler) {
    Prg prg = garbler_prg(seed);
    SessionResult r = hybrid ? run_hybrid_garbler(plan, *ch, prg, cfg) : run_full_gc_garbler(plan, *ch, prg, cfg);
    std::cout << "role=garbler protocol=" << a.protocol << " non_xor=" << r.gates.non_xor_count
              << " table_bytes=" << r.material_bytes << '\n';
    if (hybrid) std::cout << "exponentiations=" << r.he.exponentiations << '\n';
    print_transcript(r.transcript);
    return kOk;
  }

  Prg prg = evaluator_prg(seed);
  const std::uint32_t x = *a.input;
  if (!hybrid) {
    SessionResult r = run_full_gc_evaluator(plan, x, *ch, prg, cfg);
    std::cout << "role=evaluator protocol=gc x=" << x << '\n';
    print_transcript(r.transcript);
    if (!cfg.test_decode) {
      std::cout << "output held as " << r.output_labels.size() << " garbled secrets\n";
      return kOk;
    }
    const std::uint32_t expect = reference_eval(plan, x);
    std::cout << "y=" << *r.decoded << " descaled=" << std::setprecision(10) << doc.descale(*r.decoded)
              << " reference=" << expect << '\n';
    return *r.decoded == expect ? kOk : kMismatch;
  }
  SessionResult r = run_hybrid_evaluator(plan, x, *ch, prg, cfg, *keys);
  std::cout << "role=evaluator protocol=hybrid x=" << x << " encryptions=" << r.he.encryptions
            << " decryptions=" << r.he.decryptions << '\n';
  print_transcript(r.transcript);
  if (!cfg.test_decode) return kOk;
  const mpz_class expect = reference_eval_raw(plan, x);
  std::cout << "kP=" << r.k_poly_value->get_str() << " y=" << r.descaled->get_str() << " descaled=" << std::setprecision(10)
            << doc.descale(*r.descaled) << " reference=" << expect.get_str() << '\n';
  return *r.descaled == expect ? kOk : kMismatch;
}

// ---------------------------------------------------------------------------

json report_json(const ApproxPlan& plan, const CostModel& m) {
  const FullGcCost f = model_full_gc(plan, m);
  json stages = json::object();
  for (const auto& [name, g] : f.stage_gates) stages[name] = g;
  json out = {{"segments", plan.leaves()},
              {"degree", plan.degree()},
              {"params", {{"t", m.t}, {"T", m.T}, {"tau", m.tau}}},
              {"fullGc",
               {{"nonXor", f.non_xor},
                {"stages", stages},
                {"bytes", f.bytes},
                {"otOnlineBytes", f.ot_online_bytes},
                {"hashesGarbler", f.hashes_garbler},
                {"hashesEvaluator", f.hashes_evaluator},
                {"hashesTotal", f.hashes_total},
                {"rounds", 1}}}};
  if (plan.degree() >= 1) {
    const HybridCost h = model_hybrid(plan, m);
    out["hybrid"] = {{"gcNonXor", h.gc_non_xor},
                     {"gcBytes", h.gc_bytes},
                     {"garblerLabelBytes", h.garbler_label_bytes},
                     {"ciphertexts", h.ciphertexts},
                     {"heBytes", h.he_bytes},
                     {"bytes", h.bytes},
                     {"rounds", h.rounds},
                     {"exponentiations", h.exponentiations},
                     {"hashesGarbler", h.hashes_garbler},
                     {"hashesEvaluator", h.hashes_evaluator},
                     {"hashesTotal", h.hashes_total}};
  }
  return out;
}

void report_text(std::ostream& os, const json& r) {
  os << "segments N = " << r["segments"] << ", degree d = " << r["degree"] << "  (t=" << r["params"]["t"]
     << ", T=" << r["params"]["T"] << ", tau=" << r["params"]["tau"] << ")\n\n";
  const auto& f = r["fullGc"];
  os << "full-GC [1 round]\n";
  for (const auto& [name, g] : f["stages"].items()) os << "  " << std::left << std::setw(10) << name << g << " non-XOR\n";
  os << "  non-XOR total      " << f["nonXor"] << '\n'
     << "  bytes              " << f["bytes"] << '\n'
     << "  hashes             " << f["hashesTotal"] << "H (garbler " << f["hashesGarbler"] << ", evaluator "
     << f["hashesEvaluator"] << ")\n"
     << "  OT online (extra)  " << f["otOnlineBytes"] << " bytes\n";
  if (r.contains("hybrid")) {
    const auto& h = r["hybrid"];
    os << "\nhybrid [" << h["rounds"] << " rounds]\n"
       << "  GC non-XOR         " << h["gcNonXor"] << '\n'
       << "  GC bytes           " << h["gcBytes"] << '\n'
       << "  garbler labels     " << h["garblerLabelBytes"] << " bytes\n"
       << "  ciphertexts        " << h["ciphertexts"] << " (" << h["heBytes"] << " bytes)\n"
       << "  bytes              " << h["bytes"] << '\n'
       << "  computation        " << h["hashesTotal"] << "H+" << h["exponentiations"] << "E\n";
  }
}

int cmd_report(const std::string& plan_path, const std::string& format, const CostModel& m) {
  const PlanDocument doc = plan_from_json(read_json_file(plan_path));
  const json r = report_json(doc.plan, m);
  if (format == "json")
    std::cout << r.dump(2) << '\n';
  else
    report_text(std::cout, r);
  return kOk;
}

// ---------------------------------------------------------------------------

int cmd_selftest(std::uint64_t seed, bool skip_hybrid) {
  const QuantizedTable table = quantize_function(sinc_spec(8, 8));
  ProtocolConfig cfg;
  cfg.test_decode = true;
  cfg.T = 512;
  const Keypair keys = evaluator_keys(seed, cfg.T);
  for (unsigned d = 0; d <= 2; ++d) {
    const ApproxPlan plan = make_plan(bisect(table, d, 0.1));
    const CompiledCircuit cc = compile_full_gc(plan);
    for (std::uint32_t x = 0; x < 256; ++x) {
      const std::uint32_t expect = reference_eval(plan, x);
      const auto plain = from_bits(plaintext_eval(cc.circuit, to_bits(x, 8), {}));
      if (plain != expect) {
        std::cout << "FAIL plaintext d=" << d << " x=" << x << ": " << plain << " != " << expect << '\n';
        return kMismatch;
      }
      const auto r = run_full_gc(plan, x, seed, cfg);
      if (*r.evaluator.decoded != expect) {
        std::cout << "FAIL gc d=" << d << " x=" << x << ": " << *r.evaluator.decoded << " != " << expect << '\n';
        return kMismatch;
      }
    }
    std::cout << "ok gc d=" << d << " N=" << plan.leaves() << " (256 inputs)\n";
    if (d == 0 || skip_hybrid) continue;
    for (std::uint32_t x = 0; x < 256; ++x) {
      const mpz_class expect = reference_eval_raw(plan, x);
      const auto r = run_hybrid(plan, x, seed, cfg, keys);
      if (*r.evaluator.descaled != expect) {
        std::cout << "FAIL hybrid d=" << d << " x=" << x << ": " << r.evaluator.descaled->get_str()
                  << " != " << expect.get_str() << '\n';
        return kMismatch;
      }
    }
    std::cout << "ok hybrid d=" << d << " (256 inputs)\n";
  }
  std::cout << "selftest passed\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Piecewise polynomial approximation under secure two-party computation"};
  app.require_subcommand(1);

  ApproxArgs ap;
  auto* approx = app.add_subcommand("approx", "quantize a function, bisect it and write an approximation plan");
  approx->add_option("--function", ap.function, "sinc | table:FILE | expression in x")->capture_default_str();
  approx->add_option("--lx", ap.lx, "input bits")->capture_default_str();
  approx->add_option("--ly", ap.ly, "output bits (default: lx)");
  approx->add_option("--eps", ap.eps, "target error relative to the codomain")->capture_default_str();
  approx->add_option("--degree", ap.degree, "polynomial degree 0..3")->capture_default_str();
  approx->add_flag("--continuous", ap.continuous, "interpolate segment extremes (degree 1 or 2)");
  approx->add_option("--out", ap.out, "plan JSON output");
  approx->add_option("--dump-table", ap.dump_table, "also write the quantized table JSON");
  approx->add_option("--xa", ap.xa, "domain start");
  approx->add_option("--xb", ap.xb, "domain end (exclusive)");
  approx->add_option("--ya", ap.ya, "codomain start (default: sampled minimum)");
  approx->add_option("--yb", ap.yb, "codomain end, exclusive (default: just above the sampled maximum)");

  std::string plan_path, out_path, format = "text";
  bool compile_hybrid = false;
  unsigned tau = 80;
  auto* compile = app.add_subcommand("compile", "build the garbled-circuit netlist of a plan");
  compile->add_option("--plan", plan_path, "plan JSON")->required();
  compile->add_option("--out", out_path, "circuit text output");
  compile->add_flag("--hybrid", compile_hybrid, "compile the hybrid protocol's circuit instead");
  compile->add_option("--tau", tau, "obfuscation bits for --hybrid")->capture_default_str();

  RunArgs ra;
  auto* run = app.add_subcommand("run", "run one party of a protocol over TCP");
  run->add_option("--role", ra.role, "garbler | evaluator")->required()->check(CLI::IsMember({"garbler", "evaluator"}));
  run->add_option("--protocol", ra.protocol, "gc | hybrid")->check(CLI::IsMember({"gc", "hybrid"}))->capture_default_str();
  run->add_option("--plan", ra.plan, "plan JSON")->required();
  run->add_option("--listen", ra.listen, "HOST:PORT to accept the peer on");
  run->add_option("--connect", ra.connect, "HOST:PORT of the listening peer");
  run->add_option("--input", ra.input, "evaluator input x");
  run->add_option("--seed", ra.seed, "session seed (default: PWSTPC_SEED or 0)");
  run->add_flag("--test-decode", ra.test_decode, "reveal and check the result");
  run->add_option("--t", ra.t, "label bits")->capture_default_str();
  run->add_option("--T", ra.T, "Paillier modulus bits")->capture_default_str();
  run->add_option("--tau", ra.tau, "obfuscation bits")->capture_default_str();

  CostModel cm;
  auto* report = app.add_subcommand("report", "analytic communication and computation costs of a plan");
  report->add_option("--plan", plan_path, "plan JSON")->required();
  report->add_option("--format", format, "text | json")->check(CLI::IsMember({"text", "json"}))->capture_default_str();
  report->add_option("--t", cm.t, "label bits")->capture_default_str();
  report->add_option("--T", cm.T, "Paillier modulus bits")->capture_default_str();
  report->add_option("--tau", cm.tau, "obfuscation bits")->capture_default_str();

  std::optional<std::uint64_t> st_seed;
  bool skip_hybrid = false;
  auto* selftest = app.add_subcommand("selftest", "exhaustive 8-bit equivalence checks for d = 0, 1, 2");
  selftest->add_option("--seed", st_seed, "session seed (default: PWSTPC_SEED or 0)");
  selftest->add_flag("--skip-hybrid", skip_hybrid, "only run the garbled-circuit sweeps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalid;
  }

  try {
    if (*approx) return cmd_approx(ap);
    if (*compile) return cmd_compile(plan_path, out_path, compile_hybrid, tau);
    if (*run) return cmd_run(ra);
    if (*report) return cmd_report(plan_path, format, cm);
    if (*selftest) return cmd_selftest(resolve_seed(st_seed), skip_hybrid);
  } catch (const CodomainViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kCodomain;
  } catch (const TransportError& e) {
    std::cerr << "transport error: " << e.what() << '\n';
    return kTransport;
  } catch (const CircuitMismatch& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kMismatch;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return kInvalid;
  } catch (const FormatError& e) {
    std::cerr << "invalid input file: " << e.what() << '\n';
    return kInvalid;
  } catch (const CapacityExceeded& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}
