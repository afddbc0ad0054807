#include "cli.hpp"

#include "behc/capacity.hpp"
#include "behc/model.hpp"
#include "behc/noisy.hpp"
#include "behc/program.hpp"
#include "behc/qgraph.hpp"
#include "behc/record.hpp"
#include "behc/solver.hpp"
#include "behc/verify.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace behc {
namespace cli {

namespace {

int env_threads() {
  const char* raw = std::getenv("THREADS");
  if (raw == nullptr) return 0;
  const int t = std::atoi(raw);
  return t > 0 ? t : 0;
}

void emit(const OutputRecord& rec, bool json, std::ostream& out) {
  if (json)
    out << rec.structured() << '\n';
  else
    out << rec.text();
}

std::string join_notes(const std::vector<std::string>& notes) {
  std::string out;
  for (const std::string& n : notes) {
    if (!out.empty()) out += "; ";
    out += n;
  }
  return out;
}

std::vector<double> parse_etas(const std::string& spec) {
  const auto c1 = spec.find(':');
  if (c1 == std::string::npos) return {std::stod(spec)};
  const auto c2 = spec.find(':', c1 + 1);
  if (c2 == std::string::npos)
    throw std::invalid_argument("--etas expects a value or START:STOP:STEP");
  const double start = std::stod(spec.substr(0, c1));
  const double stop = std::stod(spec.substr(c1 + 1, c2 - c1 - 1));
  const double step = std::stod(spec.substr(c2 + 1));
  if (!(step > 0.0) || stop < start - 1e-12)
    throw std::invalid_argument("--etas expects STOP >= START and STEP > 0");
  std::vector<double> out;
  for (long i = 0;; ++i) {
    const double e = start + static_cast<double>(i) * step;
    if (e > stop + 1e-9) break;
    out.push_back(e);
  }
  if (out.empty()) throw std::invalid_argument("--etas produced an empty sweep");
  return out;
}

struct CapacityArgs {
  double eta = 0.0;
  double precision = 0.0;
  bool minimal_n = false;
  int max_nodes = 300;
  bool json = false;
};

int run_capacity(const CapacityArgs& a, std::ostream& out) {
  CapacityOptions opt;
  opt.minimal_n = a.minimal_n;
  opt.max_nodes = a.max_nodes;
  const CapacityResult res = compute_capacity(a.eta, a.precision, opt);
  OutputRecord rec("capacity");
  rec.put("eta", res.eta);
  rec.put("precision", res.precision);
  rec.put("minimal_n", a.minimal_n);
  rec.put("value", res.value);
  rec.put("a_n", res.a_n);
  rec.put("b_n", res.b_n);
  rec.put_int("n", res.last_node);
  rec.put_int("nodes", res.last_node + 1);
  rec.put("gap", res.b_n - res.a_n);
  rec.put("psi", res.psi);
  rec.put("achieved", res.achieved);
  rec.put("wall_seconds", res.wall_seconds);
  rec.put("notes", join_notes(res.notes));
  emit(rec, a.json, out);
  return res.achieved ? 0 : 1;
}

struct BoundArgs {
  std::string side;
  double eta = 0.0;
  int nodes = 0;
  double gap_tol = 1e-9;
  bool json = false;
};

int run_bound(const BoundArgs& a, std::ostream& out) {
  if (a.side != "lower" && a.side != "upper")
    throw std::invalid_argument("--side must be lower or upper");
  if (a.nodes < 1) throw std::invalid_argument("--nodes must be at least 1");
  const GraphKind kind = a.side == "lower" ? GraphKind::LowerBound : GraphKind::UpperBound;
  SolveOptions opt;
  opt.gap_tol = a.gap_tol;
  const SolveResult res = solve_bound(kind, a.eta, a.nodes - 1, opt);
  const double value = kind == GraphKind::LowerBound ? res.certified_lower : res.certified_upper;
  OutputRecord rec("bound");
  rec.put("side", a.side);
  rec.put("eta", a.eta);
  rec.put_int("nodes", a.nodes);
  rec.put("gap_tol", a.gap_tol);
  rec.put("value", value);
  rec.put("certified_lower", res.certified_lower);
  rec.put("certified_upper", res.certified_upper);
  rec.put("gap", res.gap());
  rec.put("status", res.status == SolveStatus::Converged
                        ? "converged"
                        : (res.status == SolveStatus::IterationLimit ? "iteration_limit"
                                                                     : "numerical_limit"));
  rec.put_int("newton_iterations", res.iterations);
  rec.put("residual_primal", res.residual_primal);
  rec.put("notes", join_notes(res.notes));
  emit(rec, a.json, out);
  return std::isfinite(value) ? 0 : 1;
}

struct GapBoundArgs {
  int nodes = 0;
  bool json = false;
};

int run_gap_bound(const GapBoundArgs& a, std::ostream& out) {
  if (a.nodes < 1) throw std::invalid_argument("--nodes must be at least 1");
  OutputRecord rec("gap-bound");
  rec.put_int("nodes", a.nodes);
  rec.put("psi", gap_bound(a.nodes - 1));
  emit(rec, a.json, out);
  return 0;
}

struct SweepArgs {
  std::string etas;
  double precision = 0.0;
  std::string out_path;
  int max_nodes = 300;
  bool json = false;
};

int run_sweep(const SweepArgs& a, std::ostream& out) {
  const std::vector<double> etas = parse_etas(a.etas);
  std::ofstream csv(a.out_path);
  if (!csv) throw std::invalid_argument("cannot open output file '" + a.out_path + "'");
  CapacityOptions opt;
  opt.max_nodes = a.max_nodes;
  const std::vector<CapacityResult> rows = table_sweep(etas, a.precision, opt, env_threads());
  csv << "eta,lb,nodes,ub\n";
  bool all_achieved = true;
  for (const CapacityResult& r : rows) {
    csv << OutputRecord::format_double(r.eta) << ',' << OutputRecord::format_double(r.a_n) << ','
        << (r.last_node + 1) << ',' << OutputRecord::format_double(r.b_n) << '\n';
    OutputRecord rec("sweep-row");
    rec.put("eta", r.eta);
    rec.put("precision", r.precision);
    rec.put("lb", r.a_n);
    rec.put_int("nodes", r.last_node + 1);
    rec.put("ub", r.b_n);
    rec.put("achieved", r.achieved);
    rec.put("wall_seconds", r.wall_seconds);
    emit(rec, a.json, out);
    all_achieved = all_achieved && r.achieved;
  }
  csv.close();
  OutputRecord rec("sweep");
  rec.put("etas", a.etas);
  rec.put("precision", a.precision);
  rec.put_int("rows", static_cast<long long>(rows.size()));
  rec.put("out", a.out_path);
  rec.put("achieved", all_achieved);
  emit(rec, a.json, out);
  return all_achieved ? 0 : 1;
}

struct NoisyArgs {
  double eta = 0.0;
  double p = 0.0;
  int nodes = 0;
  int restarts = 8;
  unsigned long long seed = 1;
  bool json = false;
};

int run_noisy(const NoisyArgs& a, std::ostream& out) {
  if (a.nodes < 2) throw std::invalid_argument("--nodes must be at least 2 (N >= 1)");
  const SearchResult res = search_bsc(a.eta, a.p, a.nodes - 1, a.restarts, a.seed, env_threads());
  OutputRecord rec("noisy");
  rec.put("eta", a.eta);
  rec.put("p", a.p);
  rec.put_int("nodes", a.nodes);
  rec.put_int("restarts", a.restarts);
  rec.put_int("seed", static_cast<long long>(a.seed));
  rec.put("rate", res.report.rate);
  rec.put("bcjr", res.report.bcjr);
  rec.put("stationary_residual", res.report.stationary_residual);
  rec.put("certified", res.report.certified);
  rec.put("certified_found", res.certified_found);
  rec.put_int("restart", res.restart);
  rec.put("best_rate_any", res.best_rate_any);
  rec.put_int("excluded_pairs", res.report.excluded_pairs);
  rec.put("notes", join_notes(res.report.notes));
  emit(rec, a.json, out);
  return res.certified_found ? 0 : 1;
}

struct VerifyArgs {
  std::string suite;
  bool json = false;
};

int run_verify_cmd(const VerifyArgs& a, std::ostream& out) {
  const VerifyReport rep = run_verify(a.suite);
  int failures = 0;
  for (const CheckResult& c : rep.checks) {
    if (!c.pass) ++failures;
    if (!a.json) out << (c.pass ? "PASS" : "FAIL") << ' ' << c.name << " - " << c.detail << '\n';
  }
  OutputRecord rec("verify");
  rec.put("suite", a.suite);
  rec.put_int("checks", static_cast<long long>(rep.checks.size()));
  rec.put_int("failures", failures);
  rec.put("pass", rep.all_passed());
  emit(rec, a.json, out);
  return rep.all_passed() ? 0 : 1;
}

struct ExportArgs {
  std::string kind;
  double eta = 0.0;
  int nodes = 0;
  std::string out_path;
  bool json = false;
};

int run_export(const ExportArgs& a, std::ostream& out) {
  if (a.kind != "lb" && a.kind != "ub") throw std::invalid_argument("--kind must be lb or ub");
  if (a.nodes < 1) throw std::invalid_argument("--nodes must be at least 1");
  const GraphKind kind = a.kind == "lb" ? GraphKind::LowerBound : GraphKind::UpperBound;
  const ConvexProgram prog = build_program(kind, a.nodes - 1, make_harvest(a.eta));
  std::ofstream file(a.out_path);
  if (!file) throw std::invalid_argument("cannot open output file '" + a.out_path + "'");
  export_program(prog, file);
  file.close();
  OutputRecord rec("export");
  rec.put("kind", a.kind);
  rec.put("eta", a.eta);
  rec.put_int("nodes", a.nodes);
  rec.put_int("vars", prog.num_vars());
  rec.put_int("rows", prog.num_rows());
  rec.put("out", a.out_path);
  emit(rec, a.json, out);
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Certified capacity bounds for the binary energy-harvesting channel"};
  app.require_subcommand(1);

  CapacityArgs cap;
  CLI::App* cmd_capacity = app.add_subcommand("capacity", "Compute capacity to a requested precision");
  cmd_capacity->add_option("--eta", cap.eta, "Recharge probability in [0,1]")->required();
  cmd_capacity->add_option("--precision", cap.precision, "Requested certified gap")->required();
  cmd_capacity->add_flag("--minimal-n", cap.minimal_n, "Also locate the smallest N meeting the precision");
  cmd_capacity->add_option("--max-nodes", cap.max_nodes, "Resource cap on the last node N (default 300)");
  cmd_capacity->add_flag("--json", cap.json, "Emit the structured record form");

  BoundArgs bnd;
  CLI::App* cmd_bound = app.add_subcommand("bound", "Solve one certified bound program");
  cmd_bound->add_option("--side", bnd.side, "lower or upper")->required();
  cmd_bound->add_option("--eta", bnd.eta, "Recharge probability in (0,1)")->required();
  cmd_bound->add_option("--nodes", bnd.nodes, "Graph size |Q| = N + 1")->required();
  cmd_bound->add_option("--gap-tol", bnd.gap_tol, "Certificate gap target (default 1e-9)");
  cmd_bound->add_flag("--json", bnd.json, "Emit the structured record form");

  GapBoundArgs gap;
  CLI::App* cmd_gap = app.add_subcommand("gap-bound", "Analytic bound psi(N) on b_N - a_N");
  cmd_gap->add_option("--nodes", gap.nodes, "Graph size |Q| = N + 1")->required();
  cmd_gap->add_flag("--json", gap.json, "Emit the structured record form");

  SweepArgs swp;
  CLI::App* cmd_sweep = app.add_subcommand("sweep", "Capacity table over a range of eta");
  cmd_sweep->add_option("--etas", swp.etas, "Single value or START:STOP:STEP")->required();
  cmd_sweep->add_option("--precision", swp.precision, "Requested certified gap per row")->required();
  cmd_sweep->add_option("--out", swp.out_path, "CSV output path")->required();
  cmd_sweep->add_option("--max-nodes", swp.max_nodes, "Resource cap on the last node N (default 300)");
  cmd_sweep->add_flag("--json", swp.json, "Emit the structured record form");

  NoisyArgs noi;
  CLI::App* cmd_noisy = app.add_subcommand("noisy", "Search achievable rates over a BSC observation");
  cmd_noisy->add_option("--eta", noi.eta, "Recharge probability in [0,1]")->required();
  cmd_noisy->add_option("--p", noi.p, "BSC crossover in [0, 1/2]")->required();
  cmd_noisy->add_option("--nodes", noi.nodes, "Graph size |Q| = N + 1")->required();
  cmd_noisy->add_option("--restarts", noi.restarts, "Search restarts (default 8)");
  cmd_noisy->add_option("--seed", noi.seed, "Search seed (default 1)");
  cmd_noisy->add_flag("--json", noi.json, "Emit the structured record form");

  VerifyArgs ver;
  CLI::App* cmd_verify = app.add_subcommand("verify", "Run the module invariant suites");
  cmd_verify->add_option("--suite", ver.suite, "qgraph|model|program|solver|noisy|all")->required();
  cmd_verify->add_flag("--json", ver.json, "Emit the structured record form");

  ExportArgs exp;
  CLI::App* cmd_export = app.add_subcommand("export", "Write one program in the exchange format");
  cmd_export->add_option("--kind", exp.kind, "lb or ub")->required();
  cmd_export->add_option("--eta", exp.eta, "Recharge probability in (0,1)")->required();
  cmd_export->add_option("--nodes", exp.nodes, "Graph size |Q| = N + 1")->required();
  cmd_export->add_option("--out", exp.out_path, "Export file path")->required();
  cmd_export->add_flag("--json", exp.json, "Emit the structured record form");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (cmd_capacity->parsed()) return run_capacity(cap, out);
    if (cmd_bound->parsed()) return run_bound(bnd, out);
    if (cmd_gap->parsed()) return run_gap_bound(gap, out);
    if (cmd_sweep->parsed()) return run_sweep(swp, out);
    if (cmd_noisy->parsed()) return run_noisy(noi, out);
    if (cmd_verify->parsed()) return run_verify_cmd(ver, out);
    if (cmd_export->parsed()) return run_export(exp, out);
  } catch (const std::invalid_argument& e) {
    err << "argument error: " << e.what() << '\n';
    err << "run with --help for usage\n";
    return 2;
  } catch (const std::exception& e) {
    OutputRecord rec("error");
    rec.put("message", std::string(e.what()));
    emit(rec, false, err);
    return 1;
  }
  err << "argument error: no subcommand given\n";
  return 2;
}

}  // namespace cli
}  // namespace behc
