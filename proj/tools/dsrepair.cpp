// dsrepair: minimum-cost repair subgraphs, decentralized solvers and
// network-coded repair experiments.
//
// Exit codes: 0 ok, 1 usage or input error, 2 no convergence within the
// iteration cap, 3 verification failure.

#include <dsr/coding.hpp>
#include <dsr/decomp.hpp>
#include <dsr/flowgraph.hpp>
#include <dsr/instance_io.hpp>
#include <dsr/netsim.hpp>
#include <dsr/polytope.hpp>
#include <dsr/solver.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kNoConvergence = 2;
constexpr int kVerification = 3;

struct Source {
  std::string builtin;
  std::string topology;
  int failed = 0;

  dsr::RepairInstance instance() const {
    if (!topology.empty()) return dsr::load_instance(topology);
    std::optional<dsr::NodeId> f;
    if (failed != 0) f = failed;
    return dsr::builtin_instance(builtin, f);
  }
  dsr::Layout layout() const {
    if (!topology.empty()) return dsr::Layout::from_instance(dsr::load_instance(topology));
    return dsr::builtin_layout(builtin);
  }
};

void add_source(CLI::App* cmd, Source& src) {
  auto* b = cmd->add_option("--builtin", src.builtin, "Builtin instance: tandem4 or grid2x3");
  auto* t = cmd->add_option("--topology", src.topology, "Instance JSON file");
  b->excludes(t);
  t->excludes(b);
  cmd->add_option("--failed", src.failed, "Failed node for a builtin (default: 4 on tandem4, 1 on grid2x3)")
      ->check(CLI::PositiveNumber);
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::string format_z(const dsr::RepairInstance& inst, const Eigen::VectorXd& z) {
  std::ostringstream out;
  out.precision(10);
  for (std::size_t l = 0; l < inst.num_links(); ++l) {
    out << (l ? " " : "") << "z" << dsr::to_string(inst.links()[l]) << "=" << z(static_cast<Eigen::Index>(l));
  }
  return out.str();
}

std::string format_z(const dsr::RepairInstance& inst, const dsr::VectorQ& z) {
  std::ostringstream out;
  for (std::size_t l = 0; l < inst.num_links(); ++l) {
    out << (l ? " " : "") << "z" << dsr::to_string(inst.links()[l]) << "=" << z(static_cast<Eigen::Index>(l));
  }
  return out.str();
}

struct SolveArgs {
  Source src;
  std::string alg = "central";
  double step = 0.5;
  int max_iters = 5000;
  double epsilon = 1e-3;
  std::uint64_t seed = 0;
  bool netsim = false;
  std::string trace;
  std::string messages;
};

int cmd_solve(const SolveArgs& a) {
  const dsr::RepairInstance inst = a.src.instance();
  const dsr::Polytope poly = dsr::enumerate_constraints(inst);
  const std::string name = inst.topology().name().empty() ? a.src.topology : inst.topology().name();
  std::cout << "instance " << name << " failed " << inst.failed() << " new "
            << inst.new_node() << " constraints " << poly.size() << "\n";

  std::optional<double> central;
  if (inst.all_costs_linear()) {
    const dsr::LpSolution lp = dsr::solve_lp(inst, poly);
    central = dsr::to_double(lp.objective);
    if (a.alg == "central") {
      std::cout << "check: sigma_c optimum (exact LP)\n";
      std::cout << "sigma_c = " << lp.objective << "\n";
      std::cout << "dual objective = " << lp.dual_objective(poly) << "\n";
      std::cout << format_z(inst, lp.z) << "\n";
      return kOk;
    }
  } else if (a.alg == "central") {
    const dsr::ConvexSolution cs = dsr::solve_convex(inst, poly);
    std::cout << "check: sigma_c optimum (projected gradient)\n";
    std::cout << "sigma_c = " << cs.objective << "\n" << format_z(inst, cs.z) << "\n";
    return kOk;
  }

  const dsr::StepRule step{a.step};
  const dsr::StopRule stop{a.max_iters, a.epsilon};
  const bool primal = a.alg == "primal";
  Eigen::VectorXd z;
  dsr::ConvergenceTrace trace;
  bool converged = false;
  if (a.netsim) {
    dsr::SimConfig config;
    config.seed = a.seed;
    dsr::SimResult r = dsr::simulate(inst, poly, primal ? dsr::Algorithm::kPrimal : dsr::Algorithm::kDual,
                                     config, step, stop);
    z = r.z;
    trace = r.trace;
    converged = r.converged;
    if (!a.messages.empty()) write_file(a.messages, r.log.to_csv());
    std::cout << "messages = " << dsr::message_complexity(r.log).total << "\n";
  } else {
    dsr::DecompResult r = primal ? dsr::run_primal(inst, poly, step, stop) : dsr::run_dual(inst, poly, step, stop);
    z = r.z;
    trace = r.trace;
    converged = r.converged;
  }
  if (!a.trace.empty()) write_file(a.trace, trace.to_csv());

  const double sigma = dsr::total_cost<double>(inst, z);
  std::cout.precision(10);
  std::cout << "check: sigma_c optimum (" << a.alg << " decomposition)\n";
  std::cout << "iterations = " << trace.rows.size() << "\n";
  std::cout << "sigma_c = " << sigma << "\n";
  if (central) {
    std::cout << "central = " << *central << "\n";
    std::cout << "gap = " << (sigma - *central) / *central << "\n";
  }
  std::cout << format_z(inst, z) << "\n";
  std::cout << (converged ? "converged" : "stopped at max iterations") << "\n";
  return converged ? kOk : kNoConvergence;
}

struct CodingArgs {
  Source src;
  std::uint64_t field = 65536;
  std::uint64_t seed = 0;
  int stages = 20;
  std::string csv;
  std::string state_out;
};

int cmd_repair(const CodingArgs& a) {
  const dsr::RepairInstance inst = a.src.instance();
  if (!inst.all_costs_linear()) throw dsr::DomainError("repair needs linear costs for the exact subgraph");
  const dsr::Field field = dsr::Field::of_order(a.field);
  const dsr::Polytope poly = dsr::enumerate_constraints(inst);
  const dsr::LpSolution lp = dsr::solve_lp(inst, poly);
  const int n_nc = dsr::compute_n_nc(inst, lp.z);
  const auto d0 = dsr::field_size_bound(inst.n(), inst.k(), inst.file_size().convert_to<std::uint64_t>(), n_nc);

  std::cout << "field " << field.name() << " (q = " << field.order() << ")\n";
  std::cout << "sigma_c = " << lp.objective << "\n" << format_z(inst, lp.z) << "\n";
  std::cout << "check: d0 = C(n,k) * M * n_nc\n";
  std::cout << "n_nc = " << n_nc << "\nd0 = " << d0 << "\n";
  if (field.order() <= d0) {
    std::cerr << "warning: field order " << field.order() << " does not exceed d0 = " << d0
              << "; success is not guaranteed\n";
  }

  std::vector<dsr::NodeId> nodes = inst.survivors();
  nodes.push_back(inst.failed());
  dsr::Rng rng(a.seed);
  const int file_size = inst.file_size().convert_to<int>();
  std::cout << "check: RCP (every k nodes have rank M)\n";
  try {
    const dsr::SystemState state = dsr::distribute(file_size, nodes, inst.k(), field, rng, a.seed);
    const dsr::RepairResult r = dsr::repair(state, inst, lp.z, rng, a.seed);
    if (!a.state_out.empty()) write_file(a.state_out, r.state.to_text());
    std::cout << "RCP pass\n";
    return kOk;
  } catch (const dsr::CodingFailure& e) {
    if (!a.state_out.empty() && e.state()) write_file(a.state_out, e.state()->to_text());
    std::cout << "RCP FAIL: " << e.what() << " (seed " << e.seed() << ")\n";
    return kVerification;
  }
}

int cmd_soak(const CodingArgs& a) {
  const dsr::Layout layout = a.src.layout();
  const dsr::Field field = dsr::Field::of_order(a.field);
  const dsr::SoakReport report = dsr::multi_stage_soak(layout, a.stages, field, a.seed);
  const std::string csv = report.to_csv();
  if (!a.csv.empty()) {
    write_file(a.csv, csv);
  } else {
    std::cout << csv;
  }
  long passed = 0;
  for (const dsr::SoakRow& row : report.rows) passed += row.rcp_pass ? 1 : 0;
  std::cerr << "check: RCP at every stage; " << passed << "/" << report.rows.size() << " stages pass, cumulative cost "
            << report.cumulative_cost << "\n";
  return report.all_pass() ? kOk : kVerification;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimum-cost repair of regenerating-code storage"};
  app.require_subcommand(1);

  SolveArgs solve;
  auto* s = app.add_subcommand("solve", "Solve the minimum-cost repair subgraph");
  add_source(s, solve.src);
  s->add_option("--alg", solve.alg, "central, primal or dual")
      ->check(CLI::IsMember({"central", "primal", "dual"}));
  s->add_option("--step", solve.step, "Step scale c in c/sqrt(k)")->check(CLI::PositiveNumber);
  s->add_option("--max-iters", solve.max_iters, "Iteration cap T")->check(CLI::NonNegativeNumber);
  s->add_option("--epsilon", solve.epsilon, "Stop when sigma_c changes by less than this")
      ->check(CLI::NonNegativeNumber);
  s->add_option("--seed", solve.seed, "Recorded seed (the solvers are deterministic)");
  s->add_flag("--netsim", solve.netsim, "Run through the message-passing simulator");
  s->add_option("--trace", solve.trace, "Trace CSV output path");
  s->add_option("--messages", solve.messages, "Message log CSV output path (with --netsim)");

  CodingArgs rep;
  auto* r = app.add_subcommand("repair", "Distribute, repair along the optimal subgraph and check the RCP");
  add_source(r, rep.src);
  r->add_option("--field", rep.field, "Field order: a prime or 2^m with m <= 16");
  r->add_option("--seed", rep.seed, "Random seed")->required();
  r->add_option("--state-out", rep.state_out, "Write the repaired state as text");

  CodingArgs soak;
  auto* k = app.add_subcommand("soak", "Repeated failures and repairs with RCP checks");
  add_source(k, soak.src);
  k->add_option("--field", soak.field, "Field order: a prime or 2^m with m <= 16");
  k->add_option("--seed", soak.seed, "Random seed")->required();
  k->add_option("--stages", soak.stages, "Number of failure/repair stages")->check(CLI::PositiveNumber);
  k->add_option("--csv", soak.csv, "Per-stage CSV output path (default stdout)");

  Source poly_src;
  auto* p = app.add_subcommand("polytope", "Print the reduced cut constraints");
  add_source(p, poly_src);

  Source flow_src;
  auto* f = app.add_subcommand("flowgraph", "Print the information flow graph");
  add_source(f, flow_src);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  for (Source* src : {&solve.src, &rep.src, &soak.src, &poly_src, &flow_src}) {
    if (src->builtin.empty() && src->topology.empty()) src->builtin = "tandem4";
  }

  try {
    if (*s) return cmd_solve(solve);
    if (*r) return cmd_repair(rep);
    if (*k) return cmd_soak(soak);
    if (*p) {
      const dsr::RepairInstance inst = poly_src.instance();
      std::cout << dsr::export_text(dsr::enumerate_constraints(inst), inst);
      return kOk;
    }
    if (*f) {
      const dsr::RepairInstance inst = flow_src.instance();
      std::cout << dsr::build_flow_graph(inst).dump(inst);
      return kOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
