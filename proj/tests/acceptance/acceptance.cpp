// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails or exceeds its time budget.

#include <dsr/coding.hpp>
#include <dsr/decomp.hpp>
#include <dsr/flowgraph.hpp>
#include <dsr/netsim.hpp>
#include <dsr/polytope.hpp>
#include <dsr/solver.hpp>

#include "../support/oracles.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

using namespace dsr;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

int failures = 0;

void criterion(const std::string& name, double budget_s, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_time = secs < budget_s;
  const bool ok = out.ok && in_time;
  failures += ok ? 0 : 1;
  std::cout << (ok ? "PASS" : "FAIL") << "  " << std::left << std::setw(24) << name << std::right << std::fixed
            << std::setprecision(2) << std::setw(7) << secs << " s  " << out.detail;
  if (!in_time) std::cout << " [over budget " << budget_s << " s]";
  std::cout << "\n" << std::flush;
}

std::string str(double x) {
  std::ostringstream out;
  out << std::setprecision(6) << x;
  return out.str();
}

VectorQ link_costs(const RepairInstance& inst) {
  VectorQ c(static_cast<Eigen::Index>(inst.num_links()));
  for (std::size_t l = 0; l < inst.num_links(); ++l) c(static_cast<Eigen::Index>(l)) = inst.cost(l).coeffs()[0];
  return c;
}

// Exact objective equality plus complementary slackness on both bounds.
bool kkt_holds(const RepairInstance& inst, const Polytope& p, const LpSolution& s) {
  if (s.status != LpStatus::kOptimal || s.objective != s.dual_objective(p)) return false;
  const VectorQ slack = p.coefficients<Rational>() * s.z - p.rhs<Rational>();
  for (Eigen::Index r = 0; r < slack.size(); ++r) {
    if (s.duals(r) < 0 || slack(r) < 0 || s.duals(r) * slack(r) != 0) return false;
  }
  const VectorQ reduced = link_costs(inst) - p.coefficients<Rational>().transpose() * s.duals + s.upper_duals;
  for (Eigen::Index l = 0; l < reduced.size(); ++l) {
    if (s.upper_duals(l) < 0 || reduced(l) < 0) return false;
    if (reduced(l) * s.z(l) != 0 || s.upper_duals(l) * (p.upper - s.z(l)) != 0) return false;
  }
  return true;
}

bool same_trace(const ConvergenceTrace& a, const ConvergenceTrace& b) {
  if (a.rows.size() != b.rows.size()) return false;
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    const TraceRow& x = a.rows[i];
    const TraceRow& y = b.rows[i];
    const bool dual_same = x.dual_value == y.dual_value || (std::isnan(x.dual_value) && std::isnan(y.dual_value));
    if (x.sigma_c != y.sigma_c || x.max_violation != y.max_violation || !dual_same) return false;
  }
  return true;
}

const StopRule kFull{5000, 0.0};

}  // namespace

int main() {
  const RepairInstance tandem = builtin_instance("tandem4");
  const RepairInstance grid = builtin_instance("grid2x3");
  const Polytope tandem_p = enumerate_constraints(tandem);
  const Polytope grid_p = enumerate_constraints(grid);

  criterion("tandem-optimum", 1.0, [&] {
    const LpSolution s = solve_lp(tandem, enumerate_constraints(tandem));
    std::ostringstream d;
    d << "sigma_c = " << s.objective << " (expected 4)";
    return Outcome{s.status == LpStatus::kOptimal && s.objective == 4, d.str()};
  });

  criterion("polytope-flow-oracle", 30.0, [&] {
    std::mt19937_64 rng(2024);
    std::vector<RepairInstance> instances = {tandem, grid};
    for (int i = 0; i < 20; ++i) instances.push_back(oracle::random_instance(rng, 5));
    long agree = 0;
    long total = 0;
    for (const RepairInstance& inst : instances) {
      const Polytope p = enumerate_constraints(inst);
      const FlowGraph g = build_flow_graph(inst);
      for (int s = 0; s < 100; ++s) {
        const VectorQ z = oracle::random_subgraph(inst, rng);
        agree += (violation(p, z).max <= 0) == is_feasible_by_flow(inst, g, z) ? 1 : 0;
        ++total;
      }
    }
    return Outcome{agree == total, std::to_string(agree) + "/" + std::to_string(total) + " agree on " +
                                       std::to_string(instances.size()) + " instances"};
  });

  std::optional<int> dual_tandem_5;
  criterion("dual-convergence", 5.0, [&] {
    const DecompResult r = run_dual(tandem, tandem_p, {}, StopRule{200, 0.0});
    dual_tandem_5 = r.trace.first_within(4.0, 0.05);
    return Outcome{dual_tandem_5.has_value(),
                   "first iteration within 5%: " + (dual_tandem_5 ? std::to_string(*dual_tandem_5) : "none") +
                       " (cap 200)"};
  });

  criterion("primal-convergence", 30.0, [&] {
    const DecompResult r = run_primal(tandem, tandem_p, {}, kFull);
    const auto p5 = r.trace.first_within(4.0, 0.05);
    const bool ok = p5 && dual_tandem_5 && *p5 > *dual_tandem_5;
    return Outcome{ok, "primal to 5%: " + (p5 ? std::to_string(*p5) : "none") +
                           ", dual to 5%: " + (dual_tandem_5 ? std::to_string(*dual_tandem_5) : "none")};
  });

  criterion("grid-cross-check", 60.0, [&] {
    const double g_star = to_double(solve_lp(grid, grid_p).objective);
    const DecompResult p = run_primal(grid, grid_p, {}, kFull);
    const DecompResult d = run_dual(grid, grid_p, {}, kFull);
    const double pf = total_cost<double>(grid, p.z);
    const double df = total_cost<double>(grid, d.z);
    const double pgap = std::abs(pf - g_star) / g_star;
    const double dgap = std::abs(df - g_star) / g_star;
    const auto p5 = p.trace.first_within(g_star, 0.05);
    const auto d5 = d.trace.first_within(g_star, 0.05);
    const bool ok = pgap <= 0.02 && dgap <= 0.02 && p5 && d5 && *p5 <= *d5;
    return Outcome{ok, "G* = " + str(g_star) + ", primal gap " + str(pgap) + ", dual gap " + str(dgap) +
                           ", to 5%: primal " + (p5 ? std::to_string(*p5) : "none") + " dual " +
                           (d5 ? std::to_string(*d5) : "none")};
  });

  criterion("transport-transparency", 120.0, [&] {
    int same = 0;
    for (const auto* each : {&tandem, &grid}) {
      const RepairInstance& inst = *each;
      const Polytope p = enumerate_constraints(inst);
      for (Algorithm alg : {Algorithm::kPrimal, Algorithm::kDual}) {
        const DecompResult direct = alg == Algorithm::kPrimal ? run_primal(inst, p) : run_dual(inst, p);
        const SimResult sim = simulate(inst, p, alg, {}, {}, {});
        const bool eq = sim.z == direct.z && same_trace(sim.trace, direct.trace) &&
                        total_cost<double>(inst, sim.z) == total_cost<double>(inst, direct.z);
        same += eq ? 1 : 0;
      }
    }
    return Outcome{same == 4, std::to_string(same) + "/4 runs bit-identical"};
  });

  criterion("strong-duality-kkt", 30.0, [&] {
    std::mt19937_64 rng(77);
    std::vector<RepairInstance> instances = {tandem, grid};
    for (int i = 0; i < 30; ++i) instances.push_back(oracle::random_instance(rng, 5));
    int ok = 0;
    for (const RepairInstance& inst : instances) {
      const Polytope p = enumerate_constraints(inst);
      ok += kkt_holds(inst, p, solve_lp(inst, p)) ? 1 : 0;
    }
    return Outcome{ok == static_cast<int>(instances.size()),
                   std::to_string(ok) + "/" + std::to_string(instances.size()) + " solves exact"};
  });

  criterion("coding-repairs", 60.0, [&] {
    const Field field = Field::binary(16);
    const LpSolution lp = solve_lp(tandem, tandem_p);
    const auto d0 = field_size_bound(tandem.n(), tandem.k(), 4, compute_n_nc(tandem, lp.z));
    int passed = 0;
    int decoded = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      Rng rng(seed);
      try {
        const SystemState s = distribute(4, {1, 2, 3, 4}, 2, field, rng, seed);
        const SystemState after = repair(s, tandem, lp.z, rng, seed).state;
        passed += check_rcp(after, 2).ok ? 1 : 0;
        FVector file(4);
        for (Eigen::Index i = 0; i < 4; ++i) file(i) = field.random(rng);
        const std::vector<FVector> stored = encode(after, file);
        bool all = true;
        for (const auto& subset : k_subsets(after.node_ids(), 2)) {
          std::vector<FVector> mine;
          for (NodeId id : subset) {
            for (std::size_t i = 0; i < after.nodes().size(); ++i) {
              if (after.nodes()[i].node == id) mine.push_back(stored[i]);
            }
          }
          const auto back = decode(after, subset, mine);
          all = all && back && *back == file;
        }
        decoded += all ? 1 : 0;
      } catch (const CodingFailure&) {
      }
    }
    return Outcome{passed == 100 && decoded == 100 && field.order() > d0,
                   "d0 = " + std::to_string(d0) + ", q = " + std::to_string(field.order()) + ", RCP " +
                       std::to_string(passed) + "/100, decode " + std::to_string(decoded) + "/100"};
  });

  criterion("multi-stage-soak", 60.0, [&] {
    const SoakReport t = multi_stage_soak(tandem4_layout(), 20, Field::binary(16), 1);
    const SoakReport g = multi_stage_soak(grid2x3_layout(), 20, Field::binary(16), 1);
    auto passes = [](const SoakReport& r) {
      long n = 0;
      for (const SoakRow& row : r.rows) n += row.rcp_pass ? 1 : 0;
      return n;
    };
    const bool ok = t.rows.size() == 20 && g.rows.size() == 20 && t.all_pass() && g.all_pass();
    return Outcome{ok, "tandem4 " + std::to_string(passes(t)) + "/20, grid2x3 " + std::to_string(passes(g)) + "/20"};
  });

  criterion("numerical-hygiene", 30.0, [&] {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> point(0.01, 8.0);
    const std::vector<CostFunction> costs = {
        CostFunction::linear(Rational(3, 2)), CostFunction::quadratic(Rational(1, 3), 2),
        CostFunction::custom([](double z) { return std::exp(z / 4) - 1; },
                             [](double z) { return std::exp(z / 4) / 4; })};
    double worst_fd = 0.0;
    for (const CostFunction& f : costs) {
      for (int i = 0; i < 200; ++i) {
        const double z = point(rng);
        const double h = 1e-5 * std::max(1.0, z);
        const double fd = (f.value(z + h) - f.value(z - h)) / (2 * h);
        const double exact = f.derivative(z);
        worst_fd = std::max(worst_fd, std::abs(fd - exact) / std::max(1.0, std::abs(exact)));
      }
    }
    double worst_solve = 0.0;
    for (const auto* inst : {&tandem, &grid}) {
      const Polytope p = enumerate_constraints(*inst);
      const double lp = to_double(solve_lp(*inst, p).objective);
      worst_solve = std::max(worst_solve, std::abs(solve_convex(*inst, p).objective - lp) / lp);
    }
    return Outcome{worst_fd <= 1e-6 && worst_solve <= 1e-5,
                   "max derivative rel. err " + str(worst_fd) + ", convex vs LP rel. err " + str(worst_solve)};
  });

  std::cout << (failures == 0 ? "all criteria pass" : std::to_string(failures) + " criteria fail") << "\n";
  return failures == 0 ? 0 : 1;
}
