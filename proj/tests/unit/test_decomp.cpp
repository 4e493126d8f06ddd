#include <dsr/decomp.hpp>
#include <dsr/solver.hpp>

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace dsr;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

struct Tandem {
  RepairInstance inst = builtin_instance("tandem4");
  Polytope poly = enumerate_constraints(inst);
  std::vector<NodeShare> shares = make_shares(inst, poly);
};

// Full h(z) = rhs - cover z.
Eigen::VectorXd full_h(const Polytope& p, const Eigen::VectorXd& z) {
  return p.rhs<double>() - p.coefficients<double>() * z;
}

}  // namespace

TEST_SUITE("decomp") {
  TEST_CASE("shares of tandem4") {
    const Tandem t;
    REQUIRE(t.shares.size() == 3);
    CHECK(t.shares[0].node == 1);
    CHECK(t.shares[2].node == 3);
    CHECK(t.shares[2].owned_links == std::vector<std::size_t>{2});
    CHECK(t.shares[0].constant[0] == Rational(2, 3));
    CHECK(t.shares[1].lower_bounds()(0) == doctest::Approx(2.0 / 3 - 4));
  }

  TEST_CASE("shares sum to the full constraint function") {
    for (const char* name : {"tandem4", "grid2x3"}) {
      const RepairInstance inst = builtin_instance(name);
      const Polytope p = enumerate_constraints(inst);
      const std::vector<NodeShare> shares = make_shares(inst, p);
      std::mt19937_64 rng(2);
      std::uniform_real_distribution<double> u(0.0, 8.0);
      for (int s = 0; s < 20; ++s) {
        Eigen::VectorXd z(static_cast<Eigen::Index>(inst.num_links()));
        for (Eigen::Index l = 0; l < z.size(); ++l) z(l) = u(rng);
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.size()));
        std::vector<Eigen::VectorXd> owned;
        for (const NodeShare& sh : shares) {
          Eigen::VectorXd zi(static_cast<Eigen::Index>(sh.owned_links.size()));
          for (std::size_t j = 0; j < sh.owned_links.size(); ++j) {
            zi(static_cast<Eigen::Index>(j)) = z(static_cast<Eigen::Index>(sh.owned_links[j]));
          }
          sum += sh.h(zi);
          owned.push_back(zi);
        }
        CHECK((sum - full_h(p, z)).lpNorm<Eigen::Infinity>() <= 1e-12);
        CHECK(assemble(shares, owned, inst.num_links()) == z);
      }
    }
  }

  TEST_CASE("primal subproblem") {
    const Tandem t;
    const NodeShare& node3 = t.shares[2];
    // h = 2/3 - z35 <= -4/3 forces z35 >= 2.
    SubproblemSolution s = primal_subproblem(node3, vec({5.0 / 3, -4.0 / 3}));
    CHECK(s.z(0) == doctest::Approx(2.0));
    CHECK(s.lambda(0) == doctest::Approx(0.0));
    CHECK(s.lambda(1) > 0);

    s = primal_subproblem(node3, vec({10, 10}));
    CHECK(s.z(0) == 0);
    CHECK(s.lambda.cwiseAbs().maxCoeff() == 0);

    // Node 1 owns no link in any cut.
    s = primal_subproblem(t.shares[0], vec({2.0 / 3, 2.0 / 3}));
    CHECK(s.z(0) == 0);

    CHECK_THROWS_AS(primal_subproblem(node3, vec({5.0 / 3, -10})), InfeasibleAllocation);
  }

  TEST_CASE("primal subproblem with convex cost") {
    const auto quad = CostFunction::quadratic(1, 0);
    const RepairInstance inst(Topology({1, 2, 3, 4, 5}, {{1, 2}, {2, 3}, {3, 5}}, {quad, quad, quad}), 4, 5, 4, 2);
    const std::vector<NodeShare> shares = make_shares(inst, enumerate_constraints(inst));
    const SubproblemSolution s = primal_subproblem(shares[2], vec({5.0 / 3, -4.0 / 3}));
    CHECK(s.z(0) == doctest::Approx(2.0).epsilon(1e-6));
    // d/dz z^2 at 2.
    CHECK(s.lambda(1) == doctest::Approx(4.0).epsilon(1e-4));
  }

  TEST_CASE("initial allocation") {
    const Tandem t;
    const PrimalState s = initial_primal_state(t.shares);
    CHECK(s.t.rows() == 3);
    CHECK(s.t.colwise().sum().cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(((s.t - s.lower).array() >= -1e-12).all());
    CHECK(project_t(s).t == s.t);
  }

  TEST_CASE("master step formula") {
    // lambda_2 - lambda_n = 1, step 0.5: t moves by +0.5 under the h <= 0
    // sign convention.
    const Eigen::VectorXd t = vec({1.0, -1.0});
    const Eigen::VectorXd next = proposed_allocation(t, vec({1.0, 0.0}), vec({0.0, 0.0}), 0.5);
    CHECK(next(0) == 1.5);
    CHECK(next(1) == -1.0);
    CHECK(proposed_allocation(t, vec({2.0, 3.0}), vec({2.0, 3.0}), 0.5) == t);
  }

  TEST_CASE("equal multipliers leave t unchanged") {
    const Tandem t;
    PrimalState s = initial_primal_state(t.shares);
    for (Eigen::Index i = 0; i < s.lambda.rows(); ++i) s.lambda.row(i) = vec({0.7, 1.3}).transpose();
    CHECK(primal_master_step(s, 0.5).t == s.t);
  }

  TEST_CASE("oracle duals are a fixed point") {
    const Tandem t;
    const LpSolution lp = solve_lp(t.inst, t.poly);
    PrimalState s = initial_primal_state(t.shares);
    for (Eigen::Index i = 0; i < s.lambda.rows(); ++i) {
      for (Eigen::Index r = 0; r < s.lambda.cols(); ++r) s.lambda(i, r) = to_double(lp.duals(r));
    }
    CHECK(primal_master_step(s, 0.5).t == s.t);
  }

  TEST_CASE("projection repairs an allocation below its minimum") {
    const Tandem t;
    PrimalState s = initial_primal_state(t.shares);
    // Push node 2 one unit below its floor on cut 0; the coordinator row
    // keeps the column sum at zero.
    s.t(1, 0) = s.lower(1, 0) - 1.0;
    s.t(2, 0) = -(s.t(0, 0) + s.t(1, 0));
    const PrimalState p = project_t(s);
    CHECK(p.t(1, 0) == doctest::Approx(s.lower(1, 0)));
    CHECK(p.t.colwise().sum().cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(((p.t - p.lower).array() >= -1e-12).all());
    // Cut 1 was feasible and is untouched.
    CHECK(p.t.col(1) == s.t.col(1));
  }

  TEST_CASE("projection shift") {
    // Two free rows proposing 3 and 1 with floors 0; coordinator floor -2
    // allows a sum of at most 2: mu = 1 gives 2 + 0.
    Eigen::MatrixXd proposed(2, 1);
    proposed << 3.0, 1.0;
    const Eigen::MatrixXd lower = Eigen::MatrixXd::Zero(2, 1);
    const Eigen::VectorXd mu = projection_shift(proposed, lower, vec({-2.0}));
    CHECK(mu(0) == doctest::Approx(1.0));
    CHECK(shifted_allocation(proposed.col(0), lower.col(0), vec({1.0, 1.0})) == vec({2.0, 0.0}));
    CHECK(projection_shift(proposed, lower, vec({-10.0}))(0) == 0.0);
  }

  TEST_CASE("dual subproblem") {
    const Tandem t;
    const NodeShare& node3 = t.shares[2];
    CHECK(dual_subproblem(node3, vec({0, 0}))(0) == 0);
    CHECK(dual_subproblem(node3, vec({0, 2}))(0) == 4);
    CHECK(dual_subproblem(node3, vec({0, 1}))(0) == 0);
  }

  TEST_CASE("dual master step") {
    const DualState s{vec({0.3, 0.1}), 0};
    CHECK(dual_master_step(s, vec({0, 0}), 0.5).lambda == s.lambda);
    const DualState up = dual_master_step(s, vec({2, -1}), 0.5);
    CHECK(up.lambda(0) == doctest::Approx(1.3));
    CHECK(up.lambda(1) == 0);
    CHECK(up.iteration == 1);
  }

  TEST_CASE("exact aggregation is order independent") {
    std::vector<Eigen::VectorXd> parts = {vec({0.1, 1e16}), vec({0.2, 1.0}), vec({0.3, -1e16})};
    const Eigen::VectorXd a = aggregate_exact(parts);
    std::reverse(parts.begin(), parts.end());
    CHECK(aggregate_exact(parts) == a);
    CHECK(a(1) == 1.0);
  }

  TEST_CASE("raise to feasibility") {
    const Tandem t;
    const Eigen::VectorXd z = raise_to_feasibility(t.poly, vec({0, 0, 1}));
    CHECK(z == vec({0, 2, 2}));
    CHECK(raise_to_feasibility(t.poly, vec({4, 4, 4})) == vec({4, 4, 4}));
  }

  TEST_CASE("step and stop rules") {
    const StepRule step;
    CHECK(step(1) == 0.5);
    CHECK(step(4) == 0.25);
    ConvergenceTrace trace;
    trace.rows.push_back({1, 5.0, 0.0});
    trace.rows.push_back({2, 5.0005, 0.0});
    CHECK(should_stop(trace, StopRule{100, 1e-3}));
    CHECK_FALSE(should_stop(trace, StopRule{100, 0.0}));
    CHECK(trace.first_within(5.0, 0.0) == 1);
    CHECK_FALSE(trace.first_within(1.0, 0.01).has_value());
  }

  TEST_CASE("trace CSV") {
    ConvergenceTrace trace;
    trace.rows.push_back({1, 4.5, 0.0});
    const std::string csv = trace.to_csv();
    CHECK(csv.rfind("iteration,sigma_c,max_violation,dual_value,messages\n", 0) == 0);
    CHECK(csv.find("nan") != std::string::npos);
  }

  TEST_CASE("primal with zero rounds returns M*1") {
    const Tandem t;
    const DecompResult r = run_primal(t.inst, t.poly, {}, StopRule{0, 1e-3});
    CHECK(r.z == Eigen::VectorXd::Constant(3, 4.0));
    CHECK(total_cost<double>(t.inst, r.z) == 12.0);
    CHECK(r.trace.rows.empty());
  }

  TEST_CASE("primal iterates are feasible and approach 4 from above") {
    const Tandem t;
    const DecompResult r = run_primal(t.inst, t.poly, {}, StopRule{5000, 0.0});
    REQUIRE(r.trace.rows.size() == 5000);
    for (const TraceRow& row : r.trace.rows) {
      CHECK(row.max_violation <= 1e-9);
      CHECK(row.sigma_c >= 4.0 - 1e-9);
    }
    CHECK(violation<double>(t.poly, r.z).max <= 1e-9);
    CHECK(std::abs(total_cost<double>(t.inst, r.z) - 4.0) <= 0.02 * 4.0);
  }

  TEST_CASE("dual respects weak duality and ends within 2%") {
    const Tandem t;
    const DecompResult r = run_dual(t.inst, t.poly, {}, StopRule{5000, 0.0});
    double best = -std::numeric_limits<double>::infinity();
    for (const TraceRow& row : r.trace.rows) {
      CHECK(row.dual_value <= 4.0 + 1e-9);
      CHECK(std::max(best, row.dual_value) >= best);
      best = std::max(best, row.dual_value);
    }
    CHECK(violation<double>(t.poly, r.z).max <= 1e-9);
    CHECK(std::abs(total_cost<double>(t.inst, r.z) - 4.0) <= 0.02 * 4.0);
    CHECK(std::abs(best - 4.0) <= 0.02 * 4.0);
  }

  TEST_CASE("dual started at the oracle multipliers is optimal at once") {
    const Tandem t;
    const LpSolution lp = solve_lp(t.inst, t.poly);
    Eigen::VectorXd lambda(lp.duals.size());
    for (Eigen::Index r = 0; r < lambda.size(); ++r) lambda(r) = to_double(lp.duals(r));
    const DecompResult r = run_dual(t.inst, t.poly, {}, StopRule{1, 0.0}, lambda);
    REQUIRE(r.trace.rows.size() == 1);
    CHECK(r.trace.rows[0].sigma_c == doctest::Approx(4.0));
    CHECK(r.trace.rows[0].dual_value == doctest::Approx(4.0));
  }

  TEST_CASE("tandem4: dual reaches 5% before primal") {
    const Tandem t;
    const auto p = run_primal(t.inst, t.poly, {}, StopRule{5000, 0.0}).trace.first_within(4.0, 0.05);
    const auto d = run_dual(t.inst, t.poly, {}, StopRule{200, 0.0}).trace.first_within(4.0, 0.05);
    REQUIRE(p.has_value());
    REQUIRE(d.has_value());
    CHECK(*d <= 200);
    CHECK(*p > *d);
  }

  TEST_CASE("epsilon stop ends the run early") {
    const Tandem t;
    const DecompResult r = run_primal(t.inst, t.poly);
    CHECK(r.converged);
    CHECK(r.trace.rows.size() < 5000);
  }
}
