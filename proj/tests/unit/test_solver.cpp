#include <dsr/polytope.hpp>
#include <dsr/simplex.hpp>
#include <dsr/solver.hpp>

#include <doctest.h>

#include "../support/oracles.hpp"

#include <limits>
#include <random>

using namespace dsr;

namespace {

// Cuts (>=) stacked over the box written as -z >= -M.
std::pair<MatrixQ, VectorQ> as_geq_system(const Polytope& p) {
  const auto r = static_cast<Eigen::Index>(p.size());
  const auto n = static_cast<Eigen::Index>(p.num_links);
  MatrixQ rows = MatrixQ::Zero(r + 2 * n, n);
  VectorQ rhs(r + 2 * n);
  rows.topRows(r) = p.coefficients<Rational>();
  rhs.head(r) = p.rhs<Rational>();
  rows.middleRows(r, n) = MatrixQ::Identity(n, n);
  rhs.segment(r, n).setZero();
  rows.bottomRows(n) = -MatrixQ::Identity(n, n);
  rhs.tail(n).setConstant(-p.upper);
  return {rows, rhs};
}

VectorQ link_costs(const RepairInstance& inst) {
  VectorQ c(static_cast<Eigen::Index>(inst.num_links()));
  for (std::size_t l = 0; l < inst.num_links(); ++l) c(static_cast<Eigen::Index>(l)) = inst.cost(l).coeffs()[0];
  return c;
}

void check_kkt(const RepairInstance& inst, const Polytope& p, const LpSolution& s) {
  REQUIRE(s.status == LpStatus::kOptimal);
  CHECK(s.objective == s.dual_objective(p));
  const Violation<Rational> v = violation(p, s.z);
  CHECK(v.max <= 0);
  for (Eigen::Index r = 0; r < s.duals.size(); ++r) {
    CHECK(s.duals(r) >= 0);
    CHECK(s.duals(r) * v.per_constraint(r) == 0);
  }
  const VectorQ reduced = link_costs(inst) - p.coefficients<Rational>().transpose() * s.duals + s.upper_duals;
  for (Eigen::Index l = 0; l < reduced.size(); ++l) {
    CHECK(s.upper_duals(l) >= 0);
    CHECK(s.upper_duals(l) * (p.upper - s.z(l)) == 0);
    CHECK(reduced(l) >= 0);
    CHECK(reduced(l) * s.z(l) == 0);
  }
}

}  // namespace

TEST_SUITE("simplex") {
  TEST_CASE("small exact LP with duals") {
    // min x + 2y  s.t.  x + y >= 3,  x <= 2.
    LinearProgram<Rational> lp;
    lp.cost = VectorQ(2);
    lp.cost << Rational(1), Rational(2);
    lp.rows = MatrixQ(2, 2);
    lp.rows << Rational(1), Rational(1), Rational(1), Rational(0);
    lp.rhs = VectorQ(2);
    lp.rhs << Rational(3), Rational(2);
    lp.senses = {RowSense::kGreaterEqual, RowSense::kLessEqual};
    const LpResult<Rational> r = solve_simplex(lp);
    REQUIRE(r.status == LpStatus::kOptimal);
    CHECK(r.objective == 4);
    CHECK(r.x(0) == 2);
    CHECK(r.x(1) == 1);
    CHECK(r.duals(0) == 2);
    CHECK(r.duals(1) == -1);
  }

  TEST_CASE("infeasible and unbounded") {
    LinearProgram<double> lp;
    lp.cost = Eigen::VectorXd::Ones(1);
    lp.rows = Eigen::MatrixXd::Ones(2, 1);
    lp.rhs = Eigen::VectorXd(2);
    lp.rhs << 3.0, 1.0;
    lp.senses = {RowSense::kGreaterEqual, RowSense::kLessEqual};
    CHECK(solve_simplex(lp).status == LpStatus::kInfeasible);
    lp.cost(0) = -1.0;
    lp.rhs << 1.0, -5.0;
    lp.senses = {RowSense::kGreaterEqual, RowSense::kGreaterEqual};
    CHECK(solve_simplex(lp).status == LpStatus::kUnbounded);
  }

  TEST_CASE("lexicographic minimum among optimal vertices") {
    // min x + y  s.t.  x + y >= 2: every split is optimal; lexmin is (0, 2).
    LinearProgram<Rational> lp;
    lp.cost = VectorQ::Ones(2);
    lp.rows = MatrixQ::Ones(1, 2);
    lp.rhs = VectorQ::Constant(1, Rational(2));
    lp.senses = {RowSense::kGreaterEqual};
    const LpResult<Rational> r = solve_simplex_lexmin(lp);
    CHECK(r.x(0) == 0);
    CHECK(r.x(1) == 2);
  }
}

TEST_SUITE("solver") {
  TEST_CASE("tandem4 optimum is 4 at (0,2,2)") {
    const RepairInstance inst = builtin_instance("tandem4");
    const Polytope p = enumerate_constraints(inst);
    const LpSolution s = solve_lp(inst, p);
    REQUIRE(s.status == LpStatus::kOptimal);
    CHECK(s.objective == 4);
    CHECK(s.z(0) == 0);
    CHECK(s.z(1) == 2);
    CHECK(s.z(2) == 2);
    CHECK(s.duals(0) == 1);
    CHECK(s.duals(1) == 1);
    check_kkt(inst, p, s);
  }

  TEST_CASE("grid2x3 oracle value") {
    const RepairInstance inst = builtin_instance("grid2x3");
    const Polytope p = enumerate_constraints(inst);
    const LpSolution s = solve_lp(inst, p);
    REQUIRE(s.status == LpStatus::kOptimal);
    CHECK(s.objective == Rational(20, 3));
    check_kkt(inst, p, s);
  }

  TEST_CASE("single constraint z >= 2 with unit cost") {
    const RepairInstance inst(Topology({1, 2, 3}, {{2, 3}}, {CostFunction::linear(1)}), 1, 3, 2, 1);
    const LpSolution s = solve_lp(inst, enumerate_constraints(inst));
    CHECK(s.objective == 2);
  }

  TEST_CASE("solve_lp needs linear costs") {
    const RepairInstance inst(Topology({1, 2, 3}, {{2, 3}}, {CostFunction::quadratic(1, 0)}), 1, 3, 2, 1);
    CHECK_THROWS_AS(solve_lp(inst, enumerate_constraints(inst)), DomainError);
  }

  TEST_CASE("no feasible vertex beats the simplex optimum") {
    std::mt19937_64 rng(17);
    int solved = 0;
    for (int trial = 0; trial < 60 && solved < 15; ++trial) {
      const RepairInstance inst = oracle::random_instance(rng, 4);
      if (inst.num_links() > 4) continue;
      const Polytope p = enumerate_constraints(inst);
      const LpSolution s = solve_lp(inst, p);
      const auto [rows, rhs] = as_geq_system(p);
      const std::optional<Rational> best = oracle::brute_force_lp(rows, rhs, link_costs(inst));
      REQUIRE(best.has_value());
      CHECK(s.objective == *best);
      check_kkt(inst, p, s);
      ++solved;
    }
    CHECK(solved >= 10);
  }

  TEST_CASE("strong duality on random instances") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 20; ++trial) {
      const RepairInstance inst = oracle::random_instance(rng);
      const Polytope p = enumerate_constraints(inst);
      check_kkt(inst, p, solve_lp(inst, p));
    }
  }

  TEST_CASE("convex solve with linear costs matches the LP") {
    for (const char* name : {"tandem4", "grid2x3"}) {
      const RepairInstance inst = builtin_instance(name);
      const Polytope p = enumerate_constraints(inst);
      const double lp = to_double(solve_lp(inst, p).objective);
      const ConvexSolution c = solve_convex(inst, p, 1e-9, 100000);
      CHECK(std::abs(c.objective - lp) <= 1e-6 * lp);
    }
  }

  TEST_CASE("quadratic tandem optimum is 8 at (0,2,2)") {
    const auto quad = CostFunction::quadratic(1, 0);
    const RepairInstance inst(Topology({1, 2, 3, 4, 5}, {{1, 2}, {2, 3}, {3, 5}}, {quad, quad, quad}), 4, 5, 4, 2);
    const ConvexSolution c = solve_convex(inst, enumerate_constraints(inst));
    CHECK(c.objective == doctest::Approx(8.0).epsilon(1e-9));
    CHECK(c.z(0) == doctest::Approx(0.0));
    CHECK(c.z(1) == doctest::Approx(2.0));
    CHECK(c.z(2) == doctest::Approx(2.0));
  }

  TEST_CASE("infinite tolerance returns the start point") {
    const RepairInstance inst = builtin_instance("tandem4");
    const Polytope p = enumerate_constraints(inst);
    const ConvexSolution c = solve_convex(inst, p, std::numeric_limits<double>::infinity(), 10);
    CHECK(c.iterations == 0);
    CHECK(c.z == Eigen::VectorXd::Constant(3, 4.0));
    CHECK(violation<double>(p, c.z).max <= 0);
  }

  TEST_CASE("budget exhaustion carries the best iterate") {
    const auto curved = CostFunction::custom([](double z) { return z * z * z + z; },
                                             [](double z) { return 3 * z * z + 1; });
    const RepairInstance inst(Topology({1, 2, 3, 4, 5}, {{1, 2}, {2, 3}, {3, 5}}, {curved, curved, curved}), 4, 5, 4,
                              2);
    const Polytope p = enumerate_constraints(inst);
    try {
      solve_convex(inst, p, 0.0, 0);
      FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
      CHECK(e.best().z.size() == 3);
      CHECK(violation<double>(p, e.best().z).max <= 1e-12);
    }
  }

  TEST_CASE("projection onto half-spaces") {
    // Project (0, 0) onto x + y >= 2: (1, 1) with multiplier 1.
    Eigen::MatrixXd rows(1, 2);
    rows << 1.0, 1.0;
    const Eigen::VectorXd rhs = Eigen::VectorXd::Constant(1, 2.0);
    const Projection pr = project_onto(rows, rhs, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Constant(2, 3.0));
    CHECK(pr.x(0) == doctest::Approx(1.0));
    CHECK(pr.x(1) == doctest::Approx(1.0));
    CHECK(pr.multipliers(0) == doctest::Approx(1.0));
  }
}
