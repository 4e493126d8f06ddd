#include <dsr/solver.hpp>

#include <algorithm>
#include <cmath>

namespace dsr {

Rational LpSolution::dual_objective(const Polytope& polytope) const {
  Rational value(0);
  for (std::size_t r = 0; r < polytope.size(); ++r) {
    value += duals(static_cast<Eigen::Index>(r)) * polytope.constraints[r].rhs;
  }
  for (Eigen::Index l = 0; l < upper_duals.size(); ++l) value -= polytope.upper * upper_duals(l);
  return value;
}

LpSolution solve_lp(const RepairInstance& instance, const Polytope& polytope) {
  if (!instance.all_costs_linear()) throw DomainError("solve_lp requires linear costs");
  const auto links = static_cast<Eigen::Index>(instance.num_links());
  const auto cuts = static_cast<Eigen::Index>(polytope.size());

  LinearProgram<Rational> lp;
  lp.cost = VectorQ(links);
  for (Eigen::Index l = 0; l < links; ++l) lp.cost(l) = instance.cost(static_cast<std::size_t>(l)).coeffs()[0];
  lp.rows = MatrixQ::Zero(cuts + links, links);
  lp.rows.topRows(cuts) = polytope.coefficients<Rational>();
  lp.rows.bottomRows(links) = MatrixQ::Identity(links, links);
  lp.rhs = VectorQ(cuts + links);
  lp.rhs.head(cuts) = polytope.rhs<Rational>();
  lp.rhs.tail(links).setConstant(polytope.upper);
  lp.senses.assign(static_cast<std::size_t>(cuts), RowSense::kGreaterEqual);
  lp.senses.resize(static_cast<std::size_t>(cuts + links), RowSense::kLessEqual);

  LpResult<Rational> r = solve_simplex_lexmin(lp);
  LpSolution out;
  out.status = r.status;
  if (r.status != LpStatus::kOptimal) return out;
  out.z = r.x;
  out.objective = r.objective;
  out.duals = r.duals.head(cuts);
  out.upper_duals = -r.duals.tail(links);
  return out;
}

Projection project_onto(const Eigen::MatrixXd& rows, const Eigen::VectorXd& rhs,
                        const Eigen::VectorXd& target, const Eigen::VectorXd& start) {
  constexpr double kActive = 1e-11;
  const Eigen::Index p = rows.rows();
  Eigen::VectorXd x = start;
  std::vector<Eigen::Index> working;

  auto independent_with = [&](Eigen::Index candidate) {
    Eigen::MatrixXd a(static_cast<Eigen::Index>(working.size()) + 1, rows.cols());
    for (std::size_t w = 0; w < working.size(); ++w) a.row(static_cast<Eigen::Index>(w)) = rows.row(working[w]);
    a.row(a.rows() - 1) = rows.row(candidate);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a.transpose());
    qr.setThreshold(1e-10);
    return qr.rank() == a.rows();
  };
  for (Eigen::Index i = 0; i < p; ++i) {
    if (std::abs(rows.row(i).dot(x) - rhs(i)) <= kActive && independent_with(i)) working.push_back(i);
  }

  Eigen::VectorXd multipliers = Eigen::VectorXd::Zero(p);
  const int max_steps = static_cast<int>(20 * (p + rows.cols()) + 100);
  for (int step = 0; step < max_steps; ++step) {
    const auto w = static_cast<Eigen::Index>(working.size());
    Eigen::MatrixXd a(w, rows.cols());
    for (Eigen::Index i = 0; i < w; ++i) a.row(i) = rows.row(working[static_cast<std::size_t>(i)]);
    const Eigen::VectorXd gap = target - x;
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(w);
    if (w > 0) mu = (a * a.transpose()).ldlt().solve(a * gap);
    const Eigen::VectorXd dir = w > 0 ? Eigen::VectorXd(gap - a.transpose() * mu) : gap;

    const double scale = 1.0 + x.lpNorm<Eigen::Infinity>() + target.lpNorm<Eigen::Infinity>();
    if (dir.lpNorm<Eigen::Infinity>() <= 1e-13 * scale) {
      // x - target = a^T nu with nu = -mu.
      Eigen::Index worst = -1;
      double worst_value = -1e-12 * scale;
      for (Eigen::Index i = 0; i < w; ++i) {
        if (-mu(i) < worst_value) {
          worst_value = -mu(i);
          worst = i;
        }
      }
      if (worst < 0) {
        for (Eigen::Index i = 0; i < w; ++i) {
          multipliers(working[static_cast<std::size_t>(i)]) = std::max(0.0, -mu(i));
        }
        return {x, multipliers};
      }
      working.erase(working.begin() + worst);
      continue;
    }

    double length = 1.0;
    Eigen::Index blocking = -1;
    for (Eigen::Index i = 0; i < p; ++i) {
      if (std::find(working.begin(), working.end(), i) != working.end()) continue;
      const double slope = rows.row(i).dot(dir);
      if (slope >= -1e-15) continue;
      const double room = std::max(0.0, rows.row(i).dot(x) - rhs(i));
      const double t = room / -slope;
      if (t < length) {
        length = t;
        blocking = i;
      }
    }
    x += length * dir;
    if (blocking >= 0) working.push_back(blocking);
  }
  throw std::runtime_error("active-set projection did not terminate");
}

namespace {

double step_size(const ConvexProblem& problem) {
  double max_a = 0.0;
  double max_c = 0.0;
  bool custom = false;
  for (const CostFunction& f : problem.costs) {
    switch (f.kind()) {
      case CostFunction::Kind::kLinear:
        max_c = std::max(max_c, to_double(f.coeffs()[0]));
        break;
      case CostFunction::Kind::kQuadratic:
        max_a = std::max(max_a, to_double(f.coeffs()[0]));
        max_c = std::max(max_c, to_double(f.coeffs()[1]));
        break;
      case CostFunction::Kind::kCustom:
        custom = true;
        break;
    }
  }
  if (max_a > 0.0) return 1.0 / (2.0 * max_a);
  if (custom) return 1.0;
  const double upper = problem.upper > 0.0 ? problem.upper : 1.0;
  return max_c > 0.0 ? upper / max_c : 1.0;
}

double objective_of(const ConvexProblem& problem, const Eigen::VectorXd& z) {
  double sum = 0.0;
  for (Eigen::Index l = 0; l < z.size(); ++l) sum += problem.costs[static_cast<std::size_t>(l)].value(z(l));
  return sum;
}

}  // namespace

ConvexResult minimize_convex(const ConvexProblem& problem, double tol, int max_iters) {
  const auto n = static_cast<Eigen::Index>(problem.costs.size());
  const Eigen::Index m = problem.cover.rows();
  Eigen::MatrixXd rows(m + 2 * n, n);
  Eigen::VectorXd rhs(m + 2 * n);
  rows.topRows(m) = problem.cover;
  rows.middleRows(m, n) = Eigen::MatrixXd::Identity(n, n);
  rows.bottomRows(n) = -Eigen::MatrixXd::Identity(n, n);
  rhs.head(m) = problem.demand;
  rhs.segment(m, n).setZero();
  rhs.tail(n).setConstant(-problem.upper);

  Eigen::VectorXd z = Eigen::VectorXd::Constant(n, problem.upper);
  if (m > 0 && ((problem.cover * z - problem.demand).array() < -1e-12).any()) {
    throw InfeasibleInstance("convex problem is infeasible even at the upper bound");
  }
  const double s = step_size(problem);

  ConvexResult best;
  best.z = z;
  best.objective = objective_of(problem, z);
  best.multipliers = Eigen::VectorXd::Zero(m);
  for (int it = 0; it <= max_iters; ++it) {
    Eigen::VectorXd grad(n);
    for (Eigen::Index l = 0; l < n; ++l) {
      grad(l) = problem.costs[static_cast<std::size_t>(l)].derivative(std::max(0.0, z(l)));
    }
    Projection next = project_onto(rows, rhs, z - s * grad, z);
    const double residual = (next.x - z).lpNorm<Eigen::Infinity>() / s;
    const double value = objective_of(problem, z);
    if (value <= best.objective) {
      best.z = z;
      best.objective = value;
      best.iterations = it;
      best.residual = residual;
      best.multipliers = next.multipliers.head(m) / s;
    }
    if (residual <= tol) {
      return ConvexResult{z, value, next.multipliers.head(m) / s, it, residual};
    }
    z = next.x;
  }
  throw ConvergenceError("projected gradient did not reach the KKT tolerance", best);
}

ConvexProblem repair_problem(const RepairInstance& instance, const Polytope& polytope) {
  ConvexProblem problem;
  problem.costs = instance.topology().costs();
  problem.cover = polytope.coefficients<double>();
  problem.demand = polytope.rhs<double>();
  problem.upper = to_double(polytope.upper);
  return problem;
}

ConvexSolution solve_convex(const RepairInstance& instance, const Polytope& polytope, double tol,
                            int max_iters) {
  ConvexResult r = minimize_convex(repair_problem(instance, polytope), tol, max_iters);
  return {r.z, r.objective, r.iterations};
}

}  // namespace dsr
