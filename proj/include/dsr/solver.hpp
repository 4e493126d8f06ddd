#pragma once

#include <dsr/model.hpp>
#include <dsr/polytope.hpp>
#include <dsr/simplex.hpp>

#include <limits>
#include <stdexcept>

namespace dsr {

/// Exact optimum of the linear-cost repair problem.
struct LpSolution {
  LpStatus status = LpStatus::kInfeasible;
  VectorQ z;
  Rational objective;
  VectorQ duals;        // per cut constraint, >= 0
  VectorQ upper_duals;  // per link for z <= M, >= 0

  /// sum_r duals_r * rhs_r - M * sum_l upper_duals_l.
  Rational dual_objective(const Polytope& polytope) const;
};

/// Minimizes sum c_ij z_ij over the polytope (cuts, 0 <= z <= M) in exact
/// arithmetic. Among optimal vertices the lexicographically smallest z is
/// returned. Requires linear costs.
LpSolution solve_lp(const RepairInstance& instance, const Polytope& polytope);

/// Euclidean projection onto {x : rows x >= rhs} by a primal active-set
/// method. `start` must be feasible. The multipliers satisfy
/// x - target = rows^T multipliers, multipliers >= 0.
struct Projection {
  Eigen::VectorXd x;
  Eigen::VectorXd multipliers;
};
Projection project_onto(const Eigen::MatrixXd& rows, const Eigen::VectorXd& rhs,
                        const Eigen::VectorXd& target, const Eigen::VectorXd& start);

/// minimize sum_l f_l(z_l)  s.t.  cover z >= demand,  0 <= z <= upper.
struct ConvexProblem {
  std::vector<CostFunction> costs;
  Eigen::MatrixXd cover;
  Eigen::VectorXd demand;
  double upper = 0.0;
};

struct ConvexResult {
  Eigen::VectorXd z;
  double objective = 0.0;
  Eigen::VectorXd multipliers;  // per cover row, >= 0
  int iterations = 0;
  double residual = 0.0;
};

/// Thrown when the iteration budget runs out; carries the best iterate.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, ConvexResult best)
      : std::runtime_error(what), best_(std::move(best)) {}
  const ConvexResult& best() const { return best_; }

 private:
  ConvexResult best_;
};

/// Projected gradient from z = upper * 1 with exact projections. Stops when
/// the KKT residual ||z - P(z - s grad f(z))||_inf / s is at most tol.
ConvexResult minimize_convex(const ConvexProblem& problem, double tol, int max_iters);

struct ConvexSolution {
  Eigen::VectorXd z;
  double objective = 0.0;
  int iterations = 0;
};

ConvexSolution solve_convex(const RepairInstance& instance, const Polytope& polytope,
                            double tol = 1e-9, int max_iters = 100000);

ConvexProblem repair_problem(const RepairInstance& instance, const Polytope& polytope);

}  // namespace dsr
