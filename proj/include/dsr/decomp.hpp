#pragma once

#include <dsr/model.hpp>
#include <dsr/polytope.hpp>

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dsr {

// Sign convention. Constraints are h^r(z) <= 0 with h^r = rhs_r - sum z, and
// every multiplier is nonnegative with Lagrangian f + sum_r lambda^r h^r.
// Under this convention the dual ascent is lambda <- max(0, lambda + a*h),
// and the primal master step moves t_i along +(lambda_i - lambda_n), since
// d phi_i / d t_i = -lambda_i.

/// alpha_k = scale / sqrt(k) for k >= 1.
struct StepRule {
  double scale = 0.5;
  double operator()(int k) const { return scale / std::sqrt(static_cast<double>(k)); }
};

/// Stops after max_iters rounds, or earlier once |sigma_c(k) - sigma_c(k-1)|
/// < epsilon. epsilon = 0 disables the early stop.
struct StopRule {
  int max_iters = 5000;
  double epsilon = 1e-3;
};

/// Node i's slice of the coupled problem: the links it transmits on and its
/// affine piece h_i^r(z_i) = rhs_r / (n-1) - sum_{owned links in cut r} z.
/// Summed over all survivors the pieces give h^r exactly.
struct NodeShare {
  NodeId node = 0;
  std::vector<std::size_t> owned_links;
  std::vector<CostFunction> costs;  // per owned link
  Eigen::MatrixXd cover;            // R x |owned|, 0/1
  std::vector<Rational> constant;   // rhs_r / (n-1), exact
  double upper = 0.0;               // M

  Eigen::Index constraints() const { return cover.rows(); }
  Eigen::VectorXd constant_d() const;
  Eigen::VectorXd h(const Eigen::VectorXd& z_owned) const;
  /// Smallest achievable h_i^r, reached with every owned link at M.
  Eigen::VectorXd lower_bounds() const;
  bool all_linear() const;
};

/// One share per survivor, ascending id; the last one is the coordinator.
std::vector<NodeShare> make_shares(const RepairInstance& instance, const Polytope& polytope);

/// Raised when t_i admits no point of node i's box.
class InfeasibleAllocation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SubproblemSolution {
  Eigen::VectorXd z;       // per owned link
  Eigen::VectorXd lambda;  // per constraint, >= 0
};

/// minimize f_i(z_i) s.t. h_i^r(z_i) <= t_i^r for all r, 0 <= z_i <= M.
/// Multipliers come from a node-local LP for linear costs and from the KKT
/// system of the projected-gradient solve otherwise.
SubproblemSolution primal_subproblem(const NodeShare& share, const Eigen::VectorXd& t);

/// Per-survivor allocations t (rows follow make_shares) and the latest local
/// multipliers. Columns sum to zero.
struct PrimalState {
  Eigen::MatrixXd t;
  Eigen::MatrixXd lambda;
  Eigen::MatrixXd lower;  // lower_bounds() of each share
  int iteration = 0;
};

/// Shares of z = M*1, plus an equal split of the remaining slack so that
/// every column sums to zero.
PrimalState initial_primal_state(const std::vector<NodeShare>& shares);

/// t_i + step * (lambda_i - lambda_n) for a non-coordinator node.
Eigen::VectorXd proposed_allocation(const Eigen::VectorXd& t, const Eigen::VectorXd& lambda,
                                    const Eigen::VectorXd& lambda_coordinator, double step);

/// Per constraint, the smallest mu >= 0 with
/// sum_i max(lower_i, proposed_i - mu) <= -lower_coordinator,
/// where i ranges over the non-coordinator rows.
Eigen::VectorXd projection_shift(const Eigen::MatrixXd& proposed, const Eigen::MatrixXd& lower,
                                 const Eigen::VectorXd& lower_coordinator);

/// max(lower, proposed - mu), componentwise.
Eigen::VectorXd shifted_allocation(const Eigen::VectorXd& proposed, const Eigen::VectorXd& lower,
                                   const Eigen::VectorXd& mu);

/// Euclidean projection in the free coordinates t_1..t_{n-1} (the
/// coordinator's t_n = -sum of the rest): every node's subproblem becomes
/// feasible and columns keep summing to zero.
PrimalState project_t(PrimalState state);

/// Update with the current lambda, then project_t.
PrimalState primal_master_step(PrimalState state, double step);

/// minimize f_i(z_i) + sum_r lambda^r h_i^r(z_i) over 0 <= z_i <= M. Splits
/// per link; a zero reduced cost resolves to z = 0.
Eigen::VectorXd dual_subproblem(const NodeShare& share, const Eigen::VectorXd& lambda);

struct DualState {
  Eigen::VectorXd lambda;
  int iteration = 0;
};

/// lambda <- max(0, lambda + step * h).
DualState dual_master_step(DualState state, const Eigen::VectorXd& h, double step);

/// Sum of per-node h contributions computed exactly and rounded once, so the
/// result does not depend on the summation order.
Eigen::VectorXd aggregate_exact(const std::vector<Eigen::VectorXd>& parts);

/// Raises each violated cut by deficit / |support| on every link of its
/// support (max over cuts per link), clamped at M.
Eigen::VectorXd raise_to_feasibility(const Polytope& polytope, const Eigen::VectorXd& z);

/// g(lambda) = sum f(z) + lambda . h(z) for the subproblem minimizers z.
double dual_value(const RepairInstance& instance, const Eigen::VectorXd& z,
                  const Eigen::VectorXd& lambda, const Eigen::VectorXd& h);

struct TraceRow {
  int iteration = 0;
  double sigma_c = 0.0;
  double max_violation = 0.0;
  double dual_value = std::numeric_limits<double>::quiet_NaN();
  long messages = 0;
};

struct ConvergenceTrace {
  std::vector<TraceRow> rows;

  /// Header: iteration,sigma_c,max_violation,dual_value,messages
  std::string to_csv() const;
  /// First iteration with |sigma_c - optimum| <= rel * |optimum|.
  std::optional<int> first_within(double optimum, double rel) const;
};

struct DecompResult {
  Eigen::VectorXd z;
  ConvergenceTrace trace;
  bool converged = false;  // stopped by epsilon rather than max_iters
};

/// True when rows k-1 and k trigger the epsilon stop.
bool should_stop(const ConvergenceTrace& trace, const StopRule& stop);

/// Primal decomposition with every node's subproblem and the master step evaluated
/// in-process. max_iters = 0 returns z = M*1.
DecompResult run_primal(const RepairInstance& instance, const Polytope& polytope,
                        const StepRule& step = {}, const StopRule& stop = {});

/// Dual decomposition. Raw iterates may violate the cuts; the returned z is the
/// running average of the iterates raised to feasibility, and sigma_c in the
/// trace is its cost.
DecompResult run_dual(const RepairInstance& instance, const Polytope& polytope,
                      const StepRule& step = {}, const StopRule& stop = {},
                      std::optional<Eigen::VectorXd> initial_lambda = {});

/// Scatter per-node owned values into a full link vector.
Eigen::VectorXd assemble(const std::vector<NodeShare>& shares,
                         const std::vector<Eigen::VectorXd>& owned, std::size_t num_links);

}  // namespace dsr
