#include <dsr/decomp.hpp>
#include <dsr/simplex.hpp>
#include <dsr/solver.hpp>

#include <algorithm>
#include <numeric>
#include <sstream>

namespace dsr {

Eigen::VectorXd NodeShare::constant_d() const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(constant.size()));
  for (std::size_t r = 0; r < constant.size(); ++r) out(static_cast<Eigen::Index>(r)) = to_double(constant[r]);
  return out;
}

Eigen::VectorXd NodeShare::h(const Eigen::VectorXd& z_owned) const {
  Eigen::VectorXd out = constant_d();
  if (z_owned.size() > 0) out -= cover * z_owned;
  return out;
}

Eigen::VectorXd NodeShare::lower_bounds() const {
  return h(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(owned_links.size()), upper));
}

bool NodeShare::all_linear() const {
  return std::all_of(costs.begin(), costs.end(), [](const CostFunction& f) { return f.is_linear(); });
}

std::vector<NodeShare> make_shares(const RepairInstance& instance, const Polytope& polytope) {
  const auto cuts = static_cast<Eigen::Index>(polytope.size());
  const Rational parts(instance.n() - 1);
  std::vector<NodeShare> shares;
  for (NodeId node : instance.survivors()) {
    NodeShare s;
    s.node = node;
    s.owned_links = instance.owned_links(node);
    s.upper = to_double(polytope.upper);
    s.cover = Eigen::MatrixXd::Zero(cuts, static_cast<Eigen::Index>(s.owned_links.size()));
    for (std::size_t j = 0; j < s.owned_links.size(); ++j) {
      s.costs.push_back(instance.cost(s.owned_links[j]));
      for (Eigen::Index r = 0; r < cuts; ++r) {
        if (polytope.constraints[static_cast<std::size_t>(r)].contains(s.owned_links[j])) {
          s.cover(r, static_cast<Eigen::Index>(j)) = 1.0;
        }
      }
    }
    for (const CutConstraint& c : polytope.constraints) s.constant.push_back(c.rhs / parts);
    shares.push_back(std::move(s));
  }
  return shares;
}

SubproblemSolution primal_subproblem(const NodeShare& share, const Eigen::VectorXd& t) {
  constexpr double kTol = 1e-9;
  const Eigen::Index cuts = share.constraints();
  const auto links = static_cast<Eigen::Index>(share.owned_links.size());
  // cover z >= constant - t
  const Eigen::VectorXd demand = share.constant_d() - t;
  std::vector<Eigen::Index> rows;
  for (Eigen::Index r = 0; r < cuts; ++r) {
    const double reach = links > 0 ? share.cover.row(r).sum() * share.upper : 0.0;
    if (demand(r) > reach + kTol * (1.0 + std::abs(reach))) {
      throw InfeasibleAllocation("node " + std::to_string(share.node) + " cannot meet its allocation");
    }
    if (links > 0 && share.cover.row(r).sum() > 0.0) rows.push_back(r);
  }

  SubproblemSolution out{Eigen::VectorXd::Zero(links), Eigen::VectorXd::Zero(cuts)};
  if (links == 0) return out;
  const auto active = static_cast<Eigen::Index>(rows.size());

  if (share.all_linear()) {
    LinearProgram<double> lp;
    lp.cost = Eigen::VectorXd(links);
    for (Eigen::Index j = 0; j < links; ++j) lp.cost(j) = to_double(share.costs[static_cast<std::size_t>(j)].coeffs()[0]);
    lp.rows = Eigen::MatrixXd::Zero(active + links, links);
    lp.rhs = Eigen::VectorXd(active + links);
    for (Eigen::Index a = 0; a < active; ++a) {
      lp.rows.row(a) = share.cover.row(rows[static_cast<std::size_t>(a)]);
      lp.rhs(a) = demand(rows[static_cast<std::size_t>(a)]);
    }
    lp.rows.bottomRows(links) = Eigen::MatrixXd::Identity(links, links);
    lp.rhs.tail(links).setConstant(share.upper);
    lp.senses.assign(static_cast<std::size_t>(active), RowSense::kGreaterEqual);
    lp.senses.resize(static_cast<std::size_t>(active + links), RowSense::kLessEqual);
    LpResult<double> r = solve_simplex(lp);
    if (r.status != LpStatus::kOptimal) {
      throw InfeasibleAllocation("node " + std::to_string(share.node) + " subproblem is infeasible");
    }
    out.z = r.x.cwiseMax(0.0).cwiseMin(share.upper);
    for (Eigen::Index a = 0; a < active; ++a) {
      out.lambda(rows[static_cast<std::size_t>(a)]) = std::max(0.0, r.duals(a));
    }
    return out;
  }

  ConvexProblem problem;
  problem.costs = share.costs;
  problem.cover = Eigen::MatrixXd(active, links);
  problem.demand = Eigen::VectorXd(active);
  for (Eigen::Index a = 0; a < active; ++a) {
    problem.cover.row(a) = share.cover.row(rows[static_cast<std::size_t>(a)]);
    problem.demand(a) = std::min(demand(rows[static_cast<std::size_t>(a)]), problem.cover.row(a).sum() * share.upper);
  }
  problem.upper = share.upper;
  ConvexResult r;
  try {
    r = minimize_convex(problem, 1e-10, 100000);
  } catch (const ConvergenceError& e) {
    r = e.best();
  } catch (const InfeasibleInstance& e) {
    throw InfeasibleAllocation(e.what());
  }
  out.z = r.z;
  for (Eigen::Index a = 0; a < active; ++a) out.lambda(rows[static_cast<std::size_t>(a)]) = std::max(0.0, r.multipliers(a));
  return out;
}

PrimalState initial_primal_state(const std::vector<NodeShare>& shares) {
  if (shares.empty()) throw StructuralError("no surviving nodes");
  const auto n = static_cast<Eigen::Index>(shares.size());
  const Eigen::Index cuts = shares.front().constraints();
  PrimalState state;
  state.lower = Eigen::MatrixXd(n, cuts);
  for (Eigen::Index i = 0; i < n; ++i) state.lower.row(i) = shares[static_cast<std::size_t>(i)].lower_bounds().transpose();
  state.lambda = Eigen::MatrixXd::Zero(n, cuts);
  state.t = Eigen::MatrixXd(n, cuts);
  const Eigen::VectorXd slack = -state.lower.colwise().sum().transpose();
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    state.t.row(i) = state.lower.row(i) + slack.transpose() / static_cast<double>(n);
  }
  state.t.row(n - 1) = -state.t.topRows(n - 1).colwise().sum();
  return state;
}

Eigen::VectorXd proposed_allocation(const Eigen::VectorXd& t, const Eigen::VectorXd& lambda,
                                    const Eigen::VectorXd& lambda_coordinator, double step) {
  Eigen::VectorXd out(t.size());
  for (Eigen::Index r = 0; r < t.size(); ++r) out(r) = t(r) + step * (lambda(r) - lambda_coordinator(r));
  return out;
}

Eigen::VectorXd projection_shift(const Eigen::MatrixXd& proposed, const Eigen::MatrixXd& lower,
                                 const Eigen::VectorXd& lower_coordinator) {
  const Eigen::Index free = proposed.rows();
  const Eigen::Index cuts = proposed.cols();
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(cuts);
  for (Eigen::Index r = 0; r < cuts; ++r) {
    const double cap = -lower_coordinator(r);
    double at_zero = 0.0;
    for (Eigen::Index i = 0; i < free; ++i) at_zero += std::max(lower(i, r), proposed(i, r));
    if (at_zero <= cap) continue;

    // sum_i max(L_i, y_i - mu) is piecewise linear in mu with breakpoints
    // y_i - L_i; walk them in decreasing order.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(free));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      const double da = proposed(a, r) - lower(a, r);
      const double db = proposed(b, r) - lower(b, r);
      return da != db ? da > db : a < b;
    });
    double lower_sum = 0.0;
    for (Eigen::Index i = 0; i < free; ++i) lower_sum += lower(i, r);
    double top_sum = 0.0;
    double value = 0.0;
    for (Eigen::Index j = 0; j < free; ++j) {
      const Eigen::Index i = order[static_cast<std::size_t>(j)];
      top_sum += proposed(i, r);
      lower_sum -= lower(i, r);
      value = (top_sum + lower_sum - cap) / static_cast<double>(j + 1);
      const double next = j + 1 < free ? proposed(order[static_cast<std::size_t>(j + 1)], r) -
                                             lower(order[static_cast<std::size_t>(j + 1)], r)
                                       : -std::numeric_limits<double>::infinity();
      if (value >= next) break;
    }
    mu(r) = std::max(0.0, value);
  }
  return mu;
}

Eigen::VectorXd shifted_allocation(const Eigen::VectorXd& proposed, const Eigen::VectorXd& lower,
                                   const Eigen::VectorXd& mu) {
  Eigen::VectorXd out(proposed.size());
  for (Eigen::Index r = 0; r < proposed.size(); ++r) out(r) = std::max(lower(r), proposed(r) - mu(r));
  return out;
}

namespace {

// Coordinator share as minus the sum of the others, in row order.
Eigen::VectorXd coordinator_allocation(const Eigen::MatrixXd& t_free) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(t_free.cols());
  for (Eigen::Index i = 0; i < t_free.rows(); ++i) sum += t_free.row(i).transpose();
  return -sum;
}

}  // namespace

PrimalState project_t(PrimalState state) {
  const Eigen::Index n = state.t.rows();
  const Eigen::Index free = n - 1;
  const Eigen::MatrixXd proposed = state.t.topRows(free);
  const Eigen::MatrixXd lower = state.lower.topRows(free);
  const Eigen::VectorXd mu = projection_shift(proposed, lower, state.lower.row(n - 1).transpose());
  for (Eigen::Index i = 0; i < free; ++i) {
    state.t.row(i) = shifted_allocation(proposed.row(i).transpose(), lower.row(i).transpose(), mu).transpose();
  }
  state.t.row(n - 1) = coordinator_allocation(state.t.topRows(free)).transpose();
  return state;
}

PrimalState primal_master_step(PrimalState state, double step) {
  const Eigen::Index n = state.t.rows();
  const Eigen::VectorXd lambda_n = state.lambda.row(n - 1).transpose();
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    state.t.row(i) = proposed_allocation(state.t.row(i).transpose(), state.lambda.row(i).transpose(), lambda_n, step)
                         .transpose();
  }
  state = project_t(std::move(state));
  ++state.iteration;
  return state;
}

Eigen::VectorXd dual_subproblem(const NodeShare& share, const Eigen::VectorXd& lambda) {
  const auto links = static_cast<Eigen::Index>(share.owned_links.size());
  Eigen::VectorXd z(links);
  for (Eigen::Index j = 0; j < links; ++j) {
    double slope = 0.0;
    for (Eigen::Index r = 0; r < share.constraints(); ++r) {
      if (share.cover(r, j) != 0.0) slope += lambda(r);
    }
    z(j) = share.costs[static_cast<std::size_t>(j)].argmin_tilted(slope, share.upper);
  }
  return z;
}

DualState dual_master_step(DualState state, const Eigen::VectorXd& h, double step) {
  for (Eigen::Index r = 0; r < state.lambda.size(); ++r) {
    state.lambda(r) = std::max(0.0, state.lambda(r) + step * h(r));
  }
  ++state.iteration;
  return state;
}

Eigen::VectorXd aggregate_exact(const std::vector<Eigen::VectorXd>& parts) {
  if (parts.empty()) return {};
  const Eigen::Index size = parts.front().size();
  std::vector<Rational> sum(static_cast<std::size_t>(size), Rational(0));
  for (const Eigen::VectorXd& p : parts) {
    if (p.size() != size) throw StructuralError("aggregated vectors differ in size");
    for (Eigen::Index r = 0; r < size; ++r) sum[static_cast<std::size_t>(r)] += exact(p(r));
  }
  Eigen::VectorXd out(size);
  for (Eigen::Index r = 0; r < size; ++r) out(r) = to_double(sum[static_cast<std::size_t>(r)]);
  return out;
}

Eigen::VectorXd raise_to_feasibility(const Polytope& polytope, const Eigen::VectorXd& z) {
  const double upper = to_double(polytope.upper);
  Eigen::VectorXd raise = Eigen::VectorXd::Zero(z.size());
  const Violation<double> v = violation<double>(polytope, z);
  for (std::size_t r = 0; r < polytope.size(); ++r) {
    const double deficit = v.per_constraint(static_cast<Eigen::Index>(r));
    if (deficit <= 0.0) continue;
    const auto& support = polytope.constraints[r].support;
    const double each = deficit / static_cast<double>(support.size());
    for (std::size_t l : support) {
      raise(static_cast<Eigen::Index>(l)) = std::max(raise(static_cast<Eigen::Index>(l)), each);
    }
  }
  return (z + raise).cwiseMin(upper);
}

double dual_value(const RepairInstance& instance, const Eigen::VectorXd& z, const Eigen::VectorXd& lambda,
                  const Eigen::VectorXd& h) {
  return total_cost<double>(instance, z) + lambda.dot(h);
}

std::string ConvergenceTrace::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "iteration,sigma_c,max_violation,dual_value,messages\n";
  for (const TraceRow& row : rows) {
    out << row.iteration << ',' << row.sigma_c << ',' << row.max_violation << ',';
    if (std::isnan(row.dual_value)) {
      out << "nan";
    } else {
      out << row.dual_value;
    }
    out << ',' << row.messages << '\n';
  }
  return out.str();
}

std::optional<int> ConvergenceTrace::first_within(double optimum, double rel) const {
  for (const TraceRow& row : rows) {
    if (std::abs(row.sigma_c - optimum) <= rel * std::abs(optimum)) return row.iteration;
  }
  return std::nullopt;
}

bool should_stop(const ConvergenceTrace& trace, const StopRule& stop) {
  if (stop.epsilon <= 0.0 || trace.rows.size() < 2) return false;
  const TraceRow& last = trace.rows.back();
  const TraceRow& prev = trace.rows[trace.rows.size() - 2];
  return std::abs(last.sigma_c - prev.sigma_c) < stop.epsilon;
}

Eigen::VectorXd assemble(const std::vector<NodeShare>& shares, const std::vector<Eigen::VectorXd>& owned,
                         std::size_t num_links) {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_links));
  for (std::size_t i = 0; i < shares.size(); ++i) {
    for (std::size_t j = 0; j < shares[i].owned_links.size(); ++j) {
      z(static_cast<Eigen::Index>(shares[i].owned_links[j])) = owned[i](static_cast<Eigen::Index>(j));
    }
  }
  return z;
}

DecompResult run_primal(const RepairInstance& instance, const Polytope& polytope, const StepRule& step,
                        const StopRule& stop) {
  const std::vector<NodeShare> shares = make_shares(instance, polytope);
  PrimalState state = initial_primal_state(shares);
  DecompResult result;
  result.z = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(instance.num_links()), to_double(polytope.upper));

  for (int k = 1; k <= stop.max_iters; ++k) {
    std::vector<Eigen::VectorXd> owned;
    for (std::size_t i = 0; i < shares.size(); ++i) {
      SubproblemSolution s = primal_subproblem(shares[i], state.t.row(static_cast<Eigen::Index>(i)).transpose());
      state.lambda.row(static_cast<Eigen::Index>(i)) = s.lambda.transpose();
      owned.push_back(std::move(s.z));
    }
    result.z = assemble(shares, owned, instance.num_links());
    TraceRow row;
    row.iteration = k;
    row.sigma_c = total_cost<double>(instance, result.z);
    row.max_violation = violation<double>(polytope, result.z).max;
    result.trace.rows.push_back(row);
    if (should_stop(result.trace, stop)) {
      result.converged = true;
      break;
    }
    state = primal_master_step(std::move(state), step(k));
  }
  return result;
}

DecompResult run_dual(const RepairInstance& instance, const Polytope& polytope, const StepRule& step,
                      const StopRule& stop, std::optional<Eigen::VectorXd> initial_lambda) {
  const std::vector<NodeShare> shares = make_shares(instance, polytope);
  const auto cuts = static_cast<Eigen::Index>(polytope.size());
  const auto links = static_cast<Eigen::Index>(instance.num_links());
  DualState state{initial_lambda ? *initial_lambda : Eigen::VectorXd::Zero(cuts), 0};
  if (state.lambda.size() != cuts) throw StructuralError("initial multipliers do not match the constraints");

  DecompResult result;
  result.z = Eigen::VectorXd::Constant(links, to_double(polytope.upper));
  Eigen::VectorXd running = Eigen::VectorXd::Zero(links);
  for (int k = 1; k <= stop.max_iters; ++k) {
    std::vector<Eigen::VectorXd> owned;
    std::vector<Eigen::VectorXd> parts;
    for (const NodeShare& share : shares) {
      owned.push_back(dual_subproblem(share, state.lambda));
      parts.push_back(share.h(owned.back()));
    }
    const Eigen::VectorXd z = assemble(shares, owned, instance.num_links());
    const Eigen::VectorXd h = aggregate_exact(parts);
    running += z;
    result.z = raise_to_feasibility(polytope, running / static_cast<double>(k));

    TraceRow row;
    row.iteration = k;
    row.sigma_c = total_cost<double>(instance, result.z);
    row.max_violation = violation<double>(polytope, z).max;
    row.dual_value = dual_value(instance, z, state.lambda, h);
    result.trace.rows.push_back(row);
    if (should_stop(result.trace, stop)) {
      result.converged = true;
      break;
    }
    state = dual_master_step(std::move(state), h, step(k));
  }
  return result;
}

}  // namespace dsr
