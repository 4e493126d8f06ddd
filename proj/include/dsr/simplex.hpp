#pragma once

#include <dsr/rational.hpp>

#include <stdexcept>
#include <vector>

namespace dsr {

enum class LpStatus { kOptimal, kInfeasible, kUnbounded };
enum class RowSense { kLessEqual, kGreaterEqual, kEqual };

/// minimize cost^T x  subject to  rows x (sense) rhs,  x >= 0.
template <typename Scalar>
struct LinearProgram {
  Vector<Scalar> cost;
  Matrix<Scalar> rows;
  Vector<Scalar> rhs;
  std::vector<RowSense> senses;
};

/// `duals` are the row multipliers y with reduced costs cost - rows^T y >= 0
/// at optimality: y_i >= 0 on >= rows, y_i <= 0 on <= rows, free on = rows.
template <typename Scalar>
struct LpResult {
  LpStatus status = LpStatus::kInfeasible;
  Vector<Scalar> x;
  Scalar objective{0};
  Vector<Scalar> duals;
};

namespace detail {

/// Dense two-phase tableau simplex with Bland's rule. Each row owns one unit
/// column (its slack for <= rows, otherwise its artificial) from which the
/// row dual is read back as minus the column's reduced cost.
template <typename Scalar>
class Tableau {
  using Traits = ScalarTraits<Scalar>;

 public:
  explicit Tableau(const LinearProgram<Scalar>& lp)
      : m_(lp.rows.rows()), n_(lp.rows.cols()), flipped_(static_cast<std::size_t>(m_), false) {
    if (lp.cost.size() != n_ || lp.rhs.size() != m_ ||
        lp.senses.size() != static_cast<std::size_t>(m_)) {
      throw std::invalid_argument("linear program dimensions disagree");
    }
    std::vector<RowSense> senses = lp.senses;
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (lp.rhs(i) < 0) {
        flipped_[static_cast<std::size_t>(i)] = true;
        auto& s = senses[static_cast<std::size_t>(i)];
        if (s == RowSense::kLessEqual) {
          s = RowSense::kGreaterEqual;
        } else if (s == RowSense::kGreaterEqual) {
          s = RowSense::kLessEqual;
        }
      }
    }
    Eigen::Index slack_count = 0;
    Eigen::Index artificial_count = 0;
    for (RowSense s : senses) {
      if (s != RowSense::kEqual) ++slack_count;
      if (s != RowSense::kLessEqual) ++artificial_count;
    }
    artificial_begin_ = n_ + slack_count;
    cols_ = artificial_begin_ + artificial_count;
    t_ = Matrix<Scalar>::Zero(m_ + 1, cols_ + 1);
    cost_ = Vector<Scalar>::Zero(cols_);
    cost_.head(n_) = lp.cost;
    basis_.resize(static_cast<std::size_t>(m_));
    unit_.resize(static_cast<std::size_t>(m_));

    Eigen::Index next_slack = n_;
    Eigen::Index next_artificial = artificial_begin_;
    for (Eigen::Index i = 0; i < m_; ++i) {
      const bool flip = flipped_[static_cast<std::size_t>(i)];
      for (Eigen::Index j = 0; j < n_; ++j) t_(i, j) = flip ? Scalar(-lp.rows(i, j)) : lp.rows(i, j);
      t_(i, cols_) = flip ? Scalar(-lp.rhs(i)) : lp.rhs(i);
      const RowSense s = senses[static_cast<std::size_t>(i)];
      if (s == RowSense::kLessEqual) {
        t_(i, next_slack) = 1;
        basis_[static_cast<std::size_t>(i)] = next_slack;
        unit_[static_cast<std::size_t>(i)] = next_slack++;
      } else {
        if (s == RowSense::kGreaterEqual) t_(i, next_slack++) = -1;
        t_(i, next_artificial) = 1;
        basis_[static_cast<std::size_t>(i)] = next_artificial;
        unit_[static_cast<std::size_t>(i)] = next_artificial++;
      }
    }
  }

  LpResult<Scalar> solve() {
    LpResult<Scalar> result;
    if (artificial_begin_ < cols_) {
      Vector<Scalar> phase1 = Vector<Scalar>::Zero(cols_);
      phase1.tail(cols_ - artificial_begin_).setOnes();
      price(phase1);
      iterate(/*allow_artificial=*/true);
      if (Traits::is_positive(Scalar(-t_(m_, cols_)))) {
        result.status = LpStatus::kInfeasible;
        return result;
      }
      evict_artificials();
    }
    price(cost_);
    if (!iterate(/*allow_artificial=*/false)) {
      result.status = LpStatus::kUnbounded;
      return result;
    }
    result.status = LpStatus::kOptimal;
    result.x = Vector<Scalar>::Zero(n_);
    for (Eigen::Index i = 0; i < m_; ++i) {
      const Eigen::Index b = basis_[static_cast<std::size_t>(i)];
      if (b < n_) result.x(b) = t_(i, cols_);
    }
    result.objective = Scalar(0);
    for (Eigen::Index j = 0; j < n_; ++j) result.objective += cost_(j) * result.x(j);
    result.duals = Vector<Scalar>(m_);
    for (Eigen::Index i = 0; i < m_; ++i) {
      Scalar y = -t_(m_, unit_[static_cast<std::size_t>(i)]);
      result.duals(i) = flipped_[static_cast<std::size_t>(i)] ? Scalar(-y) : y;
    }
    return result;
  }

 private:
  // Objective row: reduced costs for the current basis and -c_B^T x_B.
  void price(const Vector<Scalar>& c) {
    for (Eigen::Index j = 0; j <= cols_; ++j) t_(m_, j) = j < cols_ ? c(j) : Scalar(0);
    for (Eigen::Index i = 0; i < m_; ++i) {
      const Scalar& cb = c(basis_[static_cast<std::size_t>(i)]);
      if (!Traits::is_zero(cb)) t_.row(m_) -= cb * t_.row(i);
    }
  }

  void pivot(Eigen::Index row, Eigen::Index col) {
    const Scalar p = t_(row, col);
    t_.row(row) /= p;
    for (Eigen::Index i = 0; i <= m_; ++i) {
      if (i == row) continue;
      const Scalar f = t_(i, col);
      if (!Traits::is_zero(f)) t_.row(i) -= f * t_.row(row);
    }
    basis_[static_cast<std::size_t>(row)] = col;
  }

  // False when unbounded.
  bool iterate(bool allow_artificial) {
    const Eigen::Index limit = allow_artificial ? cols_ : artificial_begin_;
    while (true) {
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < limit; ++j) {
        if (Traits::is_negative(t_(m_, j))) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;
      Eigen::Index leave = -1;
      Scalar best{0};
      for (Eigen::Index i = 0; i < m_; ++i) {
        if (!Traits::is_positive(t_(i, enter))) continue;
        Scalar ratio = t_(i, cols_) / t_(i, enter);
        if (leave < 0 || ratio < best ||
            (ratio == best && basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)])) {
          leave = i;
          best = ratio;
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
  }

  void evict_artificials() {
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (basis_[static_cast<std::size_t>(i)] < artificial_begin_) continue;
      for (Eigen::Index j = 0; j < artificial_begin_; ++j) {
        if (!Traits::is_zero(t_(i, j))) {
          pivot(i, j);
          break;
        }
      }
      // A row without nonzero structural entries is redundant; its
      // artificial stays basic at zero.
    }
  }

  Eigen::Index m_;
  Eigen::Index n_;
  Eigen::Index cols_ = 0;
  Eigen::Index artificial_begin_ = 0;
  std::vector<bool> flipped_;
  Matrix<Scalar> t_;
  Vector<Scalar> cost_;
  std::vector<Eigen::Index> basis_;
  std::vector<Eigen::Index> unit_;
};

}  // namespace detail

template <typename Scalar>
LpResult<Scalar> solve_simplex(const LinearProgram<Scalar>& lp) {
  return detail::Tableau<Scalar>(lp).solve();
}

/// Optimal solution that is lexicographically smallest among all optimal
/// vertices, found by fixing the objective and minimizing x_0, x_1, ... in
/// turn. Duals come from the first solve; any optimal dual satisfies
/// complementary slackness with every optimal primal.
template <typename Scalar>
LpResult<Scalar> solve_simplex_lexmin(const LinearProgram<Scalar>& lp) {
  LpResult<Scalar> first = solve_simplex(lp);
  if (first.status != LpStatus::kOptimal) return first;

  const Eigen::Index m = lp.rows.rows();
  const Eigen::Index n = lp.rows.cols();
  LinearProgram<Scalar> fixed;
  fixed.rows = Matrix<Scalar>::Zero(m + 1 + n, n);
  fixed.rows.topRows(m) = lp.rows;
  fixed.rows.row(m) = lp.cost.transpose();
  fixed.rhs = Vector<Scalar>::Zero(m + 1 + n);
  fixed.rhs.head(m) = lp.rhs;
  fixed.rhs(m) = first.objective;
  fixed.senses = lp.senses;
  fixed.senses.push_back(RowSense::kEqual);

  Vector<Scalar> x = first.x;
  for (Eigen::Index j = 0; j < n; ++j) {
    LinearProgram<Scalar> step;
    const Eigen::Index rows = m + 1 + j;
    step.rows = fixed.rows.topRows(rows);
    step.rhs = fixed.rhs.head(rows);
    step.senses = fixed.senses;
    step.cost = Vector<Scalar>::Zero(n);
    step.cost(j) = 1;
    LpResult<Scalar> r = solve_simplex(step);
    if (r.status != LpStatus::kOptimal) break;  // only reachable through round-off
    x = r.x;
    fixed.rows(m + 1 + j, j) = 1;
    fixed.rhs(m + 1 + j) = x(j);
    fixed.senses.push_back(RowSense::kEqual);
  }
  first.x = x;
  return first;
}

}  // namespace dsr
