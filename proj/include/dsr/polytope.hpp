#pragma once

#include <dsr/flowgraph.hpp>
#include <dsr/model.hpp>

#include <string>
#include <vector>

namespace dsr {

/// sum_{l in support} z_l >= rhs, i.e. h(z) = rhs - sum z <= 0.
struct CutConstraint {
  std::vector<std::size_t> support;  // ascending link indices
  Rational rhs;

  friend bool operator==(const CutConstraint&, const CutConstraint&) = default;
  bool contains(std::size_t link) const;
};

/// Cut constraints plus the box 0 <= z <= M.
struct Polytope {
  std::vector<CutConstraint> constraints;
  Rational upper;
  std::size_t num_links = 0;

  std::size_t size() const { return constraints.size(); }
  /// R x |links| 0/1 coefficient matrix.
  template <typename Scalar>
  Matrix<Scalar> coefficients() const;
  template <typename Scalar>
  Vector<Scalar> rhs() const;
};

struct EnumerationLimits {
  std::size_t max_vertices = 40;
  std::size_t max_cuts = std::size_t{1} << 22;
};

/// Every S/DC bipartition that cuts no infinite edge, for every collector
/// choice, yields sum(Var edges crossing) >= M - alpha * (storage edges
/// crossing). Vacuous constraints (rhs <= 0) are dropped and the result is
/// reduced. Throws SizeError past the limits.
Polytope enumerate_constraints(const RepairInstance& instance, const EnumerationLimits& limits = {});

/// Drops exact duplicates and constraints dominated by one with a subset
/// support and at least the same rhs. Keeps the input order otherwise.
std::vector<CutConstraint> reduce(const std::vector<CutConstraint>& constraints);

template <typename Scalar>
struct Violation {
  Vector<Scalar> per_constraint;  // h^r(z); positive means violated
  Scalar max;                     // 0 when there are no constraints
};

template <typename Scalar>
Violation<Scalar> violation(const Polytope& polytope, const Vector<Scalar>& z) {
  if (static_cast<std::size_t>(z.size()) != polytope.num_links) {
    throw StructuralError("subgraph size does not match polytope");
  }
  Violation<Scalar> out{Vector<Scalar>(static_cast<Eigen::Index>(polytope.size())), Scalar(0)};
  for (std::size_t r = 0; r < polytope.size(); ++r) {
    const CutConstraint& c = polytope.constraints[r];
    Scalar h = from_rational<Scalar>(c.rhs);
    for (std::size_t l : c.support) h -= z(static_cast<Eigen::Index>(l));
    out.per_constraint(static_cast<Eigen::Index>(r)) = h;
    if (r == 0 || h > out.max) out.max = h;
  }
  return out;
}

/// One line per constraint: "sum(z(3,5)) >= 2".
std::string export_text(const Polytope& polytope, const RepairInstance& instance);

}  // namespace dsr
