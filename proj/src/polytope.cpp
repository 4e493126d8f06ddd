#include <dsr/polytope.hpp>

#include <algorithm>
#include <set>
#include <sstream>

namespace dsr {

bool CutConstraint::contains(std::size_t link) const {
  return std::binary_search(support.begin(), support.end(), link);
}

template <typename Scalar>
Matrix<Scalar> Polytope::coefficients() const {
  Matrix<Scalar> a = Matrix<Scalar>::Zero(static_cast<Eigen::Index>(size()),
                                          static_cast<Eigen::Index>(num_links));
  for (std::size_t r = 0; r < size(); ++r) {
    for (std::size_t l : constraints[r].support) {
      a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(l)) = Scalar(1);
    }
  }
  return a;
}

template <typename Scalar>
Vector<Scalar> Polytope::rhs() const {
  Vector<Scalar> b(static_cast<Eigen::Index>(size()));
  for (std::size_t r = 0; r < size(); ++r) {
    b(static_cast<Eigen::Index>(r)) = from_rational<Scalar>(constraints[r].rhs);
  }
  return b;
}

template MatrixQ Polytope::coefficients<Rational>() const;
template Eigen::MatrixXd Polytope::coefficients<double>() const;
template VectorQ Polytope::rhs<Rational>() const;
template Eigen::VectorXd Polytope::rhs<double>() const;

namespace {

enum Side : signed char { kUnset = -1, kSourceSide = 0, kSinkSide = 1 };

struct Edge {
  int from;
  int to;
};

// Forces sides along infinite edges; false on an infinite edge crossing
// from the source side to the sink side.
bool propagate(std::vector<signed char>& side, const std::vector<Edge>& infinite) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (const Edge& e : infinite) {
      signed char& u = side[static_cast<std::size_t>(e.from)];
      signed char& v = side[static_cast<std::size_t>(e.to)];
      if (u == kSourceSide && v == kSinkSide) return false;
      if (u == kSourceSide && v == kUnset) {
        v = kSourceSide;
        changed = true;
      } else if (v == kSinkSide && u == kUnset) {
        u = kSinkSide;
        changed = true;
      }
    }
  }
  return true;
}

class CutEnumerator {
 public:
  CutEnumerator(const FlowGraph& graph, const EnumerationLimits& limits,
                std::set<std::pair<std::vector<std::size_t>, Rational>>& out)
      : graph_(graph), limits_(limits), out_(out) {
    for (const FlowEdge& e : graph.edges()) {
      if (e.capacity.kind == Capacity::Kind::kInfinite) base_infinite_.push_back({e.from, e.to});
    }
  }

  void run(const CollectorChoice& dc) {
    infinite_ = base_infinite_;
    for (NodeId node : dc.nodes) infinite_.push_back({graph_.out_vertex(node), graph_.collector()});
    std::vector<signed char> side(graph_.vertices().size(), kUnset);
    side[static_cast<std::size_t>(graph_.source())] = kSourceSide;
    side[static_cast<std::size_t>(graph_.collector())] = kSinkSide;
    if (propagate(side, infinite_)) descend(side);
  }

 private:
  void descend(std::vector<signed char>& side) {
    auto unset = std::find(side.begin(), side.end(), kUnset);
    if (unset == side.end()) {
      emit(side);
      return;
    }
    const std::size_t v = static_cast<std::size_t>(unset - side.begin());
    for (signed char choice : {kSourceSide, kSinkSide}) {
      std::vector<signed char> next = side;
      next[v] = choice;
      if (propagate(next, infinite_)) descend(next);
    }
  }

  void emit(const std::vector<signed char>& side) {
    if (++leaves_ > limits_.max_cuts) {
      throw SizeError("cut enumeration exceeded " + std::to_string(limits_.max_cuts) +
                      " bipartitions; use the max-flow feasibility oracle instead");
    }
    std::vector<std::size_t> support;
    long storage = 0;
    for (const FlowEdge& e : graph_.edges()) {
      if (side[static_cast<std::size_t>(e.from)] != kSourceSide ||
          side[static_cast<std::size_t>(e.to)] != kSinkSide) {
        continue;
      }
      if (e.capacity.kind == Capacity::Kind::kVar) support.push_back(e.capacity.link);
      if (e.capacity.kind == Capacity::Kind::kStorage) ++storage;
    }
    Rational rhs = graph_.file_size() - graph_.alpha() * storage;
    if (rhs <= 0) return;
    std::sort(support.begin(), support.end());
    out_.insert({std::move(support), std::move(rhs)});
  }

  const FlowGraph& graph_;
  const EnumerationLimits& limits_;
  std::set<std::pair<std::vector<std::size_t>, Rational>>& out_;
  std::vector<Edge> base_infinite_;
  std::vector<Edge> infinite_;
  std::size_t leaves_ = 0;
};

}  // namespace

Polytope enumerate_constraints(const RepairInstance& instance, const EnumerationLimits& limits) {
  FlowGraph graph = build_flow_graph(instance);
  if (graph.vertices().size() > limits.max_vertices) {
    throw SizeError("flow graph has " + std::to_string(graph.vertices().size()) +
                    " vertices; exhaustive cut enumeration is limited to " +
                    std::to_string(limits.max_vertices) + ", use the max-flow feasibility oracle");
  }
  std::set<std::pair<std::vector<std::size_t>, Rational>> found;
  CutEnumerator enumerator(graph, limits, found);
  for (const CollectorChoice& dc : enumerate_collectors(instance)) enumerator.run(dc);

  // A cut with no Var edges and rhs > 0 is unsatisfiable for every z.
  for (const auto& [support, rhs] : found) {
    if (support.empty()) throw InfeasibleInstance("a cut without repair links needs " + rhs.str() + " more fragments");
  }

  std::vector<CutConstraint> all;
  for (const auto& [support, rhs] : found) all.push_back({support, rhs});
  // Support order first; for equal supports the larger rhs comes first.
  std::stable_sort(all.begin(), all.end(), [](const CutConstraint& a, const CutConstraint& b) {
    if (a.support != b.support) return a.support < b.support;
    return a.rhs > b.rhs;
  });
  return Polytope{reduce(all), instance.file_size(), instance.num_links()};
}

std::vector<CutConstraint> reduce(const std::vector<CutConstraint>& constraints) {
  std::vector<CutConstraint> kept;
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    const CutConstraint& c = constraints[i];
    bool dominated = false;
    for (std::size_t j = 0; j < constraints.size() && !dominated; ++j) {
      if (i == j) continue;
      const CutConstraint& d = constraints[j];
      if (!std::includes(c.support.begin(), c.support.end(), d.support.begin(), d.support.end())) {
        continue;
      }
      if (c.rhs > d.rhs) continue;
      const bool identical = c.support == d.support && c.rhs == d.rhs;
      dominated = !identical || j < i;
    }
    if (!dominated) kept.push_back(c);
  }
  return kept;
}

std::string export_text(const Polytope& polytope, const RepairInstance& instance) {
  std::ostringstream out;
  for (const CutConstraint& c : polytope.constraints) {
    out << "sum(";
    for (std::size_t i = 0; i < c.support.size(); ++i) {
      if (i) out << ',';
      out << 'z' << to_string(instance.links()[c.support[i]]);
    }
    out << ") >= " << c.rhs << '\n';
  }
  return out.str();
}

}  // namespace dsr
