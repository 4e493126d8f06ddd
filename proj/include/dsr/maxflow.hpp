#pragma once

#include <dsr/rational.hpp>

#include <algorithm>
#include <limits>
#include <queue>
#include <vector>

namespace dsr {

/// Dinic's algorithm on an explicit residual network. Exact when Scalar is
/// Rational.
template <typename Scalar>
class MaxFlow {
 public:
  explicit MaxFlow(int vertices) : adjacency_(static_cast<std::size_t>(vertices)) {}

  int add_edge(int from, int to, Scalar capacity) {
    const int id = static_cast<int>(edges_.size());
    edges_.push_back({to, std::move(capacity)});
    edges_.push_back({from, Scalar(0)});
    adjacency_[static_cast<std::size_t>(from)].push_back(id);
    adjacency_[static_cast<std::size_t>(to)].push_back(id + 1);
    return id;
  }

  Scalar run(int source, int sink) {
    Scalar total(0);
    while (build_levels(source, sink)) {
      next_.assign(adjacency_.size(), 0);
      while (true) {
        Scalar pushed = augment(source, sink, Scalar(-1));
        if (!ScalarTraits<Scalar>::is_positive(pushed)) break;
        total += pushed;
      }
    }
    return total;
  }

  /// Vertices reachable from the source in the final residual network,
  /// i.e. the source side of a minimum cut.
  std::vector<bool> source_side(int source) const {
    std::vector<bool> seen(adjacency_.size(), false);
    std::queue<int> todo;
    todo.push(source);
    seen[static_cast<std::size_t>(source)] = true;
    while (!todo.empty()) {
      int v = todo.front();
      todo.pop();
      for (int id : adjacency_[static_cast<std::size_t>(v)]) {
        const Edge& e = edges_[static_cast<std::size_t>(id)];
        if (ScalarTraits<Scalar>::is_positive(e.residual) && !seen[static_cast<std::size_t>(e.to)]) {
          seen[static_cast<std::size_t>(e.to)] = true;
          todo.push(e.to);
        }
      }
    }
    return seen;
  }

 private:
  struct Edge {
    int to;
    Scalar residual;
  };

  bool build_levels(int source, int sink) {
    level_.assign(adjacency_.size(), -1);
    std::queue<int> todo;
    level_[static_cast<std::size_t>(source)] = 0;
    todo.push(source);
    while (!todo.empty()) {
      int v = todo.front();
      todo.pop();
      for (int id : adjacency_[static_cast<std::size_t>(v)]) {
        const Edge& e = edges_[static_cast<std::size_t>(id)];
        if (ScalarTraits<Scalar>::is_positive(e.residual) && level_[static_cast<std::size_t>(e.to)] < 0) {
          level_[static_cast<std::size_t>(e.to)] = level_[static_cast<std::size_t>(v)] + 1;
          todo.push(e.to);
        }
      }
    }
    return level_[static_cast<std::size_t>(sink)] >= 0;
  }

  // `limit` < 0 means unbounded.
  Scalar augment(int v, int sink, const Scalar& limit) {
    if (v == sink) return limit;
    auto& cursor = next_[static_cast<std::size_t>(v)];
    const auto& out = adjacency_[static_cast<std::size_t>(v)];
    for (; cursor < out.size(); ++cursor) {
      const int id = out[cursor];
      Edge& e = edges_[static_cast<std::size_t>(id)];
      if (!ScalarTraits<Scalar>::is_positive(e.residual) ||
          level_[static_cast<std::size_t>(e.to)] != level_[static_cast<std::size_t>(v)] + 1) {
        continue;
      }
      Scalar cap = e.residual;
      if (!(limit < 0) && limit < cap) cap = limit;
      Scalar pushed = augment(e.to, sink, cap);
      if (ScalarTraits<Scalar>::is_positive(pushed)) {
        e.residual -= pushed;
        edges_[static_cast<std::size_t>(id ^ 1)].residual += pushed;
        return pushed;
      }
    }
    return Scalar(0);
  }

  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adjacency_;
  std::vector<int> level_;
  std::vector<std::size_t> next_;
};

}  // namespace dsr
