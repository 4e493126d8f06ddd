#pragma once

#include <dsr/model.hpp>

#include <string>
#include <vector>

namespace dsr {

/// Symbolic edge capacity of the modified information flow graph.
struct Capacity {
  enum class Kind { kStorage, kInfinite, kVar };
  Kind kind = Kind::kInfinite;
  std::size_t link = 0;  // kVar only: index into RepairInstance::links()

  static Capacity storage() { return {Kind::kStorage, 0}; }
  static Capacity infinite() { return {Kind::kInfinite, 0}; }
  static Capacity var(std::size_t link) { return {Kind::kVar, link}; }
};

struct FlowVertex {
  enum class Kind { kSource, kIn, kOut, kCombiner, kCollector };
  Kind kind = Kind::kSource;
  NodeId node = 0;  // unused for source and collector
};

struct FlowEdge {
  int from = 0;
  int to = 0;
  Capacity capacity;
};

/// Modified information flow graph of one repair stage.
///
/// Per surviving node i: S -> in_i (inf), in_i -> out_i (alpha),
/// out_i -> x_i (inf). The combiner x_i merges stored and relayed data, so
/// forwarded traffic is not throttled by the relay's storage edge. Each
/// repair link (i, j) becomes x_i -> x_j, or x_i -> in_new when j is the new
/// node, with capacity z_ij. The new node has in_new -> out_new (alpha).
/// The data collector vertex is present; its edges depend on the query.
class FlowGraph {
 public:
  explicit FlowGraph(const RepairInstance& instance);

  const std::vector<FlowVertex>& vertices() const { return vertices_; }
  const std::vector<FlowEdge>& edges() const { return edges_; }
  int source() const { return 0; }
  int collector() const { return static_cast<int>(vertices_.size()) - 1; }
  int out_vertex(NodeId node) const;

  const Rational& alpha() const { return alpha_; }
  const Rational& file_size() const { return file_size_; }
  /// Stand-in for infinite capacity: (|links| + n) * M.
  const Rational& infinity() const { return infinity_; }
  std::size_t num_links() const { return num_links_; }

  /// Edge-list text, one "u -> v : capacity" line per edge.
  std::string dump(const RepairInstance& instance) const;
  std::string vertex_name(int v) const;

 private:
  std::vector<FlowVertex> vertices_;
  std::vector<FlowEdge> edges_;
  std::map<NodeId, int> out_index_;
  Rational alpha_;
  Rational file_size_;
  Rational infinity_;
  std::size_t num_links_ = 0;
};

/// A k-subset of {new node} U survivors; the new node is listed first.
struct CollectorChoice {
  std::vector<NodeId> nodes;
};

/// Throws InfeasibleInstance when no survivor can reach the new node.
FlowGraph build_flow_graph(const RepairInstance& instance);

/// All k-subsets that contain the new node, in lexicographic order of the
/// survivor part. Subsets of survivors only are unaffected by the repair.
std::vector<CollectorChoice> enumerate_collectors(const RepairInstance& instance);

/// Max flow from S to a collector attached with infinite edges to the out
/// vertices of `dc`, with Var capacities taken from z.
Rational max_flow_value(const FlowGraph& graph, const VectorQ& z, const CollectorChoice& dc);

/// True iff every collector choice receives flow >= M.
bool is_feasible_by_flow(const RepairInstance& instance, const VectorQ& z);
bool is_feasible_by_flow(const RepairInstance& instance, const FlowGraph& graph, const VectorQ& z);

}  // namespace dsr
