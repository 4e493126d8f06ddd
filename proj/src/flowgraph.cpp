#include <dsr/flowgraph.hpp>
#include <dsr/maxflow.hpp>

#include <sstream>

namespace dsr {

FlowGraph::FlowGraph(const RepairInstance& instance)
    : alpha_(instance.alpha()),
      file_size_(instance.file_size()),
      num_links_(instance.num_links()) {
  infinity_ = Rational(static_cast<long>(instance.num_links()) + instance.n()) * file_size_;

  vertices_.push_back({FlowVertex::Kind::kSource, 0});
  std::map<NodeId, int> combiner;
  for (NodeId i : instance.survivors()) {
    const int in = static_cast<int>(vertices_.size());
    vertices_.push_back({FlowVertex::Kind::kIn, i});
    vertices_.push_back({FlowVertex::Kind::kOut, i});
    vertices_.push_back({FlowVertex::Kind::kCombiner, i});
    out_index_[i] = in + 1;
    combiner[i] = in + 2;
    edges_.push_back({0, in, Capacity::infinite()});
    edges_.push_back({in, in + 1, Capacity::storage()});
    edges_.push_back({in + 1, in + 2, Capacity::infinite()});
  }
  const int new_in = static_cast<int>(vertices_.size());
  vertices_.push_back({FlowVertex::Kind::kIn, instance.new_node()});
  vertices_.push_back({FlowVertex::Kind::kOut, instance.new_node()});
  out_index_[instance.new_node()] = new_in + 1;

  for (std::size_t l = 0; l < instance.num_links(); ++l) {
    const Link& link = instance.links()[l];
    const int to = link.to == instance.new_node() ? new_in : combiner.at(link.to);
    edges_.push_back({combiner.at(link.from), to, Capacity::var(l)});
  }
  edges_.push_back({new_in, new_in + 1, Capacity::storage()});
  vertices_.push_back({FlowVertex::Kind::kCollector, 0});
}

int FlowGraph::out_vertex(NodeId node) const {
  auto it = out_index_.find(node);
  if (it == out_index_.end()) throw StructuralError("node " + std::to_string(node) + " not in flow graph");
  return it->second;
}

std::string FlowGraph::vertex_name(int v) const {
  const FlowVertex& fv = vertices_[static_cast<std::size_t>(v)];
  switch (fv.kind) {
    case FlowVertex::Kind::kSource:
      return "S";
    case FlowVertex::Kind::kIn:
      return "in_" + std::to_string(fv.node);
    case FlowVertex::Kind::kOut:
      return "out_" + std::to_string(fv.node);
    case FlowVertex::Kind::kCombiner:
      return "x_" + std::to_string(fv.node);
    case FlowVertex::Kind::kCollector:
      return "DC";
  }
  return "?";
}

std::string FlowGraph::dump(const RepairInstance& instance) const {
  std::ostringstream out;
  for (const FlowEdge& e : edges_) {
    out << vertex_name(e.from) << " -> " << vertex_name(e.to) << " : ";
    switch (e.capacity.kind) {
      case Capacity::Kind::kStorage:
        out << "alpha=" << alpha_;
        break;
      case Capacity::Kind::kInfinite:
        out << "inf";
        break;
      case Capacity::Kind::kVar: {
        const Link& l = instance.links()[e.capacity.link];
        out << "z" << to_string(l);
        break;
      }
    }
    out << '\n';
  }
  return out.str();
}

FlowGraph build_flow_graph(const RepairInstance& instance) {
  bool reachable = false;
  for (const Link& l : instance.links()) {
    if (l.to == instance.new_node()) reachable = true;
  }
  if (!reachable) throw InfeasibleInstance("new node is unreachable from every surviving node");
  return FlowGraph(instance);
}

std::vector<CollectorChoice> enumerate_collectors(const RepairInstance& instance) {
  const auto& survivors = instance.survivors();
  const int pick = instance.k() - 1;
  std::vector<CollectorChoice> out;
  std::vector<int> idx(static_cast<std::size_t>(pick));
  for (int i = 0; i < pick; ++i) idx[static_cast<std::size_t>(i)] = i;
  const int total = static_cast<int>(survivors.size());
  while (true) {
    CollectorChoice dc;
    dc.nodes.push_back(instance.new_node());
    for (int i : idx) dc.nodes.push_back(survivors[static_cast<std::size_t>(i)]);
    out.push_back(std::move(dc));
    int pos = pick - 1;
    while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == total - pick + pos) --pos;
    if (pos < 0) break;
    ++idx[static_cast<std::size_t>(pos)];
    for (int j = pos + 1; j < pick; ++j) {
      idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  return out;
}

Rational max_flow_value(const FlowGraph& graph, const VectorQ& z, const CollectorChoice& dc) {
  if (static_cast<std::size_t>(z.size()) != graph.num_links()) {
    throw StructuralError("subgraph size does not match flow graph");
  }
  MaxFlow<Rational> flow(static_cast<int>(graph.vertices().size()));
  for (const FlowEdge& e : graph.edges()) {
    switch (e.capacity.kind) {
      case Capacity::Kind::kStorage:
        flow.add_edge(e.from, e.to, graph.alpha());
        break;
      case Capacity::Kind::kInfinite:
        flow.add_edge(e.from, e.to, graph.infinity());
        break;
      case Capacity::Kind::kVar:
        flow.add_edge(e.from, e.to, z(static_cast<Eigen::Index>(e.capacity.link)));
        break;
    }
  }
  for (NodeId node : dc.nodes) flow.add_edge(graph.out_vertex(node), graph.collector(), graph.infinity());
  return flow.run(graph.source(), graph.collector());
}

bool is_feasible_by_flow(const RepairInstance& instance, const FlowGraph& graph, const VectorQ& z) {
  check_subgraph(instance, z);
  for (const CollectorChoice& dc : enumerate_collectors(instance)) {
    if (max_flow_value(graph, z, dc) < instance.file_size()) return false;
  }
  return true;
}

bool is_feasible_by_flow(const RepairInstance& instance, const VectorQ& z) {
  return is_feasible_by_flow(instance, build_flow_graph(instance), z);
}

}  // namespace dsr
