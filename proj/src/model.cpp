#include <dsr/model.hpp>

#include <algorithm>
#include <limits>
#include <queue>
#include <set>
#include <sstream>

namespace dsr {

std::string to_string(const Link& link) {
  return "(" + std::to_string(link.from) + "," + std::to_string(link.to) + ")";
}

// ---------------------------------------------------------------- CostFunction

CostFunction CostFunction::linear(Rational c) {
  if (c < 0) throw DomainError("linear cost coefficient must be nonnegative");
  CostFunction f;
  f.kind_ = Kind::kLinear;
  f.coeffs_ = {std::move(c)};
  f.label_ = "linear";
  return f;
}

CostFunction CostFunction::quadratic(Rational a, Rational b) {
  if (a < 0 || b < 0) throw DomainError("quadratic cost coefficients must be nonnegative");
  CostFunction f;
  f.kind_ = Kind::kQuadratic;
  f.coeffs_ = {std::move(a), std::move(b)};
  f.label_ = "quadratic";
  return f;
}

CostFunction CostFunction::custom(std::function<double(double)> value,
                                  std::function<double(double)> derivative, std::string label) {
  if (!value || !derivative) throw DomainError("custom cost needs value and derivative");
  CostFunction f;
  f.kind_ = Kind::kCustom;
  f.label_ = std::move(label);
  f.value_fn_ = std::move(value);
  f.derivative_fn_ = std::move(derivative);
  return f;
}

Rational CostFunction::value(const Rational& z) const {
  switch (kind_) {
    case Kind::kLinear:
      return coeffs_[0] * z;
    case Kind::kQuadratic:
      return coeffs_[0] * z * z + coeffs_[1] * z;
    case Kind::kCustom:
      break;
  }
  throw DomainError("custom cost '" + label_ + "' has no exact evaluation");
}

double CostFunction::value(double z) const {
  switch (kind_) {
    case Kind::kLinear:
      return to_double(coeffs_[0]) * z;
    case Kind::kQuadratic:
      return to_double(coeffs_[0]) * z * z + to_double(coeffs_[1]) * z;
    case Kind::kCustom:
      return value_fn_(z);
  }
  return 0.0;
}

Rational CostFunction::derivative(const Rational& z) const {
  if (z < 0) throw DomainError("cost derivative evaluated at z < 0");
  switch (kind_) {
    case Kind::kLinear:
      return coeffs_[0];
    case Kind::kQuadratic:
      return 2 * coeffs_[0] * z + coeffs_[1];
    case Kind::kCustom:
      break;
  }
  throw DomainError("custom cost '" + label_ + "' has no exact derivative");
}

double CostFunction::derivative(double z) const {
  if (z < 0) throw DomainError("cost derivative evaluated at z < 0");
  switch (kind_) {
    case Kind::kLinear:
      return to_double(coeffs_[0]);
    case Kind::kQuadratic:
      return 2.0 * to_double(coeffs_[0]) * z + to_double(coeffs_[1]);
    case Kind::kCustom:
      return derivative_fn_(z);
  }
  return 0.0;
}

double CostFunction::argmin_tilted(double slope, double upper) const {
  if (derivative(0.0) >= slope) return 0.0;
  if (derivative(upper) < slope) return upper;
  if (kind_ == Kind::kQuadratic) {
    const double a = to_double(coeffs_[0]);
    const double b = to_double(coeffs_[1]);
    // a > 0 here: a linear-in-z derivative that crosses slope inside the box.
    return std::clamp((slope - b) / (2.0 * a), 0.0, upper);
  }
  double lo = 0.0;
  double hi = upper;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, upper); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (derivative(mid) < slope) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

Rational cost_derivative(const CostFunction& f, const Rational& z) { return f.derivative(z); }
double cost_derivative(const CostFunction& f, double z) { return f.derivative(z); }

// -------------------------------------------------------------------- Topology

Topology::Topology(std::vector<NodeId> node_ids, std::vector<Link> links,
                   std::vector<CostFunction> costs, std::string name)
    : node_ids_(std::move(node_ids)),
      links_(std::move(links)),
      costs_(std::move(costs)),
      name_(std::move(name)) {
  std::set<NodeId> ids(node_ids_.begin(), node_ids_.end());
  if (ids.size() != node_ids_.size()) throw StructuralError("duplicate node id");
  if (costs_.size() != links_.size()) throw StructuralError("one cost function per link required");
  std::set<Link> seen;
  for (const Link& link : links_) {
    if (link.from == link.to) throw StructuralError("self-loop " + to_string(link));
    if (!ids.count(link.from) || !ids.count(link.to)) {
      throw StructuralError("link " + to_string(link) + " references an unknown node");
    }
    if (!seen.insert(link).second) throw StructuralError("duplicate link " + to_string(link));
  }
}

bool Topology::contains(NodeId id) const {
  return std::find(node_ids_.begin(), node_ids_.end(), id) != node_ids_.end();
}

std::optional<std::size_t> Topology::link_index(const Link& link) const {
  auto it = std::find(links_.begin(), links_.end(), link);
  if (it == links_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - links_.begin());
}

// -------------------------------------------------------------- RepairInstance

namespace {

bool is_acyclic(const std::vector<NodeId>& nodes, const std::vector<Link>& links) {
  std::map<NodeId, int> indegree;
  std::map<NodeId, std::vector<NodeId>> out;
  for (NodeId v : nodes) indegree[v] = 0;
  for (const Link& l : links) {
    ++indegree[l.to];
    out[l.from].push_back(l.to);
  }
  std::queue<NodeId> ready;
  for (const auto& [v, d] : indegree) {
    if (d == 0) ready.push(v);
  }
  std::size_t visited = 0;
  while (!ready.empty()) {
    NodeId v = ready.front();
    ready.pop();
    ++visited;
    for (NodeId w : out[v]) {
      if (--indegree[w] == 0) ready.push(w);
    }
  }
  return visited == nodes.size();
}

bool control_connected(const std::vector<NodeId>& nodes, const std::vector<Link>& links) {
  if (nodes.empty()) return true;
  std::map<NodeId, std::vector<NodeId>> adj;
  for (const Link& l : links) {
    adj[l.from].push_back(l.to);
    adj[l.to].push_back(l.from);
  }
  std::set<NodeId> seen{nodes.front()};
  std::queue<NodeId> todo;
  todo.push(nodes.front());
  while (!todo.empty()) {
    NodeId v = todo.front();
    todo.pop();
    for (NodeId w : adj[v]) {
      if (seen.insert(w).second) todo.push(w);
    }
  }
  return seen.size() == nodes.size();
}

}  // namespace

RepairInstance::RepairInstance(Topology topology, NodeId failed, NodeId new_node,
                               Rational file_size, int k)
    : topology_(std::move(topology)),
      failed_(failed),
      new_node_(new_node),
      file_size_(std::move(file_size)),
      k_(k) {
  if (!topology_.contains(failed_)) throw StructuralError("failed node not in topology");
  if (!topology_.contains(new_node_)) throw StructuralError("new node not in topology");
  if (failed_ == new_node_) throw StructuralError("failed and new node must differ");
  for (NodeId v : topology_.node_ids()) {
    if (v != failed_ && v != new_node_) survivors_.push_back(v);
  }
  std::sort(survivors_.begin(), survivors_.end());

  if (k_ < 1 || k_ >= n()) throw StructuralError("require 1 <= k < n");
  if (file_size_ <= 0 || denominator(file_size_) != 1) {
    throw StructuralError("file size M must be a positive integer");
  }
  alpha_ = file_size_ / k_;
  if (denominator(alpha_) != 1) throw StructuralError("M must be divisible by k");

  bool new_has_input = false;
  for (const Link& l : topology_.links()) {
    if (l.from == failed_ || l.to == failed_) {
      throw StructuralError("link " + to_string(l) + " touches the failed node");
    }
    if (l.from == new_node_) {
      throw StructuralError("link " + to_string(l) + " leaves the new node");
    }
    if (l.to == new_node_) new_has_input = true;
  }
  if (!new_has_input) throw InfeasibleInstance("new node has no incoming link");

  std::vector<NodeId> live = survivors_;
  live.push_back(new_node_);
  if (!is_acyclic(live, topology_.links())) throw StructuralError("repair links contain a cycle");
  if (!control_connected(live, topology_.links())) {
    throw StructuralError("control graph is disconnected");
  }
}

bool RepairInstance::all_costs_linear() const {
  return std::all_of(topology_.costs().begin(), topology_.costs().end(),
                     [](const CostFunction& f) { return f.is_linear(); });
}

bool RepairInstance::all_costs_exact() const {
  return std::all_of(topology_.costs().begin(), topology_.costs().end(),
                     [](const CostFunction& f) { return f.is_exact(); });
}

std::vector<std::size_t> RepairInstance::owned_links(NodeId node) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < links().size(); ++i) {
    if (links()[i].from == node) out.push_back(i);
  }
  return out;
}

// -------------------------------------------------------------------- Subgraph

template <typename Scalar>
void check_subgraph(const RepairInstance& instance, const Vector<Scalar>& z) {
  if (static_cast<std::size_t>(z.size()) != instance.num_links()) {
    throw StructuralError("subgraph has " + std::to_string(z.size()) + " entries, expected " +
                          std::to_string(instance.num_links()));
  }
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (z(i) < 0) {
      throw StructuralError("negative fragment count on link " +
                            to_string(instance.links()[static_cast<std::size_t>(i)]));
    }
  }
}

template void check_subgraph<Rational>(const RepairInstance&, const VectorQ&);
template void check_subgraph<double>(const RepairInstance&, const Eigen::VectorXd&);

VectorQ subgraph_from_map(const RepairInstance& instance, const std::map<Link, Rational>& z) {
  VectorQ out(static_cast<Eigen::Index>(instance.num_links()));
  if (z.size() != instance.num_links()) throw StructuralError("subgraph keys differ from links");
  for (std::size_t i = 0; i < instance.num_links(); ++i) {
    auto it = z.find(instance.links()[i]);
    if (it == z.end()) throw StructuralError("missing link " + to_string(instance.links()[i]));
    out(static_cast<Eigen::Index>(i)) = it->second;
  }
  check_subgraph(instance, out);
  return out;
}

template <typename Scalar>
Scalar total_cost(const RepairInstance& instance, const Vector<Scalar>& z) {
  check_subgraph(instance, z);
  Scalar sum(0);
  for (std::size_t i = 0; i < instance.num_links(); ++i) {
    sum += instance.cost(i).value(z(static_cast<Eigen::Index>(i)));
  }
  return sum;
}

template Rational total_cost<Rational>(const RepairInstance&, const VectorQ&);
template double total_cost<double>(const RepairInstance&, const Eigen::VectorXd&);

// ---------------------------------------------------------------------- Layout

Layout::Layout(std::string name, std::vector<NodeId> occupants, std::vector<Adjacency> adjacency,
               Rational file_size, int k)
    : name_(std::move(name)),
      occupants_(std::move(occupants)),
      adjacency_(std::move(adjacency)),
      file_size_(std::move(file_size)),
      k_(k) {
  const int positions = static_cast<int>(occupants_.size());
  for (const Adjacency& adj : adjacency_) {
    if (adj.a < 0 || adj.b < 0 || adj.a >= positions || adj.b >= positions || adj.a == adj.b) {
      throw StructuralError("bad layout adjacency");
    }
  }
  next_id_ = occupants_.empty() ? 1 : *std::max_element(occupants_.begin(), occupants_.end()) + 1;
}

Layout Layout::from_instance(const RepairInstance& instance) {
  std::vector<NodeId> occupants = instance.survivors();
  occupants.push_back(instance.new_node());
  auto pos = [&](NodeId id) {
    return static_cast<int>(std::find(occupants.begin(), occupants.end(), id) - occupants.begin());
  };
  std::vector<Adjacency> adjacency;
  std::set<std::pair<int, int>> seen;
  for (std::size_t i = 0; i < instance.num_links(); ++i) {
    const Link& l = instance.links()[i];
    int a = pos(l.from);
    int b = pos(l.to);
    if (!seen.insert({std::min(a, b), std::max(a, b)}).second) continue;
    adjacency.push_back({a, b, instance.cost(i)});
  }
  Layout layout(instance.topology().name(), occupants, std::move(adjacency), instance.file_size(),
                instance.k());
  layout.next_id_ = std::max(layout.next_id_, std::max(instance.failed(), instance.new_node()) + 1);
  return layout;
}

int Layout::position_of(NodeId id) const {
  auto it = std::find(occupants_.begin(), occupants_.end(), id);
  if (it == occupants_.end()) throw StructuralError("node " + std::to_string(id) + " not in layout");
  return static_cast<int>(it - occupants_.begin());
}

RepairInstance Layout::repair_instance(NodeId failed, std::optional<NodeId> new_node) const {
  const int fpos = position_of(failed);
  const NodeId fresh = new_node.value_or(next_id_);
  if (std::find(occupants_.begin(), occupants_.end(), fresh) != occupants_.end()) {
    throw StructuralError("new node id already in use");
  }

  const int positions = static_cast<int>(occupants_.size());
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(positions));
  for (const Adjacency& e : adjacency_) {
    adj[static_cast<std::size_t>(e.a)].push_back(e.b);
    adj[static_cast<std::size_t>(e.b)].push_back(e.a);
  }
  constexpr int kUnreached = std::numeric_limits<int>::max();
  std::vector<int> dist(static_cast<std::size_t>(positions), kUnreached);
  dist[static_cast<std::size_t>(fpos)] = 0;
  std::queue<int> todo;
  todo.push(fpos);
  while (!todo.empty()) {
    int p = todo.front();
    todo.pop();
    for (int q : adj[static_cast<std::size_t>(p)]) {
      if (dist[static_cast<std::size_t>(q)] == kUnreached) {
        dist[static_cast<std::size_t>(q)] = dist[static_cast<std::size_t>(p)] + 1;
        todo.push(q);
      }
    }
  }

  auto occupant = [&](int p) { return p == fpos ? fresh : occupants_[static_cast<std::size_t>(p)]; };
  std::vector<std::pair<Link, CostFunction>> oriented;
  for (const Adjacency& e : adjacency_) {
    const int da = dist[static_cast<std::size_t>(e.a)];
    const int db = dist[static_cast<std::size_t>(e.b)];
    if (da == kUnreached || db == kUnreached || da == db) continue;
    if (da > db) {
      oriented.push_back({Link{occupant(e.a), occupant(e.b)}, e.cost});
    } else {
      oriented.push_back({Link{occupant(e.b), occupant(e.a)}, e.cost});
    }
  }
  std::stable_sort(oriented.begin(), oriented.end(),
                   [](const auto& x, const auto& y) { return x.first < y.first; });

  std::vector<NodeId> nodes = occupants_;
  nodes.push_back(fresh);
  std::sort(nodes.begin(), nodes.end());
  std::vector<Link> links;
  std::vector<CostFunction> costs;
  for (auto& [link, cost] : oriented) {
    links.push_back(link);
    costs.push_back(cost);
  }
  return RepairInstance(Topology(std::move(nodes), std::move(links), std::move(costs), name_),
                        failed, fresh, file_size_, k_);
}

Layout Layout::after_repair(NodeId failed, NodeId new_node) const {
  Layout next = *this;
  next.occupants_[static_cast<std::size_t>(position_of(failed))] = new_node;
  next.next_id_ = std::max(next_id_, new_node + 1);
  return next;
}

Layout tandem4_layout() {
  std::vector<Layout::Adjacency> adj;
  for (int p = 0; p + 1 < 4; ++p) adj.push_back({p, p + 1, CostFunction::linear(1)});
  return Layout("tandem4", {1, 2, 3, 4}, std::move(adj), 4, 2);
}

Layout grid2x3_layout() {
  // Positions, row-major:
  //   1 2 3
  //   4 5 6
  std::vector<Layout::Adjacency> adj;
  auto unit = CostFunction::linear(1);
  for (int row = 0; row < 2; ++row) {
    for (int col = 0; col < 3; ++col) {
      const int p = row * 3 + col;
      if (col + 1 < 3) adj.push_back({p, p + 1, unit});
      if (row + 1 < 2) adj.push_back({p, p + 3, unit});
    }
  }
  return Layout("grid2x3", {1, 2, 3, 4, 5, 6}, std::move(adj), 8, 4);
}

Layout builtin_layout(const std::string& name) {
  if (name == "tandem4") return tandem4_layout();
  if (name == "grid2x3") return grid2x3_layout();
  throw StructuralError("unknown builtin instance '" + name + "'");
}

RepairInstance builtin_instance(const std::string& name, std::optional<NodeId> failed) {
  Layout layout = builtin_layout(name);
  const NodeId default_failed = name == "tandem4" ? 4 : 1;
  return layout.repair_instance(failed.value_or(default_failed));
}

}  // namespace dsr
