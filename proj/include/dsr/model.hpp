#pragma once

#include <dsr/errors.hpp>
#include <dsr/rational.hpp>

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dsr {

using NodeId = int;

struct Link {
  NodeId from = 0;
  NodeId to = 0;

  friend auto operator<=>(const Link&, const Link&) = default;
};

std::string to_string(const Link& link);

/// Convex, nondecreasing per-link cost with f(0) = 0.
///
/// The enumerated kinds (linear c*z and quadratic a*z^2 + b*z) evaluate
/// exactly on rationals and round-trip through the topology file format.
/// Custom evaluator/derivative pairs are library-only and evaluate in
/// double precision.
class CostFunction {
 public:
  enum class Kind { kLinear, kQuadratic, kCustom };

  static CostFunction linear(Rational c);
  static CostFunction quadratic(Rational a, Rational b);
  static CostFunction custom(std::function<double(double)> value,
                             std::function<double(double)> derivative,
                             std::string label = "custom");

  Kind kind() const { return kind_; }
  bool is_linear() const { return kind_ == Kind::kLinear; }
  bool is_exact() const { return kind_ != Kind::kCustom; }
  /// {c} for linear, {a, b} for quadratic, empty for custom.
  const std::vector<Rational>& coeffs() const { return coeffs_; }
  const std::string& label() const { return label_; }

  Rational value(const Rational& z) const;
  double value(double z) const;
  Rational derivative(const Rational& z) const;
  double derivative(double z) const;

  /// Smallest z in [0, upper] with f'(z) >= slope; the tie f'(z) == slope
  /// resolves toward the smaller z. Minimizes f(z) - slope*z over the box.
  double argmin_tilted(double slope, double upper) const;

 private:
  CostFunction() = default;

  Kind kind_ = Kind::kLinear;
  std::vector<Rational> coeffs_;
  std::string label_;
  std::function<double(double)> value_fn_;
  std::function<double(double)> derivative_fn_;
};

/// Directed storage network. Links carry their cost functions; the control
/// plane used for message passing is the undirected version of the links.
class Topology {
 public:
  Topology(std::vector<NodeId> node_ids, std::vector<Link> links,
           std::vector<CostFunction> costs, std::string name = {});

  const std::vector<NodeId>& node_ids() const { return node_ids_; }
  const std::vector<Link>& links() const { return links_; }
  const std::vector<CostFunction>& costs() const { return costs_; }
  const std::string& name() const { return name_; }

  bool contains(NodeId id) const;
  std::optional<std::size_t> link_index(const Link& link) const;

 private:
  std::vector<NodeId> node_ids_;
  std::vector<Link> links_;
  std::vector<CostFunction> costs_;
  std::string name_;
};

/// One repair stage: the topology after `failed` left and `new_node` joined.
/// Stored in the MSR regime, alpha = M / k.
class RepairInstance {
 public:
  RepairInstance(Topology topology, NodeId failed, NodeId new_node, Rational file_size,
                 int k);

  const Topology& topology() const { return topology_; }
  const std::vector<Link>& links() const { return topology_.links(); }
  const CostFunction& cost(std::size_t link) const { return topology_.costs()[link]; }
  std::size_t num_links() const { return topology_.links().size(); }

  NodeId failed() const { return failed_; }
  NodeId new_node() const { return new_node_; }
  /// Storage nodes before the failure (survivors plus the failed node).
  int n() const { return static_cast<int>(survivors_.size()) + 1; }
  int k() const { return k_; }
  const Rational& file_size() const { return file_size_; }
  const Rational& alpha() const { return alpha_; }

  /// Surviving storage nodes in ascending id order.
  const std::vector<NodeId>& survivors() const { return survivors_; }
  bool all_costs_linear() const;
  bool all_costs_exact() const;

  /// Indices of links leaving `node`, in link order.
  std::vector<std::size_t> owned_links(NodeId node) const;

 private:
  Topology topology_;
  NodeId failed_;
  NodeId new_node_;
  Rational file_size_;
  int k_;
  Rational alpha_;
  std::vector<NodeId> survivors_;
};

/// Throws StructuralError unless z has one nonnegative entry per link.
template <typename Scalar>
void check_subgraph(const RepairInstance& instance, const Vector<Scalar>& z);

/// Builds a subgraph vector from an explicit link map; keys must be exactly
/// the instance's links.
VectorQ subgraph_from_map(const RepairInstance& instance, const std::map<Link, Rational>& z);

/// Constant vector, z = value on every link.
template <typename Scalar>
Vector<Scalar> uniform_subgraph(const RepairInstance& instance, const Scalar& value) {
  return Vector<Scalar>::Constant(static_cast<Eigen::Index>(instance.num_links()), value);
}

/// Repair cost sigma_c = sum over links of f_ij(z_ij).
template <typename Scalar>
Scalar total_cost(const RepairInstance& instance, const Vector<Scalar>& z);

/// Exact derivative of an enumerated cost; DomainError for z < 0.
Rational cost_derivative(const CostFunction& f, const Rational& z);
double cost_derivative(const CostFunction& f, double z);

/// Physical placement of storage nodes used to derive repair instances.
///
/// Neighbor pairs are undirected. When the node at some position fails, the
/// repair links are the neighbor pairs oriented strictly toward that position
/// by hop distance, so the usable-link graph is acyclic.
class Layout {
 public:
  struct Adjacency {
    int a = 0;  // position indices
    int b = 0;
    CostFunction cost;
  };

  Layout(std::string name, std::vector<NodeId> occupants, std::vector<Adjacency> adjacency,
         Rational file_size, int k);

  /// Layout whose positions are the instance's survivors and its new node
  /// (placed where the failed node was).
  static Layout from_instance(const RepairInstance& instance);

  const std::string& name() const { return name_; }
  const std::vector<NodeId>& occupants() const { return occupants_; }
  const Rational& file_size() const { return file_size_; }
  int k() const { return k_; }

  int position_of(NodeId id) const;

  /// Repair instance for the failure of `failed`; `new_node` takes its
  /// position. Defaults to the next unused id.
  RepairInstance repair_instance(NodeId failed, std::optional<NodeId> new_node = {}) const;

  /// The layout after the repair: `new_node` occupies the failed position.
  Layout after_repair(NodeId failed, NodeId new_node) const;

  NodeId next_id() const { return next_id_; }

 private:
  std::string name_;
  std::vector<NodeId> occupants_;
  std::vector<Adjacency> adjacency_;
  Rational file_size_;
  int k_;
  NodeId next_id_;
};

/// tandem4: chain 1-2-3-4, M = 4, k = 2, unit linear costs.
Layout tandem4_layout();
/// grid2x3: positions 1 2 3 / 4 5 6 with neighbor links, M = 8, k = 4,
/// unit linear costs.
Layout grid2x3_layout();

/// Named builtin instance. tandem4 fails node 4 by default and grid2x3 fails
/// corner node 1; the new node gets the next unused id in both cases.
RepairInstance builtin_instance(const std::string& name, std::optional<NodeId> failed = {});
Layout builtin_layout(const std::string& name);

}  // namespace dsr
