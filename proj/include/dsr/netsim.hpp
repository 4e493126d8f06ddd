#pragma once

#include <dsr/decomp.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace dsr {

/// Node i -> coordinator: local multipliers and the lower bounds of t_i.
struct DualsReport {
  Eigen::VectorXd lambda;
  Eigen::VectorXd lower;
};
/// Coordinator -> node i: lambda_n and the projection shift mu.
struct CoordinatorBroadcast {
  Eigen::VectorXd lambda;
  Eigen::VectorXd shift;
};
/// Child -> parent in the aggregation tree, summed exactly.
struct PartialSum {
  std::vector<Rational> h;
};
/// Root -> children in the aggregation tree.
struct LambdaBroadcast {
  Eigen::VectorXd lambda;
};

using Payload = std::variant<DualsReport, CoordinatorBroadcast, PartialSum, LambdaBroadcast>;

enum class MessageKind { kDualsReport, kCoordinatorBroadcast, kPartialSum, kLambdaBroadcast };
std::string to_string(MessageKind kind);

/// One hop of one message. origin/target are the end points of the route.
struct Message {
  NodeId src = 0;
  NodeId dst = 0;
  NodeId origin = 0;
  NodeId target = 0;
  int round = 0;
  Payload payload;

  MessageKind kind() const { return static_cast<MessageKind>(payload.index()); }
  /// 8 per double; decimal text length per exact rational.
  std::size_t bytes() const;
};

struct MessageLog {
  std::vector<Message> hops;

  /// Header: round,src,dst,kind,bytes
  std::string to_csv() const;
};

enum class Algorithm { kPrimal, kDual };
enum class Execution { kSequential, kParallel };

struct SimConfig {
  /// Aggregation root for the dual; defaults to the highest-id survivor.
  /// The primal coordinator is always the highest-id survivor.
  std::optional<NodeId> root;
  /// Node subproblems run one after another or on worker threads; results
  /// are identical.
  Execution execution = Execution::kSequential;
  /// Recorded for reproducibility. Both algorithms are deterministic.
  std::uint64_t seed = 0;
};

/// Raised when a node touches state it does not own.
class ForeignStateAccess : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Private state of one simulated node. Only the owner may open it.
struct NodeState {
  NodeId id = 0;
  std::optional<NodeShare> share;  // empty for the new node
  // primal
  Eigen::VectorXd t;
  Eigen::VectorXd lambda;
  Eigen::VectorXd lower;
  Eigen::MatrixXd mirror_t;      // coordinator only: t of the other survivors
  Eigen::MatrixXd mirror_lower;  // coordinator only
  Eigen::MatrixXd mirror_lambda; // coordinator only
  // dual
  Eigen::VectorXd replica;  // replicated lambda
  std::vector<Rational> partial;
  Eigen::VectorXd h_total;  // root only, rounded aggregate
  // both
  Eigen::VectorXd z;
  std::vector<std::pair<NodeId, Payload>> inbox;  // (origin, payload)
};

class GuardedState {
 public:
  explicit GuardedState(NodeState state) : state_(std::move(state)) {}
  NodeId owner() const { return state_.id; }
  NodeState& open(NodeId actor);
  const NodeState& open(NodeId actor) const;
  /// Read-only view for the trace monitor, which is not a node.
  const NodeState& observe() const { return state_; }

 private:
  NodeState state_;
};

struct SimResult {
  Eigen::VectorXd z;
  ConvergenceTrace trace;
  MessageLog log;
  bool converged = false;
};

/// Runs the chosen algorithm with every survivor as an isolated node that
/// only sees its own state and delivered payloads. Messages travel hop by
/// hop along shortest paths of the undirected control graph (surviving
/// nodes plus the new node). z and the trace match run_primal / run_dual
/// bit for bit; trace rows carry the hop count of their round.
SimResult simulate(const RepairInstance& instance, const Polytope& polytope, Algorithm algorithm,
                   const SimConfig& config = {}, const StepRule& step = {}, const StopRule& stop = {});

struct MessageComplexity {
  std::vector<long> per_round;  // index = round - 1
  std::map<MessageKind, long> per_kind;
  long total = 0;
};
MessageComplexity message_complexity(const MessageLog& log);

/// Shortest hop path from `from` to `to` (both included). Ties go to the
/// smaller neighbor id.
std::vector<NodeId> control_route(const RepairInstance& instance, NodeId from, NodeId to);

}  // namespace dsr
