#pragma once

#include <dsr/galois.hpp>
#include <dsr/model.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dsr {

/// Node i's coefficient vectors, one column per stored fragment (M x alpha).
struct NodeStorage {
  NodeId node = 0;
  FMatrix q;
};

struct RepairRecord {
  NodeId failed = 0;
  NodeId new_node = 0;
};

class SystemState {
 public:
  SystemState(Field field, int file_size, int k, std::vector<NodeStorage> nodes,
              std::vector<RepairRecord> history = {});

  const Field& field() const { return field_; }
  int file_size() const { return file_size_; }
  int k() const { return k_; }
  int alpha() const { return file_size_ / k_; }
  const std::vector<NodeStorage>& nodes() const { return nodes_; }
  const std::vector<RepairRecord>& history() const { return history_; }
  std::vector<NodeId> node_ids() const;
  const NodeStorage& at(NodeId id) const;

  /// Lines: "field <q>", "M <M> k <k>", "history <f>:<new> ...", then per
  /// node "node <id>" followed by M rows of hex entries.
  std::string to_text() const;
  static SystemState from_text(const std::string& text);

 private:
  Field field_;
  int file_size_;
  int k_;
  std::vector<NodeStorage> nodes_;  // ascending id
  std::vector<RepairRecord> history_;
};

/// Raised when the coding layer cannot produce a state with the RCP. Carries
/// the offending state and the seed that reproduces it.
class CodingFailure : public std::runtime_error {
 public:
  CodingFailure(const std::string& what, std::optional<SystemState> state, std::uint64_t seed)
      : std::runtime_error(what), state_(std::move(state)), seed_(seed) {}
  const std::optional<SystemState>& state() const { return state_; }
  std::uint64_t seed() const { return seed_; }

 private:
  std::optional<SystemState> state_;
  std::uint64_t seed_;
};

struct RcpResult {
  bool ok = true;
  std::vector<NodeId> failing;  // first k-subset without full rank
};

/// True iff every k-subset of nodes has rank M.
RcpResult check_rcp(const SystemState& state, int k);

/// Product over k-subsets of det(Q_subset) when k*alpha = M; nonzero iff
/// the RCP holds. nullopt for non-square concatenations.
std::optional<Elem> rcp_determinant_product(const SystemState& state, int k);

/// Random MSR-style distribution: each node stores alpha uniform random
/// coefficient vectors; redrawn until the RCP holds or attempts run out.
SystemState distribute(int file_size, const std::vector<NodeId>& nodes, int k, const Field& field, Rng& rng,
                       std::uint64_t seed = 0, int max_attempts = 64, int* attempts = nullptr);

struct RepairResult {
  SystemState state;
  /// Every fragment delivered to the new node, one column each.
  FMatrix received;
  /// ceil(z) per link.
  std::vector<int> fragments;
};

/// Rounds z up per link and executes the subgraph in topological order.
/// Each survivor sends, on each used outgoing link, ceil(z) random
/// combinations of its stored columns and of everything it received so
/// far; the new node stores alpha random combinations of what it received.
/// Throws InfeasibleInstance when ceil(z) fails the flow check and
/// CodingFailure when the repaired state loses the RCP.
RepairResult repair(const SystemState& state, const RepairInstance& instance, const VectorQ& z, Rng& rng,
                    std::uint64_t seed = 0);
RepairResult repair(const SystemState& state, const RepairInstance& instance, const Eigen::VectorXd& z,
                    Rng& rng, std::uint64_t seed = 0);

/// Per node, X_i = Q_i^T s.
std::vector<FVector> encode(const SystemState& state, const FVector& file);
/// Recovers s from the stored values of the listed nodes (k*alpha = M).
/// nullopt when their coefficients do not have full rank.
std::optional<FVector> decode(const SystemState& state, const std::vector<NodeId>& subset,
                              const std::vector<FVector>& stored);

/// Largest number of coding nodes (origin survivor, relays, new node) on a
/// directed path of supp(z) ending at the new node.
int compute_n_nc(const RepairInstance& instance, const VectorQ& z);

/// C(n, k) * M * n_nc.
std::uint64_t field_size_bound(int n, int k, std::uint64_t file_size, int n_nc);

/// All k-subsets of ids in lexicographic order.
std::vector<std::vector<NodeId>> k_subsets(const std::vector<NodeId>& ids, int k);

struct SoakRow {
  int stage = 0;
  NodeId failed_node = 0;
  Rational cost;
  bool rcp_pass = false;
  std::uint64_t seed = 0;
};

struct SoakReport {
  std::vector<SoakRow> rows;
  Rational cumulative_cost;

  bool all_pass() const;
  /// Header: stage,failed_node,cost,rcp_pass,seed
  std::string to_csv() const;
};

/// Distributes over the layout's occupants, then per stage fails a random
/// node, solves the minimum-cost subgraph exactly, repairs and checks the
/// RCP. A failed stage is recorded and the run continues. Stage s draws
/// from the seed `stage_seed(seed, s)`.
SoakReport multi_stage_soak(const Layout& layout, int stages, const Field& field, std::uint64_t seed);
std::uint64_t stage_seed(std::uint64_t seed, int stage);

}  // namespace dsr
