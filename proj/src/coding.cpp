#include <dsr/coding.hpp>
#include <dsr/flowgraph.hpp>
#include <dsr/polytope.hpp>
#include <dsr/solver.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <set>
#include <sstream>

namespace dsr {

SystemState::SystemState(Field field, int file_size, int k, std::vector<NodeStorage> nodes,
                         std::vector<RepairRecord> history)
    : field_(std::move(field)), file_size_(file_size), k_(k), nodes_(std::move(nodes)), history_(std::move(history)) {
  if (k_ < 1 || file_size_ < 1 || file_size_ % k_ != 0) throw StructuralError("require M divisible by k >= 1");
  std::sort(nodes_.begin(), nodes_.end(), [](const NodeStorage& a, const NodeStorage& b) { return a.node < b.node; });
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (i > 0 && nodes_[i].node == nodes_[i - 1].node) throw StructuralError("duplicate node in state");
    if (nodes_[i].q.rows() != file_size_ || nodes_[i].q.cols() != alpha()) {
      throw SizeError("node " + std::to_string(nodes_[i].node) + " storage must be M x alpha");
    }
  }
}

std::vector<NodeId> SystemState::node_ids() const {
  std::vector<NodeId> out;
  for (const NodeStorage& s : nodes_) out.push_back(s.node);
  return out;
}

const NodeStorage& SystemState::at(NodeId id) const {
  for (const NodeStorage& s : nodes_) {
    if (s.node == id) return s;
  }
  throw StructuralError("node " + std::to_string(id) + " not in state");
}

std::string SystemState::to_text() const {
  std::ostringstream out;
  out << "field " << field_.order() << '\n';
  out << "M " << file_size_ << " k " << k_ << '\n';
  out << "history";
  for (const RepairRecord& r : history_) out << ' ' << r.failed << ':' << r.new_node;
  out << '\n';
  for (const NodeStorage& s : nodes_) {
    out << "node " << s.node << '\n';
    for (Eigen::Index i = 0; i < s.q.rows(); ++i) {
      for (Eigen::Index j = 0; j < s.q.cols(); ++j) out << (j ? " " : "") << to_hex(s.q(i, j), field_);
      out << '\n';
    }
  }
  return out.str();
}

SystemState SystemState::from_text(const std::string& text) {
  std::istringstream in(text);
  std::string word;
  std::uint64_t order = 0;
  int file_size = 0;
  int k = 0;
  if (!(in >> word) || word != "field" || !(in >> order)) throw StructuralError("state text: expected 'field <q>'");
  Field field = Field::of_order(order);
  std::string kw;
  if (!(in >> word >> file_size >> kw >> k) || word != "M" || kw != "k") {
    throw StructuralError("state text: expected 'M <M> k <k>'");
  }
  if (k < 1 || file_size < 1 || file_size % k != 0) throw StructuralError("state text: bad M or k");
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  std::istringstream hist(line);
  if (!(hist >> word) || word != "history") throw StructuralError("state text: expected 'history'");
  std::vector<RepairRecord> history;
  while (hist >> word) {
    const auto colon = word.find(':');
    if (colon == std::string::npos) throw StructuralError("state text: bad history entry " + word);
    history.push_back({std::stoi(word.substr(0, colon)), std::stoi(word.substr(colon + 1))});
  }
  const int alpha = file_size / k;
  std::vector<NodeStorage> nodes;
  while (in >> word) {
    NodeStorage s;
    if (word != "node" || !(in >> s.node)) throw StructuralError("state text: expected 'node <id>'");
    s.q = FMatrix(file_size, alpha);
    for (Eigen::Index i = 0; i < file_size; ++i) {
      for (Eigen::Index j = 0; j < alpha; ++j) {
        std::string hex;
        if (!(in >> hex)) throw StructuralError("state text: truncated matrix");
        const unsigned long v = std::stoul(hex, nullptr, 16);
        if (v >= field.order()) throw StructuralError("state text: entry outside the field");
        s.q(i, j) = static_cast<Elem>(v);
      }
    }
    nodes.push_back(std::move(s));
  }
  return SystemState(std::move(field), file_size, k, std::move(nodes), std::move(history));
}

std::vector<std::vector<NodeId>> k_subsets(const std::vector<NodeId>& ids, int k) {
  std::vector<std::vector<NodeId>> out;
  const int n = static_cast<int>(ids.size());
  if (k < 0 || k > n) return out;
  std::vector<int> idx(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  while (true) {
    std::vector<NodeId> pick;
    for (int i : idx) pick.push_back(ids[static_cast<std::size_t>(i)]);
    out.push_back(std::move(pick));
    int pos = k - 1;
    while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == n - k + pos) --pos;
    if (pos < 0) break;
    ++idx[static_cast<std::size_t>(pos)];
    for (int j = pos + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
  return out;
}

namespace {

FMatrix subset_matrix(const SystemState& state, const std::vector<NodeId>& subset) {
  std::vector<FMatrix> blocks;
  for (NodeId id : subset) blocks.push_back(state.at(id).q);
  return concat_columns(blocks);
}

}  // namespace

RcpResult check_rcp(const SystemState& state, int k) {
  for (const auto& subset : k_subsets(state.node_ids(), k)) {
    if (rank(state.field(), subset_matrix(state, subset)) < state.file_size()) return {false, subset};
  }
  return {};
}

std::optional<Elem> rcp_determinant_product(const SystemState& state, int k) {
  if (k * state.alpha() != state.file_size()) return std::nullopt;
  Elem product = 1;
  for (const auto& subset : k_subsets(state.node_ids(), k)) {
    product = state.field().mul(product, determinant(state.field(), subset_matrix(state, subset)));
  }
  return product;
}

SystemState distribute(int file_size, const std::vector<NodeId>& nodes, int k, const Field& field, Rng& rng,
                       std::uint64_t seed, int max_attempts, int* attempts) {
  if (k < 1 || file_size % k != 0) throw StructuralError("M must be divisible by k");
  if (static_cast<int>(nodes.size()) < k) throw StructuralError("fewer nodes than k");
  const int alpha = file_size / k;
  std::optional<SystemState> last;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    std::vector<NodeStorage> storage;
    for (NodeId id : nodes) storage.push_back({id, field.random_matrix(file_size, alpha, rng)});
    SystemState state(field, file_size, k, std::move(storage));
    if (check_rcp(state, k).ok) {
      if (attempts) *attempts = attempt;
      return state;
    }
    last = std::move(state);
  }
  if (attempts) *attempts = max_attempts;
  throw CodingFailure("distribution did not reach the RCP within " + std::to_string(max_attempts) + " attempts",
                      std::move(last), seed);
}

namespace {

std::vector<NodeId> topological_order(const RepairInstance& instance, const std::vector<int>& fragments) {
  std::map<NodeId, int> indegree;
  std::map<NodeId, std::vector<NodeId>> out;
  for (NodeId v : instance.survivors()) indegree[v] = 0;
  indegree[instance.new_node()] = 0;
  for (std::size_t l = 0; l < instance.num_links(); ++l) {
    if (fragments[l] == 0) continue;
    const Link& link = instance.links()[l];
    out[link.from].push_back(link.to);
    ++indegree[link.to];
  }
  std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
  for (auto& [v, d] : indegree) {
    if (d == 0) ready.push(v);
  }
  std::vector<NodeId> order;
  while (!ready.empty()) {
    const NodeId v = ready.top();
    ready.pop();
    order.push_back(v);
    for (NodeId w : out[v]) {
      if (--indegree[w] == 0) ready.push(w);
    }
  }
  return order;
}

}  // namespace

RepairResult repair(const SystemState& state, const RepairInstance& instance, const VectorQ& z, Rng& rng,
                    std::uint64_t seed) {
  check_subgraph(instance, z);
  const std::vector<NodeId> ids = state.node_ids();
  auto present = [&](NodeId v) { return std::binary_search(ids.begin(), ids.end(), v); };
  if (!present(instance.failed())) throw StructuralError("failed node is not in the state");
  if (present(instance.new_node())) throw StructuralError("new node id already stores data");
  for (NodeId v : instance.survivors()) {
    if (!present(v)) throw StructuralError("survivor " + std::to_string(v) + " is not in the state");
  }
  if (state.k() != instance.k() || Rational(state.file_size()) != instance.file_size()) {
    throw StructuralError("state and instance disagree on M or k");
  }

  const Field& field = state.field();
  const Eigen::Index m = state.file_size();
  std::vector<int> fragments(instance.num_links());
  VectorQ rounded(z.size());
  for (Eigen::Index l = 0; l < z.size(); ++l) {
    const Rational& v = z(l);
    Rational c(numerator(v) / denominator(v));
    if (c < v) c += 1;
    rounded(l) = c;
    fragments[static_cast<std::size_t>(l)] = c.convert_to<int>();
  }
  if (!is_feasible_by_flow(instance, rounded)) {
    throw InfeasibleInstance("subgraph does not meet every cut; repair precondition violated");
  }

  std::map<NodeId, FMatrix> received;
  for (NodeId v : instance.survivors()) received[v] = FMatrix(m, 0);
  received[instance.new_node()] = FMatrix(m, 0);
  for (NodeId v : topological_order(instance, fragments)) {
    if (v == instance.new_node()) continue;
    const FMatrix pool = concat_columns({state.at(v).q, received[v]});
    for (std::size_t l = 0; l < instance.num_links(); ++l) {
      const Link& link = instance.links()[l];
      if (link.from != v || fragments[l] == 0) continue;
      const FMatrix sent = multiply(field, pool, field.random_matrix(pool.cols(), fragments[l], rng));
      received[link.to] = concat_columns({received[link.to], sent});
    }
  }

  const FMatrix& incoming = received[instance.new_node()];
  FMatrix stored = multiply(field, incoming, field.random_matrix(incoming.cols(), state.alpha(), rng));
  std::vector<NodeStorage> nodes;
  for (NodeId v : instance.survivors()) nodes.push_back(state.at(v));
  nodes.push_back({instance.new_node(), std::move(stored)});
  std::vector<RepairRecord> history = state.history();
  history.push_back({instance.failed(), instance.new_node()});
  SystemState next(field, state.file_size(), state.k(), std::move(nodes), std::move(history));

  const RcpResult rcp = check_rcp(next, state.k());
  if (!rcp.ok) {
    std::string subset;
    for (NodeId v : rcp.failing) subset += (subset.empty() ? "" : ",") + std::to_string(v);
    throw CodingFailure("RCP violated after repair (subset " + subset + ", seed " + std::to_string(seed) + ")",
                        std::move(next), seed);
  }
  return {std::move(next), incoming, std::move(fragments)};
}

RepairResult repair(const SystemState& state, const RepairInstance& instance, const Eigen::VectorXd& z, Rng& rng,
                    std::uint64_t seed) {
  VectorQ q(z.size());
  for (Eigen::Index l = 0; l < z.size(); ++l) {
    q(l) = Rational(static_cast<long>(std::ceil(std::max(0.0, z(l) - 1e-9))));
  }
  return repair(state, instance, q, rng, seed);
}

std::vector<FVector> encode(const SystemState& state, const FVector& file) {
  if (file.size() != state.file_size()) throw SizeError("file vector must have M entries");
  std::vector<FVector> out;
  for (const NodeStorage& s : state.nodes()) out.push_back(multiply(state.field(), s.q.transpose(), file));
  return out;
}

std::optional<FVector> decode(const SystemState& state, const std::vector<NodeId>& subset,
                              const std::vector<FVector>& stored) {
  if (stored.size() != subset.size()) throw SizeError("one stored vector per subset node");
  const FMatrix a = subset_matrix(state, subset);
  if (a.cols() != a.rows()) throw SizeError("decoding needs k * alpha = M");
  FMatrix x(a.cols(), 1);
  Eigen::Index at = 0;
  for (const FVector& v : stored) {
    x.middleRows(at, v.size()) = v;
    at += v.size();
  }
  std::optional<FMatrix> s = solve(state.field(), a.transpose(), x);
  if (!s) return std::nullopt;
  return FVector(s->col(0));
}

int compute_n_nc(const RepairInstance& instance, const VectorQ& z) {
  check_subgraph(instance, z);
  std::vector<int> used(instance.num_links());
  bool any = false;
  for (Eigen::Index l = 0; l < z.size(); ++l) {
    used[static_cast<std::size_t>(l)] = z(l) > 0 ? 1 : 0;
    any = any || z(l) > 0;
  }
  if (!any) throw InfeasibleInstance("empty subgraph support");
  std::map<NodeId, int> best;
  for (NodeId v : topological_order(instance, used)) {
    int b = v == instance.new_node() ? 0 : 1;
    for (std::size_t l = 0; l < instance.num_links(); ++l) {
      const Link& link = instance.links()[l];
      if (used[l] && link.to == v && best[link.from] > 0) b = std::max(b, best[link.from] + 1);
    }
    best[v] = b;
  }
  if (best[instance.new_node()] == 0) throw InfeasibleInstance("subgraph support does not reach the new node");
  return best[instance.new_node()];
}

std::uint64_t field_size_bound(int n, int k, std::uint64_t file_size, int n_nc) {
  if (k < 0 || k > n || n_nc < 0) throw DomainError("require 0 <= k <= n and n_nc >= 0");
  std::uint64_t binom = 1;
  for (int i = 1; i <= k; ++i) binom = binom * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return binom * file_size * static_cast<std::uint64_t>(n_nc);
}

std::uint64_t stage_seed(std::uint64_t seed, int stage) {
  // splitmix64 of the pair.
  std::uint64_t x = seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(stage) + 1);
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

bool SoakReport::all_pass() const {
  return std::all_of(rows.begin(), rows.end(), [](const SoakRow& r) { return r.rcp_pass; });
}

std::string SoakReport::to_csv() const {
  std::ostringstream out;
  out << "stage,failed_node,cost,rcp_pass,seed\n";
  for (const SoakRow& r : rows) {
    out << r.stage << ',' << r.failed_node << ',' << to_string(r.cost) << ',' << (r.rcp_pass ? 1 : 0) << ','
        << r.seed << '\n';
  }
  return out.str();
}

SoakReport multi_stage_soak(const Layout& initial, int stages, const Field& field, std::uint64_t seed) {
  if (stages < 1) throw DomainError("stages must be at least 1");
  Layout layout = initial;
  const int file_size = initial.file_size().convert_to<int>();
  Rng setup(stage_seed(seed, 0));
  SystemState state = distribute(file_size, layout.occupants(), layout.k(), field, setup, stage_seed(seed, 0));

  SoakReport report;
  report.cumulative_cost = 0;
  for (int s = 1; s <= stages; ++s) {
    SoakRow row;
    row.stage = s;
    row.seed = stage_seed(seed, s);
    Rng rng(row.seed);
    const auto& occupants = layout.occupants();
    row.failed_node = occupants[std::uniform_int_distribution<std::size_t>(0, occupants.size() - 1)(rng)];
    const RepairInstance instance = layout.repair_instance(row.failed_node);
    const Polytope polytope = enumerate_constraints(instance);
    const LpSolution lp = solve_lp(instance, polytope);
    row.cost = lp.objective;
    report.cumulative_cost += lp.objective;
    try {
      state = repair(state, instance, lp.z, rng, row.seed).state;
      row.rcp_pass = true;
    } catch (const CodingFailure& e) {
      if (e.state()) state = *e.state();
      row.rcp_pass = false;
    }
    layout = layout.after_repair(row.failed_node, instance.new_node());
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace dsr
