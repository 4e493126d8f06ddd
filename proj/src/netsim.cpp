#include <dsr/netsim.hpp>

#include <algorithm>
#include <exception>
#include <queue>
#include <set>
#include <sstream>
#include <thread>

namespace dsr {

std::string to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::kDualsReport:
      return "DualsReport";
    case MessageKind::kCoordinatorBroadcast:
      return "CoordinatorBroadcast";
    case MessageKind::kPartialSum:
      return "PartialSum";
    case MessageKind::kLambdaBroadcast:
      return "LambdaBroadcast";
  }
  return "?";
}

std::size_t Message::bytes() const {
  return std::visit(
      [](const auto& p) -> std::size_t {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, DualsReport>) {
          return 8 * static_cast<std::size_t>(p.lambda.size() + p.lower.size());
        } else if constexpr (std::is_same_v<T, CoordinatorBroadcast>) {
          return 8 * static_cast<std::size_t>(p.lambda.size() + p.shift.size());
        } else if constexpr (std::is_same_v<T, PartialSum>) {
          std::size_t total = 0;
          for (const Rational& q : p.h) total += to_string(q).size();
          return total;
        } else {
          return 8 * static_cast<std::size_t>(p.lambda.size());
        }
      },
      payload);
}

std::string MessageLog::to_csv() const {
  std::ostringstream out;
  out << "round,src,dst,kind,bytes\n";
  for (const Message& m : hops) {
    out << m.round << ',' << m.src << ',' << m.dst << ',' << to_string(m.kind()) << ',' << m.bytes() << '\n';
  }
  return out.str();
}

NodeState& GuardedState::open(NodeId actor) {
  if (actor != state_.id) {
    throw ForeignStateAccess("node " + std::to_string(actor) + " accessed the state of node " +
                             std::to_string(state_.id));
  }
  return state_;
}

const NodeState& GuardedState::open(NodeId actor) const {
  return const_cast<GuardedState*>(this)->open(actor);
}

MessageComplexity message_complexity(const MessageLog& log) {
  MessageComplexity out;
  for (const Message& m : log.hops) {
    if (m.round < 1) continue;
    if (out.per_round.size() < static_cast<std::size_t>(m.round)) out.per_round.resize(static_cast<std::size_t>(m.round), 0);
    ++out.per_round[static_cast<std::size_t>(m.round - 1)];
    ++out.per_kind[m.kind()];
    ++out.total;
  }
  return out;
}

namespace {

std::vector<NodeId> live_nodes(const RepairInstance& instance) {
  std::vector<NodeId> live = instance.survivors();
  live.push_back(instance.new_node());
  std::sort(live.begin(), live.end());
  return live;
}

std::map<NodeId, std::vector<NodeId>> control_graph(const RepairInstance& instance) {
  std::map<NodeId, std::set<NodeId>> adj;
  for (NodeId v : live_nodes(instance)) adj[v];
  for (const Link& l : instance.links()) {
    adj[l.from].insert(l.to);
    adj[l.to].insert(l.from);
  }
  std::map<NodeId, std::vector<NodeId>> out;
  for (auto& [v, nbrs] : adj) out[v].assign(nbrs.begin(), nbrs.end());
  return out;
}

// BFS parents from root; neighbors in ascending order.
std::map<NodeId, NodeId> bfs_parents(const std::map<NodeId, std::vector<NodeId>>& adj, NodeId root,
                                     std::vector<NodeId>* order) {
  std::map<NodeId, NodeId> parent{{root, root}};
  std::queue<NodeId> todo;
  todo.push(root);
  while (!todo.empty()) {
    NodeId v = todo.front();
    todo.pop();
    if (order) order->push_back(v);
    for (NodeId w : adj.at(v)) {
      if (parent.emplace(w, v).second) todo.push(w);
    }
  }
  if (parent.size() != adj.size()) throw StructuralError("control graph is disconnected");
  return parent;
}

class Network {
 public:
  Network(const RepairInstance& instance, Execution execution)
      : adj_(control_graph(instance)), execution_(execution) {
    for (NodeId v : live_nodes(instance)) {
      routes_[v] = bfs_parents(adj_, v, nullptr);
    }
  }

  void add(NodeState state) {
    const NodeId id = state.id;
    nodes_.emplace(id, GuardedState(std::move(state)));
  }

  GuardedState& node(NodeId id) { return nodes_.at(id); }
  const std::map<NodeId, std::vector<NodeId>>& adjacency() const { return adj_; }
  MessageLog& log() { return log_; }

  // Routes hop by hop along the BFS tree rooted at the destination, which
  // is a shortest path; each hop is logged. The payload lands in the
  // target's inbox.
  long send(int round, NodeId origin, NodeId target, Payload payload) {
    const auto& toward = routes_.at(target);
    long hops = 0;
    NodeId at = origin;
    while (at != target) {
      const NodeId next = toward.at(at);
      log_.hops.push_back({at, next, origin, target, round, payload});
      at = next;
      ++hops;
    }
    nodes_.at(target).open(target).inbox.emplace_back(origin, std::move(payload));
    return hops;
  }

  // Runs `work(id)` for every listed node, as that node.
  template <typename F>
  void each(const std::vector<NodeId>& ids, F&& work) {
    if (execution_ == Execution::kSequential || ids.size() < 2) {
      for (NodeId id : ids) work(id);
      return;
    }
    std::vector<std::exception_ptr> errors(ids.size());
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      threads.emplace_back([&, i] {
        try {
          work(ids[i]);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      });
    }
    for (std::thread& t : threads) t.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

 private:
  std::map<NodeId, std::vector<NodeId>> adj_;
  std::map<NodeId, std::map<NodeId, NodeId>> routes_;
  std::map<NodeId, GuardedState> nodes_;
  MessageLog log_;
  Execution execution_;
};

Eigen::VectorXd observed_z(Network& net, const std::vector<NodeShare>& shares, std::size_t num_links) {
  std::vector<Eigen::VectorXd> owned;
  for (const NodeShare& s : shares) owned.push_back(net.node(s.node).observe().z);
  return assemble(shares, owned, num_links);
}

SimResult simulate_primal(const RepairInstance& instance, const Polytope& polytope, const SimConfig& config,
                          const StepRule& step, const StopRule& stop) {
  const std::vector<NodeShare> shares = make_shares(instance, polytope);
  const PrimalState start = initial_primal_state(shares);
  const auto survivors = static_cast<Eigen::Index>(shares.size());
  const NodeId coordinator = shares.back().node;
  std::vector<NodeId> ids;
  std::vector<NodeId> others;
  for (const NodeShare& s : shares) {
    ids.push_back(s.node);
    if (s.node != coordinator) others.push_back(s.node);
  }

  Network net(instance, config.execution);
  for (Eigen::Index i = 0; i < survivors; ++i) {
    NodeState st;
    st.id = shares[static_cast<std::size_t>(i)].node;
    st.share = shares[static_cast<std::size_t>(i)];
    st.t = start.t.row(i).transpose();
    st.lower = st.share->lower_bounds();
    st.lambda = Eigen::VectorXd::Zero(st.t.size());
    if (st.id == coordinator) {
      st.mirror_t = start.t.topRows(survivors - 1);
      st.mirror_lower = Eigen::MatrixXd::Zero(survivors - 1, st.t.size());
      st.mirror_lambda = Eigen::MatrixXd::Zero(survivors - 1, st.t.size());
    }
    net.add(std::move(st));
  }
  NodeState fresh;
  fresh.id = instance.new_node();
  net.add(std::move(fresh));

  SimResult result;
  result.z = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(instance.num_links()), to_double(polytope.upper));
  for (int k = 1; k <= stop.max_iters; ++k) {
    net.each(ids, [&](NodeId id) {
      NodeState& me = net.node(id).open(id);
      SubproblemSolution s = primal_subproblem(*me.share, me.t);
      me.z = std::move(s.z);
      me.lambda = std::move(s.lambda);
    });

    result.z = observed_z(net, shares, instance.num_links());
    TraceRow row;
    row.iteration = k;
    row.sigma_c = total_cost<double>(instance, result.z);
    row.max_violation = violation<double>(polytope, result.z).max;
    result.trace.rows.push_back(row);
    if (should_stop(result.trace, stop)) {
      result.converged = true;
      break;
    }
    const double alpha = step(k);

    long hops = 0;
    for (NodeId id : others) {
      const NodeState& me = net.node(id).open(id);
      hops += net.send(k, id, coordinator, DualsReport{me.lambda, me.lower});
    }

    {
      NodeState& c = net.node(coordinator).open(coordinator);
      for (auto& [origin, payload] : c.inbox) {
        const auto row_of = static_cast<Eigen::Index>(
            std::find(others.begin(), others.end(), origin) - others.begin());
        const auto& report = std::get<DualsReport>(payload);
        c.mirror_lambda.row(row_of) = report.lambda.transpose();
        c.mirror_lower.row(row_of) = report.lower.transpose();
      }
      c.inbox.clear();
      const Eigen::Index free = c.mirror_t.rows();
      Eigen::MatrixXd proposed(free, c.t.size());
      for (Eigen::Index i = 0; i < free; ++i) {
        proposed.row(i) = proposed_allocation(c.mirror_t.row(i).transpose(), c.mirror_lambda.row(i).transpose(),
                                              c.lambda, alpha)
                              .transpose();
      }
      const Eigen::VectorXd mu = projection_shift(proposed, c.mirror_lower, c.lower);
      for (Eigen::Index i = 0; i < free; ++i) {
        c.mirror_t.row(i) =
            shifted_allocation(proposed.row(i).transpose(), c.mirror_lower.row(i).transpose(), mu).transpose();
      }
      Eigen::VectorXd sum = Eigen::VectorXd::Zero(c.t.size());
      for (Eigen::Index i = 0; i < free; ++i) sum += c.mirror_t.row(i).transpose();
      c.t = -sum;
      const CoordinatorBroadcast out{c.lambda, mu};
      for (NodeId id : others) hops += net.send(k, coordinator, id, out);
    }

    net.each(others, [&](NodeId id) {
      NodeState& me = net.node(id).open(id);
      for (auto& [origin, payload] : me.inbox) {
        const auto& b = std::get<CoordinatorBroadcast>(payload);
        me.t = shifted_allocation(proposed_allocation(me.t, me.lambda, b.lambda, alpha), me.lower, b.shift);
      }
      me.inbox.clear();
    });
    result.trace.rows.back().messages = hops;
  }
  result.log = std::move(net.log());
  return result;
}

SimResult simulate_dual(const RepairInstance& instance, const Polytope& polytope, const SimConfig& config,
                        const StepRule& step, const StopRule& stop) {
  const std::vector<NodeShare> shares = make_shares(instance, polytope);
  const auto cuts = static_cast<Eigen::Index>(polytope.size());
  const auto links = static_cast<Eigen::Index>(instance.num_links());
  const NodeId root = config.root.value_or(shares.back().node);

  Network net(instance, config.execution);
  std::vector<NodeId> ids;
  for (const NodeShare& s : shares) {
    NodeState st;
    st.id = s.node;
    st.share = s;
    st.replica = Eigen::VectorXd::Zero(cuts);
    ids.push_back(s.node);
    net.add(std::move(st));
  }
  {
    NodeState fresh;
    fresh.id = instance.new_node();
    fresh.replica = Eigen::VectorXd::Zero(cuts);
    net.add(std::move(fresh));
  }
  if (!net.adjacency().count(root)) throw StructuralError("aggregation root is not a live node");
  std::vector<NodeId> order;
  const std::map<NodeId, NodeId> parent = bfs_parents(net.adjacency(), root, &order);

  SimResult result;
  result.z = Eigen::VectorXd::Constant(links, to_double(polytope.upper));
  Eigen::VectorXd running = Eigen::VectorXd::Zero(links);
  for (int k = 1; k <= stop.max_iters; ++k) {
    net.each(ids, [&](NodeId id) {
      NodeState& me = net.node(id).open(id);
      me.z = dual_subproblem(*me.share, me.replica);
    });

    long hops = 0;
    // Leaves first: add own contribution to the children's sums, pass up.
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const NodeId id = *it;
      NodeState& me = net.node(id).open(id);
      me.partial.assign(static_cast<std::size_t>(cuts), Rational(0));
      if (me.share) {
        const Eigen::VectorXd h = me.share->h(me.z);
        for (Eigen::Index r = 0; r < cuts; ++r) me.partial[static_cast<std::size_t>(r)] += exact(h(r));
      }
      for (auto& [origin, payload] : me.inbox) {
        const auto& part = std::get<PartialSum>(payload);
        for (Eigen::Index r = 0; r < cuts; ++r) me.partial[static_cast<std::size_t>(r)] += part.h[static_cast<std::size_t>(r)];
      }
      me.inbox.clear();
      if (id == root) {
        me.h_total = Eigen::VectorXd(cuts);
        for (Eigen::Index r = 0; r < cuts; ++r) me.h_total(r) = to_double(me.partial[static_cast<std::size_t>(r)]);
      } else {
        hops += net.send(k, id, parent.at(id), PartialSum{me.partial});
      }
    }

    const Eigen::VectorXd z = observed_z(net, shares, instance.num_links());
    const NodeState& top = net.node(root).observe();
    running += z;
    result.z = raise_to_feasibility(polytope, running / static_cast<double>(k));
    TraceRow row;
    row.iteration = k;
    row.sigma_c = total_cost<double>(instance, result.z);
    row.max_violation = violation<double>(polytope, z).max;
    row.dual_value = dual_value(instance, z, top.replica, top.h_total);
    row.messages = hops;
    result.trace.rows.push_back(row);
    if (should_stop(result.trace, stop)) {
      result.converged = true;
      break;
    }

    {
      NodeState& me = net.node(root).open(root);
      me.replica = dual_master_step(DualState{me.replica, k - 1}, me.h_total, step(k)).lambda;
    }
    // Root first: adopt the received lambda and pass it to the children.
    for (NodeId id : order) {
      NodeState& me = net.node(id).open(id);
      for (auto& [origin, payload] : me.inbox) me.replica = std::get<LambdaBroadcast>(payload).lambda;
      me.inbox.clear();
      const Eigen::VectorXd lambda = me.replica;
      for (NodeId child : net.adjacency().at(id)) {
        if (child != root && parent.at(child) == id) hops += net.send(k, id, child, LambdaBroadcast{lambda});
      }
    }
    result.trace.rows.back().messages = hops;
  }
  result.log = std::move(net.log());
  return result;
}

}  // namespace

std::vector<NodeId> control_route(const RepairInstance& instance, NodeId from, NodeId to) {
  const auto adj = control_graph(instance);
  if (!adj.count(from) || !adj.count(to)) throw StructuralError("route end point is not a live node");
  const std::map<NodeId, NodeId> toward = bfs_parents(adj, to, nullptr);
  std::vector<NodeId> path{from};
  while (path.back() != to) path.push_back(toward.at(path.back()));
  return path;
}

SimResult simulate(const RepairInstance& instance, const Polytope& polytope, Algorithm algorithm,
                   const SimConfig& config, const StepRule& step, const StopRule& stop) {
  SimResult r = algorithm == Algorithm::kPrimal ? simulate_primal(instance, polytope, config, step, stop)
                                                : simulate_dual(instance, polytope, config, step, stop);
  return r;
}

}  // namespace dsr
