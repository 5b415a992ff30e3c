#include "magnneto/routing.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>

namespace magnneto {

ShortestPathDag ComputeShortestPathDag(const Topology& topology,
                                       std::span<const int> weights,
                                       NodeId destination) {
  const int n = topology.num_nodes();
  if (static_cast<int>(weights.size()) != topology.num_links()) {
    throw Error(ErrorKind::kValidation, "weight vector length mismatch");
  }
  constexpr int64_t kInf = std::numeric_limits<int64_t>::max();
  ShortestPathDag dag;
  dag.destination = destination;
  dag.distance.assign(n, kInf);
  dag.next_hops.assign(n, {});

  // Dijkstra on the reversed graph, rooted at the destination.
  using Entry = std::pair<int64_t, NodeId>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  dag.distance[destination] = 0;
  heap.push({0, destination});
  while (!heap.empty()) {
    auto [d, v] = heap.top();
    heap.pop();
    if (d != dag.distance[v]) continue;
    for (LinkId e : topology.in_links(v)) {
      const NodeId u = topology.link(e).src;
      const int64_t cand = d + weights[e];
      if (cand < dag.distance[u]) {
        dag.distance[u] = cand;
        heap.push({cand, u});
      }
    }
  }

  for (NodeId v = 0; v < n; ++v) {
    if (dag.distance[v] == kInf) {
      throw Error(ErrorKind::kValidation,
                  "node " + std::to_string(v) + " cannot reach destination " +
                      std::to_string(destination));
    }
  }
  for (NodeId v = 0; v < n; ++v) {
    if (v == destination) continue;
    for (LinkId e : topology.out_links(v)) {
      const NodeId u = topology.link(e).dst;
      if (weights[e] + dag.distance[u] == dag.distance[v]) {
        dag.next_hops[v].push_back(e);
      }
    }
  }
  dag.order.resize(n);
  for (NodeId v = 0; v < n; ++v) dag.order[v] = v;
  std::sort(dag.order.begin(), dag.order.end(), [&](NodeId a, NodeId b) {
    if (dag.distance[a] != dag.distance[b]) {
      return dag.distance[a] > dag.distance[b];
    }
    return a < b;
  });
  return dag;
}

double QuantizeUtilization(double u) {
  if (!(u < 0x1p13)) return u;
  return std::nearbyint(u / kUtilizationQuantum) * kUtilizationQuantum;
}

RoutingState MakeRoutingState(std::vector<double> load,
                              std::span<const double> capacities) {
  RoutingState state;
  state.utilization.resize(load.size());
  for (size_t e = 0; e < load.size(); ++e) {
    state.utilization[e] = load[e] / capacities[e];
    state.max_utilization = std::max(state.max_utilization, state.utilization[e]);
  }
  state.max_utilization = QuantizeUtilization(state.max_utilization);
  state.load = std::move(load);
  return state;
}

namespace {

// Pushes demand toward dag.destination, accumulating into `flows`.
void AccumulateDestination(const Topology& topology, const TrafficMatrix& tm,
                           const ShortestPathDag& dag, std::vector<double>& node_flow,
                           std::vector<double>& flows) {
  const NodeId t = dag.destination;
  for (NodeId v = 0; v < topology.num_nodes(); ++v) node_flow[v] = tm.at(v, t);
  for (NodeId v : dag.order) {
    if (v == t || node_flow[v] == 0.0) continue;
    const auto& hops = dag.next_hops[v];
    const double share = node_flow[v] / static_cast<double>(hops.size());
    for (LinkId e : hops) {
      flows[e] += share;
      node_flow[topology.link(e).dst] += share;
    }
  }
}

}  // namespace

std::vector<double> DestinationLinkFlows(const Topology& topology,
                                         const TrafficMatrix& tm,
                                         std::span<const int> weights,
                                         NodeId destination) {
  const ShortestPathDag dag = ComputeShortestPathDag(topology, weights, destination);
  std::vector<double> node_flow(topology.num_nodes());
  std::vector<double> flows(topology.num_links(), 0.0);
  AccumulateDestination(topology, tm, dag, node_flow, flows);
  return flows;
}

RoutingState EcmpLoads(const Topology& topology, const TrafficMatrix& tm,
                       std::span<const int> weights) {
  if (tm.size() != topology.num_nodes()) {
    throw Error(ErrorKind::kValidation, "traffic matrix size does not match topology");
  }
  if (weights.size() != static_cast<size_t>(topology.num_links())) {
    throw Error(ErrorKind::kValidation, "weight vector length does not match link count");
  }
  const int n = topology.num_nodes();
  std::vector<double> load(topology.num_links(), 0.0);
  std::vector<double> flows(topology.num_links());
  std::vector<double> node_flow(n);
  for (NodeId t = 0; t < n; ++t) {
    bool any = false;
    for (NodeId v = 0; v < n && !any; ++v) any = tm.at(v, t) != 0.0;
    if (!any) continue;
    const ShortestPathDag dag = ComputeShortestPathDag(topology, weights, t);
    std::fill(flows.begin(), flows.end(), 0.0);
    AccumulateDestination(topology, tm, dag, node_flow, flows);
    for (size_t e = 0; e < load.size(); ++e) load[e] += flows[e];
  }
  const auto caps = topology.capacities();
  return MakeRoutingState(std::move(load), caps);
}

RoutingState EcmpLoads(const Topology& topology, const TrafficMatrix& tm) {
  const auto w = topology.weights();
  return EcmpLoads(topology, tm, w);
}

double MaxUtilization(const RoutingState& state) {
  double m = 0.0;
  for (double u : state.utilization) m = std::max(m, u);
  return QuantizeUtilization(m);
}

double MaxUtilization(std::span<const double> load,
                      std::span<const double> capacities) {
  double m = 0.0;
  for (size_t e = 0; e < load.size(); ++e) m = std::max(m, load[e] / capacities[e]);
  return QuantizeUtilization(m);
}

}  // namespace magnneto
