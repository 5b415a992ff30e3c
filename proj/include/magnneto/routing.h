#ifndef MAGNNETO_ROUTING_H_
#define MAGNNETO_ROUTING_H_

#include <cstdint>
#include <span>
#include <vector>

#include "magnneto/topology.h"

namespace magnneto {

// Shortest-path DAG toward one destination. Next hops are the full set of
// equal-cost outgoing links, so Dijkstra tie-breaking never matters.
struct ShortestPathDag {
  NodeId destination = 0;
  std::vector<int64_t> distance;
  std::vector<std::vector<LinkId>> next_hops;
  // Nodes ordered by decreasing distance (ties by node id); the destination
  // comes last.
  std::vector<NodeId> order;
};

ShortestPathDag ComputeShortestPathDag(const Topology& topology,
                                       std::span<const int> weights,
                                       NodeId destination);
inline ShortestPathDag ComputeShortestPathDag(const Topology& topology,
                                              NodeId destination) {
  const auto w = topology.weights();
  return ComputeShortestPathDag(topology, w, destination);
}

// Maximum utilization, the optimization objective, is kept on a dyadic grid
// so that the difference of two objective values is exact and episode
// rewards telescope without rounding. Values >= 2^13 are left unchanged.
inline constexpr double kUtilizationQuantum = 0x1p-40;
double QuantizeUtilization(double u);

struct RoutingState {
  std::vector<double> load;
  std::vector<double> utilization;
  double max_utilization = 0.0;  // quantized
};

// Builds a state from raw per-link loads; utilization = load / capacity.
RoutingState MakeRoutingState(std::vector<double> load,
                              std::span<const double> capacities);

// Per-link flow destined to `destination` under fractional per-node ECMP.
std::vector<double> DestinationLinkFlows(const Topology& topology,
                                         const TrafficMatrix& tm,
                                         std::span<const int> weights,
                                         NodeId destination);

// Loads summed over destinations in fixed order 0..N-1.
RoutingState EcmpLoads(const Topology& topology, const TrafficMatrix& tm,
                       std::span<const int> weights);
RoutingState EcmpLoads(const Topology& topology, const TrafficMatrix& tm);

double MaxUtilization(const RoutingState& state);
double MaxUtilization(std::span<const double> load,
                      std::span<const double> capacities);

}  // namespace magnneto

#endif  // MAGNNETO_ROUTING_H_
