#ifndef MAGNNETO_BASELINES_H_
#define MAGNNETO_BASELINES_H_

#include <cstdint>
#include <vector>

#include "magnneto/topology.h"

namespace magnneto {

// w_e = max(1, round(C_max / c_e)).
std::vector<int> DefaultOspfWeights(const Topology& topology);

struct SearchConfig {
  int w_max = 20;
  // Number of candidate-move evaluation sweeps (one sweep scores every
  // single-link weight change).
  int max_iterations = 200;
  int tabu_tenure = 7;
  // Sweeps without a new best-ever value before a random restart.
  int stagnation_limit = 20;
  int max_restarts = 5;
  uint64_t seed = 1;
};

struct WeightResult {
  std::vector<int> weights;
  double max_utilization = 0.0;
};

// Steepest-descent single-link weight search with a tabu list of
// (link, old weight) pairs and random restarts. Starts from Default OSPF
// weights (clamped into [1, w_max]) and returns the best configuration seen.
WeightResult LocalSearchWeights(const Topology& topology, const TrafficMatrix& tm,
                                const SearchConfig& config);

// Refuses instances with more than this many weight vectors.
inline constexpr double kBruteForceLimit = 1e7;

// Exhaustive enumeration over [1, w_max]^E; ties keep the first vector in
// lexicographic order.
WeightResult BruteForceOptimum(const Topology& topology, const TrafficMatrix& tm,
                               int w_max);

// 100 * (u_default - u) / u_default. Throws when u_default == 0.
double ImprovementVsDefault(const Topology& topology, const TrafficMatrix& tm,
                            const std::vector<int>& weights);
double ImprovementPercent(double default_max_util, double max_util);

}  // namespace magnneto

#endif  // MAGNNETO_BASELINES_H_
