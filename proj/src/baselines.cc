#include "magnneto/baselines.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "magnneto/routing.h"

namespace magnneto {

std::vector<int> DefaultOspfWeights(const Topology& topology) {
  double c_max = 0.0;
  for (const auto& l : topology.links()) c_max = std::max(c_max, l.capacity);
  std::vector<int> weights;
  weights.reserve(topology.num_links());
  for (const auto& l : topology.links()) {
    const double w = std::round(c_max / l.capacity);
    weights.push_back(std::max(1, static_cast<int>(std::min(w, 65535.0))));
  }
  return weights;
}

namespace {

// Lexicographic move score: max utilization first, then the sum of squared
// utilizations to break plateaus where several links share the maximum.
struct Score {
  double max_util;
  double spread;

  bool operator<(const Score& o) const {
    if (max_util != o.max_util) return max_util < o.max_util;
    return spread < o.spread;
  }
};

Score Evaluate(const Topology& topology, const TrafficMatrix& tm,
               const std::vector<int>& weights) {
  const RoutingState state = EcmpLoads(topology, tm, weights);
  double spread = 0.0;
  for (double u : state.utilization) spread += u * u;
  return {state.max_utilization, spread};
}

}  // namespace

WeightResult LocalSearchWeights(const Topology& topology, const TrafficMatrix& tm,
                                const SearchConfig& config) {
  if (config.w_max < 1) throw Error(ErrorKind::kValidation, "w_max must be >= 1");
  if (config.max_iterations <= 0) {
    throw Error(ErrorKind::kValidation, "search budget must be > 0");
  }
  const int num_links = topology.num_links();
  Rng rng(config.seed);

  std::vector<int> current = DefaultOspfWeights(topology);
  for (int& w : current) w = std::min(w, config.w_max);
  Score current_score = Evaluate(topology, tm, current);

  WeightResult best{current, current_score.max_util};
  int last_best_iteration = 0;
  int restarts = 0;
  // (link, weight) -> first iteration at which the pair is allowed again.
  std::map<std::pair<int, int>, int> tabu;

  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    bool found = false;
    Score move_score{};
    int move_link = -1;
    int move_weight = 0;
    std::vector<int> candidate = current;
    for (int e = 0; e < num_links; ++e) {
      const int old = current[e];
      for (int w = 1; w <= config.w_max; ++w) {
        if (w == old) continue;
        candidate[e] = w;
        const Score s = Evaluate(topology, tm, candidate);
        auto it = tabu.find({e, w});
        const bool is_tabu = it != tabu.end() && it->second > iter;
        // Aspiration: a tabu move is allowed when it sets a new best.
        if (is_tabu && !(s.max_util < best.max_utilization)) continue;
        if (!found || s < move_score) {
          found = true;
          move_score = s;
          move_link = e;
          move_weight = w;
        }
      }
      candidate[e] = old;
    }
    if (!found) break;

    tabu[{move_link, current[move_link]}] = iter + config.tabu_tenure;
    current[move_link] = move_weight;
    current_score = move_score;
    if (current_score.max_util < best.max_utilization) {
      best = {current, current_score.max_util};
      last_best_iteration = iter;
    }

    if (iter - last_best_iteration >= config.stagnation_limit &&
        restarts < config.max_restarts) {
      ++restarts;
      for (int& w : current) w = static_cast<int>(UniformInt(rng, 1, config.w_max));
      current_score = Evaluate(topology, tm, current);
      tabu.clear();
      last_best_iteration = iter;
      if (current_score.max_util < best.max_utilization) {
        best = {current, current_score.max_util};
      }
    }
  }
  return best;
}

WeightResult BruteForceOptimum(const Topology& topology, const TrafficMatrix& tm,
                               int w_max) {
  if (w_max < 1) throw Error(ErrorKind::kValidation, "w_max must be >= 1");
  const int num_links = topology.num_links();
  if (std::pow(static_cast<double>(w_max), num_links) > kBruteForceLimit) {
    throw Error(ErrorKind::kTooLarge,
                "brute force refused: " + std::to_string(w_max) + "^" +
                    std::to_string(num_links) + " weight vectors exceed the limit");
  }
  std::vector<int> weights(num_links, 1);
  WeightResult best{weights, EcmpLoads(topology, tm, weights).max_utilization};
  while (true) {
    // Odometer increment, last link varies fastest.
    int pos = num_links - 1;
    while (pos >= 0 && weights[pos] == w_max) {
      weights[pos] = 1;
      --pos;
    }
    if (pos < 0) break;
    ++weights[pos];
    const double u = EcmpLoads(topology, tm, weights).max_utilization;
    if (u < best.max_utilization) best = {weights, u};
  }
  return best;
}

double ImprovementPercent(double default_max_util, double max_util) {
  if (default_max_util == 0.0) {
    throw Error(ErrorKind::kNumeric,
                "improvement undefined: Default OSPF max utilization is 0");
  }
  return 100.0 * (default_max_util - max_util) / default_max_util;
}

double ImprovementVsDefault(const Topology& topology, const TrafficMatrix& tm,
                            const std::vector<int>& weights) {
  const double u_default =
      EcmpLoads(topology, tm, DefaultOspfWeights(topology)).max_utilization;
  const double u = EcmpLoads(topology, tm, weights).max_utilization;
  return ImprovementPercent(u_default, u);
}

}  // namespace magnneto
