// Shared fixtures and independent oracles for the test suites.
#ifndef MAGNNETO_TESTS_TEST_UTIL_H_
#define MAGNNETO_TESTS_TEST_UTIL_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "magnneto/common.h"
#include "magnneto/topology.h"

#ifndef MAGNNETO_DATA_DIR
#define MAGNNETO_DATA_DIR "data"
#endif

namespace magnneto::testing {

inline std::string DataPath(const std::string& name) {
  return std::string(MAGNNETO_DATA_DIR) + "/" + name;
}

// Builds a topology from undirected (a, b, capacity) triples; edge k becomes
// links 2k and 2k+1.
inline Topology Bidirected(int n, const std::vector<std::tuple<int, int, double>>& edges,
                           int weight = 1) {
  std::vector<std::string> labels;
  for (int i = 0; i < n; ++i) labels.push_back("v" + std::to_string(i));
  std::vector<DirectedLink> links;
  for (const auto& [a, b, cap] : edges) {
    links.push_back({int(links.size()), a, b, cap, weight});
    links.push_back({int(links.size()), b, a, cap, weight});
  }
  return Topology(labels, links);
}

// A->B->D and A->C->D with unit weights, both directions.
inline Topology Diamond(double cap_ab = 10, double cap_ac = 10, double cap_bd = 10,
                        double cap_cd = 10) {
  return Bidirected(4, {{0, 1, cap_ab}, {0, 2, cap_ac}, {1, 3, cap_bd}, {2, 3, cap_cd}});
}

inline Topology Ring(int n, double cap = 10) {
  std::vector<std::tuple<int, int, double>> edges;
  for (int i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n, cap});
  return Bidirected(n, edges);
}

// Random strongly connected digraph: a random Hamiltonian cycle plus extra
// directed links; capacities in [5, 20], weights in [1, max_weight].
inline Topology RandomStronglyConnected(Rng& rng, int n, double extra_prob = 0.3,
                                        int max_weight = 4) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[UniformInt(rng, 0, i)]);
  std::vector<DirectedLink> links;
  auto add = [&](int a, int b) {
    links.push_back({int(links.size()), a, b, 5.0 + 15.0 * Uniform01(rng),
                     int(UniformInt(rng, 1, max_weight))});
  };
  for (int i = 0; i < n; ++i) add(perm[i], perm[(i + 1) % n]);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (a != b && Uniform01(rng) < extra_prob) add(a, b);
    }
  }
  std::vector<std::string> labels;
  for (int i = 0; i < n; ++i) labels.push_back("r" + std::to_string(i));
  return Topology(labels, links);
}

// Random bidirected connected graph (spanning tree plus extra edges).
inline Topology RandomBidirected(Rng& rng, int n, int extra_edges, double cap_lo = 5,
                                 double cap_hi = 20) {
  std::vector<std::tuple<int, int, double>> edges;
  std::vector<std::pair<int, int>> used;
  auto cap = [&] { return cap_lo + (cap_hi - cap_lo) * Uniform01(rng); };
  for (int v = 1; v < n; ++v) {
    const int u = int(UniformInt(rng, 0, v - 1));
    edges.push_back({u, v, cap()});
    used.push_back({u, v});
  }
  int guard = 0;
  while (extra_edges > 0 && guard++ < 1000) {
    int a = int(UniformInt(rng, 0, n - 1)), b = int(UniformInt(rng, 0, n - 1));
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    if (std::find(used.begin(), used.end(), std::make_pair(a, b)) != used.end()) continue;
    used.push_back({a, b});
    edges.push_back({a, b, cap()});
    --extra_edges;
  }
  return Bidirected(n, edges);
}

inline TrafficMatrix RandomTm(Rng& rng, int n, double zero_prob = 0.2) {
  TrafficMatrix tm(n);
  for (int s = 0; s < n; ++s) {
    for (int d = 0; d < n; ++d) {
      if (s != d && Uniform01(rng) >= zero_prob) tm.set(s, d, 10.0 * Uniform01(rng));
    }
  }
  return tm;
}

// ---------------------------------------------------------------------------
// Routing oracle: distances by exhaustive simple-path enumeration, loads by
// recursive per-node equal splitting. Shares no code with the routing module.

inline long long ExhaustiveDistance(const Topology& topo, const std::vector<int>& w, int from,
                                    int to) {
  long long best = std::numeric_limits<long long>::max();
  std::vector<char> on_path(topo.num_nodes(), 0);
  std::function<void(int, long long)> dfs = [&](int v, long long acc) {
    if (v == to) {
      best = std::min(best, acc);
      return;
    }
    on_path[v] = 1;
    for (const auto& l : topo.links()) {
      if (l.src == v && !on_path[l.dst]) dfs(l.dst, acc + w[l.id]);
    }
    on_path[v] = 0;
  };
  dfs(from, 0);
  return best;
}

inline std::vector<double> OracleLoads(const Topology& topo, const TrafficMatrix& tm,
                                       const std::vector<int>& w) {
  const int n = topo.num_nodes();
  std::vector<double> load(topo.num_links(), 0.0);
  for (int t = 0; t < n; ++t) {
    std::vector<long long> dist(n);
    for (int v = 0; v < n; ++v) dist[v] = v == t ? 0 : ExhaustiveDistance(topo, w, v, t);
    std::function<void(int, double)> push = [&](int v, double amount) {
      if (v == t) return;
      std::vector<int> hops;
      for (const auto& l : topo.links()) {
        if (l.src == v && w[l.id] + dist[l.dst] == dist[v]) hops.push_back(l.id);
      }
      for (int e : hops) {
        load[e] += amount / hops.size();
        push(topo.link(e).dst, amount / hops.size());
      }
    };
    for (int s = 0; s < n; ++s) {
      if (s != t && tm.at(s, t) > 0) push(s, tm.at(s, t));
    }
  }
  return load;
}

// Relative error with an absolute floor for near-zero gradients.
inline bool RelClose(double a, double b, double rel, double abs_floor = 1e-8) {
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + abs_floor;
}

struct GradientCheck {
  int checked = 0;
  int mismatches = 0;
  int kinks = 0;  // central difference straddled a kink; matched a one-sided slope
};

// Central differences against an analytic gradient. Where the central value
// disagrees and the two one-sided slopes also disagree, the loss has a kink
// within h and the analytic value must match one of the one-sided slopes.
template <typename Loss>
void CheckGradient(std::span<double> params, const std::vector<double>& analytic, Loss&& loss,
                   double h, double rel, double abs_floor, GradientCheck& out) {
  for (size_t i = 0; i < params.size(); ++i) {
    const double orig = params[i];
    params[i] = orig + h;
    const double up = loss();
    params[i] = orig - h;
    const double down = loss();
    params[i] = orig;
    ++out.checked;
    if (RelClose(analytic[i], (up - down) / (2 * h), rel, abs_floor)) continue;
    const double mid = loss();
    const double right = (up - mid) / h, left = (mid - down) / h;
    if (!RelClose(left, right, rel, abs_floor) &&
        (RelClose(analytic[i], right, rel, abs_floor) ||
         RelClose(analytic[i], left, rel, abs_floor))) {
      ++out.kinks;
    } else {
      ++out.mismatches;
    }
  }
}

}  // namespace magnneto::testing

#endif  // MAGNNETO_TESTS_TEST_UTIL_H_
