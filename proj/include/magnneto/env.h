#ifndef MAGNNETO_ENV_H_
#define MAGNNETO_ENV_H_

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "magnneto/common.h"
#include "magnneto/routing.h"
#include "magnneto/topology.h"

namespace magnneto {

struct EpisodeConfig {
  int episode_length = 1;
  int num_actions = 1;
  int init_weight_low = 1;
  int init_weight_high = 4;
  uint64_t seed = 0;
  // Optional upper bound on link weights; actions on a capped link leave it
  // unchanged. Unbounded by default.
  std::optional<int> weight_cap;

  void Validate(int num_links) const;
};

// Independent random streams derived from the episode seed.
inline uint64_t InitWeightSeed(uint64_t episode_seed) { return DeriveSeed(episode_seed, 1); }
inline uint64_t ActionSeed(uint64_t episode_seed) { return DeriveSeed(episode_seed, 2); }

struct EnvState {
  std::vector<int> weights;
  std::vector<double> utilizations;
  double max_utilization = 0.0;
  int t = 0;
};

// Builds the state for `weights` with a fresh routing computation.
EnvState MakeEnvState(const Topology& topology, const TrafficMatrix& tm,
                      std::vector<int> weights, int t);

// Weights i.i.d. uniform integers in the configured range, t = 0.
EnvState ResetEnv(const Topology& topology, const TrafficMatrix& tm,
                  const EpisodeConfig& config);

struct StepResult {
  EnvState state;
  double reward = 0.0;
};

// Increments each selected link's weight by one, reroutes, and returns
// reward = max_util(t) - max_util(t + 1).
StepResult StepEnv(const Topology& topology, const TrafficMatrix& tm,
                   const EnvState& state, std::span<const LinkId> actions,
                   const EpisodeConfig& config);

// Index of the visited configuration with minimum max utilization; ties keep
// the earliest.
size_t BestConfigurationIndex(std::span<const EnvState> visited);
std::vector<int> BestConfiguration(std::span<const EnvState> visited);

// T = ceil(c * E / n).
int DefaultEpisodeLength(int num_links, int num_actions, double links_multiplier = 3.0);

// Ordered set of distinct links drawn from the softmax of the logits.
struct ActionSample {
  std::vector<LinkId> links;
  double log_prob = 0.0;
};

// n sequential draws without replacement, renormalizing the softmax over the
// remaining links after each draw.
ActionSample SelectActions(std::span<const double> logits, int n, Rng& rng);

// The n highest logits (ties by lower link id) with their joint log-prob.
ActionSample SelectGreedyActions(std::span<const double> logits, int n);

// Joint log-probability of an ordered action set under sequential sampling
// without replacement. When `grad` is non-empty it receives d/dlogits.
double JointLogProb(std::span<const double> logits, std::span<const LinkId> actions,
                    std::span<double> grad = {});

// Mean entropy of the conditional categoricals met while drawing `actions`
// in order. When `grad` is non-empty it receives d/dlogits.
double MeanConditionalEntropy(std::span<const double> logits,
                              std::span<const LinkId> actions, std::span<double> grad = {});

}  // namespace magnneto

#endif  // MAGNNETO_ENV_H_
