#include "magnneto/env.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace magnneto {

void EpisodeConfig::Validate(int num_links) const {
  if (episode_length < 1) throw Error(ErrorKind::kValidation, "episode length must be >= 1");
  if (num_actions < 1 || num_actions > num_links) {
    throw Error(ErrorKind::kValidation, "number of actions must be in [1, E]");
  }
  if (init_weight_low < 1 || init_weight_high < init_weight_low) {
    throw Error(ErrorKind::kValidation, "initial weight range must satisfy 1 <= low <= high");
  }
  if (weight_cap && *weight_cap < init_weight_high) {
    throw Error(ErrorKind::kValidation, "weight cap below the initial weight range");
  }
}

EnvState MakeEnvState(const Topology& topology, const TrafficMatrix& tm,
                      std::vector<int> weights, int t) {
  RoutingState routing = EcmpLoads(topology, tm, weights);
  EnvState state;
  state.weights = std::move(weights);
  state.utilizations = std::move(routing.utilization);
  state.max_utilization = routing.max_utilization;
  state.t = t;
  return state;
}

EnvState ResetEnv(const Topology& topology, const TrafficMatrix& tm,
                  const EpisodeConfig& config) {
  config.Validate(topology.num_links());
  Rng rng(InitWeightSeed(config.seed));
  std::vector<int> weights(topology.num_links());
  for (int& w : weights) {
    w = static_cast<int>(UniformInt(rng, config.init_weight_low, config.init_weight_high));
  }
  return MakeEnvState(topology, tm, std::move(weights), 0);
}

StepResult StepEnv(const Topology& topology, const TrafficMatrix& tm,
                   const EnvState& state, std::span<const LinkId> actions,
                   const EpisodeConfig& config) {
  if (state.t >= config.episode_length) {
    throw Error(ErrorKind::kValidation, "step past the end of the episode");
  }
  std::vector<int> weights = state.weights;
  std::vector<char> touched(weights.size(), 0);
  for (LinkId e : actions) {
    if (e < 0 || e >= static_cast<LinkId>(weights.size())) {
      throw Error(ErrorKind::kValidation, "action references unknown link");
    }
    if (touched[e]) {
      throw Error(ErrorKind::kValidation,
                  "link " + std::to_string(e) + " acted on twice in one step");
    }
    touched[e] = 1;
    if (!config.weight_cap || weights[e] < *config.weight_cap) ++weights[e];
  }
  StepResult result;
  if (actions.empty()) {
    result.state = state;
    result.state.t = state.t + 1;
  } else {
    result.state = MakeEnvState(topology, tm, std::move(weights), state.t + 1);
  }
  result.reward = state.max_utilization - result.state.max_utilization;
  return result;
}

size_t BestConfigurationIndex(std::span<const EnvState> visited) {
  if (visited.empty()) throw Error(ErrorKind::kValidation, "no visited configurations");
  size_t best = 0;
  for (size_t i = 1; i < visited.size(); ++i) {
    if (visited[i].max_utilization < visited[best].max_utilization) best = i;
  }
  return best;
}

std::vector<int> BestConfiguration(std::span<const EnvState> visited) {
  return visited[BestConfigurationIndex(visited)].weights;
}

int DefaultEpisodeLength(int num_links, int num_actions, double links_multiplier) {
  if (num_actions < 1) throw Error(ErrorKind::kValidation, "number of actions must be >= 1");
  const double raw = links_multiplier * num_links / num_actions;
  // Shave representation error so that e.g. (150/52)*52/10 yields 15.
  return std::max(1, static_cast<int>(std::ceil(raw * (1.0 - 1e-12))));
}

namespace {

// log-sum-exp over the links still available.
double LogSumExp(std::span<const double> logits, const std::vector<char>& taken) {
  double m = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < logits.size(); ++i) {
    if (!taken[i]) m = std::max(m, logits[i]);
  }
  double s = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    if (!taken[i]) s += std::exp(logits[i] - m);
  }
  return m + std::log(s);
}

void CheckActionCount(std::span<const double> logits, int n) {
  if (n < 0 || n > static_cast<int>(logits.size())) {
    throw Error(ErrorKind::kValidation, "cannot draw " + std::to_string(n) +
                                            " actions from " + std::to_string(logits.size()) +
                                            " links");
  }
}

}  // namespace

ActionSample SelectActions(std::span<const double> logits, int n, Rng& rng) {
  CheckActionCount(logits, n);
  const size_t num_links = logits.size();
  std::vector<char> taken(num_links, 0);
  ActionSample sample;
  for (int draw = 0; draw < n; ++draw) {
    const double lse = LogSumExp(logits, taken);
    const double u = Uniform01(rng);
    double cumulative = 0.0;
    LinkId chosen = -1;
    LinkId last_positive = -1;
    for (size_t i = 0; i < num_links; ++i) {
      if (taken[i]) continue;
      const double p = std::exp(logits[i] - lse);
      if (p > 0.0) last_positive = static_cast<LinkId>(i);
      cumulative += p;
      if (u < cumulative) {
        chosen = static_cast<LinkId>(i);
        break;
      }
    }
    // Rounding can leave the cumulative sum a hair below u.
    if (chosen < 0) chosen = last_positive;
    sample.log_prob += logits[chosen] - lse;
    taken[chosen] = 1;
    sample.links.push_back(chosen);
  }
  return sample;
}

ActionSample SelectGreedyActions(std::span<const double> logits, int n) {
  CheckActionCount(logits, n);
  std::vector<LinkId> order(logits.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](LinkId a, LinkId b) { return logits[a] > logits[b]; });
  ActionSample sample;
  sample.links.assign(order.begin(), order.begin() + n);
  sample.log_prob = JointLogProb(logits, sample.links);
  return sample;
}

double JointLogProb(std::span<const double> logits, std::span<const LinkId> actions,
                    std::span<double> grad) {
  CheckActionCount(logits, static_cast<int>(actions.size()));
  std::vector<char> taken(logits.size(), 0);
  if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
  double total = 0.0;
  for (LinkId a : actions) {
    if (taken[a]) throw Error(ErrorKind::kValidation, "repeated link in action set");
    const double lse = LogSumExp(logits, taken);
    total += logits[a] - lse;
    if (!grad.empty()) {
      for (size_t i = 0; i < logits.size(); ++i) {
        if (!taken[i]) grad[i] -= std::exp(logits[i] - lse);
      }
      grad[a] += 1.0;
    }
    taken[a] = 1;
  }
  return total;
}

double MeanConditionalEntropy(std::span<const double> logits,
                              std::span<const LinkId> actions, std::span<double> grad) {
  std::vector<char> taken(logits.size(), 0);
  if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
  if (actions.empty()) return 0.0;
  const double scale = 1.0 / static_cast<double>(actions.size());
  double total = 0.0;
  for (LinkId a : actions) {
    const double lse = LogSumExp(logits, taken);
    double entropy = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
      if (taken[i]) continue;
      const double log_p = logits[i] - lse;
      entropy -= std::exp(log_p) * log_p;
    }
    total += entropy;
    if (!grad.empty()) {
      for (size_t i = 0; i < logits.size(); ++i) {
        if (taken[i]) continue;
        const double log_p = logits[i] - lse;
        grad[i] -= scale * std::exp(log_p) * (log_p + entropy);
      }
    }
    taken[a] = 1;
  }
  return total * scale;
}

}  // namespace magnneto
