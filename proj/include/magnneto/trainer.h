#ifndef MAGNNETO_TRAINER_H_
#define MAGNNETO_TRAINER_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "magnneto/env.h"
#include "magnneto/gnn.h"
#include "magnneto/nn.h"
#include "magnneto/topology.h"

namespace magnneto {

enum class SelectionMode { kSample, kGreedy };

// Everything observed while running one episode with a policy.
struct EpisodeOutcome {
  std::vector<EnvState> visited;           // T + 1 states
  std::vector<std::vector<double>> logits;  // per step
  std::vector<ActionSample> actions;        // per step
  std::vector<double> rewards;              // per step
  std::vector<double> values;               // per step, empty without a critic
  size_t best_index = 0;

  const std::vector<int>& best_weights() const { return visited[best_index].weights; }
  double best_max_utilization() const { return visited[best_index].max_utilization; }
};

// Reset, then T rounds of logits -> action selection -> step. The action
// stream is seeded from config.seed, so sampled episodes are reproducible.
EpisodeOutcome RunPolicyEpisode(const Topology& topology, const TrafficMatrix& tm,
                                const PolicyParams& policy, const EpisodeConfig& config,
                                SelectionMode mode, const CriticParams* critic = nullptr);

struct TrajectoryStep {
  std::vector<int> weights;
  std::vector<double> utilizations;
  std::vector<double> logits;
  std::vector<LinkId> actions;
  double reward = 0.0;
  double log_prob = 0.0;  // behavior joint log-prob
  double value = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  double initial_max_utilization = 0.0;
  double final_max_utilization = 0.0;
  double best_max_utilization = 0.0;
  std::vector<int> best_weights;
};

Trajectory CollectEpisode(const Topology& topology, const TrafficMatrix& tm,
                          const PolicyParams& policy, const CriticParams& critic,
                          const EpisodeConfig& config);

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// Fixed-horizon GAE with terminal bootstrap V_T = 0.
GaeResult ComputeGae(std::span<const double> rewards, std::span<const double> values,
                     double gamma, double lambda);

struct PpoConfig {
  double gamma = 0.97;
  double lambda = 0.9;
  double clip = 0.2;
  int epochs = 3;
  int minibatch_size = 25;
  double value_coef = 0.5;
  double entropy_coef = 0.001;
  int iterations = 0;
  double learning_rate = 3e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 0.01;
  bool normalize_advantages = true;

  void Validate() const;
  AdamConfig adam() const { return {learning_rate, adam_beta1, adam_beta2, adam_epsilon}; }
};

struct MpnnAdam {
  AdamState message;
  AdamState update;
  AdamState readout;

  static MpnnAdam For(const MpnnParams& params, const AdamConfig& config);
  void Step(MpnnParams& params, const MpnnGrads& grads);
};

struct MinibatchLog {
  double actor_loss = 0.0;
  double critic_loss = 0.0;  // already multiplied by value_coef
  double entropy = 0.0;
  // Mean surrogate terms before the step; clipped <= unclipped always.
  double clipped_objective = 0.0;
  double unclipped_objective = 0.0;
  double mean_ratio = 0.0;
  int size = 0;
};

struct UpdateDiagnostics {
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double entropy = 0.0;
  std::vector<MinibatchLog> minibatches;
};

// Loss of one minibatch and its gradients. Exposed for gradient checking.
struct PpoLoss {
  double total = 0.0;
  MinibatchLog log;
  MpnnGrads policy_grads;
  MpnnGrads critic_grads;
};

PpoLoss ComputePpoLoss(const Topology& topology, const Trajectory& trajectory,
                       std::span<const size_t> batch, std::span<const double> advantages,
                       std::span<const double> returns, const PolicyParams& policy,
                       const CriticParams& critic, const PpoConfig& config);

// Epochs x shuffled minibatches of timesteps, one Adam step per minibatch for
// each network. Throws Error(kNumeric) on a non-finite loss.
UpdateDiagnostics PpoUpdate(const Topology& topology, const Trajectory& trajectory,
                            PolicyParams& policy, CriticParams& critic,
                            const PpoConfig& config, MpnnAdam& policy_adam,
                            MpnnAdam& critic_adam, Rng& shuffle_rng);

struct TrainingLogRow {
  int iteration = 0;
  double mean_reward = 0.0;
  double best_max_utilization = 0.0;
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double entropy = 0.0;
};

struct Scenario {
  int topology_index = 0;
  TrafficMatrix tm;
};

struct TrainConfig {
  std::vector<Topology> topologies;
  // Visited round-robin; see InterleaveScenarios for alternating topologies.
  std::vector<Scenario> scenarios;
  PpoConfig ppo;
  int num_actions = 1;
  double links_multiplier = 3.0;
  int episode_length = 0;  // 0 = DefaultEpisodeLength
  int init_weight_low = 1;
  int init_weight_high = 4;
  uint64_t seed = 0;
  int checkpoint_every = 0;  // 0 = only the final checkpoint
  std::function<void(int iteration, const Checkpoint&)> on_checkpoint;
  std::function<void(const TrainingLogRow&)> on_log;
};

// Orders per-topology TM pools so that consecutive scenarios alternate
// between topologies.
std::vector<Scenario> InterleaveScenarios(
    const std::vector<std::vector<TrafficMatrix>>& pools);

struct TrainResult {
  PolicyParams policy;
  CriticParams critic;
  std::vector<TrainingLogRow> log;
  Checkpoint checkpoint;
};

std::pair<PolicyParams, CriticParams> InitialParams(uint64_t seed);
Checkpoint MakeCheckpoint(const PolicyParams& policy, const CriticParams& critic);

TrainResult Train(const TrainConfig& config);

inline constexpr const char* kTrainingLogHeader =
    "iteration,mean_reward,best_maxutil,actor_loss,critic_loss,entropy";
std::string FormatTrainingLogRow(const TrainingLogRow& row);

}  // namespace magnneto

#endif  // MAGNNETO_TRAINER_H_
