#include "magnneto/trainer.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace magnneto {

EpisodeOutcome RunPolicyEpisode(const Topology& topology, const TrafficMatrix& tm,
                                const PolicyParams& policy, const EpisodeConfig& config,
                                SelectionMode mode, const CriticParams* critic) {
  EpisodeOutcome out;
  Rng action_rng(ActionSeed(config.seed));
  out.visited.reserve(config.episode_length + 1);
  out.visited.push_back(ResetEnv(topology, tm, config));
  for (int t = 0; t < config.episode_length; ++t) {
    const EnvState& state = out.visited.back();
    std::vector<double> logits =
        ActorLogits(policy, topology, state.weights, state.utilizations);
    if (critic) {
      out.values.push_back(CriticValue(*critic, topology, state.weights, state.utilizations));
    }
    ActionSample actions = mode == SelectionMode::kGreedy
                               ? SelectGreedyActions(logits, config.num_actions)
                               : SelectActions(logits, config.num_actions, action_rng);
    StepResult next = StepEnv(topology, tm, state, actions.links, config);
    out.rewards.push_back(next.reward);
    out.logits.push_back(std::move(logits));
    out.actions.push_back(std::move(actions));
    out.visited.push_back(std::move(next.state));
  }
  out.best_index = BestConfigurationIndex(out.visited);
  return out;
}

Trajectory CollectEpisode(const Topology& topology, const TrafficMatrix& tm,
                          const PolicyParams& policy, const CriticParams& critic,
                          const EpisodeConfig& config) {
  EpisodeOutcome episode =
      RunPolicyEpisode(topology, tm, policy, config, SelectionMode::kSample, &critic);
  Trajectory traj;
  traj.steps.resize(config.episode_length);
  for (int t = 0; t < config.episode_length; ++t) {
    TrajectoryStep& step = traj.steps[t];
    step.weights = std::move(episode.visited[t].weights);
    step.utilizations = std::move(episode.visited[t].utilizations);
    step.logits = std::move(episode.logits[t]);
    step.actions = std::move(episode.actions[t].links);
    step.log_prob = episode.actions[t].log_prob;
    step.reward = episode.rewards[t];
    step.value = episode.values[t];
  }
  traj.initial_max_utilization = episode.visited.front().max_utilization;
  traj.final_max_utilization = episode.visited.back().max_utilization;
  traj.best_max_utilization = episode.visited[episode.best_index].max_utilization;
  traj.best_weights = episode.visited[episode.best_index].weights;
  return traj;
}

GaeResult ComputeGae(std::span<const double> rewards, std::span<const double> values,
                     double gamma, double lambda) {
  if (rewards.size() != values.size()) {
    throw Error(ErrorKind::kValidation, "rewards and values differ in length");
  }
  const size_t n = rewards.size();
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double running = 0.0;
  for (size_t t = n; t-- > 0;) {
    const double next_value = t + 1 < n ? values[t + 1] : 0.0;
    const double delta = rewards[t] + gamma * next_value - values[t];
    running = delta + gamma * lambda * running;
    out.advantages[t] = running;
    out.returns[t] = running + values[t];
  }
  return out;
}

void PpoConfig::Validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw Error(ErrorKind::kValidation, "gamma must be in (0, 1]");
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw Error(ErrorKind::kValidation, "lambda must be in [0, 1]");
  }
  if (!(clip > 0.0)) throw Error(ErrorKind::kValidation, "clip must be > 0");
  if (epochs < 1 || minibatch_size < 1) {
    throw Error(ErrorKind::kValidation, "epochs and minibatch size must be >= 1");
  }
  if (iterations < 0) throw Error(ErrorKind::kValidation, "iterations must be >= 0");
}

MpnnAdam MpnnAdam::For(const MpnnParams& params, const AdamConfig& config) {
  return {AdamState(params.message.num_params(), config),
          AdamState(params.update.num_params(), config),
          AdamState(params.readout.num_params(), config)};
}

void MpnnAdam::Step(MpnnParams& params, const MpnnGrads& grads) {
  AdamStep(params.message.params(), grads.message, message);
  AdamStep(params.update.params(), grads.update, update);
  AdamStep(params.readout.params(), grads.readout, readout);
}

PpoLoss ComputePpoLoss(const Topology& topology, const Trajectory& trajectory,
                       std::span<const size_t> batch, std::span<const double> advantages,
                       std::span<const double> returns, const PolicyParams& policy,
                       const CriticParams& critic, const PpoConfig& config) {
  PpoLoss loss;
  loss.policy_grads = MpnnGrads::ZerosLike(policy);
  loss.critic_grads = MpnnGrads::ZerosLike(critic);
  const double inv = 1.0 / static_cast<double>(batch.size());
  const int num_links = topology.num_links();
  std::vector<double> logp_grad(num_links);
  std::vector<double> entropy_grad(num_links);
  std::vector<double> logit_grad(num_links);
  MpnnTape tape;
  for (size_t t : batch) {
    const TrajectoryStep& step = trajectory.steps[t];
    const double adv = advantages[t];

    const std::vector<double> logits =
        ActorLogits(policy, topology, step.weights, step.utilizations,
                    kMessagePassingSteps, &tape);
    const double logp = JointLogProb(logits, step.actions, logp_grad);
    const double entropy = MeanConditionalEntropy(logits, step.actions, entropy_grad);
    const double ratio = std::exp(logp - step.log_prob);
    const double clipped_ratio = std::clamp(ratio, 1.0 - config.clip, 1.0 + config.clip);
    const double unclipped = ratio * adv;
    const double clipped = clipped_ratio * adv;
    const double surrogate = std::min(unclipped, clipped);
    // d surrogate / d logp; zero when the clipped branch is the active one.
    const double surrogate_grad = unclipped <= clipped ? unclipped : 0.0;

    loss.log.actor_loss -= inv * surrogate;
    loss.log.entropy += inv * entropy;
    loss.log.clipped_objective += inv * surrogate;
    loss.log.unclipped_objective += inv * unclipped;
    loss.log.mean_ratio += inv * ratio;
    for (int e = 0; e < num_links; ++e) {
      logit_grad[e] = -inv * surrogate_grad * logp_grad[e] -
                      config.entropy_coef * inv * entropy_grad[e];
    }
    loss.policy_grads.Add(ActorBackward(policy, topology, tape, logit_grad));

    const double value = CriticValue(critic, topology, step.weights, step.utilizations,
                                     kMessagePassingSteps, &tape);
    const double err = value - returns[t];
    loss.log.critic_loss += config.value_coef * inv * err * err;
    loss.critic_grads.Add(
        CriticBackward(critic, topology, tape, config.value_coef * inv * 2.0 * err));
  }
  loss.log.size = static_cast<int>(batch.size());
  loss.total = loss.log.actor_loss + loss.log.critic_loss -
               config.entropy_coef * loss.log.entropy;
  return loss;
}

UpdateDiagnostics PpoUpdate(const Topology& topology, const Trajectory& trajectory,
                            PolicyParams& policy, CriticParams& critic,
                            const PpoConfig& config, MpnnAdam& policy_adam,
                            MpnnAdam& critic_adam, Rng& shuffle_rng) {
  config.Validate();
  const size_t n = trajectory.steps.size();
  UpdateDiagnostics diag;
  if (n == 0) return diag;
  std::vector<double> rewards(n), values(n);
  for (size_t t = 0; t < n; ++t) {
    rewards[t] = trajectory.steps[t].reward;
    values[t] = trajectory.steps[t].value;
  }
  GaeResult gae = ComputeGae(rewards, values, config.gamma, config.lambda);
  std::vector<double> advantages = gae.advantages;
  if (config.normalize_advantages) {
    const double mean = std::accumulate(advantages.begin(), advantages.end(), 0.0) / n;
    double var = 0.0;
    for (double a : advantages) var += (a - mean) * (a - mean);
    const double stddev = std::max(std::sqrt(var / n), 1e-8);
    for (double& a : advantages) a = (a - mean) / stddev;
  }

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const size_t mb = static_cast<size_t>(config.minibatch_size);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // Fisher-Yates on the portable integer sampler.
    for (size_t i = n; i > 1; --i) {
      const size_t j = static_cast<size_t>(UniformInt(shuffle_rng, 0, int64_t(i) - 1));
      std::swap(order[i - 1], order[j]);
    }
    for (size_t start = 0; start < n; start += mb) {
      const size_t end = std::min(n, start + mb);
      std::span<const size_t> batch(order.data() + start, end - start);
      PpoLoss loss = ComputePpoLoss(topology, trajectory, batch, advantages, gae.returns,
                                    policy, critic, config);
      if (!std::isfinite(loss.total)) {
        char buf[256];
        std::snprintf(buf, sizeof(buf),
                      "non-finite PPO loss (actor %g, critic %g, entropy %g) in epoch %d",
                      loss.log.actor_loss, loss.log.critic_loss, loss.log.entropy, epoch);
        throw Error(ErrorKind::kNumeric, buf);
      }
      policy_adam.Step(policy, loss.policy_grads);
      critic_adam.Step(critic, loss.critic_grads);
      if (!policy.AllFinite() || !critic.AllFinite()) {
        throw Error(ErrorKind::kNumeric, "non-finite parameters after Adam step");
      }
      diag.minibatches.push_back(loss.log);
    }
  }
  for (const auto& m : diag.minibatches) {
    diag.actor_loss += m.actor_loss;
    diag.critic_loss += m.critic_loss;
    diag.entropy += m.entropy;
  }
  const double count = static_cast<double>(diag.minibatches.size());
  diag.actor_loss /= count;
  diag.critic_loss /= count;
  diag.entropy /= count;
  return diag;
}

std::vector<Scenario> InterleaveScenarios(
    const std::vector<std::vector<TrafficMatrix>>& pools) {
  std::vector<Scenario> out;
  size_t longest = 0;
  for (const auto& p : pools) longest = std::max(longest, p.size());
  for (size_t i = 0; i < longest; ++i) {
    for (size_t topo = 0; topo < pools.size(); ++topo) {
      if (i < pools[topo].size()) out.push_back({static_cast<int>(topo), pools[topo][i]});
    }
  }
  return out;
}

std::pair<PolicyParams, CriticParams> InitialParams(uint64_t seed) {
  Rng rng(DeriveSeed(seed, 10));
  PolicyParams policy = MakePolicy(rng);
  CriticParams critic = MakeCritic(rng);
  return {std::move(policy), std::move(critic)};
}

Checkpoint MakeCheckpoint(const PolicyParams& policy, const CriticParams& critic) {
  Checkpoint ckpt;
  SavePolicyCritic(ckpt, policy, critic);
  return ckpt;
}

TrainResult Train(const TrainConfig& config) {
  config.ppo.Validate();
  if (config.topologies.empty() || config.scenarios.empty()) {
    throw Error(ErrorKind::kValidation, "training needs at least one topology and one TM");
  }
  for (const auto& s : config.scenarios) {
    if (s.topology_index < 0 || s.topology_index >= int(config.topologies.size()) ||
        s.tm.size() != config.topologies[s.topology_index].num_nodes()) {
      throw Error(ErrorKind::kValidation, "scenario does not match its topology");
    }
  }
  auto [policy, critic] = InitialParams(config.seed);
  MpnnAdam policy_adam = MpnnAdam::For(policy, config.ppo.adam());
  MpnnAdam critic_adam = MpnnAdam::For(critic, config.ppo.adam());
  Rng shuffle_rng(DeriveSeed(config.seed, 11));

  TrainResult result;
  for (int it = 0; it < config.ppo.iterations; ++it) {
    const Scenario& scenario = config.scenarios[it % config.scenarios.size()];
    const Topology& topology = config.topologies[scenario.topology_index];
    EpisodeConfig episode;
    episode.num_actions = config.num_actions;
    episode.episode_length =
        config.episode_length > 0
            ? config.episode_length
            : DefaultEpisodeLength(topology.num_links(), config.num_actions,
                                   config.links_multiplier);
    episode.init_weight_low = config.init_weight_low;
    episode.init_weight_high = config.init_weight_high;
    episode.seed = DeriveSeed(config.seed, 1000 + static_cast<uint64_t>(it));

    const Trajectory traj = CollectEpisode(topology, scenario.tm, policy, critic, episode);
    const UpdateDiagnostics diag = PpoUpdate(topology, traj, policy, critic, config.ppo,
                                             policy_adam, critic_adam, shuffle_rng);
    TrainingLogRow row;
    row.iteration = it;
    double reward_sum = 0.0;
    for (const auto& s : traj.steps) reward_sum += s.reward;
    row.mean_reward = reward_sum / traj.steps.size();
    row.best_max_utilization = traj.best_max_utilization;
    row.actor_loss = diag.actor_loss;
    row.critic_loss = diag.critic_loss;
    row.entropy = diag.entropy;
    result.log.push_back(row);
    if (config.on_log) config.on_log(row);
    if (config.checkpoint_every > 0 && (it + 1) % config.checkpoint_every == 0 &&
        config.on_checkpoint) {
      config.on_checkpoint(it + 1, MakeCheckpoint(policy, critic));
    }
  }
  result.checkpoint = MakeCheckpoint(policy, critic);
  result.policy = std::move(policy);
  result.critic = std::move(critic);
  return result;
}

std::string FormatTrainingLogRow(const TrainingLogRow& row) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g", row.iteration,
                row.mean_reward, row.best_max_utilization, row.actor_loss, row.critic_loss,
                row.entropy);
  return buf;
}

}  // namespace magnneto
