#include "magnneto/dist_sim.h"

#include <cstdio>
#include <queue>
#include <sstream>

namespace magnneto {

double OverheadLedger::total_bytes() const {
  double total = 0.0;
  for (size_t e = 0; e < hidden_messages.size(); ++e) {
    total += hidden_bytes(static_cast<LinkId>(e)) + logit_bytes(static_cast<LinkId>(e));
  }
  return total;
}

std::vector<LinkId> FloodTreeLinks(const Topology& topology, NodeId origin) {
  std::vector<char> seen(topology.num_nodes(), 0);
  std::vector<LinkId> tree;
  std::queue<NodeId> frontier;
  frontier.push(origin);
  seen[origin] = 1;
  while (!frontier.empty()) {
    const NodeId v = frontier.front();
    frontier.pop();
    for (LinkId e : topology.out_links(v)) {
      const NodeId u = topology.link(e).dst;
      if (seen[u]) continue;
      seen[u] = 1;
      tree.push_back(e);
      frontier.push(u);
    }
  }
  return tree;
}

namespace {

OverheadLedger EmptyLedger(const Topology& topology, int mp_steps, const MessageSizes& sizes) {
  OverheadLedger ledger;
  ledger.sizes = sizes;
  ledger.mp_steps = mp_steps;
  ledger.hidden_messages.assign(topology.num_links(), 0);
  ledger.logit_forwards.assign(topology.num_links(), 0);
  return ledger;
}

// Agents are hosted at the source node of their link; logits are flooded
// from there.
std::vector<std::vector<LinkId>> AllFloodTrees(const Topology& topology) {
  std::vector<std::vector<LinkId>> trees(topology.num_nodes());
  for (NodeId v = 0; v < topology.num_nodes(); ++v) trees[v] = FloodTreeLinks(topology, v);
  return trees;
}

}  // namespace

OverheadLedger ExpectedOverhead(const Topology& topology, int time_steps, int mp_steps,
                                const MessageSizes& sizes) {
  OverheadLedger ledger = EmptyLedger(topology, mp_steps, sizes);
  ledger.time_steps = time_steps;
  uint64_t per_step = 0;
  for (const auto& l : topology.links()) {
    // Agent e feeds every agent e' with e in B(e'), i.e. every link into src(e).
    const uint64_t fan_out = topology.in_links(l.src).size();
    ledger.hidden_messages[l.id] = uint64_t(time_steps) * mp_steps * fan_out;
    per_step += uint64_t(mp_steps) * fan_out;
  }
  const auto trees = AllFloodTrees(topology);
  for (NodeId v = 0; v < topology.num_nodes(); ++v) {
    const uint64_t origins = topology.out_links(v).size();
    for (LinkId e : trees[v]) ledger.logit_forwards[e] += uint64_t(time_steps) * origins;
  }
  ledger.messages_per_step.assign(time_steps, per_step);
  return ledger;
}

OverheadSummary SummarizeOverhead(const OverheadLedger& ledger, double step_rate) {
  OverheadSummary summary;
  summary.hidden_message_bytes = ledger.sizes.hidden_message_bytes();
  summary.adjacency_step_bytes = ledger.mp_steps * summary.hidden_message_bytes;
  summary.logit_message_bytes = ledger.sizes.logit_message_bytes();
  summary.step_rate = step_rate;
  for (size_t e = 0; e < ledger.hidden_messages.size(); ++e) {
    OverheadRow row;
    row.link = static_cast<LinkId>(e);
    row.bytes_hidden = ledger.hidden_bytes(row.link);
    row.bytes_logits = ledger.logit_bytes(row.link);
    row.total_mb = (row.bytes_hidden + row.bytes_logits) / 1e6;
    row.mb_per_s = ledger.time_steps > 0 ? row.total_mb / ledger.time_steps * step_rate : 0.0;
    summary.mean_mb_per_s += row.mb_per_s;
    summary.rows.push_back(row);
  }
  if (!summary.rows.empty()) summary.mean_mb_per_s /= static_cast<double>(summary.rows.size());
  return summary;
}

OverheadSummary OverheadReport(const Topology& topology, int time_steps, int mp_steps,
                               int hidden_dim, int float_bytes, double step_rate,
                               double header_overhead) {
  if (time_steps < 0 || mp_steps < 1 || hidden_dim < 1 || float_bytes < 1) {
    throw Error(ErrorKind::kValidation, "invalid overhead report parameters");
  }
  const MessageSizes sizes{hidden_dim, float_bytes, header_overhead};
  return SummarizeOverhead(ExpectedOverhead(topology, time_steps, mp_steps, sizes), step_rate);
}

std::string FormatOverheadCsv(const OverheadSummary& summary) {
  std::ostringstream out;
  out << kOverheadCsvHeader << "\n";
  char buf[256];
  for (const auto& r : summary.rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\n", r.link, r.bytes_hidden,
                  r.bytes_logits, r.total_mb, r.mb_per_s);
    out << buf;
  }
  return out.str();
}

namespace {

std::string FormatActions(const std::vector<LinkId>& links) {
  std::string s = "{";
  for (size_t i = 0; i < links.size(); ++i) s += (i ? "," : "") + std::to_string(links[i]);
  return s + "}";
}

}  // namespace

DistributedResult RunDistributedEpisode(const Topology& topology, const TrafficMatrix& tm,
                                        const PolicyParams& params,
                                        const DistributedConfig& config) {
  const EpisodeConfig& ep = config.episode;
  ep.Validate(topology.num_links());
  const int num_links = topology.num_links();

  // X^0 is an input shared by every agent.
  const EnvState initial = ResetEnv(topology, tm, ep);
  std::vector<AgentReplica> replicas(num_links);
  for (LinkId e = 0; e < num_links; ++e) {
    AgentReplica& r = replicas[e];
    r.link = e;
    r.params = params;
    r.shared_seed = ep.seed;
    if (config.tampered_seed && config.tampered_seed->first == e) {
      r.shared_seed = config.tampered_seed->second;
    }
    r.rng = Rng(ActionSeed(r.shared_seed));
    r.tm = tm;
    r.view = MakeEnvState(topology, r.tm, initial.weights, 0);
    r.best_weights = r.view.weights;
    r.best_max_utilization = r.view.max_utilization;
  }

  DistributedResult result;
  result.ledger = EmptyLedger(topology, config.mp_steps, config.sizes);
  const auto trees = AllFloodTrees(topology);
  std::vector<HiddenState> mailbox(num_links);
  std::vector<double> broadcast(num_links);
  std::vector<const HiddenState*> received;

  for (int t = 0; t < ep.episode_length; ++t) {
    for (AgentReplica& r : replicas) {
      r.hidden = InitHidden(r.view.weights[r.link], r.view.utilizations[r.link]);
    }
    uint64_t step_messages = 0;
    for (int k = 0; k < config.mp_steps; ++k) {
      // Barrier: every agent publishes h^k before anyone reads.
      for (const AgentReplica& r : replicas) mailbox[r.link] = r.hidden;
      for (AgentReplica& r : replicas) {
        received.clear();
        for (LinkId i : Neighborhood(topology, r.link)) {
          received.push_back(&mailbox[i]);
          ++result.ledger.hidden_messages[i];
          ++step_messages;
        }
        const auto aggregated = AggregateMessages(r.params.message, r.hidden, received);
        r.hidden = UpdateHidden(r.params.update, r.hidden, aggregated);
      }
    }
    result.ledger.messages_per_step.push_back(step_messages);

    // Barrier: local readouts are flooded to every agent.
    for (const AgentReplica& r : replicas) {
      broadcast[r.link] = ReadoutScalar(r.params.readout, r.hidden);
      for (LinkId l : trees[topology.link(r.link).src]) ++result.ledger.logit_forwards[l];
    }

    std::vector<std::vector<LinkId>> chosen(num_links);
    for (AgentReplica& r : replicas) {
      const std::vector<double> global_logits = broadcast;
      ActionSample sample = config.mode == SelectionMode::kGreedy
                                ? SelectGreedyActions(global_logits, ep.num_actions)
                                : SelectActions(global_logits, ep.num_actions, r.rng);
      chosen[r.link] = std::move(sample.links);
    }
    std::ostringstream diff;
    int diverged = 0;
    for (LinkId e = 1; e < num_links; ++e) {
      if (chosen[e] != chosen[0]) {
        ++diverged;
        diff << "\n  replica " << e << " chose " << FormatActions(chosen[e])
             << " vs replica 0 " << FormatActions(chosen[0]);
      }
    }
    if (diverged > 0) {
      throw Error(ErrorKind::kDivergence, "replica divergence at time-step " +
                                              std::to_string(t) + ": " +
                                              std::to_string(diverged) +
                                              " replica(s) disagree" + diff.str());
    }

    for (AgentReplica& r : replicas) {
      r.view = StepEnv(topology, r.tm, r.view, chosen[0], ep).state;
      if (r.view.max_utilization < r.best_max_utilization) {
        r.best_max_utilization = r.view.max_utilization;
        r.best_weights = r.view.weights;
      }
    }
    result.logits.push_back(broadcast);
    result.action_sequence.push_back(chosen[0]);
  }
  result.ledger.time_steps = ep.episode_length;

  for (const AgentReplica& r : replicas) {
    if (r.best_weights != replicas[0].best_weights) {
      throw Error(ErrorKind::kDivergence,
                  "replica " + std::to_string(r.link) + " ended with a different best configuration");
    }
  }
  result.best_weights = replicas[0].best_weights;
  result.best_max_utilization = replicas[0].best_max_utilization;
  return result;
}

EquivalenceReport CompareWithCentralized(const Topology& topology, const TrafficMatrix& tm,
                                         const PolicyParams& params,
                                         const DistributedConfig& config) {
  EquivalenceReport report;
  if (config.mp_steps != kMessagePassingSteps) {
    throw Error(ErrorKind::kValidation, "centralized comparison runs with K = 4");
  }
  DistributedResult dist;
  try {
    dist = RunDistributedEpisode(topology, tm, params, config);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kDivergence) throw;
    report.equivalent = false;
    report.detail = e.what();
    return report;
  }
  const EpisodeOutcome central =
      RunPolicyEpisode(topology, tm, params, config.episode, config.mode);
  std::ostringstream diff;
  for (size_t t = 0; t < central.actions.size(); ++t) {
    if (central.actions[t].links != dist.action_sequence[t]) {
      diff << "step " << t << ": centralized " << FormatActions(central.actions[t].links)
           << " vs distributed " << FormatActions(dist.action_sequence[t]) << "\n";
    } else if (central.logits[t] != dist.logits[t]) {
      diff << "step " << t << ": logits differ\n";
    }
  }
  if (central.best_weights() != dist.best_weights) diff << "best weights differ\n";
  report.detail = diff.str();
  report.equivalent = report.detail.empty();
  return report;
}

}  // namespace magnneto
