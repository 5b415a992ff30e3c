#ifndef MAGNNETO_DIST_SIM_H_
#define MAGNNETO_DIST_SIM_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "magnneto/env.h"
#include "magnneto/gnn.h"
#include "magnneto/trainer.h"

namespace magnneto {

// Per-link-agent copy of the shared model plus its local view of the
// network. Replicas only ever see their neighbors' hidden states and the
// broadcast logits.
struct AgentReplica {
  LinkId link = 0;
  PolicyParams params;
  uint64_t shared_seed = 0;
  Rng rng;
  HiddenState hidden{};
  // Local copy of the global configuration and traffic estimate.
  EnvState view;
  TrafficMatrix tm;
  std::vector<int> best_weights;
  double best_max_utilization = 0.0;
};

// Message sizes: payload floats plus a relative header overhead.
struct MessageSizes {
  int hidden_dim = kHiddenDim;
  int float_bytes = 4;
  double header_overhead = 0.2;

  double hidden_message_bytes() const {
    return hidden_dim * float_bytes * (1.0 + header_overhead);
  }
  double logit_message_bytes() const { return float_bytes * (1.0 + header_overhead); }
};

// Integer message counters; bytes are derived from them so that ledger
// totals and the closed-form report agree exactly.
struct OverheadLedger {
  MessageSizes sizes;
  int time_steps = 0;
  int mp_steps = 0;
  // Hidden-state messages sent by each link agent.
  std::vector<uint64_t> hidden_messages;
  // Logit copies carried by each physical link during flooding.
  std::vector<uint64_t> logit_forwards;
  // Hidden-state messages exchanged per time-step (all agents).
  std::vector<uint64_t> messages_per_step;

  double hidden_bytes(LinkId e) const { return hidden_messages[e] * sizes.hidden_message_bytes(); }
  double logit_bytes(LinkId e) const { return logit_forwards[e] * sizes.logit_message_bytes(); }
  double total_bytes() const;
};

struct OverheadRow {
  LinkId link = 0;
  double bytes_hidden = 0.0;
  double bytes_logits = 0.0;
  double total_mb = 0.0;
  double mb_per_s = 0.0;
};

struct OverheadSummary {
  double hidden_message_bytes = 0.0;
  // Hidden-state bytes per adjacency direction per time-step (K messages).
  double adjacency_step_bytes = 0.0;
  double logit_message_bytes = 0.0;
  double step_rate = 0.0;
  std::vector<OverheadRow> rows;
  double mean_mb_per_s = 0.0;
};

// Flood tree for logits originating at `origin`: shortest-hop BFS, parents
// chosen by lowest link id. Returns the links used.
std::vector<LinkId> FloodTreeLinks(const Topology& topology, NodeId origin);

// Closed-form accounting for an episode of `time_steps` steps with K rounds.
OverheadLedger ExpectedOverhead(const Topology& topology, int time_steps, int mp_steps,
                                const MessageSizes& sizes);

OverheadSummary SummarizeOverhead(const OverheadLedger& ledger, double step_rate);

OverheadSummary OverheadReport(const Topology& topology, int time_steps, int mp_steps,
                               int hidden_dim, int float_bytes, double step_rate,
                               double header_overhead = 0.2);

inline constexpr const char* kOverheadCsvHeader =
    "link,bytes_hidden,bytes_logits,total_MB,MB_per_s";
std::string FormatOverheadCsv(const OverheadSummary& summary);

struct DistributedConfig {
  EpisodeConfig episode;
  SelectionMode mode = SelectionMode::kSample;
  int mp_steps = kMessagePassingSteps;
  MessageSizes sizes;
  // Fault injection: replica `link` gets `seed` instead of the shared one.
  std::optional<std::pair<LinkId, uint64_t>> tampered_seed;
};

struct DistributedResult {
  std::vector<int> best_weights;
  double best_max_utilization = 0.0;
  std::vector<std::vector<LinkId>> action_sequence;
  std::vector<std::vector<double>> logits;  // as reconstructed by replica 0
  OverheadLedger ledger;
};

// Runs the episode with one replica per link in a round-based scheduler
// (barrier per message-passing round and per logit exchange). Throws
// Error(kDivergence) with a diff report when replicas disagree.
DistributedResult RunDistributedEpisode(const Topology& topology, const TrafficMatrix& tm,
                                        const PolicyParams& params,
                                        const DistributedConfig& config);

struct EquivalenceReport {
  bool equivalent = true;
  std::string detail;
};

// Compares a distributed run against the centralized episode: action
// sequences, logits and best weights must be identical.
EquivalenceReport CompareWithCentralized(const Topology& topology, const TrafficMatrix& tm,
                                         const PolicyParams& params,
                                         const DistributedConfig& config);

}  // namespace magnneto

#endif  // MAGNNETO_DIST_SIM_H_
