#ifndef MAGNNETO_TOOLS_COMMANDS_H_
#define MAGNNETO_TOOLS_COMMANDS_H_

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "magnneto/baselines.h"
#include "magnneto/trainer.h"

namespace magnneto::cli {

struct GenTmOptions {
  std::string topology;
  int count = 1;
  std::string profile = "uniform";
  uint64_t seed = 0;
  double target_util = 0.75;
  std::string out_dir;
};

// Writes `count` TM files named <profile>_seed<seed>_<index>.tm; returns
// their paths.
std::vector<std::string> CmdGenTm(const GenTmOptions& opts);

struct EpisodeOptions {
  int actions = 1;
  int episode_length = 0;  // 0 = ceil(links_multiplier * E / actions)
  double links_multiplier = 3.0;
  int init_weight_low = 1;
  int init_weight_high = 4;

  EpisodeConfig For(const Topology& topology, uint64_t seed) const;
};

struct TrainOptions {
  std::vector<std::string> topologies;
  std::vector<std::string> tm_dirs;  // one per topology
  PpoConfig ppo;
  EpisodeOptions episode;
  uint64_t seed = 0;
  int checkpoint_every = 0;
  std::string out_dir;
  bool quiet = false;
};

TrainResult CmdTrain(const TrainOptions& opts, std::ostream& log);

struct EvalRow {
  std::string tm;
  std::string mode;
  double default_maxutil = 0.0;
  double best_maxutil = 0.0;
  double improvement_pct = 0.0;
  double wall_ms = 0.0;
  std::string flag;  // empty, or why the row is excluded from aggregates
};

struct EvalSummary {
  std::string mode;
  int count = 0;
  int excluded = 0;
  double mean_improvement_pct = 0.0;
  double median_improvement_pct = 0.0;
  double mean_best_maxutil = 0.0;
  double beats_default_fraction = 0.0;
};

struct EvalOptions {
  std::string checkpoint;
  std::string topology;
  std::string tm_dir;
  uint64_t seed = 0;
  EpisodeOptions episode;
  bool sampled = true;
  int threads = 0;  // 0 = hardware concurrency
  std::string out_dir;  // empty = do not write files
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::vector<EvalSummary> summaries;
};

// Greedy (and optionally sampled) episodes per TM, aggregates and CDF.
EvalReport CmdEval(const EvalOptions& opts);
EvalReport EvaluatePolicy(const Topology& topology, const std::vector<std::string>& tm_names,
                          const std::vector<TrafficMatrix>& tms, const PolicyParams& policy,
                          uint64_t seed, const EpisodeOptions& episode, bool sampled,
                          int threads);

struct CompareRow {
  std::string tm;
  std::string optimizer;
  double max_util = 0.0;
  double improvement_pct = 0.0;
  double wall_ms = 0.0;
};

struct CompareOptions {
  std::string checkpoint;
  std::string topology;
  std::string tm_dir;
  uint64_t seed = 0;
  EpisodeOptions episode;
  SearchConfig search;
  int brute_force_w_max = 4;
  int threads = 0;
  std::string out_dir;
};

// Rows ordered by TM, then default_ospf, local_search, magnneto,
// brute_force (only when the enumeration is within limits).
std::vector<CompareRow> CmdCompare(const CompareOptions& opts);

struct DistCheckOptions {
  std::string checkpoint;  // empty = seeded random parameters
  std::string topology;
  std::string tm_file;     // empty = generated uniform TM
  int seeds = 20;
  uint64_t seed = 0;
  EpisodeOptions episode;
  bool greedy = false;
  std::optional<int> tamper_link;
};

struct DistCheckResult {
  int runs = 0;
  int divergences = 0;
  std::vector<std::string> details;
};

DistCheckResult CmdDistCheck(const DistCheckOptions& opts, std::ostream& log);

struct OverheadOptions {
  std::string topology;
  int time_steps = 0;  // 0 = default episode length for n = 1
  int mp_steps = 4;
  int hidden_dim = 16;
  int float_bytes = 4;
  double step_rate = 1000.0;
  std::string out;  // empty = stdout only
};

std::string CmdOverhead(const OverheadOptions& opts, std::ostream& log);

// Validates a CSV report; returns the row count.
size_t CmdCheckReport(const std::string& kind, const std::string& path);

std::vector<std::string> ListTmFiles(const std::string& dir);
std::string GitHash();

}  // namespace magnneto::cli

#endif  // MAGNNETO_TOOLS_COMMANDS_H_
