#include "commands.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "magnneto/dist_sim.h"
#include "magnneto/report.h"
#include "magnneto/routing.h"
#include "magnneto/traffic_gen.h"

#ifndef MAGNNETO_GIT_HASH
#define MAGNNETO_GIT_HASH "unknown"
#endif

namespace magnneto::cli {
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

void EnsureDir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(ErrorKind::kIo, "cannot create output directory '" + dir + "'");
  }
}

std::string Join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

std::string Real(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Runs fn(i) for i in [0, n) on a small pool; callers write into slot i so
// results do not depend on scheduling.
void ParallelFor(size_t n, int threads, const std::function<void(size_t)>& fn) {
  size_t workers = threads > 0 ? size_t(threads) : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      (void)w;
      for (size_t i = next++; i < n && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

double ElapsedMs(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

void WriteManifest(const std::string& dir, const std::string& command, const json& args) {
  json manifest;
  manifest["command"] = command;
  manifest["args"] = args;
  manifest["git_hash"] = GitHash();
  manifest["format_version"] = 1;
  WriteFile(Join(dir, "manifest.json"), manifest.dump(2) + "\n");
}

json EpisodeJson(const EpisodeOptions& e) {
  return {{"actions", e.actions},
          {"episode_length", e.episode_length},
          {"links_multiplier", e.links_multiplier},
          {"init_weight_range", {e.init_weight_low, e.init_weight_high}}};
}

PolicyParams LoadPolicy(const std::string& path) {
  PolicyParams policy{MpnnParams::Create()};
  CriticParams critic{MpnnParams::Create()};
  try {
    LoadPolicyCritic(Checkpoint::Load(path), policy, critic);
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
  return policy;
}

std::vector<TrafficMatrix> LoadTms(const std::vector<std::string>& files, int num_nodes) {
  std::vector<TrafficMatrix> tms;
  for (const auto& f : files) tms.push_back(LoadTrafficFile(f, num_nodes));
  return tms;
}

std::vector<std::string> BaseNames(const std::vector<std::string>& files) {
  std::vector<std::string> names;
  for (const auto& f : files) names.push_back(fs::path(f).filename().string());
  return names;
}

}  // namespace

std::string GitHash() { return MAGNNETO_GIT_HASH; }

std::vector<std::string> ListTmFiles(const std::string& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw Error(ErrorKind::kIo, "TM directory '" + dir + "' does not exist");
  }
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".tm") {
      files.push_back(entry.path().string());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorKind::kIo, "no .tm files in '" + dir + "'");
  return files;
}

EpisodeConfig EpisodeOptions::For(const Topology& topology, uint64_t seed) const {
  EpisodeConfig config;
  config.num_actions = actions;
  config.episode_length = episode_length > 0
                              ? episode_length
                              : DefaultEpisodeLength(topology.num_links(), actions,
                                                     links_multiplier);
  config.init_weight_low = init_weight_low;
  config.init_weight_high = init_weight_high;
  config.seed = seed;
  config.Validate(topology.num_links());
  return config;
}

std::vector<std::string> CmdGenTm(const GenTmOptions& opts) {
  const Topology topology = LoadTopologyFile(opts.topology);
  const TrafficProfile profile = ParseTrafficProfile(opts.profile);
  if (opts.count < 1) throw Error(ErrorKind::kValidation, "count must be >= 1");
  EnsureDir(opts.out_dir);
  std::vector<std::string> paths;
  for (int i = 0; i < opts.count; ++i) {
    const TrafficMatrix tm =
        GenerateTm(profile, topology, DeriveSeed(opts.seed, uint64_t(i)), opts.target_util);
    char name[128];
    std::snprintf(name, sizeof(name), "%s_seed%llu_%03d.tm", opts.profile.c_str(),
                  static_cast<unsigned long long>(opts.seed), i);
    const std::string path = Join(opts.out_dir, name);
    WriteFile(path, SerializeTraffic(tm));
    paths.push_back(path);
  }
  return paths;
}

TrainResult CmdTrain(const TrainOptions& opts, std::ostream& log) {
  if (opts.topologies.empty()) throw Error(ErrorKind::kValidation, "train needs --topology");
  if (opts.topologies.size() != opts.tm_dirs.size()) {
    throw Error(ErrorKind::kValidation, "give one --tm-dir per --topology");
  }
  TrainConfig config;
  std::vector<std::vector<TrafficMatrix>> pools;
  for (size_t i = 0; i < opts.topologies.size(); ++i) {
    config.topologies.push_back(LoadTopologyFile(opts.topologies[i]));
    pools.push_back(LoadTms(ListTmFiles(opts.tm_dirs[i]), config.topologies.back().num_nodes()));
  }
  config.scenarios = InterleaveScenarios(pools);
  config.ppo = opts.ppo;
  config.num_actions = opts.episode.actions;
  config.links_multiplier = opts.episode.links_multiplier;
  config.episode_length = opts.episode.episode_length;
  config.init_weight_low = opts.episode.init_weight_low;
  config.init_weight_high = opts.episode.init_weight_high;
  config.seed = opts.seed;
  config.checkpoint_every = opts.checkpoint_every;

  EnsureDir(opts.out_dir);
  const std::string log_path = Join(opts.out_dir, "train_log.csv");
  std::string log_text = std::string(kTrainingLogHeader) + "\n";
  config.on_log = [&](const TrainingLogRow& row) {
    log_text += FormatTrainingLogRow(row) + "\n";
    if (!opts.quiet && (row.iteration % 50 == 0)) {
      log << "iteration " << row.iteration << " best_maxutil " << row.best_max_utilization
          << " mean_reward " << row.mean_reward << "\n";
    }
  };
  config.on_checkpoint = [&](int iteration, const Checkpoint& ckpt) {
    char name[64];
    std::snprintf(name, sizeof(name), "checkpoint_iter%06d.ckpt", iteration);
    ckpt.Save(Join(opts.out_dir, name));
    WriteFile(log_path, log_text);
  };

  TrainResult result = Train(config);
  result.checkpoint.Save(Join(opts.out_dir, "checkpoint.ckpt"));
  WriteFile(log_path, log_text);

  json args = {{"topologies", opts.topologies},
               {"tm_dirs", opts.tm_dirs},
               {"iterations", opts.ppo.iterations},
               {"gamma", opts.ppo.gamma},
               {"lambda", opts.ppo.lambda},
               {"clip", opts.ppo.clip},
               {"epochs", opts.ppo.epochs},
               {"minibatch", opts.ppo.minibatch_size},
               {"value_coef", opts.ppo.value_coef},
               {"entropy_coef", opts.ppo.entropy_coef},
               {"learning_rate", opts.ppo.learning_rate},
               {"normalize_advantages", opts.ppo.normalize_advantages},
               {"episode", EpisodeJson(opts.episode)},
               {"checkpoint_every", opts.checkpoint_every}};
  args["seed"] = opts.seed;
  WriteManifest(opts.out_dir, "train", args);
  return result;
}

EvalReport EvaluatePolicy(const Topology& topology, const std::vector<std::string>& tm_names,
                          const std::vector<TrafficMatrix>& tms, const PolicyParams& policy,
                          uint64_t seed, const EpisodeOptions& episode, bool sampled,
                          int threads) {
  const std::vector<int> default_weights = DefaultOspfWeights(topology);
  const int modes = sampled ? 2 : 1;
  std::vector<EvalRow> rows(tms.size() * modes);
  ParallelFor(tms.size(), threads, [&](size_t i) {
    const EpisodeConfig config = episode.For(topology, DeriveSeed(seed, i));
    const double u_default = EcmpLoads(topology, tms[i], default_weights).max_utilization;
    for (int m = 0; m < modes; ++m) {
      const SelectionMode mode = m == 0 ? SelectionMode::kGreedy : SelectionMode::kSample;
      const auto start = std::chrono::steady_clock::now();
      const EpisodeOutcome outcome = RunPolicyEpisode(topology, tms[i], policy, config, mode);
      EvalRow& row = rows[i * modes + m];
      row.wall_ms = ElapsedMs(start);
      row.tm = tm_names[i];
      row.mode = m == 0 ? "greedy" : "sampled";
      row.default_maxutil = u_default;
      row.best_maxutil = outcome.best_max_utilization();
      if (u_default == 0.0) {
        row.improvement_pct = std::nan("");
        row.flag = "undefined_improvement";
      } else {
        row.improvement_pct = ImprovementPercent(u_default, row.best_maxutil);
      }
    }
  });

  EvalReport report;
  report.rows = std::move(rows);
  for (int m = 0; m < modes; ++m) {
    EvalSummary s;
    s.mode = m == 0 ? "greedy" : "sampled";
    std::vector<double> improvements;
    int beats = 0;
    for (const auto& row : report.rows) {
      if (row.mode != s.mode) continue;
      if (!row.flag.empty()) {
        ++s.excluded;
        continue;
      }
      improvements.push_back(row.improvement_pct);
      s.mean_best_maxutil += row.best_maxutil;
      if (row.best_maxutil < row.default_maxutil) ++beats;
    }
    s.count = static_cast<int>(improvements.size());
    if (s.count > 0) {
      double sum = 0.0;
      for (double v : improvements) sum += v;
      s.mean_improvement_pct = sum / s.count;
      s.mean_best_maxutil /= s.count;
      std::sort(improvements.begin(), improvements.end());
      const size_t mid = improvements.size() / 2;
      s.median_improvement_pct = improvements.size() % 2
                                     ? improvements[mid]
                                     : 0.5 * (improvements[mid - 1] + improvements[mid]);
      s.beats_default_fraction = static_cast<double>(beats) / s.count;
    }
    report.summaries.push_back(s);
  }
  return report;
}

EvalReport CmdEval(const EvalOptions& opts) {
  const Topology topology = LoadTopologyFile(opts.topology);
  const PolicyParams policy = LoadPolicy(opts.checkpoint);
  const auto files = ListTmFiles(opts.tm_dir);
  const auto tms = LoadTms(files, topology.num_nodes());
  EvalReport report = EvaluatePolicy(topology, BaseNames(files), tms, policy, opts.seed,
                                     opts.episode, opts.sampled, opts.threads);
  if (opts.out_dir.empty()) return report;
  EnsureDir(opts.out_dir);

  std::string results = ReportHeader(ReportKind::kEvalResults) + "\n";
  for (const auto& r : report.rows) {
    results += r.tm + "," + r.mode + "," + Real(r.default_maxutil) + "," + Real(r.best_maxutil) +
               "," + Real(r.improvement_pct) + "," + Real(r.wall_ms) + "," + r.flag + "\n";
  }
  WriteFile(Join(opts.out_dir, "eval_results.csv"), results);

  std::string cdf = ReportHeader(ReportKind::kEvalCdf) + "\n";
  for (const auto& s : report.summaries) {
    std::vector<double> values;
    for (const auto& r : report.rows) {
      if (r.mode == s.mode && r.flag.empty()) values.push_back(r.improvement_pct);
    }
    std::sort(values.begin(), values.end());
    for (size_t i = 0; i < values.size(); ++i) {
      cdf += s.mode + "," + std::to_string(i + 1) + "," + Real(values[i]) + "," +
             Real(double(i + 1) / double(values.size())) + "\n";
    }
  }
  WriteFile(Join(opts.out_dir, "eval_cdf.csv"), cdf);

  std::string summary = ReportHeader(ReportKind::kEvalSummary) + "\n";
  for (const auto& s : report.summaries) {
    summary += s.mode + "," + std::to_string(s.count) + "," + std::to_string(s.excluded) + "," +
               Real(s.mean_improvement_pct) + "," + Real(s.median_improvement_pct) + "," +
               Real(s.mean_best_maxutil) + "," + Real(s.beats_default_fraction) + "\n";
  }
  WriteFile(Join(opts.out_dir, "eval_summary.csv"), summary);

  json args = {{"checkpoint", opts.checkpoint}, {"topology", opts.topology},
               {"tm_dir", opts.tm_dir},         {"episode", EpisodeJson(opts.episode)},
               {"sampled", opts.sampled}};
  args["seed"] = opts.seed;
  WriteManifest(opts.out_dir, "eval", args);
  return report;
}

std::vector<CompareRow> CmdCompare(const CompareOptions& opts) {
  const Topology topology = LoadTopologyFile(opts.topology);
  const PolicyParams policy = LoadPolicy(opts.checkpoint);
  const auto files = ListTmFiles(opts.tm_dir);
  const auto names = BaseNames(files);
  const auto tms = LoadTms(files, topology.num_nodes());
  const std::vector<int> default_weights = DefaultOspfWeights(topology);
  const bool brute = std::pow(double(opts.brute_force_w_max), topology.num_links()) <=
                     kBruteForceLimit;
  const size_t per_tm = brute ? 4 : 3;
  std::vector<CompareRow> rows(tms.size() * per_tm);

  ParallelFor(tms.size(), opts.threads, [&](size_t i) {
    const TrafficMatrix& tm = tms[i];
    const double u_default = EcmpLoads(topology, tm, default_weights).max_utilization;
    auto improvement = [&](double u) {
      return u_default == 0.0 ? std::nan("") : ImprovementPercent(u_default, u);
    };
    CompareRow* out = &rows[i * per_tm];

    auto start = std::chrono::steady_clock::now();
    const double u_def = EcmpLoads(topology, tm, DefaultOspfWeights(topology)).max_utilization;
    out[0] = {names[i], "default_ospf", u_def, improvement(u_def), ElapsedMs(start)};

    SearchConfig search = opts.search;
    search.seed = DeriveSeed(opts.search.seed, i);
    start = std::chrono::steady_clock::now();
    const WeightResult ls = LocalSearchWeights(topology, tm, search);
    out[1] = {names[i], "local_search", ls.max_utilization, improvement(ls.max_utilization),
              ElapsedMs(start)};

    start = std::chrono::steady_clock::now();
    const EpisodeOutcome episode =
        RunPolicyEpisode(topology, tm, policy, opts.episode.For(topology, DeriveSeed(opts.seed, i)),
                         SelectionMode::kGreedy);
    out[2] = {names[i], "magnneto", episode.best_max_utilization(),
              improvement(episode.best_max_utilization()), ElapsedMs(start)};

    if (brute) {
      start = std::chrono::steady_clock::now();
      const WeightResult opt = BruteForceOptimum(topology, tm, opts.brute_force_w_max);
      out[3] = {names[i], "brute_force", opt.max_utilization, improvement(opt.max_utilization),
                ElapsedMs(start)};
    }
  });

  if (!opts.out_dir.empty()) {
    EnsureDir(opts.out_dir);
    std::string csv = ReportHeader(ReportKind::kCompare) + "\n";
    for (const auto& r : rows) {
      csv += r.tm + "," + r.optimizer + "," + Real(r.max_util) + "," + Real(r.improvement_pct) +
             "," + Real(r.wall_ms) + "\n";
    }
    WriteFile(Join(opts.out_dir, "compare.csv"), csv);
    json args = {{"checkpoint", opts.checkpoint},
                 {"topology", opts.topology},
                 {"tm_dir", opts.tm_dir},
                 {"episode", EpisodeJson(opts.episode)},
                 {"w_max", opts.search.w_max},
                 {"ls_iterations", opts.search.max_iterations},
                 {"tabu_tenure", opts.search.tabu_tenure},
                 {"restarts", opts.search.max_restarts},
                 {"brute_force_w_max", opts.brute_force_w_max}};
    args["seed"] = opts.seed;
    args["search_seed"] = opts.search.seed;
    WriteManifest(opts.out_dir, "compare", args);
  }
  return rows;
}

DistCheckResult CmdDistCheck(const DistCheckOptions& opts, std::ostream& log) {
  const Topology topology = LoadTopologyFile(opts.topology);
  PolicyParams policy;
  if (opts.checkpoint.empty()) {
    policy = InitialParams(opts.seed).first;
  } else {
    policy = LoadPolicy(opts.checkpoint);
  }
  const TrafficMatrix tm = opts.tm_file.empty()
                               ? GenerateUniformTm(topology, DeriveSeed(opts.seed, 77))
                               : LoadTrafficFile(opts.tm_file, topology.num_nodes());
  DistCheckResult result;
  for (int s = 0; s < opts.seeds; ++s) {
    DistributedConfig config;
    config.episode = opts.episode.For(topology, DeriveSeed(opts.seed, 500 + uint64_t(s)));
    config.mode = opts.greedy ? SelectionMode::kGreedy : SelectionMode::kSample;
    if (opts.tamper_link) {
      config.tampered_seed = {*opts.tamper_link, config.episode.seed ^ 0x5eedULL};
    }
    const EquivalenceReport report = CompareWithCentralized(topology, tm, policy, config);
    ++result.runs;
    if (!report.equivalent) {
      ++result.divergences;
      result.details.push_back(report.detail);
      log << "seed " << s << ": DIVERGED\n" << report.detail << "\n";
    } else {
      log << "seed " << s << ": identical\n";
    }
  }
  log << "dist-check: " << result.runs << " runs, " << result.divergences << " divergences\n";
  return result;
}

std::string CmdOverhead(const OverheadOptions& opts, std::ostream& log) {
  const Topology topology = LoadTopologyFile(opts.topology);
  const int steps =
      opts.time_steps > 0 ? opts.time_steps : DefaultEpisodeLength(topology.num_links(), 1);
  const OverheadSummary summary = OverheadReport(topology, steps, opts.mp_steps, opts.hidden_dim,
                                                 opts.float_bytes, opts.step_rate);
  const std::string csv = FormatOverheadCsv(summary);
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "hidden-state message %.6g bytes; per adjacency direction per time-step %.6g "
                "bytes; logit message %.6g bytes; mean %.6g MB/s per link at %g steps/s\n",
                summary.hidden_message_bytes, summary.adjacency_step_bytes,
                summary.logit_message_bytes, summary.mean_mb_per_s, opts.step_rate);
  log << buf;
  if (!opts.out.empty()) WriteFile(opts.out, csv);
  return csv;
}

size_t CmdCheckReport(const std::string& kind, const std::string& path) {
  return CheckReport(ParseReportKind(kind), ReadFile(path));
}

}  // namespace magnneto::cli
