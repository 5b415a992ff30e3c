// Acceptance suite: one PASS/FAIL line per criterion; exit code 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "commands.h"
#include "magnneto/baselines.h"
#include "magnneto/dist_sim.h"
#include "magnneto/env.h"
#include "magnneto/gnn.h"
#include "magnneto/routing.h"
#include "magnneto/traffic_gen.h"
#include "magnneto/trainer.h"
#include "test_util.h"

using namespace magnneto;
using namespace magnneto::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;
std::vector<std::string> selected;  // empty: run every criterion

bool Selected(const std::string& name) {
  return selected.empty() || std::find(selected.begin(), selected.end(), name) != selected.end();
}

void Report(const std::string& name, const std::function<Outcome()>& fn) {
  if (!Selected(name)) return;
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!o.pass) ++failures;
  std::printf("%s %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(),
              secs);
  std::fflush(stdout);
}

std::string Fmt(const char* format, double a, double b = 0, double c = 0, double d = 0) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), format, a, b, c, d);
  return buf;
}

Outcome RoutingOracle() {
  Rng rng(DeriveSeed(2024, 1));
  double worst = 0.0;
  for (int g = 0; g < 200; ++g) {
    const int n = int(UniformInt(rng, 4, 8));
    const Topology t = RandomStronglyConnected(rng, n, 0.25, 4);
    const TrafficMatrix tm = RandomTm(rng, n);
    const auto w = t.weights();
    const auto oracle = OracleLoads(t, tm, w);
    const RoutingState s = EcmpLoads(t, tm, w);
    for (int e = 0; e < t.num_links(); ++e) worst = std::max(worst, std::abs(s.load[e] - oracle[e]));
  }
  return {worst <= 1e-9, Fmt("200 graphs, max |load - oracle| = %.3g", worst)};
}

// sum(r_t) == u_0 - u_T in exact arithmetic: an error-free expansion
// (two-sum with zero elimination) of all terms is empty iff the sum is zero.
bool ExactTelescoping(const std::vector<double>& rewards, double u0, double uT) {
  std::vector<double> parts;
  auto add = [&](double x) {
    std::vector<double> next;
    for (double p : parts) {
      const double s = x + p;
      const double bp = s - x;
      const double err = (x - (s - bp)) + (p - bp);
      if (err != 0.0) next.push_back(err);
      x = s;
    }
    if (x != 0.0) next.push_back(x);
    parts.swap(next);
  };
  for (double r : rewards) add(r);
  add(-u0);
  add(uT);
  return parts.empty();
}

Outcome FlowAndTelescoping() {
  Rng rng(DeriveSeed(2024, 2));
  double worst = 0.0;
  int telescoping_ok = 0;
  for (int ep = 0; ep < 50; ++ep) {
    const Topology t = RandomBidirected(rng, int(UniformInt(rng, 4, 8)), 3);
    const TrafficMatrix tm = RandomTm(rng, t.num_nodes());
    Rng prng(DeriveSeed(ep, 3));
    const PolicyParams policy = MakePolicy(prng);
    EpisodeConfig c;
    c.episode_length = 15;
    c.num_actions = 1 + ep % 3;
    c.seed = DeriveSeed(ep, 4);
    const EpisodeOutcome out = RunPolicyEpisode(t, tm, policy, c, SelectionMode::kSample);
    for (const EnvState& s : out.visited) {
      for (int d = 0; d < t.num_nodes(); ++d) {
        const auto flow = DestinationLinkFlows(t, tm, s.weights, d);
        for (int v = 0; v < t.num_nodes(); ++v) {
          double in = 0, outf = 0;
          for (LinkId e : t.in_links(v)) in += flow[e];
          for (LinkId e : t.out_links(v)) outf += flow[e];
          const double expect = v == d ? -[&] {
            double sum = 0;
            for (int src = 0; src < t.num_nodes(); ++src) sum += tm.at(src, d);
            return sum;
          }() : tm.at(v, d);
          worst = std::max(worst, std::abs(outf - in - expect));
        }
      }
    }
    if (ExactTelescoping(out.rewards, out.visited.front().max_utilization,
                         out.visited.back().max_utilization)) {
      ++telescoping_ok;
    }
  }
  return {worst <= 1e-9 && telescoping_ok == 50,
          Fmt("50 episodes, max conservation residual %.3g, exact telescoping %g/50", worst,
              telescoping_ok)};
}

template <typename Loss>
void CheckMpnnGradient(MpnnParams params, const MpnnGrads& g, Loss loss, GradientCheck& check) {
  std::vector<std::span<double>> blocks = {params.message.params(), params.update.params(),
                                           params.readout.params()};
  const std::vector<const std::vector<double>*> grads = {&g.message, &g.update, &g.readout};
  for (size_t b = 0; b < blocks.size(); ++b) {
    CheckGradient(blocks[b], *grads[b], [&] { return loss(params); }, 1e-7, 1e-4, 1e-7, check);
  }
}

Outcome GradientSuite() {
  GradientCheck check;
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(DeriveSeed(seed, 5));
    const Topology t = RandomBidirected(rng, 4, 2);
    std::vector<int> w(t.num_links());
    for (int& x : w) x = int(UniformInt(rng, 1, 6));
    const auto util = EcmpLoads(t, RandomTm(rng, 4, 0.0), w).utilization;
    const PolicyParams policy = MakePolicy(rng);
    const CriticParams critic = MakeCritic(rng);

    MpnnTape tape;
    const auto logits = ActorLogits(policy, t, w, util, kMessagePassingSteps, &tape);
    const ActionSample a = SelectActions(logits, 2, rng);
    std::vector<double> dl(logits.size());
    JointLogProb(logits, a.links, dl);
    const MpnnGrads ga = ActorBackward(policy, t, tape, dl);
    CheckMpnnGradient(policy, ga, [&](const MpnnParams& p) {
      return JointLogProb(ActorLogits(static_cast<const PolicyParams&>(p), t, w, util), a.links);
    }, check);

    MpnnTape ctape;
    CriticValue(critic, t, w, util, kMessagePassingSteps, &ctape);
    const MpnnGrads gc = CriticBackward(critic, t, ctape, 1.0);
    CheckMpnnGradient(critic, gc, [&](const MpnnParams& p) {
      return CriticValue(static_cast<const CriticParams&>(p), t, w, util);
    }, check);
  }
  return {check.mismatches == 0,
          Fmt("20 seeds, %g parameters checked, %g mismatches (rel 1e-4), %g at kinks matched "
              "one-sided",
              check.checked, check.mismatches, check.kinks)};
}

Outcome PermutationEquivariance() {
  Rng rng(DeriveSeed(2024, 6));
  const Topology t = RandomBidirected(rng, 6, 4);
  std::vector<int> w(t.num_links());
  for (int& x : w) x = int(UniformInt(rng, 1, 5));
  const auto util = EcmpLoads(t, RandomTm(rng, 6, 0.0), w).utilization;
  const PolicyParams policy = MakePolicy(rng);
  const CriticParams critic = MakeCritic(rng);
  const auto logits = ActorLogits(policy, t, w, util);
  const double value = CriticValue(critic, t, w, util);
  double worst = 0.0;
  for (int r = 0; r < 20; ++r) {
    std::vector<int> np(6), lp(t.num_links());
    std::iota(np.begin(), np.end(), 0);
    std::iota(lp.begin(), lp.end(), 0);
    for (int i = 5; i > 0; --i) std::swap(np[i], np[UniformInt(rng, 0, i)]);
    for (int i = t.num_links() - 1; i > 0; --i) std::swap(lp[i], lp[UniformInt(rng, 0, i)]);
    std::vector<DirectedLink> links(t.num_links());
    std::vector<int> w2(t.num_links());
    std::vector<double> u2(t.num_links());
    for (const auto& l : t.links()) {
      links[lp[l.id]] = {lp[l.id], np[l.src], np[l.dst], l.capacity, l.weight};
      w2[lp[l.id]] = w[l.id];
      u2[lp[l.id]] = util[l.id];
    }
    const Topology t2(t.labels(), links);
    const auto logits2 = ActorLogits(policy, t2, w2, u2);
    for (int e = 0; e < t.num_links(); ++e) {
      worst = std::max(worst, std::abs(logits2[lp[e]] - logits[e]));
    }
    worst = std::max(worst, std::abs(CriticValue(critic, t2, w2, u2) - value));
  }
  return {worst <= 1e-9, Fmt("20 relabelings, max deviation %.3g", worst)};
}

Outcome DistributedEquivalence() {
  int runs = 0, divergences = 0;
  std::ostringstream sink;
  for (const char* fixture : {"diamond.topo", "nsfnet.topo"}) {
    cli::DistCheckOptions opts;
    opts.topology = DataPath(fixture);
    opts.seeds = 20;
    opts.seed = 2024;
    const auto r = cli::CmdDistCheck(opts, sink);
    runs += r.runs;
    divergences += r.divergences;
  }
  return {runs == 40 && divergences == 0,
          Fmt("2 fixtures x 20 seeds: %g runs, %g divergences", runs, divergences)};
}

Outcome OverheadAccounting() {
  const Topology t = LoadTopologyFile(DataPath("nsfnet.topo"));
  const int T = DefaultEpisodeLength(t.num_links(), 1);
  const OverheadSummary s = OverheadReport(t, T, 4, 16, 4, 1000.0);
  bool closed_form = true;
  for (const auto& row : s.rows) {
    const double fan_out = double(t.in_links(t.link(row.link).src).size());
    closed_form = closed_form && row.bytes_hidden == T * fan_out * 307.2;
  }
  const bool pass = s.hidden_message_bytes == 76.8 && s.adjacency_step_bytes == 307.2 && closed_form;
  return {pass, Fmt("hidden message %.17g B, per adjacency per step %.17g B; mean %.3g MB/s per "
                    "link assuming %g steps/s",
                    s.hidden_message_bytes, s.adjacency_step_bytes, s.mean_mb_per_s, 1000.0)};
}

Outcome DiamondBruteForce() {
  const Topology d = LoadTopologyFile(DataPath("diamond.topo"));
  int matched = 0;
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    const TrafficMatrix tm = GenerateUniformTm(d, DeriveSeed(seed, 7));
    SearchConfig cfg;
    cfg.w_max = 4;
    const double opt = BruteForceOptimum(d, tm, 4).max_utilization;
    if (LocalSearchWeights(d, tm, cfg).max_utilization == opt) ++matched;
  }
  return {matched == 10, Fmt("local search hits the optimum on %g/10 TM seeds", matched)};
}

// ---------------------------------------------------------------------------
// End-to-end training fixture.

constexpr int kTrainIterations = 2000;
constexpr uint64_t kTrainSeed = 7;

struct TrainArtifacts {
  std::string dir;
  std::string log;
  std::string checkpoint;
};

std::string FixtureDir() {
  static const std::string dir =
      (fs::temp_directory_path() / ("magnneto_acceptance_" + std::to_string(::getpid()))).string();
  return dir;
}

void PrepareTms() {
  const std::string base = FixtureDir();
  fs::remove_all(base);
  for (const auto& [sub, seed, count] :
       {std::tuple<const char*, uint64_t, int>{"train_tms", 101, 10}, {"test_tms", 202, 20}}) {
    cli::GenTmOptions g;
    g.topology = DataPath("train8.topo");
    g.count = count;
    g.profile = "gravity";
    g.seed = seed;
    g.target_util = 0.9;
    g.out_dir = base + "/" + sub;
    cli::CmdGenTm(g);
  }
}

TrainArtifacts RunTraining(const std::string& name) {
  cli::TrainOptions opts;
  opts.topologies = {DataPath("train8.topo")};
  opts.tm_dirs = {FixtureDir() + "/train_tms"};
  opts.seed = kTrainSeed;
  opts.ppo.iterations = kTrainIterations;
  opts.out_dir = FixtureDir() + "/" + name;
  opts.quiet = true;
  std::ostringstream sink;
  cli::CmdTrain(opts, sink);
  return {opts.out_dir, ReadFile(opts.out_dir + "/train_log.csv"),
          ReadFile(opts.out_dir + "/checkpoint.ckpt")};
}

Outcome EndToEnd(const TrainArtifacts& run) {
  const Topology t = LoadTopologyFile(DataPath("train8.topo"));
  const auto files = cli::ListTmFiles(FixtureDir() + "/test_tms");
  std::vector<TrafficMatrix> tms;
  for (const auto& f : files) tms.push_back(LoadTrafficFile(f, t.num_nodes()));
  PolicyParams policy;
  CriticParams critic;
  static_cast<MpnnParams&>(policy) = MpnnParams::Create();
  static_cast<MpnnParams&>(critic) = MpnnParams::Create();
  LoadPolicyCritic(Checkpoint::Load(run.dir + "/checkpoint.ckpt"), policy, critic);

  cli::EpisodeOptions n1;
  cli::EpisodeOptions n4;
  n4.actions = 4;
  const auto r1 = cli::EvaluatePolicy(t, files, tms, policy, 99, n1, false, 0);
  const auto r4 = cli::EvaluatePolicy(t, files, tms, policy, 99, n4, false, 0);

  const auto defaults = DefaultOspfWeights(t);
  SearchConfig generous;
  generous.max_iterations = 1000;
  generous.max_restarts = 20;
  int beats = 0;
  double mean_rl = 0, mean_ls = 0, mean_gap = 0, mean_pct1 = 0, mean_pct4 = 0;
  for (size_t i = 0; i < tms.size(); ++i) {
    const double u_def = EcmpLoads(t, tms[i], defaults).max_utilization;
    if (r1.rows[i].best_maxutil < u_def) ++beats;
    generous.seed = DeriveSeed(31, i);
    mean_ls += LocalSearchWeights(t, tms[i], generous).max_utilization;
    mean_rl += r1.rows[i].best_maxutil;
    mean_gap += r1.rows[i].improvement_pct - r4.rows[i].improvement_pct;
    mean_pct1 += r1.rows[i].improvement_pct;
    mean_pct4 += r4.rows[i].improvement_pct;
  }
  const double k = double(tms.size());
  mean_rl /= k;
  mean_ls /= k;
  mean_gap /= k;
  mean_pct1 /= k;
  mean_pct4 /= k;
  const double beat_frac = beats / k;
  const double rel = (mean_rl - mean_ls) / mean_ls;
  const bool ok1 = beat_frac >= 0.8, ok2 = rel <= 0.10, ok3 = mean_gap <= 2.0;
  std::ostringstream detail;
  detail << "beats Default OSPF on " << beats << "/" << tms.size() << (ok1 ? " [ok]" : " [FAIL]")
         << "; mean improvement n=1 " << mean_pct1 << "%, n=4 " << mean_pct4 << "%"
         << "; mean max-util RL " << mean_rl << " vs local search " << mean_ls << " ("
         << 100 * rel << "% rel" << (ok2 ? " [ok]" : " [FAIL]") << "); n=1 minus n=4 mean "
         << "improvement gap " << mean_gap << " pts" << (ok3 ? " [ok]" : " [FAIL]");
  return {ok1 && ok2 && ok3, detail.str()};
}

}  // namespace

// Optional arguments name the criteria to run.
int main(int argc, char** argv) {
  selected.assign(argv + 1, argv + argc);
  Report("routing-oracle", RoutingOracle);
  Report("flow-conservation-telescoping", FlowAndTelescoping);
  Report("gradient-suite", GradientSuite);
  Report("permutation-equivariance", PermutationEquivariance);
  Report("distributed-equivalence", DistributedEquivalence);
  Report("overhead-accounting", OverheadAccounting);
  Report("diamond-brute-force", DiamondBruteForce);

  TrainArtifacts first, second;
  bool trained = false;
  std::string train_error;
  if (!Selected("end-to-end-training") && !Selected("determinism")) {
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
  }
  try {
    PrepareTms();
    first = RunTraining("run_a");
    trained = true;
  } catch (const std::exception& e) {
    train_error = e.what();
  }
  Report("end-to-end-training", [&]() -> Outcome {
    if (!trained) return {false, "training failed: " + train_error};
    return EndToEnd(first);
  });
  Report("determinism", [&]() -> Outcome {
    if (!trained) return {false, "training failed: " + train_error};
    second = RunTraining("run_b");
    const bool same = first.log == second.log && first.checkpoint == second.checkpoint;
    return {same, same ? "repeat run: train_log.csv and checkpoint.ckpt byte-identical"
                       : "repeat run differs"};
  });
  fs::remove_all(FixtureDir());
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
