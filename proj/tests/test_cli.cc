#include <cmath>
#include <filesystem>
#include <sstream>

#include "commands.h"
#include "doctest.h"
#include "magnneto/baselines.h"
#include "magnneto/report.h"
#include "magnneto/routing.h"
#include "magnneto/traffic_gen.h"
#include "test_util.h"

using namespace magnneto;
using namespace magnneto::cli;
using namespace magnneto::testing;
namespace fs = std::filesystem;

namespace {

std::string TempDir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("magnneto_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

std::string MakeTms(const std::string& dir, const std::string& topo, int count,
                    const std::string& profile = "uniform", uint64_t seed = 1) {
  GenTmOptions g;
  g.topology = topo;
  g.count = count;
  g.profile = profile;
  g.seed = seed;
  g.out_dir = dir;
  CmdGenTm(g);
  return dir;
}

}  // namespace

TEST_CASE("gen-tm: deterministic names and contents") {
  const std::string a = TempDir("gen_a"), b = TempDir("gen_b");
  GenTmOptions g;
  g.topology = DataPath("diamond.topo");
  g.count = 3;
  g.seed = 9;
  g.out_dir = a;
  const auto pa = CmdGenTm(g);
  g.out_dir = b;
  const auto pb = CmdGenTm(g);
  REQUIRE(pa.size() == 3);
  CHECK(fs::path(pa[0]).filename() == "uniform_seed9_000.tm");
  for (size_t i = 0; i < 3; ++i) CHECK(ReadFile(pa[i]) == ReadFile(pb[i]));
  const Topology t = LoadTopologyFile(g.topology);
  CHECK(LoadTrafficFile(pa[0], t.num_nodes()).total() > 0.0);
}

TEST_CASE("gen-tm: 100 gravity matrices on a 14-node topology pass normalization") {
  const std::string dir = MakeTms(TempDir("gen_grav"), DataPath("nsfnet.topo"), 100, "gravity");
  const Topology t = LoadTopologyFile(DataPath("nsfnet.topo"));
  const auto files = ListTmFiles(dir);
  REQUIRE(files.size() == 100);
  const auto w = DefaultOspfWeights(t);
  for (const auto& f : files) {
    const double u = EcmpLoads(t, LoadTrafficFile(f, t.num_nodes()), w).max_utilization;
    CHECK(std::abs(u - 0.75) <= 1e-9);
  }
}

TEST_CASE("gen-tm: missing topology is an io error") {
  GenTmOptions g;
  g.topology = "/nonexistent/x.topo";
  g.out_dir = TempDir("gen_missing");
  try {
    CmdGenTm(g);
    FAIL("expected io error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kIo);
    CHECK(std::string(e.what()).find("/nonexistent/x.topo") != std::string::npos);
  }
}

TEST_CASE("train, eval, compare end to end on the diamond") {
  const std::string tms = MakeTms(TempDir("pipe_tms"), DataPath("diamond.topo"), 3);
  const std::string out = TempDir("pipe_out");
  std::ostringstream log;

  TrainOptions train;
  train.topologies = {DataPath("diamond.topo")};
  train.tm_dirs = {tms};
  train.seed = 5;
  train.ppo.iterations = 0;
  train.out_dir = out + "/zero";
  train.quiet = true;
  const TrainResult zero = CmdTrain(train, log);
  const auto [p0, c0] = InitialParams(5);
  CHECK(Checkpoint::Load(out + "/zero/checkpoint.ckpt") == MakeCheckpoint(p0, c0));
  CHECK(CheckReport(ReportKind::kTrainLog, ReadFile(out + "/zero/train_log.csv")) == 0);
  CHECK(fs::exists(out + "/zero/manifest.json"));

  train.ppo.iterations = 4;
  train.checkpoint_every = 2;
  train.out_dir = out + "/four";
  CmdTrain(train, log);
  CHECK(CmdCheckReport("train-log", out + "/four/train_log.csv") == 4);
  CHECK(fs::exists(out + "/four/checkpoint_iter000002.ckpt"));

  EvalOptions eval;
  eval.checkpoint = out + "/four/checkpoint.ckpt";
  eval.topology = DataPath("diamond.topo");
  eval.tm_dir = tms;
  eval.seed = 3;
  eval.threads = 2;
  eval.out_dir = out + "/eval";
  const EvalReport rep = CmdEval(eval);
  CHECK(rep.rows.size() == 6);
  CHECK(CmdCheckReport("eval-results", out + "/eval/eval_results.csv") == 6);
  CHECK(CmdCheckReport("eval-cdf", out + "/eval/eval_cdf.csv") == 6);  // one point per TM per mode
  CHECK(CmdCheckReport("eval-summary", out + "/eval/eval_summary.csv") == 2);
  eval.threads = 1;
  eval.out_dir = out + "/eval1";
  CmdEval(eval);
  CHECK(ReadFile(out + "/eval/eval_cdf.csv") == ReadFile(out + "/eval1/eval_cdf.csv"));

  CompareOptions cmp;
  cmp.checkpoint = eval.checkpoint;
  cmp.topology = eval.topology;
  cmp.tm_dir = tms;
  cmp.seed = 3;
  cmp.search.w_max = 4;
  cmp.out_dir = out + "/cmp";
  const auto rows = CmdCompare(cmp);
  REQUIRE(rows.size() == 12);
  CHECK(CmdCheckReport("compare", out + "/cmp/compare.csv") == 12);
  for (size_t i = 0; i < rows.size(); i += 4) {
    CHECK(rows[i + 3].optimizer == "brute_force");
    for (int k = 0; k < 3; ++k) CHECK(rows[i + 3].max_util <= rows[i + k].max_util);
    CHECK(rows[i + 1].improvement_pct >= 0.0);
  }
}

TEST_CASE("eval: zero-demand matrix is flagged and excluded") {
  const Topology t = LoadTopologyFile(DataPath("diamond.topo"));
  Rng rng(1);
  const PolicyParams policy = MakePolicy(rng);
  const std::vector<TrafficMatrix> tms = {TrafficMatrix(4), GenerateUniformTm(t, 2)};
  const EvalReport r = EvaluatePolicy(t, {"zero", "one"}, tms, policy, 1, EpisodeOptions{}, false, 1);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[0].flag == "undefined_improvement");
  CHECK(std::isnan(r.rows[0].improvement_pct));
  CHECK(r.summaries[0].count == 1);
  CHECK(r.summaries[0].excluded == 1);
}

TEST_CASE("dist-check and overhead commands") {
  std::ostringstream log;
  DistCheckOptions d;
  d.topology = DataPath("diamond.topo");
  d.seeds = 3;
  d.seed = 1;
  CHECK(CmdDistCheck(d, log).divergences == 0);
  d.tamper_link = 2;
  d.episode.episode_length = 20;
  CHECK(CmdDistCheck(d, log).divergences > 0);

  OverheadOptions o;
  o.topology = DataPath("nsfnet.topo");
  o.out = TempDir("ovh") + "/overhead.csv";
  CmdOverhead(o, log);
  CHECK(CmdCheckReport("overhead", o.out) == 42);
  CHECK(log.str().find("76.8 bytes") != std::string::npos);
  CHECK(log.str().find("307.2 bytes") != std::string::npos);
}

TEST_CASE("report checker rejects malformed files") {
  CHECK_THROWS_AS(CheckReport(ReportKind::kCompare, "tm,optimizer\n"), Error);
  CHECK_THROWS_AS(CheckReport(ReportKind::kCompare,
                              "tm,optimizer,max_util,improvement_pct,wall_ms\na,b,x,1,1\n"),
                  Error);
  CHECK(CheckReport(ReportKind::kCompare,
                    "tm,optimizer,max_util,improvement_pct,wall_ms\na,b,0.5,nan,1\n") == 1);
}
