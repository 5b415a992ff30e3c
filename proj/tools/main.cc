// magnneto: experiment harness for link-weight optimization.

#include <iostream>

#include "CLI11.hpp"
#include "commands.h"

namespace {

using namespace magnneto;
using namespace magnneto::cli;

void AddEpisodeFlags(CLI::App* cmd, EpisodeOptions& e) {
  cmd->add_option("--actions", e.actions, "Simultaneous actions n per time-step");
  cmd->add_option("--episode-length", e.episode_length,
                  "Episode length T (0 = ceil(c * links / n))");
  cmd->add_option("--links-multiplier", e.links_multiplier, "c in the default T");
  cmd->add_option("--init-weight-low", e.init_weight_low);
  cmd->add_option("--init-weight-high", e.init_weight_high);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MAGNNETO link-weight optimizer: data generation, training, evaluation"};
  app.require_subcommand(1);

  GenTmOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-tm", "Generate traffic matrices");
  gen_cmd->add_option("--topology", gen.topology)->required()->check(CLI::ExistingFile);
  gen_cmd->add_option("--count", gen.count, "Number of matrices");
  gen_cmd->add_option("--profile", gen.profile)->check(CLI::IsMember({"uniform", "gravity"}));
  gen_cmd->add_option("--seed", gen.seed)->required();
  gen_cmd->add_option("--target-util", gen.target_util,
                      "Default-OSPF max utilization after scaling");
  gen_cmd->add_option("--out-dir", gen.out_dir)->required();

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Train actor and critic with PPO");
  train_cmd->add_option("--topology", train.topologies, "Topology file (repeatable)")
      ->required()
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--tm-dir", train.tm_dirs, "TM directory per topology (repeatable)")
      ->required();
  train_cmd->add_option("--iterations", train.ppo.iterations)->required();
  train_cmd->add_option("--seed", train.seed)->required();
  train_cmd->add_option("--out-dir", train.out_dir)->required();
  train_cmd->add_option("--checkpoint-every", train.checkpoint_every);
  train_cmd->add_option("--gamma", train.ppo.gamma);
  train_cmd->add_option("--lambda", train.ppo.lambda);
  train_cmd->add_option("--clip", train.ppo.clip);
  train_cmd->add_option("--epochs", train.ppo.epochs);
  train_cmd->add_option("--minibatch", train.ppo.minibatch_size);
  train_cmd->add_option("--value-coef", train.ppo.value_coef);
  train_cmd->add_option("--entropy-coef", train.ppo.entropy_coef);
  train_cmd->add_option("--lr", train.ppo.learning_rate);
  train_cmd->add_flag("!--no-adv-norm", train.ppo.normalize_advantages,
                      "Disable per-update advantage normalization");
  train_cmd->add_flag("--quiet", train.quiet);
  AddEpisodeFlags(train_cmd, train.episode);

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint over a TM set");
  eval_cmd->add_option("--checkpoint", eval.checkpoint)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--topology", eval.topology)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--tm-dir", eval.tm_dir)->required();
  eval_cmd->add_option("--seed", eval.seed)->required();
  eval_cmd->add_option("--out-dir", eval.out_dir)->required();
  eval_cmd->add_option("--threads", eval.threads);
  eval_cmd->add_flag("!--greedy-only", eval.sampled, "Skip the sampled episodes");
  AddEpisodeFlags(eval_cmd, eval.episode);

  CompareOptions cmp;
  auto* cmp_cmd = app.add_subcommand("compare", "Compare optimizers per TM");
  cmp_cmd->add_option("--checkpoint", cmp.checkpoint)->required()->check(CLI::ExistingFile);
  cmp_cmd->add_option("--topology", cmp.topology)->required()->check(CLI::ExistingFile);
  cmp_cmd->add_option("--tm-dir", cmp.tm_dir)->required();
  cmp_cmd->add_option("--seed", cmp.seed)->required();
  cmp_cmd->add_option("--out-dir", cmp.out_dir)->required();
  cmp_cmd->add_option("--threads", cmp.threads);
  cmp_cmd->add_option("--w-max", cmp.search.w_max, "Local-search weight domain upper bound");
  cmp_cmd->add_option("--ls-iterations", cmp.search.max_iterations);
  cmp_cmd->add_option("--tabu-tenure", cmp.search.tabu_tenure);
  cmp_cmd->add_option("--restarts", cmp.search.max_restarts);
  cmp_cmd->add_option("--search-seed", cmp.search.seed);
  cmp_cmd->add_option("--brute-force-w-max", cmp.brute_force_w_max);
  AddEpisodeFlags(cmp_cmd, cmp.episode);

  DistCheckOptions dist;
  int tamper = -1;
  auto* dist_cmd =
      app.add_subcommand("dist-check", "Replica-based vs centralized execution equivalence");
  dist_cmd->add_option("--topology", dist.topology)->required()->check(CLI::ExistingFile);
  dist_cmd->add_option("--checkpoint", dist.checkpoint, "Defaults to seeded random parameters");
  dist_cmd->add_option("--tm", dist.tm_file, "Defaults to a generated uniform TM");
  dist_cmd->add_option("--seeds", dist.seeds);
  dist_cmd->add_option("--seed", dist.seed)->required();
  dist_cmd->add_flag("--greedy", dist.greedy);
  dist_cmd->add_option("--tamper-link", tamper, "Fault injection: perturb one replica's seed");
  AddEpisodeFlags(dist_cmd, dist.episode);

  OverheadOptions ovh;
  auto* ovh_cmd = app.add_subcommand("overhead", "Communication overhead accounting");
  ovh_cmd->add_option("--topology", ovh.topology)->required()->check(CLI::ExistingFile);
  ovh_cmd->add_option("--steps", ovh.time_steps, "Time-steps T (0 = 3 * links)");
  ovh_cmd->add_option("--mp-steps", ovh.mp_steps, "Message-passing rounds K");
  ovh_cmd->add_option("--hidden-dim", ovh.hidden_dim);
  ovh_cmd->add_option("--float-bytes", ovh.float_bytes);
  ovh_cmd->add_option("--step-rate", ovh.step_rate, "Assumed time-steps per second");
  ovh_cmd->add_option("--out", ovh.out, "CSV output path");

  std::string report_kind, report_path;
  auto* check_cmd = app.add_subcommand("check-report", "Validate an emitted CSV report");
  check_cmd->add_option("kind", report_kind)
      ->required()
      ->check(CLI::IsMember(
          {"train-log", "eval-results", "eval-cdf", "eval-summary", "compare", "overhead"}));
  check_cmd->add_option("file", report_path)->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen_cmd) {
      for (const auto& p : CmdGenTm(gen)) std::cout << p << "\n";
    } else if (*train_cmd) {
      const auto result = CmdTrain(train, std::cout);
      std::cout << "trained " << result.log.size() << " iterations; wrote " << train.out_dir
                << "/checkpoint.ckpt\n";
    } else if (*eval_cmd) {
      const auto report = CmdEval(eval);
      for (const auto& s : report.summaries) {
        std::cout << s.mode << ": " << s.count << " TMs, mean improvement "
                  << s.mean_improvement_pct << "%, median " << s.median_improvement_pct
                  << "%, beats Default OSPF on " << 100.0 * s.beats_default_fraction
                  << "%\n";
      }
    } else if (*cmp_cmd) {
      const auto rows = CmdCompare(cmp);
      std::cout << "wrote " << rows.size() << " rows to " << cmp.out_dir << "/compare.csv\n";
    } else if (*dist_cmd) {
      if (tamper >= 0) dist.tamper_link = tamper;
      const auto result = CmdDistCheck(dist, std::cout);
      if (result.divergences > 0) return static_cast<int>(ErrorKind::kDivergence);
    } else if (*ovh_cmd) {
      const std::string csv = CmdOverhead(ovh, std::cout);
      if (ovh.out.empty()) std::cout << csv;
    } else if (*check_cmd) {
      const size_t rows = CmdCheckReport(report_kind, report_path);
      std::cout << report_path << ": valid " << report_kind << " report, " << rows << " rows\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
