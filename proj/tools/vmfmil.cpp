// Copyright 2026 The vmfmil Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// vmfmil command-line front end. Exit codes: 0 success, 2 usage error,
// 3 data or protocol error, 1 anything else.

#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "vmfmil/types.hpp"

namespace {

using namespace vmfmil::cli;

constexpr int kUsageError = 2;
constexpr int kDataError = 3;

void add_episode_flags(CLI::App* cmd, EpisodeOptions& o) {
  cmd->add_option("--n", o.n_way, "Classes per episode")->check(CLI::PositiveNumber);
  cmd->add_option("--k", o.k_shot, "Support images per class")->check(CLI::PositiveNumber);
  cmd->add_option("--episodes", o.episodes, "Number of episodes")->check(CLI::NonNegativeNumber);
  cmd->add_option("--num-query", o.num_query, "Query images per episode")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--replay", o.replay, "Replay episodes from a saved JSON file");
  cmd->add_option("--save-episodes", o.save_episodes, "Save the sampled episodes as JSON");
}

void add_col_flags(CLI::App* cmd, ColOptions& o) {
  cmd->add_option("--kappa", o.kappa, "Initial (or fixed) concentration");
  cmd->add_option("--kappa-rule", o.kappa_rule,
                  "constant[:v], order0..order3, order_inf or exact");
  cmd->add_option("--em-iters", o.em_iters, "EM iterations (0 keeps the initialization)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--tol", o.tol, "Convergence tolerance on the log-likelihood");
  cmd->add_option("--lambda", o.lambda, "Query prior ratio");
  cmd->add_option("--model", o.model, "vmf, gaussian or tukey-gaussian");
  cmd->add_option("--sigma", o.sigma, "Gaussian model bandwidth");
  cmd->add_option("--tukey-beta", o.tukey_beta, "Tukey transform exponent");
  cmd->add_option("--init", o.init, "prototypical or random");
}

void add_eval_flags(CLI::App* cmd, EvalOptions& o) {
  cmd->add_option("--iou-thresh", o.iou_thresh, "IoU threshold for a hit");
  cmd->add_option("--ap-interp", o.ap_interp, "all or 11pt");
  cmd->add_flag("--pooled", o.pooled, "Pool detections across episodes");
  cmd->add_option("--nms-iou", o.nms_iou, "NMS IoU (0 disables)");
  cmd->add_option("--score-thresh", o.score_thresh, "Drop detections scoring below this");
}

void add_run_flags(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("--dataset", o.dataset, "Dataset index.json")->required();
  cmd->add_option("--truth", o.truth, "Planted truth (synthetic worlds)");
  cmd->add_option("--detections", o.detections, "Write detections as JSON lines");
  cmd->add_option("--background", o.background.file, "Fitted background model JSON");
  cmd->add_option("--bg-objectness", o.background.objectness,
                  "Use the objectness background with this alpha");
  add_episode_flags(cmd, o.episodes);
  add_col_flags(cmd, o.col);
  add_eval_flags(cmd, o.eval);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Few-shot co-localization and weakly supervised detection with vMF models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "vmfmil 0.1.0");

  GlobalOptions global;
  app.add_option("--seed", global.seed, "Run seed");
  app.add_option("--workers", global.workers, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--log-level", global.log_level, "trace, debug, info, warn, error, off");
  app.add_option("--out", global.out, "Output path (stdout when omitted)");

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a planted synthetic world");
  synth_cmd->add_option("--d", synth.spec.d, "Feature dimension")->check(CLI::Range(2, 1 << 16));
  synth_cmd->add_option("--classes", synth.spec.num_classes, "Number of classes");
  synth_cmd->add_option("--base-classes", synth.spec.num_base_classes, "Classes in the base split");
  synth_cmd->add_option("--kappa-class", synth.spec.kappa_class, "Class concentration");
  synth_cmd->add_option("--kappa-bg", synth.spec.kappa_background, "Background concentration");
  synth_cmd->add_option("--proposals", synth.spec.proposals, "Proposals per image");
  synth_cmd->add_option("--positives", synth.spec.positives_per_image, "Positives per image");
  synth_cmd->add_option("--mix", synth.spec.full_image_mix, "Full-image mixing weight");
  synth_cmd->add_flag("--with-objectness", synth.spec.with_objectness, "Emit objectness scores");
  synth_cmd->add_option("--images-per-class", synth.images_per_class, "Images per class");

  FitBackgroundOptions fit;
  auto* fit_cmd = app.add_subcommand("fit-background", "Fit the vMF background model");
  fit_cmd->add_option("--dataset", fit.dataset, "Dataset index.json")->required();
  fit_cmd->add_option("--iou-thresh", fit.iou_thresh, "Max IoU of a background proposal");
  fit_cmd->add_option("--kappa-rule", fit.kappa_rule, "Concentration estimator");

  RunOptions col;
  auto* col_cmd = app.add_subcommand("col", "Few-shot co-localization episodes");
  add_run_flags(col_cmd, col);

  WsodOptions wsod;
  auto* wsod_cmd = app.add_subcommand("wsod", "Few-shot weakly supervised detection episodes");
  add_run_flags(wsod_cmd, wsod.run);
  wsod_cmd->add_option("--method", wsod.method, "vmf, misvm or proto-init");
  wsod_cmd->add_option("--tau", wsod.tau, "Cosine classifier temperature");
  wsod_cmd->add_option("--l2-reg", wsod.l2_reg, "Classifier norm anchor weight");
  wsod_cmd->add_option("--gamma", wsod.gamma, "MI-SVM objectness weight");
  wsod_cmd->add_option("--c-reg", wsod.c_reg, "MI-SVM regularization");
  wsod_cmd->add_option("--max-rounds", wsod.max_rounds, "MI-SVM relocalization rounds")
      ->check(CLI::PositiveNumber);

  EvalCommandOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate detections");
  eval_cmd->add_option("--detections", eval.detections, "Detections as JSON lines")->required();
  auto* dataset_opt = eval_cmd->add_option("--dataset", eval.dataset, "Dataset index.json");
  eval_cmd->add_option("--manifest", eval.manifest, "Manifest JSON lines")->excludes(dataset_opt);
  eval_cmd->add_option("--episodes", eval.episodes, "Episodes file for per-episode metrics");
  add_eval_flags(eval_cmd, eval.eval);

  KappaTableOptions table;
  auto* table_cmd = app.add_subcommand("kappa-table", "Tabulate concentration estimators");
  table_cmd->add_option("--d", table.d, "Dimension");
  table_cmd->add_option("--grid", table.grid, "a:b:n or a comma-separated list of r̄ values");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    configure_logging(global.log_level);
    if (*synth_cmd) return cmd_synth(global, synth);
    if (*fit_cmd) return cmd_fit_background(global, fit);
    if (*col_cmd) return cmd_col(global, col);
    if (*wsod_cmd) return cmd_wsod(global, wsod);
    if (*eval_cmd) return cmd_eval(global, eval);
    if (*table_cmd) return cmd_kappa_table(global, table);
  } catch (const vmfmil::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const vmfmil::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "fatal: " << e.what() << "\n";
    return 1;
  }
  return kUsageError;
}
