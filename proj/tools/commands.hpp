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

// Subcommand implementations of the vmfmil tool. Option structs are filled
// by the CLI11 front end in vmfmil.cpp.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vmfmil/dataio.hpp"

namespace vmfmil::cli {

struct GlobalOptions {
  std::uint64_t seed = 0;
  int workers = 1;
  std::string log_level;
  std::string out;
};

struct SynthOptions {
  SyntheticWorldSpec spec;
  int images_per_class = 20;
};

struct FitBackgroundOptions {
  std::string dataset;
  double iou_thresh = 0.3;
  std::string kappa_rule = "exact";
};

struct BackgroundOptions {
  std::string file;                   // --background
  std::optional<double> objectness;   // --bg-objectness ALPHA
};

struct EpisodeOptions {
  int n_way = 1;
  int k_shot = 5;
  int episodes = 100;
  int num_query = 5;
  std::string replay;         // --replay episodes.json
  std::string save_episodes;  // --save-episodes path
};

struct ColOptions {
  std::optional<double> kappa;
  std::string kappa_rule = "constant";
  int em_iters = 8;
  double tol = 1e-6;
  double lambda = 1.0;
  std::string model = "vmf";
  double sigma = 0.1;
  double tukey_beta = 0.5;
  std::string init = "prototypical";
};

struct EvalOptions {
  double iou_thresh = 0.5;
  std::string ap_interp = "all";
  bool pooled = false;
  double nms_iou = 0.5;  // 0 disables
  double score_thresh = 0.0;
};

struct RunOptions {
  std::string dataset;
  std::string truth;       // optional planted truth for recovery stats
  std::string detections;  // optional JSON-lines output
  BackgroundOptions background;
  EpisodeOptions episodes;
  ColOptions col;
  EvalOptions eval;
};

struct WsodOptions {
  RunOptions run;
  std::string method = "vmf";
  double tau = 20.0;
  double l2_reg = 1e-3;
  double gamma = 0.5;
  double c_reg = 1.0;
  int max_rounds = 10;
};

struct EvalCommandOptions {
  std::string detections;
  std::string dataset;
  std::string manifest;
  std::string episodes;
  EvalOptions eval;
};

struct KappaTableOptions {
  int d = 100;
  std::string grid = "0:0.99:100";
};

void configure_logging(const std::string& level);

int cmd_synth(const GlobalOptions& global, const SynthOptions& options);
int cmd_fit_background(const GlobalOptions& global, const FitBackgroundOptions& options);
int cmd_col(const GlobalOptions& global, const RunOptions& options);
int cmd_wsod(const GlobalOptions& global, const WsodOptions& options);
int cmd_eval(const GlobalOptions& global, const EvalCommandOptions& options);
int cmd_kappa_table(const GlobalOptions& global, const KappaTableOptions& options);

/// Parses "a:b:n" (n evenly spaced points from a to b) or "x,y,z".
std::vector<double> parse_grid(const std::string& text);

}  // namespace vmfmil::cli
