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

#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "vmfmil/background.hpp"
#include "vmfmil/baseline.hpp"
#include "vmfmil/col.hpp"
#include "vmfmil/episodes.hpp"
#include "vmfmil/eval.hpp"
#include "vmfmil/wsod.hpp"

namespace vmfmil::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Runs fn(i) for i < n on `workers` threads; results land at their index so
// the output does not depend on scheduling.
template <typename Fn>
auto parallel_map(std::size_t n, int workers, Fn fn) -> std::vector<decltype(fn(std::size_t{}))> {
  std::vector<decltype(fn(std::size_t{}))> out(n);
  const auto threads = static_cast<std::size_t>(std::max(1, workers));
  if (threads == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(threads, n); ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          out[i] = fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
  return out;
}

void write_output(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
    return;
  }
  const fs::path path(out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream file(path, std::ios::trunc);
  if (!file) throw DataError(fmt::format("cannot open '{}' for writing", out));
  file << text;
}

struct Dataset {
  DatasetIndex index;
  ProposalStore proposals;
};

Dataset load_dataset(const std::string& path) {
  if (path.empty()) throw DataError("--dataset is required");
  Dataset ds;
  ds.index = read_index(path);
  ds.proposals = ProposalStore(read_proposals(ds.index.proposal_file));
  for (const auto& record : ds.index.images) {
    if (!ds.proposals.contains(record.image_id)) {
      throw DataError(fmt::format("image '{}' has no proposals", record.image_id));
    }
  }
  return ds;
}

BackgroundModel resolve_background(const BackgroundOptions& options) {
  if (!options.file.empty()) return load_background(options.file);
  if (options.objectness) return BackgroundModel::objectness(*options.objectness);
  spdlog::warn("no background model given; using the uniform background");
  return BackgroundModel::uniform();
}

std::vector<Episode> resolve_episodes(const GlobalOptions& global, const EpisodeOptions& options,
                                      const DatasetIndex& index, bool with_extra_negatives) {
  std::vector<Episode> episodes;
  if (!options.replay.empty()) {
    episodes = load_episodes(options.replay);
  } else {
    EpisodeSpec spec{options.n_way, options.k_shot, options.num_query, with_extra_negatives};
    if (options.episodes < 0) throw DomainError("--episodes must be >= 0");
    auto stream = sample_benchmark(index, spec, global.seed,
                                   static_cast<std::size_t>(options.episodes));
    while (!stream.done()) episodes.push_back(stream.next());
  }
  for (const auto& ep : episodes) {
    for (const auto& ids : ep.support) {
      for (const auto& id : ids) index.record(id);
    }
    for (const auto& id : ep.query) index.record(id);
  }
  if (!options.save_episodes.empty()) save_episodes(episodes, options.save_episodes);
  return episodes;
}

ApInterpolation parse_interp(const std::string& text) {
  if (text == "all") return ApInterpolation::all_point;
  if (text == "11pt") return ApInterpolation::eleven_point;
  throw DomainError(fmt::format("unknown AP interpolation '{}'", text));
}

DetectConfig detect_config(const EvalOptions& options) {
  DetectConfig config;
  if (options.nms_iou > 0.0) {
    config.nms_iou = options.nms_iou;
  } else {
    config.nms_iou.reset();
  }
  config.score_threshold = options.score_thresh;
  return config;
}

ColConfig col_config(const ColOptions& options) {
  ColConfig config;
  // Bare "constant" keeps --kappa (or the default) fixed.
  config.kappa_rule = options.kappa_rule == "constant"
                          ? KappaRule::constant(options.kappa.value_or(0.0))
                          : KappaRule::parse(options.kappa_rule);
  if (options.kappa) {
    config.kappa_init = *options.kappa;
  } else if (config.kappa_rule.is_constant() && config.kappa_rule.value > 0.0) {
    config.kappa_init = config.kappa_rule.value;
  }
  config.max_iters = options.em_iters;
  config.convergence_tol = options.tol;
  config.lambda = options.lambda;
  if (options.model == "vmf") {
    config.model = ColModel::vmf();
  } else if (options.model == "gaussian") {
    config.model = ColModel::gaussian(options.sigma);
  } else if (options.model == "tukey-gaussian") {
    config.model = ColModel::tukey_gaussian(options.tukey_beta, options.sigma);
  } else {
    throw DomainError(fmt::format("unknown COL model '{}'", options.model));
  }
  if (options.init == "prototypical") {
    config.init = {ColInit::Kind::prototypical, 0};
  } else if (options.init == "random") {
    config.init = {ColInit::Kind::random, 0};
  } else {
    throw DomainError(fmt::format("unknown init '{}'", options.init));
  }
  config.validate();
  return config;
}

std::vector<ImageRecord> records_of(const DatasetIndex& index, const std::vector<std::string>& ids) {
  std::vector<ImageRecord> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(index.record(id));
  return out;
}

json episode_header(const Episode& ep, std::size_t i) {
  json j = to_json(ep);
  j["index"] = i;
  return j;
}

json evaluation_json(const EpisodeEvaluation& ev) {
  return {{"corloc", ev.corloc}, {"ap", ev.ap}};
}

// Per-episode result shared by the col and wsod commands.
struct EpisodeOutcome {
  json record;
  std::vector<Detection> detections;
  EpisodeEvaluation evaluation;
  int support_hits = 0;       // class-agnostic support CorLoc hits
  int support_count = 0;
  int recovered = 0;          // planted positives recovered
  int recovery_count = 0;
};

struct Summary {
  MetricsReport metrics;
  json support;
};

Summary summarize(const std::vector<Episode>& episodes, const std::vector<EpisodeOutcome>& outcomes,
                  const DatasetIndex& index, const EvalOptions& eval) {
  Summary s;
  if (eval.pooled) {
    // Each (episode, image) pair is its own evaluation image.
    std::vector<Detection> pooled;
    std::vector<ImageRecord> images;
    std::set<std::string> classes;
    for (std::size_t e = 0; e < episodes.size(); ++e) {
      for (const auto& id : episodes[e].query) {
        ImageRecord record = index.record(id);
        record.image_id = fmt::format("{}/{}", e, id);
        images.push_back(std::move(record));
      }
      classes.insert(episodes[e].classes.begin(), episodes[e].classes.end());
      for (Detection d : outcomes[e].detections) {
        d.image_id = fmt::format("{}/{}", e, d.image_id);
        pooled.push_back(std::move(d));
      }
    }
    const std::vector<std::string> class_list(classes.begin(), classes.end());
    std::vector<EpisodeEvaluation> single;
    if (!episodes.empty()) {
      single.push_back(evaluate_episode(pooled, images, class_list, eval.iou_thresh,
                                        parse_interp(eval.ap_interp)));
    }
    s.metrics = aggregate(single);
    s.metrics.n_episodes = static_cast<int>(episodes.size());
  } else {
    std::vector<EpisodeEvaluation> evals;
    for (const auto& o : outcomes) evals.push_back(o.evaluation);
    s.metrics = aggregate(evals);
  }
  int hits = 0, count = 0, rec = 0, rec_count = 0;
  for (const auto& o : outcomes) {
    hits += o.support_hits;
    count += o.support_count;
    rec += o.recovered;
    rec_count += o.recovery_count;
  }
  const Interval support_ci = binomial_ci95(hits, count);
  s.support = {{"corloc", support_ci.mean}, {"ci95", support_ci.half_width}, {"images", count}};
  if (rec_count > 0) {
    s.support["recovery"] = 100.0 * rec / rec_count;
  } else {
    s.support["recovery"] = nullptr;
  }
  return s;
}

void write_detections(const std::string& path, const std::vector<EpisodeOutcome>& outcomes) {
  if (path.empty()) return;
  std::string text;
  for (std::size_t e = 0; e < outcomes.size(); ++e) {
    for (const auto& d : outcomes[e].detections) {
      json j = detection_to_json(d);
      j["episode"] = e;
      text += j.dump() + "\n";
    }
  }
  write_output(path, text);
}

// Support selections of one class: CorLoc against the class and planted
// recovery when truth is available.
void score_support(EpisodeOutcome& outcome, const std::vector<ProposalSet>& support,
                   const std::vector<int>& selection, const std::string& class_id,
                   const DatasetIndex& index, const PlantedTruth* truth) {
  std::vector<Selection> selections;
  for (std::size_t i = 0; i < support.size(); ++i) {
    selections.push_back({support[i].image_id, support[i].boxes[selection[i]]});
  }
  const auto records = records_of(index, [&] {
    std::vector<std::string> ids;
    for (const auto& s : support) ids.push_back(s.image_id);
    return ids;
  }());
  const double corloc = class_agnostic_corloc(selections, records, class_id);
  outcome.support_hits += static_cast<int>(std::lround(corloc * support.size() / 100.0));
  outcome.support_count += static_cast<int>(support.size());
  if (truth) {
    for (std::size_t i = 0; i < support.size(); ++i) {
      const auto it = truth->positives.find(support[i].image_id);
      if (it == truth->positives.end()) continue;
      outcome.recovery_count += 1;
      if (std::find(it->second.begin(), it->second.end(), selection[i]) != it->second.end()) {
        outcome.recovered += 1;
      }
    }
  }
}

std::optional<PlantedTruth> load_truth(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return read_truth(path);
}

json metrics_json(const Summary& s) {
  json j = to_json(s.metrics);
  j["support"] = s.support;
  return j;
}

}  // namespace

void configure_logging(const std::string& level) {
  auto logger = spdlog::stderr_color_mt("vmfmil");
  spdlog::set_default_logger(logger);
  std::string chosen = level;
  if (chosen.empty()) {
    if (const char* env = std::getenv("VMFMIL_LOG")) chosen = env;
  }
  if (chosen.empty()) chosen = "info";
  const auto parsed = spdlog::level::from_str(chosen);
  if (parsed == spdlog::level::off && chosen != "off") {
    throw DomainError(fmt::format("unknown log level '{}'", chosen));
  }
  spdlog::set_level(parsed);
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  try {
    if (const auto colon = text.find(':'); colon != std::string::npos) {
      const auto second = text.find(':', colon + 1);
      if (second == std::string::npos) throw DomainError("grid must be a:b:n");
      const double a = std::stod(text.substr(0, colon));
      const double b = std::stod(text.substr(colon + 1, second - colon - 1));
      const int n = std::stoi(text.substr(second + 1));
      if (n < 1) throw DomainError("grid needs n >= 1");
      for (int i = 0; i < n; ++i) out.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
      return out;
    }
    std::size_t start = 0;
    while (start <= text.size()) {
      const auto comma = text.find(',', start);
      const std::string item = text.substr(start, comma == std::string::npos ? std::string::npos
                                                                              : comma - start);
      if (!item.empty()) out.push_back(std::stod(item));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  } catch (const std::logic_error& e) {
    throw DomainError(fmt::format("bad grid '{}': {}", text, e.what()));
  }
  if (out.empty()) throw DomainError(fmt::format("empty grid '{}'", text));
  return out;
}

int cmd_synth(const GlobalOptions& global, const SynthOptions& options) {
  SyntheticWorldSpec spec = options.spec;
  spec.seed = global.seed;
  spec.validate();
  const SyntheticWorld world = generate_synthetic(spec, options.images_per_class);
  const fs::path dir = global.out.empty() ? fs::path("synth") : fs::path(global.out);
  fs::create_directories(dir);
  write_proposals(world.proposals, dir / "proposals.bin");
  write_index(world.index, dir / "index.json");
  write_truth(world.truth, dir / "truth.json");
  spdlog::info("wrote {} images to {}", world.proposals.size(), dir.string());
  std::cout << (dir / "truth.json").string() << "\n";
  return 0;
}

int cmd_fit_background(const GlobalOptions& global, const FitBackgroundOptions& options) {
  if (!(options.iou_thresh > 0.0)) {
    throw DataError(fmt::format("--iou-thresh {} collects no negatives", options.iou_thresh));
  }
  const Dataset ds = load_dataset(options.dataset);
  const BackgroundFit fit = fit_background(ds.index, ds.proposals, options.iou_thresh,
                                           KappaRule::parse(options.kappa_rule));
  json j = to_json(fit.model);
  j["negatives"] = fit.negatives;
  j["saturated"] = fit.saturated;
  write_output(global.out.empty() ? "background.json" : global.out, j.dump(2) + "\n");
  return 0;
}

int cmd_col(const GlobalOptions& global, const RunOptions& options) {
  const ColConfig config = col_config(options.col);
  const DetectConfig detect = detect_config(options.eval);
  const ApInterpolation interp = parse_interp(options.eval.ap_interp);
  const Dataset ds = load_dataset(options.dataset);
  const BackgroundModel bg = resolve_background(options.background);
  const auto truth = load_truth(options.truth);
  const std::vector<Episode> episodes = resolve_episodes(global, options.episodes, ds.index, false);

  const auto outcomes = parallel_map(episodes.size(), global.workers, [&](std::size_t e) {
    const Episode& ep = episodes[e];
    EpisodeOutcome outcome;
    outcome.record = episode_header(ep, e);
    json per_class = json::array();
    for (std::size_t c = 0; c < ep.classes.size(); ++c) {
      std::vector<ProposalSet> support;
      for (const auto& id : ep.support[c]) support.push_back(ds.proposals.at(id));
      const ColResult result = run_col(config, support, bg);
      score_support(outcome, support, result.top_index, ep.classes[c], ds.index,
                    truth ? &*truth : nullptr);
      for (const auto& id : ep.query) {
        const ProposalSet& query = ds.proposals.at(id);
        const QueryScores scores =
            score_query(result.theta, result.kappa_final, bg, config.lambda, query, config.model);
        auto dets = detections_from_logits(query, ep.classes[c], scores.logit, detect,
                                           std::log(config.lambda));
        outcome.detections.insert(outcome.detections.end(), dets.begin(), dets.end());
      }
      json entry = to_json(result, support);
      entry["class"] = ep.classes[c];
      per_class.push_back(std::move(entry));
    }
    outcome.evaluation = evaluate_episode(outcome.detections, records_of(ds.index, ep.query),
                                          ep.classes, options.eval.iou_thresh, interp);
    outcome.record["col"] = std::move(per_class);
    outcome.record["metrics"] = evaluation_json(outcome.evaluation);
    return outcome;
  });

  const Summary summary = summarize(episodes, outcomes, ds.index, options.eval);
  write_detections(options.detections, outcomes);
  json episodes_json = json::array();
  for (const auto& o : outcomes) episodes_json.push_back(o.record);
  const json report = {{"command", "col"},
                       {"config",
                        {{"n_way", options.episodes.n_way},
                         {"k_shot", options.episodes.k_shot},
                         {"kappa", config.initial_kappa(ds.proposals.dim())},
                         {"kappa_rule",
                          config.kappa_rule.is_constant() ? "constant" : config.kappa_rule.name()},
                         {"em_iters", config.max_iters},
                         {"model", config.model.name()},
                         {"background", bg.name()},
                         {"seed", global.seed}}},
                       {"metrics", metrics_json(summary)},
                       {"episodes", episodes_json}};
  write_output(global.out, report.dump(2) + "\n");
  spdlog::info("COL over {} episodes: CorLoc {} mAP {:.4f}", episodes.size(),
               summary.metrics.corloc_ci95.format(), summary.metrics.map);
  return 0;
}

int cmd_wsod(const GlobalOptions& global, const WsodOptions& options) {
  const RunOptions& run = options.run;
  if (options.method != "vmf" && options.method != "misvm" && options.method != "proto-init") {
    throw DomainError(fmt::format("unknown method '{}'", options.method));
  }
  ColOptions col_options = run.col;
  if (options.method == "proto-init") col_options.em_iters = 0;
  WsodConfig config;
  config.col = col_config(col_options);
  config.train.tau = options.tau;
  config.train.l2_reg = options.l2_reg;
  config.detect = detect_config(run.eval);
  const ApInterpolation interp = parse_interp(run.eval.ap_interp);
  const bool misvm = options.method == "misvm";

  const Dataset ds = load_dataset(run.dataset);
  const auto truth = load_truth(run.truth);
  const std::vector<Episode> episodes =
      resolve_episodes(global, run.episodes, ds.index, misvm && run.episodes.n_way == 1);

  BackgroundModel bg;
  ObjectnessScorer objectness;
  MisvmConfig misvm_config;
  if (misvm) {
    objectness = train_objectness(collect_objectness_data(ds.index, ds.proposals));
    misvm_config.c_reg = options.c_reg;
    misvm_config.gamma = options.gamma;
    misvm_config.max_rounds = options.max_rounds;
    misvm_config.detect = config.detect;
  } else {
    bg = resolve_background(run.background);
  }

  const auto outcomes = parallel_map(episodes.size(), global.workers, [&](std::size_t e) {
    const Episode& ep = episodes[e];
    EpisodeOutcome outcome;
    outcome.record = episode_header(ep, e);
    json per_class = json::array();
    if (misvm) {
      MisvmEpisodeResult result = run_misvm_episode(ep, ds.index, ds.proposals, objectness,
                                                    misvm_config);
      for (std::size_t c = 0; c < ep.classes.size(); ++c) {
        std::vector<ProposalSet> support;
        for (const auto& id : ep.support[c]) support.push_back(ds.proposals.at(id));
        const MisvmResult& r = result.classes[c];
        score_support(outcome, support, r.selections, ep.classes[c], ds.index,
                      truth ? &*truth : nullptr);
        per_class.push_back({{"class", ep.classes[c]},
                             {"selections", r.selections},
                             {"rounds", r.rounds},
                             {"fixed_point", r.fixed_point}});
      }
      outcome.detections = std::move(result.detections);
    } else {
      WsodResult result = run_wsod(ep, ds.index, ds.proposals, bg, config);
      for (std::size_t c = 0; c < ep.classes.size(); ++c) {
        std::vector<ProposalSet> support;
        for (const auto& id : ep.support[c]) support.push_back(ds.proposals.at(id));
        const WsodClassRun& r = result.classes[c];
        score_support(outcome, support, r.col.top_index, ep.classes[c], ds.index,
                      truth ? &*truth : nullptr);
        per_class.push_back({{"class", ep.classes[c]},
                             {"top_index", r.col.top_index},
                             {"classifier", to_json(r.trained.classifier)},
                             {"iterations", r.trained.optimization.iterations}});
      }
      outcome.detections = std::move(result.detections);
    }
    outcome.evaluation = evaluate_episode(outcome.detections, records_of(ds.index, ep.query),
                                          ep.classes, run.eval.iou_thresh, interp);
    outcome.record["classes_detail"] = std::move(per_class);
    outcome.record["metrics"] = evaluation_json(outcome.evaluation);
    return outcome;
  });

  const Summary summary = summarize(episodes, outcomes, ds.index, run.eval);
  write_detections(run.detections, outcomes);
  json episodes_json = json::array();
  for (const auto& o : outcomes) episodes_json.push_back(o.record);
  const json report = {{"command", "wsod"},
                       {"config",
                        {{"method", options.method},
                         {"n_way", run.episodes.n_way},
                         {"k_shot", run.episodes.k_shot},
                         {"tau", options.tau},
                         {"seed", global.seed}}},
                       {"metrics", metrics_json(summary)},
                       {"episodes", episodes_json}};
  write_output(global.out, report.dump(2) + "\n");
  spdlog::info("WSOD ({}) over {} episodes: mAP {:.4f} CorLoc {}", options.method,
               episodes.size(), summary.metrics.map, summary.metrics.corloc_ci95.format());
  return 0;
}

int cmd_eval(const GlobalOptions& global, const EvalCommandOptions& options) {
  const ApInterpolation interp = parse_interp(options.eval.ap_interp);
  DatasetIndex index;
  if (!options.dataset.empty()) {
    index = read_index(options.dataset);
  } else if (!options.manifest.empty()) {
    index.images = read_manifest(options.manifest);
    index.reindex();
  } else {
    throw DataError("eval needs --dataset or --manifest");
  }

  std::ifstream in(options.detections);
  if (!in) throw DataError(fmt::format("cannot open '{}'", options.detections));
  std::vector<std::pair<std::optional<std::size_t>, Detection>> parsed;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      std::optional<std::size_t> episode;
      if (j.contains("episode")) episode = j.at("episode").get<std::size_t>();
      Detection d = detection_from_json(j);
      if (!index.contains(d.image_id)) {
        throw DataError(fmt::format("detection for unknown image '{}'", d.image_id));
      }
      if (!d.box.valid()) throw DataError("detection box is degenerate");
      parsed.emplace_back(episode, std::move(d));
    } catch (const json::exception& e) {
      throw DataError(fmt::format("{}:{}: {}", options.detections, line_no, e.what()));
    } catch (const DataError& e) {
      throw DataError(fmt::format("{}:{}: {}", options.detections, line_no, e.what()));
    }
  }

  MetricsReport metrics;
  if (!options.episodes.empty()) {
    const std::vector<Episode> episodes = load_episodes(options.episodes);
    std::vector<EpisodeOutcome> outcomes(episodes.size());
    for (auto& [episode, d] : parsed) {
      if (!episode || *episode >= episodes.size()) {
        throw DataError("detection lacks a valid episode index for the given episodes file");
      }
      outcomes[*episode].detections.push_back(d);
    }
    for (std::size_t e = 0; e < episodes.size(); ++e) {
      outcomes[e].evaluation =
          evaluate_episode(outcomes[e].detections, records_of(index, episodes[e].query),
                           episodes[e].classes, options.eval.iou_thresh, interp);
    }
    metrics = summarize(episodes, outcomes, index, options.eval).metrics;
  } else if (!parsed.empty()) {
    std::vector<Detection> dets;
    std::set<std::string> ids;
    std::set<std::string> classes;
    for (auto& [episode, d] : parsed) {
      ids.insert(d.image_id);
      classes.insert(d.class_id);
      dets.push_back(d);
    }
    const std::vector<std::string> class_list(classes.begin(), classes.end());
    const std::vector<EpisodeEvaluation> single = {evaluate_episode(
        dets, records_of(index, {ids.begin(), ids.end()}), class_list, options.eval.iou_thresh,
        interp)};
    metrics = aggregate(single);
  }
  write_output(global.out, to_json(metrics).dump(2) + "\n");
  return 0;
}

int cmd_kappa_table(const GlobalOptions& global, const KappaTableOptions& options) {
  if (options.d < 2) throw DomainError(fmt::format("d must be >= 2, got {}", options.d));
  using Kind = KappaRule::Kind;
  const std::vector<std::pair<std::string, Kind>> rules = {
      {"order0", Kind::order0}, {"order1", Kind::order1},       {"order2", Kind::order2},
      {"order3", Kind::order3}, {"order_inf", Kind::order_inf}, {"exact", Kind::exact}};
  std::string csv = "rbar";
  for (const auto& [name, kind] : rules) csv += "," + name;
  csv += ",saturated\n";
  for (double rbar : parse_grid(options.grid)) {
    if (!(rbar >= 0.0)) throw DomainError(fmt::format("rbar must be >= 0, got {}", rbar));
    const double clipped = std::min(rbar, 1.0);
    bool saturated = rbar >= 1.0;
    std::string row = fmt::format("{:.10g}", rbar);
    for (const auto& [name, kind] : rules) {
      const KappaEstimate est = estimate_kappa(clipped, options.d, KappaRule::order(kind));
      saturated = saturated || est.saturated;
      row += fmt::format(",{:.10g}", est.kappa);
    }
    csv += row + (saturated ? ",1\n" : ",0\n");
  }
  write_output(global.out, csv);
  return 0;
}

}  // namespace vmfmil::cli
