// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>

#include "aigcvqa/caption_sim.hpp"
#include "aigcvqa/checkpoint.hpp"
#include "aigcvqa/config.hpp"
#include "aigcvqa/csv.hpp"
#include "aigcvqa/dataset.hpp"
#include "aigcvqa/ensemble.hpp"
#include "aigcvqa/error.hpp"
#include "aigcvqa/metrics.hpp"
#include "aigcvqa/model.hpp"
#include "aigcvqa/pipeline.hpp"
#include "aigcvqa/synthetic.hpp"

namespace aigcvqa::cli {

namespace {

using nlohmann::json;

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open config " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::config, path + ": invalid JSON: " + e.what());
  }
}

// Applies "a.b.c=value" overrides to a JSON document. The value is parsed as
// JSON when possible and taken as a plain string otherwise.
void apply_sets(json& doc, const std::vector<std::string>& sets) {
  for (const auto& item : sets) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0)
      fail(ErrorKind::config, "--set expects key=value, got '" + item + "'");
    std::string pointer = "/" + item.substr(0, eq);
    std::replace(pointer.begin(), pointer.end(), '.', '/');
    const std::string text = item.substr(eq + 1);
    json value;
    try {
      value = json::parse(text);
    } catch (const json::exception&) {
      value = text;
    }
    doc[json::json_pointer(pointer)] = value;
  }
}

// Binds a subcommand's options to keys of an optional JSON config file.
// Command-line values win over file values; unknown keys are rejected.
class OptionFile {
 public:
  explicit OptionFile(CLI::App* app) : app_(app) {
    app_->add_option("--config", path_, "JSON file whose keys are this command's option names");
  }

  template <typename T>
  CLI::Option* option(const std::string& name, T& target, const std::string& help) {
    CLI::Option* opt = app_->add_option("--" + name, target, help);
    setters_[name] = {opt, [&target](const json& j) { target = j.get<T>(); }};
    return opt;
  }

  CLI::Option* flag(const std::string& name, bool& target, const std::string& help) {
    CLI::Option* opt = app_->add_flag("--" + name, target, help);
    setters_[name] = {opt, [&target](const json& j) { target = j.get<bool>(); }};
    return opt;
  }

  void apply() {
    if (path_.empty()) return;
    const json doc = read_json_file(path_);
    if (!doc.is_object()) fail(ErrorKind::config, path_ + ": expected a JSON object");
    for (const auto& [key, value] : doc.items()) {
      const auto it = setters_.find(key);
      if (it == setters_.end()) fail(ErrorKind::config, path_ + ": unknown key '" + key + "'");
      if (it->second.first->count() > 0) continue;
      try {
        it->second.second(value);
      } catch (const json::exception& e) {
        fail(ErrorKind::config, path_ + "." + key + ": " + e.what());
      }
    }
  }

 private:
  CLI::App* app_;
  std::string path_;
  std::map<std::string, std::pair<CLI::Option*, std::function<void(const json&)>>> setters_;
};

void require(const std::string& value, const std::string& name) {
  if (value.empty()) fail(ErrorKind::config, "--" + name + " is required");
}

std::optional<std::filesystem::path> optional_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::filesystem::path(s);
}

// ---------------------------------------------------------------- train / ablate

struct TrainArgs {
  std::string config;
  std::vector<std::string> sets;
  std::string train_manifest;
  std::string val_manifest;
  double val_fraction = 0.0;
  std::string video_root;
  std::string checkpoint;
  std::string log;
  std::string output;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<int> batch_size;
  std::optional<int> linear_probe_epochs;
  std::optional<int> finetune_epochs;
  std::optional<double> lr_heads;
  std::optional<double> lr_backbone;
  bool deterministic = false;
  bool no_explicit_prompt = false;
  bool no_implicit_text = false;
  bool no_aux_cls = false;
};

void add_train_options(CLI::App* cmd, TrainArgs& a) {
  cmd->add_option("--config", a.config, "Training configuration (JSON)");
  cmd->add_option("--set", a.sets, "Override a config key: dotted.path=json_value");
  cmd->add_option("--train", a.train_manifest, "Training manifest CSV")->required();
  cmd->add_option("--val", a.val_manifest, "Validation manifest CSV");
  cmd->add_option("--val-fraction", a.val_fraction,
                  "Hold out this fraction of --train for validation when --val is absent");
  cmd->add_option("--video-root", a.video_root, "Directory holding the videos");
  cmd->add_option("--seed", a.seed, "Run seed");
  cmd->add_option("--workers", a.workers, "Decode/prepare worker threads");
  cmd->add_option("--batch-size", a.batch_size, "Mini-batch size");
  cmd->add_option("--linear-probe-epochs", a.linear_probe_epochs, "Frozen-encoder epochs");
  cmd->add_option("--finetune-epochs", a.finetune_epochs, "End-to-end epochs");
  cmd->add_option("--lr-heads", a.lr_heads, "Learning rate of heads and fusion");
  cmd->add_option("--lr-backbone", a.lr_backbone, "Learning rate of the encoders");
  cmd->add_flag("--deterministic", a.deterministic, "Serial, bit-reproducible execution");
  cmd->add_flag("--no-explicit-prompt", a.no_explicit_prompt, "Disable the explicit prompt branch");
  cmd->add_flag("--no-implicit-text", a.no_implicit_text, "Disable the implicit text branch");
  cmd->add_flag("--no-aux-cls", a.no_aux_cls, "Disable the generator classification loss");
}

TrainConfig resolve_train_config(const TrainArgs& a) {
  json doc = a.config.empty() ? json::object() : read_json_file(a.config);
  apply_sets(doc, a.sets);
  TrainConfig c = train_config_from_json(doc);
  if (a.seed) c.seed = *a.seed;
  if (a.workers) c.workers = *a.workers;
  if (a.batch_size) c.batch_size = *a.batch_size;
  if (a.linear_probe_epochs) c.schedule.linear_probe_epochs = *a.linear_probe_epochs;
  if (a.finetune_epochs) c.schedule.finetune_epochs = *a.finetune_epochs;
  if (a.lr_heads) c.optimizer.lr_heads = *a.lr_heads;
  if (a.lr_backbone) c.optimizer.lr_backbone = *a.lr_backbone;
  if (a.deterministic) c.deterministic = true;
  if (a.no_explicit_prompt) c.model.branches.explicit_prompt = false;
  if (a.no_implicit_text) c.model.branches.implicit_text = false;
  if (a.no_aux_cls) c.model.branches.aux_cls = false;
  c.validate();
  return c;
}

std::pair<DatasetManifest, std::optional<DatasetManifest>> load_train_val(const TrainArgs& a,
                                                                          std::uint64_t seed) {
  DatasetManifest train = load_manifest(a.train_manifest, SplitTag::train, optional_path(a.video_root));
  if (!a.val_manifest.empty())
    return {train, load_manifest(a.val_manifest, SplitTag::val, optional_path(a.video_root))};
  if (a.val_fraction > 0) {
    auto [tr, va] = split_manifest(train, a.val_fraction, seed);
    return {tr, va};
  }
  return {train, std::nullopt};
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
  require(a.checkpoint, "checkpoint");
  TrainConfig config = resolve_train_config(a);
  auto [train_set, val_set] = load_train_val(a, config.seed);
  config = with_caption_exemplars(config, train_set);

  std::ofstream log_file;
  TrainOptions options;
  if (!a.log.empty()) {
    log_file.open(a.log);
    if (!log_file) fail(ErrorKind::io, "cannot write " + a.log);
    options.log = &log_file;
  }
  const TrainResult result = train(config, train_set, val_set ? &*val_set : nullptr, options);
  save_checkpoint(result.best, a.checkpoint);
  out << json{{"checkpoint", a.checkpoint},
              {"best_epoch", result.best_epoch + 1},
              {"steps", result.steps.size()},
              {"metrics", result.best.metrics}}
             .dump()
      << '\n';
  return 0;
}

int cmd_ablate(const TrainArgs& a, std::ostream& out) {
  TrainConfig config = resolve_train_config(a);
  TrainArgs split_args = a;
  if (split_args.val_manifest.empty() && split_args.val_fraction <= 0) split_args.val_fraction = 0.25;
  auto [train_set, val_set] = load_train_val(split_args, config.seed);
  const auto rows = run_ablation(config, train_set, *val_set);

  std::ofstream csv_out;
  if (!a.output.empty()) {
    csv_out.open(a.output);
    if (!csv_out) fail(ErrorKind::io, "cannot write " + a.output);
    csv::write_row(csv_out, {"setting", "plcc", "srocc", "main_score"});
  }
  for (const auto& row : rows) {
    out << json{{"setting", row.setting.name},
                {"plcc", row.report.plcc},
                {"srocc", row.report.srocc},
                {"main_score", row.report.main_score}}
               .dump()
        << '\n';
    if (csv_out.is_open())
      csv::write_row(csv_out, {row.setting.name, csv::format_fixed(row.report.plcc),
                               csv::format_fixed(row.report.srocc),
                               csv::format_fixed(row.report.main_score)});
  }
  return 0;
}

// ---------------------------------------------------------------- predict

struct PredictArgs {
  std::string checkpoint;
  std::string manifest;
  std::string output;
  std::string bundle_log;
  std::string captions;
  std::string video_root;
  std::size_t workers = 1;
  bool deterministic = false;
  bool caption_sim = false;
  std::vector<double> branch_weights;
};

int cmd_predict(const PredictArgs& a, std::ostream& out, std::ostream& err) {
  require(a.checkpoint, "checkpoint");
  require(a.manifest, "manifest");
  require(a.output, "output");
  Checkpoint ck = load_checkpoint(a.checkpoint);
  if (!a.branch_weights.empty()) {
    if (a.branch_weights.size() != kBranchCount)
      fail(ErrorKind::config, "--branch-weights needs exactly 5 values");
    ck.config["model"]["branch_weights"] = a.branch_weights;
  }
  if (a.caption_sim || !a.captions.empty()) ck.config["model"]["branches"]["caption_sim"] = true;
  const QualityModel model = model_from_checkpoint(ck);
  const DatasetManifest manifest =
      load_manifest(a.manifest, SplitTag::test, optional_path(a.video_root));

  PredictOptions options;
  options.workers = a.deterministic ? 1 : std::max<std::size_t>(1, a.workers);
  if (!a.captions.empty()) options.caption_scores = read_similarity_csv(a.captions);
  std::ofstream bundle_file;
  if (!a.bundle_log.empty()) {
    bundle_file.open(a.bundle_log);
    if (!bundle_file) fail(ErrorKind::io, "cannot write " + a.bundle_log);
    options.bundle_log = &bundle_file;
  }
  const PredictResult result = predict(model, manifest, options);
  write_predictions(result.predictions(), a.output);
  for (const auto& row : result.rows)
    if (!row.bundle) err << "error: " << row.video_name << ": " << row.error << '\n';
  out << json{{"output", a.output},
              {"predicted", result.rows.size() - result.failures},
              {"failed", result.failures}}
             .dump()
      << '\n';
  if (result.failures > 0) {
    err << result.failures << " of " << result.rows.size() << " videos failed\n";
    return 1;
  }
  return 0;
}

// ---------------------------------------------------------------- evaluate / ensemble

int cmd_evaluate(const std::string& predictions, const std::string& targets, std::ostream& out) {
  require(predictions, "predictions");
  require(targets, "targets");
  out << evaluate_files(predictions, targets).to_json() << '\n';
  return 0;
}

struct EnsembleArgs {
  std::vector<std::string> members;
  bool normalize = false;
  std::string fit;
  std::string output;
};

int cmd_ensemble(const EnsembleArgs& a, std::ostream& out) {
  if (a.members.empty()) fail(ErrorKind::config, "--member is required");
  std::vector<PredictionSet> sets;
  std::vector<double> weights;
  for (const auto& text : a.members) {
    const EnsembleMember m = parse_member(text);
    sets.push_back(read_predictions(m.path, "score"));
    weights.push_back(m.weight);
  }
  json report = json::object();
  if (!a.fit.empty()) {
    const EnsembleFit fit = fit_ensemble_weights(sets, read_predictions(a.fit), a.normalize);
    weights = fit.weights;
    report = {{"weights", fit.weights},
              {"rank", fit.rank},
              {"residual_norm", fit.residual_norm},
              {"fitted_srocc", fit.fitted_srocc},
              {"member_srocc", fit.member_srocc}};
  } else {
    report["weights"] = weights;
  }
  if (!a.output.empty()) {
    write_predictions(ensemble_predictions(sets, weights, a.normalize), a.output);
    report["output"] = a.output;
  }
  out << report.dump() << '\n';
  return 0;
}

// ---------------------------------------------------------------- caption-sim

struct CaptionArgs {
  std::string manifest;
  std::string train_manifest;
  std::string checkpoint;
  std::vector<std::string> exemplars;
  std::uint64_t icl_seed = 0;
  std::string cache;
  std::string output;
  std::size_t max_in_flight = 4;
  std::string video_root;
  int embedder_dim = 256;
  std::uint64_t embedder_seed = 0;
};

int cmd_caption_sim(const CaptionArgs& a, std::ostream& out) {
  require(a.manifest, "manifest");
  require(a.output, "output");
  std::vector<std::string> exemplars = a.exemplars;
  if (exemplars.empty() && !a.checkpoint.empty()) {
    const Checkpoint ck = load_checkpoint(a.checkpoint);
    exemplars = train_config_from_json(ck.config).caption.exemplars;
  }
  if (exemplars.empty() && !a.train_manifest.empty())
    exemplars = sample_icl_exemplars(
        load_manifest(a.train_manifest, SplitTag::train, optional_path(a.video_root)), a.icl_seed);
  if (exemplars.empty())
    fail(ErrorKind::config, "need --exemplar x5, --checkpoint or --train-manifest for ICL exemplars");

  const DatasetManifest manifest =
      load_manifest(a.manifest, SplitTag::test, optional_path(a.video_root));
  const std::string prompt = build_icl_prompt(exemplars, a.icl_seed);
  CaptionCache cache;
  if (!a.cache.empty() && std::filesystem::exists(a.cache)) cache = load_caption_cache(a.cache);
  const std::size_t cached_before = cache.size();

  ToyCaptioner captioner;
  ToySentenceEmbedder embedder(a.embedder_dim, a.embedder_seed);
  CaptionRunOptions options;
  options.max_in_flight = std::max<std::size_t>(1, a.max_in_flight);
  options.seed = a.icl_seed;
  const auto rows = run_caption_similarity(manifest, prompt, captioner, embedder, cache, options,
                                           load_record_frames);
  write_similarity_csv(rows, a.output);
  if (!a.cache.empty()) save_caption_cache(cache, a.cache);

  double mean = 0.0;
  for (const auto& r : rows) mean += r.score.normalized;
  if (!rows.empty()) mean /= static_cast<double>(rows.size());
  out << json{{"output", a.output},
              {"videos", rows.size()},
              {"newly_captioned", cache.size() - cached_before},
              {"mean_normalized", mean}}
             .dump()
      << '\n';
  return 0;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string output_dir;
  SyntheticOptions options;
  double val_fraction = 0.0;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  require(a.output_dir, "output-dir");
  const auto videos = make_synthetic_videos(a.options);
  const DatasetManifest all = write_synthetic_dataset(videos, a.output_dir);
  json report = {{"manifest", (std::filesystem::path(a.output_dir) / "manifest.csv").string()},
                 {"videos", all.size()}};
  if (a.val_fraction > 0) {
    auto [train_part, val_part] = split_manifest(all, a.val_fraction, a.options.seed);
    const auto dir = std::filesystem::path(a.output_dir);
    write_manifest(train_part, dir / "train.csv");
    write_manifest(val_part, dir / "val.csv");
    report["train"] = (dir / "train.csv").string();
    report["val"] = (dir / "val.csv").string();
  }
  out << report.dump() << '\n';
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Text-to-video quality assessment: training, prediction and evaluation", "aigcvqa"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "aigcvqa 0.1.0");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write its best checkpoint");
  add_train_options(train_cmd, train_args);
  train_cmd->add_option("--checkpoint", train_args.checkpoint, "Output checkpoint path")->required();
  train_cmd->add_option("--log", train_args.log, "JSON-lines training log");

  TrainArgs ablate_args;
  auto* ablate_cmd = app.add_subcommand("ablate", "Train and score every branch-ablation setting");
  add_train_options(ablate_cmd, ablate_args);
  ablate_cmd->add_option("--output", ablate_args.output, "CSV with one row per setting");

  PredictArgs predict_args;
  auto* predict_cmd = app.add_subcommand("predict", "Score every video of a manifest");
  OptionFile predict_file(predict_cmd);
  predict_file.option("checkpoint", predict_args.checkpoint, "Checkpoint to load");
  predict_file.option("manifest", predict_args.manifest, "Manifest CSV of videos to score");
  predict_file.option("output", predict_args.output, "Predictions CSV (video_name,score)");
  predict_file.option("bundle-log", predict_args.bundle_log, "JSON-lines per-branch scores");
  predict_file.option("captions", predict_args.captions,
                      "Caption similarity CSV; enables the caption branch");
  predict_file.option("video-root", predict_args.video_root, "Directory holding the videos");
  predict_file.option("workers", predict_args.workers, "Decode/prepare worker threads");
  predict_file.flag("deterministic", predict_args.deterministic, "Serial execution");
  predict_file.flag("caption-sim", predict_args.caption_sim, "Enable the caption branch");
  predict_file.option("branch-weights", predict_args.branch_weights,
                      "Five late-fusion weights (aesthetic technical explicit implicit caption)");

  std::string eval_predictions, eval_targets;
  auto* eval_cmd = app.add_subcommand("evaluate", "Compare predictions against MOS targets");
  OptionFile eval_file(eval_cmd);
  eval_file.option("predictions", eval_predictions, "Predictions CSV");
  eval_file.option("targets", eval_targets, "Targets CSV (score or mos column)");

  EnsembleArgs ens_args;
  auto* ens_cmd = app.add_subcommand("ensemble", "Weighted fusion of prediction files");
  OptionFile ens_file(ens_cmd);
  ens_file.option("member", ens_args.members, "Member predictions as path:weight (repeatable)");
  ens_file.flag("normalize", ens_args.normalize, "Z-score each member before fusing");
  ens_file.option("fit", ens_args.fit, "Fit weights by least squares against these targets");
  ens_file.option("output", ens_args.output, "Fused predictions CSV");

  CaptionArgs cap_args;
  auto* cap_cmd = app.add_subcommand("caption-sim", "Caption videos and score caption/prompt similarity");
  OptionFile cap_file(cap_cmd);
  cap_file.option("manifest", cap_args.manifest, "Manifest CSV of videos");
  cap_file.option("train-manifest", cap_args.train_manifest, "Source of ICL exemplar prompts");
  cap_file.option("checkpoint", cap_args.checkpoint, "Take ICL exemplars from this checkpoint");
  cap_file.option("exemplar", cap_args.exemplars, "ICL exemplar prompt (exactly 5)");
  cap_file.option("icl-seed", cap_args.icl_seed, "Seed for exemplar choice and order");
  cap_file.option("cache", cap_args.cache, "Caption cache CSV (read and extended)");
  cap_file.option("output", cap_args.output, "Similarity CSV (video_name,cosine,normalized)");
  cap_file.option("max-in-flight", cap_args.max_in_flight, "Concurrent captioner calls");
  cap_file.option("video-root", cap_args.video_root, "Directory holding the videos");
  cap_file.option("embedder-dim", cap_args.embedder_dim, "Sentence embedding width");
  cap_file.option("embedder-seed", cap_args.embedder_seed, "Sentence embedder hashing seed");

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "Write a procedural dataset with known quality");
  synth_cmd->add_option("--output-dir", synth_args.output_dir, "Destination directory")->required();
  synth_cmd->add_option("--count", synth_args.options.count, "Number of videos");
  synth_cmd->add_option("--frames", synth_args.options.frames, "Frames per video");
  synth_cmd->add_option("--height", synth_args.options.height, "Frame height");
  synth_cmd->add_option("--width", synth_args.options.width, "Frame width");
  synth_cmd->add_option("--seed", synth_args.options.seed, "Generator seed");
  synth_cmd->add_option("--mos-noise", synth_args.options.mos_noise, "MOS noise std");
  synth_cmd->add_option("--val-fraction", synth_args.val_fraction,
                        "Also write train.csv/val.csv with this validation share");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(train_args, out);
    if (ablate_cmd->parsed()) return cmd_ablate(ablate_args, out);
    if (predict_cmd->parsed()) {
      predict_file.apply();
      return cmd_predict(predict_args, out, err);
    }
    if (eval_cmd->parsed()) {
      eval_file.apply();
      return cmd_evaluate(eval_predictions, eval_targets, out);
    }
    if (ens_cmd->parsed()) {
      ens_file.apply();
      return cmd_ensemble(ens_args, out);
    }
    if (cap_cmd->parsed()) {
      cap_file.apply();
      return cmd_caption_sim(cap_args, out);
    }
    if (synth_cmd->parsed()) return cmd_synth(synth_args, out);
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace aigcvqa::cli
