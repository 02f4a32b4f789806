// SPDX-License-Identifier: Apache-2.0

#include "aigcvqa/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "aigcvqa/error.hpp"
#include "aigcvqa/optimizer.hpp"
#include "aigcvqa/parallel.hpp"

namespace aigcvqa {

namespace {

using nlohmann::json;

bool distinct_targets(const std::vector<std::size_t>& batch, std::span<const double> mos) {
  for (std::size_t i = 1; i < batch.size(); ++i)
    if (mos[batch[i]] != mos[batch[0]]) return true;
  return false;
}

json report_json(const EvalReport& r) {
  return {{"plcc", r.plcc}, {"srocc", r.srocc}, {"main_score", r.main_score}, {"n", r.n}};
}

// Correlations are undefined for constant predictions; an untrained model can
// produce them, which should read as "no agreement" rather than abort a run.
EvalReport safe_evaluate(std::span<const double> pred, std::span<const double> target) {
  try {
    return evaluate(pred, target);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::degenerate) throw;
    EvalReport r;
    r.n = pred.size();
    return r;
  }
}

EvalReport score_samples(const QualityModel& model, const std::vector<PreparedSample>& samples) {
  std::vector<double> pred, target;
  for (const auto& s : samples) {
    pred.push_back(model.forward(s).prediction.scalar());
    target.push_back(*s.mos);
  }
  return safe_evaluate(pred, target);
}

}  // namespace

std::vector<std::vector<std::size_t>> make_batches(std::span<const double> mos, int batch_size,
                                                   Rng& rng) {
  if (batch_size < 2) fail(ErrorKind::argument, "batch_size must be >= 2");
  if (mos.size() < 2) fail(ErrorKind::degenerate, "need at least two training videos");
  std::vector<std::size_t> order(mos.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);

  std::vector<std::vector<std::size_t>> batches;
  const auto size = static_cast<std::size_t>(batch_size);
  for (std::size_t start = 0; start < order.size(); start += size)
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + size)));
  if (batches.size() > 1 && batches.back().size() == 1) {
    batches[batches.size() - 2].push_back(batches.back().front());
    batches.pop_back();
  }

  for (std::size_t b = 0; b < batches.size(); ++b) {
    if (distinct_targets(batches[b], mos)) continue;
    bool fixed = false;
    for (std::size_t o = 0; o < batches.size() && !fixed; ++o) {
      if (o == b) continue;
      for (std::size_t j = 0; j < batches[o].size() && !fixed; ++j) {
        std::swap(batches[b][0], batches[o][j]);
        if (distinct_targets(batches[b], mos) && distinct_targets(batches[o], mos)) {
          fixed = true;
        } else {
          std::swap(batches[b][0], batches[o][j]);
        }
      }
    }
    if (!fixed)
      fail(ErrorKind::degenerate, "cannot build a batch with two distinct MOS values");
  }
  return batches;
}

TrainConfig with_caption_exemplars(TrainConfig config, const DatasetManifest& train_set) {
  if (!config.caption.exemplars.empty()) return config;
  std::set<std::string> distinct;
  for (const auto& r : train_set.records) distinct.insert(r.prompt);
  if (distinct.size() >= kIclShots)
    config.caption.exemplars = sample_icl_exemplars(train_set, config.caption.icl_seed);
  return config;
}

TrainResult train(const TrainConfig& config, const DatasetManifest& train_set,
                  const DatasetManifest* val_set, const TrainOptions& options) {
  config.validate();
  if (train_set.size() < 2) fail(ErrorKind::schema, "training manifest needs at least two videos");
  if (!train_set.has_mos()) fail(ErrorKind::schema, "training manifest is missing mos values");
  if (!train_set.has_domain_labels())
    fail(ErrorKind::schema, "training manifest is missing generator labels");

  QualityModel model(config);
  const std::size_t workers = config.effective_workers();
  const auto prepare_set = [&](const DatasetManifest& m, std::optional<int> epoch) {
    return parallel_map<PreparedSample>(m.size(), workers, [&](std::size_t i) {
      const VideoRecord& r = m.records[i];
      PrepareOptions po;
      if (epoch) {
        std::uint64_t seed = video_seed(config.seed, r.video_id);
        if (config.fragments.epoch_varying) seed = mix_seed(seed, static_cast<std::uint64_t>(*epoch));
        po.fragment_seed = seed;
      }
      return model.prepare(r, options.load_frames(r), po);
    });
  };

  std::vector<PreparedSample> train_samples = prepare_set(train_set, 0);
  const bool score_val = val_set && val_set->size() >= 2 && val_set->has_mos();
  std::vector<PreparedSample> val_samples;
  if (score_val) val_samples = prepare_set(*val_set, std::nullopt);
  std::vector<PreparedSample> train_eval_samples;
  if (options.evaluate_train) train_eval_samples = prepare_set(train_set, std::nullopt);

  std::vector<double> mos;
  for (const auto& s : train_samples) mos.push_back(*s.mos);

  AdamW optimizer(model.parameters(), config.optimizer);
  Rng rng(config.seed);
  TrainResult result;
  double best_score = -std::numeric_limits<double>::infinity();
  long step = 0;

  for (int epoch = 0; epoch < config.schedule.total_epochs(); ++epoch) {
    if (epoch > 0 && config.fragments.epoch_varying) train_samples = prepare_set(train_set, epoch);
    for (const auto& name : QualityModel::encoder_names())
      model.set_encoder_trainable(name, epoch >= config.schedule.linear_probe_for(name));
    const int phase = epoch < config.schedule.linear_probe_epochs ? 1 : 2;

    double loss_sum = 0.0;
    std::size_t trained_batches = 0;
    const auto batches = make_batches(mos, config.batch_size, rng);
    for (const auto& batch : batches) {
      std::vector<ModelOutput> outputs;
      std::vector<ad::Var> preds, logits;
      Eigen::VectorXd target(static_cast<Eigen::Index>(batch.size()));
      std::vector<int> labels;
      for (std::size_t k = 0; k < batch.size(); ++k) {
        const PreparedSample& s = train_samples[batch[k]];
        outputs.push_back(model.forward(s));
        preds.push_back(outputs.back().prediction);
        if (outputs.back().logits.defined()) logits.push_back(outputs.back().logits);
        target(static_cast<Eigen::Index>(k)) = *s.mos;
        labels.push_back(*s.domain_label);
      }
      const ad::Var pred_batch = ad::stack_rows(preds);
      const ad::Var logit_batch = logits.empty() ? ad::Var() : ad::stack_rows(logits);
      ++step;
      if (!pred_batch.value().allFinite() || (logit_batch.defined() && !logit_batch.value().allFinite()))
        fail(ErrorKind::divergence, "non-finite model output at step " + std::to_string(step) +
                                        " (epoch " + std::to_string(epoch + 1) + ")");
      CombinedLoss loss;
      try {
        loss = combined_loss(pred_batch, target, logit_batch, labels, config.loss);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::degenerate) throw;
        // A batch without spread carries no correlation signal; skip it.
        if (options.log)
          *options.log << json{{"event", "skip"}, {"step", step}, {"epoch", epoch + 1}, {"reason", e.what()}}
                              .dump()
                       << '\n';
        continue;
      }
      if (options.extra_loss) {
        std::vector<PreparedSample> members;
        for (std::size_t idx : batch) members.push_back(train_samples[idx]);
        const ad::Var extra = options.extra_loss(members, outputs);
        loss.total = ad::add(loss.total, extra);
        loss.parts.total += extra.scalar();
      }
      if (!std::isfinite(loss.parts.total))
        fail(ErrorKind::divergence, "non-finite loss at step " + std::to_string(step) +
                                        " (epoch " + std::to_string(epoch + 1) + ")");
      optimizer.zero_grad();
      ad::backward(loss.total);
      optimizer.step();

      loss_sum += loss.parts.total;
      ++trained_batches;
      result.steps.push_back({step, epoch, loss.parts});
      if (options.log) {
        *options.log << json{{"event", "step"},       {"step", step},
                             {"epoch", epoch + 1},     {"L_plcc", loss.parts.plcc},
                             {"L_rank", loss.parts.rank}, {"L_cls", loss.parts.cls},
                             {"total", loss.parts.total}}
                            .dump()
                     << '\n';
      }
    }

    EpochSummary summary;
    summary.epoch = epoch;
    summary.phase = phase;
    summary.mean_loss = loss_sum / static_cast<double>(std::max<std::size_t>(1, trained_batches));
    if (options.evaluate_train) summary.train = score_samples(model, train_eval_samples);
    if (score_val) summary.val = score_samples(model, val_samples);

    json metrics = {{"epoch", epoch + 1}, {"phase", phase}, {"mean_loss", summary.mean_loss}};
    if (summary.train) metrics["train"] = report_json(*summary.train);
    if (summary.val) metrics["val"] = report_json(*summary.val);
    if (options.log) {
      json line = metrics;
      line["event"] = "epoch";
      *options.log << line.dump() << '\n';
    }

    const bool last = epoch + 1 == config.schedule.total_epochs();
    if (summary.val ? summary.val->main_score > best_score : last) {
      if (summary.val) best_score = summary.val->main_score;
      result.best = make_checkpoint(model, epoch + 1, rng.state(), metrics);
      result.best_epoch = epoch;
    }
    result.epochs.push_back(std::move(summary));
    if (options.on_epoch_end) options.on_epoch_end(epoch, model);
  }
  return result;
}

PredictionSet PredictResult::predictions() const {
  PredictionSet out;
  for (const auto& row : rows) {
    if (!row.bundle) continue;
    out.names.push_back(row.video_name);
    out.scores.push_back(row.bundle->final_score);
  }
  return out;
}

nlohmann::json bundle_to_json(const std::string& video_name, const ScoreBundle& bundle) {
  json j = {{"video_name", video_name}};
  for (std::size_t b = 0; b < kBranchCount; ++b) {
    const std::string key(to_string(static_cast<Branch>(b)));
    j[key] = bundle.branch[b] ? json(*bundle.branch[b]) : json(nullptr);
  }
  j["final_score"] = bundle.final_score;
  return j;
}

PredictResult predict(const QualityModel& model, const DatasetManifest& manifest,
                      const PredictOptions& options) {
  const bool use_captions = model.config().model.branches.caption_sim;
  if (use_captions && !options.caption_scores)
    fail(ErrorKind::config, "caption similarity branch enabled but no similarity scores given");

  struct Prepared {
    std::optional<PreparedSample> sample;
    std::string error;
  };
  auto prepared = parallel_map<Prepared>(manifest.size(), options.workers, [&](std::size_t i) {
    const VideoRecord& r = manifest.records[i];
    Prepared p;
    try {
      p.sample = model.prepare(r, options.load_frames(r));
      if (use_captions) {
        const auto it = options.caption_scores->find(r.video_name);
        if (it == options.caption_scores->end())
          fail(ErrorKind::input, "no caption similarity for " + r.video_name);
        p.sample->caption_similarity = it->second.normalized;
      }
    } catch (const std::exception& e) {
      p.sample.reset();
      p.error = e.what();
    }
    return p;
  });

  PredictResult result;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    PredictRow row;
    row.video_name = manifest.records[i].video_name;
    if (prepared[i].sample) {
      try {
        row.bundle = model.score(*prepared[i].sample);
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    } else {
      row.error = prepared[i].error;
    }
    if (!row.bundle) ++result.failures;
    if (row.bundle && options.bundle_log)
      *options.bundle_log << bundle_to_json(row.video_name, *row.bundle).dump() << '\n';
    result.rows.push_back(std::move(row));
  }
  return result;
}

EvalReport evaluate_predictions(const PredictionSet& predictions, const PredictionSet& targets) {
  const std::vector<double> aligned = align_to(targets, predictions, "predictions");
  return evaluate(aligned, targets.scores);
}

EvalReport evaluate_files(const std::filesystem::path& predictions,
                          const std::filesystem::path& targets) {
  return evaluate_predictions(read_predictions(predictions, "score"), read_predictions(targets));
}

std::vector<AblationSetting> ablation_ladder() {
  const auto toggles = [](bool ep, bool it, bool ac) {
    BranchToggles t;
    t.explicit_prompt = ep;
    t.implicit_text = it;
    t.aux_cls = ac;
    t.caption_sim = false;
    return t;
  };
  return {{"baseline", toggles(false, false, false)}, {"+EP", toggles(true, false, false)},
          {"+IT", toggles(false, true, false)},       {"+EP+IT", toggles(true, true, false)},
          {"+EP+AC", toggles(true, false, true)},     {"+EP+IT+AC", toggles(true, true, true)}};
}

std::vector<AblationRow> run_ablation(const TrainConfig& base, const DatasetManifest& train_set,
                                      const DatasetManifest& val_set,
                                      const TrainOptions& options) {
  if (!val_set.has_mos()) fail(ErrorKind::schema, "ablation validation manifest needs mos");
  std::vector<AblationRow> rows;
  for (const auto& setting : ablation_ladder()) {
    TrainConfig config = base;
    config.model.branches = setting.toggles;
    const TrainResult trained = train(config, train_set, &val_set, options);
    const QualityModel model = model_from_checkpoint(trained.best);
    PredictOptions po;
    po.load_frames = options.load_frames;
    po.workers = config.effective_workers();
    const PredictResult predicted = predict(model, val_set, po);
    if (predicted.failures > 0)
      fail(ErrorKind::input, "ablation row " + setting.name + ": prediction failed for " +
                                 std::to_string(predicted.failures) + " videos");
    std::vector<double> targets;
    for (const auto& r : val_set.records) targets.push_back(*r.mos);
    rows.push_back({setting, safe_evaluate(predicted.predictions().scores, targets)});
  }
  return rows;
}

}  // namespace aigcvqa
