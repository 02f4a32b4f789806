// SPDX-License-Identifier: Apache-2.0

#include "aigcvqa/model.hpp"

#include <algorithm>

#include "aigcvqa/error.hpp"
#include "aigcvqa/random.hpp"
#include "aigcvqa/sampling.hpp"

namespace aigcvqa {

namespace {

// Each module draws from its own stream, so toggling a branch never shifts
// the initial values of another.
Rng module_rng(std::uint64_t seed, std::string_view module) {
  return Rng(mix_seed(seed, fnv1a(module)));
}

// Selects the last row of `m` as a differentiable 1 x cols slice.
ad::Var last_row(const ad::Var& m) {
  Eigen::MatrixXd selector = Eigen::MatrixXd::Zero(1, m.rows());
  selector(0, m.rows() - 1) = 1.0;
  return ad::matmul(ad::constant(std::move(selector)), m);
}

}  // namespace

FrameSequence load_record_frames(const VideoRecord& record) {
  return decode_video(record.video_path);
}

const std::array<std::string, 3>& QualityModel::encoder_names() {
  static const std::array<std::string, 3> names{"aesthetic", "technical", "text"};
  return names;
}

QualityModel::QualityModel(const TrainConfig& config) : config_(config) {
  config_.validate();
  const ModelConfig& m = config_.model;
  auto& registry = EncoderRegistry::instance();
  aesthetic_ = registry.make_video(m.aesthetic);
  technical_ = registry.make_video(m.technical);
  text_ = registry.make_text(m.text);
  dual_ = registry.make_dual(m.dual);
  for (const auto& spec : m.text_pairs) text_pairs_.push_back(make_text_pair(spec, *dual_));

  const std::uint64_t seed = m.init_seed;
  const int d = m.width;
  const VideoEncoder& attended = m.explicit_tokens == "technical" ? *technical_ : *aesthetic_;
  {
    Rng rng = module_rng(seed, "pool.aesthetic");
    pool_aesthetic_ = AttentionParams::init(aesthetic_->channels(), aesthetic_->channels(), d,
                                            m.head_count, m.output_projection, rng);
  }
  {
    Rng rng = module_rng(seed, "pool.technical");
    pool_technical_ = AttentionParams::init(technical_->channels(), technical_->channels(), d,
                                            m.head_count, m.output_projection, rng);
  }
  {
    Rng rng = module_rng(seed, "cross_attention");
    cross_attention_ = AttentionParams::init(text_->channels(), attended.channels(), d,
                                             m.head_count, m.output_projection, rng);
  }
  {
    Rng rng = module_rng(seed, "head.aesthetic");
    head_aesthetic_ = ScoreHeadParams::init(d, 1, rng);
  }
  {
    Rng rng = module_rng(seed, "head.technical");
    head_technical_ = ScoreHeadParams::init(d, 1, rng);
  }
  {
    Rng rng = module_rng(seed, "head.explicit");
    head_explicit_ = ScoreHeadParams::init(d, 1, rng);
  }
  {
    Rng rng = module_rng(seed, "implicit");
    implicit_ = ImplicitScoreParams::init(dual_->dim(), rng);
  }
  {
    Rng rng = module_rng(seed, "classifier");
    classifier_ = ScoreHeadParams::init(d, kDomainCount, rng);
  }
}

PreparedSample QualityModel::prepare(const VideoRecord& record, const FrameSequence& frames,
                                     const PrepareOptions& options) const {
  if (frames.empty()) fail(ErrorKind::input, record.video_name + ": video has no frames");
  const FrameSequence sampled = sample_frames_uniform(frames, config_.frames);

  PreparedSample s;
  s.video_name = record.video_name;
  s.video_id = record.video_id;
  s.mos = record.mos;
  s.domain_label = record.domain_label;

  FrameStack resized = resize_frames(sampled, config_.side, record.video_id);
  normalize(resized, config_.normalization);
  s.aesthetic = aesthetic_->prepare(resized);

  FrameStack fragments = fragment_sample(sampled, config_.fragments.grid,
                                         config_.fragments.fragment_side, options.fragment_seed,
                                         record.video_id);
  normalize(fragments, config_.normalization);
  s.technical = technical_->prepare(fragments);

  s.prompt = text_->prepare(record.prompt);

  FrameStack cropped = center_crop_frames(sampled, config_.side, record.video_id);
  normalize(cropped, config_.normalization);
  const Eigen::MatrixXd feats = frame_features(cropped, *dual_);
  s.implicit_mean_feat = feats.colwise().mean();
  s.affinity0 = affinity_score(feats, text_pairs_[0]);
  s.affinity1 = affinity_score(feats, text_pairs_[1]);
  return s;
}

ModelOutput QualityModel::forward(const PreparedSample& sample) const {
  const ModelConfig& m = config_.model;
  ModelOutput out;
  std::vector<ad::Var> embeddings;

  const ad::Var tokens_a = aesthetic_->forward(sample.aesthetic);
  const ad::Var pooled_a = attention_pool(tokens_a, pool_aesthetic_).output;
  out.branch[static_cast<std::size_t>(Branch::aesthetic)] = score_head(pooled_a, head_aesthetic_);
  embeddings.push_back(pooled_a);

  const ad::Var tokens_t = technical_->forward(sample.technical);
  const ad::Var pooled_t = attention_pool(tokens_t, pool_technical_).output;
  out.branch[static_cast<std::size_t>(Branch::technical)] = score_head(pooled_t, head_technical_);
  embeddings.push_back(pooled_t);

  if (m.branches.explicit_prompt) {
    const ad::Var eot = last_row(text_->forward(sample.prompt));
    const ad::Var& visual = m.explicit_tokens == "technical" ? tokens_t : tokens_a;
    const ad::Var attended = text2video_cross_attention(eot, visual, cross_attention_).output;
    out.branch[static_cast<std::size_t>(Branch::explicit_prompt)] =
        score_head(attended, head_explicit_);
    embeddings.push_back(attended);
  }

  if (m.branches.implicit_text) {
    const ad::Var s_f = feature_score(ad::constant(sample.implicit_mean_feat), implicit_);
    out.branch[static_cast<std::size_t>(Branch::implicit_text)] =
        implicit_text_score(s_f, sample.affinity0, sample.affinity1, implicit_);
  }

  std::vector<ad::Var> scores;
  std::vector<double> weights;
  for (std::size_t b = 0; b < kBranchCount; ++b) {
    if (!out.branch[b].defined()) continue;
    scores.push_back(out.branch[b]);
    weights.push_back(m.branch_weights.values[b]);
  }
  out.prediction = ad::linear_combination(scores, weights);

  if (m.branches.aux_cls)
    out.logits = score_head(ad::mean_rows(ad::stack_rows(embeddings)), classifier_);
  return out;
}

ScoreBundle QualityModel::score(const PreparedSample& sample) const {
  const ModelOutput out = forward(sample);
  ScoreBundle bundle;
  for (std::size_t b = 0; b < kBranchCount; ++b)
    if (out.branch[b].defined()) bundle.branch[b] = out.branch[b].scalar();
  if (config_.model.branches.caption_sim) {
    if (!sample.caption_similarity)
      fail(ErrorKind::input, sample.video_name + ": caption similarity branch enabled but no score");
    bundle[Branch::caption_sim] = *sample.caption_similarity;
  }
  bundle.final_score = fuse_scores(bundle, config_.model.branch_weights);
  return bundle;
}

ParameterList QualityModel::encoder_parameters(const std::string& encoder) const {
  ParameterList out;
  if (encoder == "aesthetic")
    aesthetic_->collect_parameters(out, "encoder.aesthetic");
  else if (encoder == "technical")
    technical_->collect_parameters(out, "encoder.technical");
  else if (encoder == "text")
    text_->collect_parameters(out, "encoder.text");
  else
    fail(ErrorKind::argument, "unknown encoder '" + encoder + "'");
  return out;
}

ParameterList QualityModel::parameters() const {
  const BranchToggles& br = config_.model.branches;
  ParameterList out = encoder_parameters("aesthetic");
  const auto append = [&out](const ParameterList& more) {
    out.insert(out.end(), more.begin(), more.end());
  };
  append(encoder_parameters("technical"));
  if (br.explicit_prompt) append(encoder_parameters("text"));
  pool_aesthetic_.collect_parameters(out, "pool.aesthetic");
  pool_technical_.collect_parameters(out, "pool.technical");
  head_aesthetic_.collect_parameters(out, "head.aesthetic");
  head_technical_.collect_parameters(out, "head.technical");
  if (br.explicit_prompt) {
    cross_attention_.collect_parameters(out, "cross_attention");
    head_explicit_.collect_parameters(out, "head.explicit");
  }
  if (br.implicit_text) implicit_.collect_parameters(out, "implicit");
  if (br.aux_cls) classifier_.collect_parameters(out, "classifier");
  return out;
}

ParameterList QualityModel::all_parameters() const {
  ParameterList out = encoder_parameters("aesthetic");
  const auto append = [&out](const ParameterList& more) {
    out.insert(out.end(), more.begin(), more.end());
  };
  append(encoder_parameters("technical"));
  append(encoder_parameters("text"));
  pool_aesthetic_.collect_parameters(out, "pool.aesthetic");
  pool_technical_.collect_parameters(out, "pool.technical");
  head_aesthetic_.collect_parameters(out, "head.aesthetic");
  head_technical_.collect_parameters(out, "head.technical");
  cross_attention_.collect_parameters(out, "cross_attention");
  head_explicit_.collect_parameters(out, "head.explicit");
  implicit_.collect_parameters(out, "implicit");
  classifier_.collect_parameters(out, "classifier");
  return out;
}

void QualityModel::set_encoder_trainable(const std::string& encoder, bool trainable) {
  for (auto& p : encoder_parameters(encoder)) p.var.set_requires_grad(trainable);
}

bool QualityModel::encoder_trainable(const std::string& encoder) const {
  const ParameterList params = encoder_parameters(encoder);
  return std::all_of(params.begin(), params.end(),
                     [](const NamedParameter& p) { return p.var.requires_grad(); });
}

std::vector<NamedTensor> QualityModel::state() const {
  std::vector<NamedTensor> out;
  for (const auto& p : all_parameters()) out.push_back({p.name, p.var.value()});
  return out;
}

void QualityModel::load_state(const std::vector<NamedTensor>& tensors) {
  for (auto& p : all_parameters()) {
    const auto it = std::find_if(tensors.begin(), tensors.end(),
                                 [&p](const NamedTensor& t) { return t.name == p.name; });
    if (it == tensors.end()) fail(ErrorKind::config, "checkpoint lacks tensor " + p.name);
    if (it->value.rows() != p.var.rows() || it->value.cols() != p.var.cols())
      fail(ErrorKind::config, "checkpoint tensor " + p.name + " has the wrong shape");
    p.var.mutable_value() = it->value;
  }
}

Checkpoint make_checkpoint(const QualityModel& model, int epoch, const std::string& rng_state,
                           const nlohmann::json& metrics) {
  Checkpoint ck;
  ck.config = to_json(model.config());
  ck.epoch = epoch;
  ck.rng_state = rng_state;
  ck.metrics = metrics;
  ck.tensors = model.state();
  return ck;
}

QualityModel model_from_checkpoint(const Checkpoint& checkpoint) {
  QualityModel model(train_config_from_json(checkpoint.config));
  model.load_state(checkpoint.tensors);
  return model;
}

}  // namespace aigcvqa
