// SPDX-License-Identifier: Apache-2.0

#include "aigcvqa/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "aigcvqa/error.hpp"

namespace aigcvqa {

namespace {

using nlohmann::json;

const std::vector<std::string> kEncoderNames{"aesthetic", "technical", "text"};

// Reads keys out of one JSON object and rejects any it did not consume.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(ErrorKind::config, path_ + ": expected a JSON object");
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    used_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      fail(ErrorKind::config, path_ + "." + key + ": " + e.what());
    }
  }

  const json* child(const std::string& key) {
    used_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string path(const std::string& key) const { return path_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!used_.contains(key)) fail(ErrorKind::config, path_ + ": unknown key '" + key + "'");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

json encoder_to_json(const EncoderSpec& s) {
  return {{"kind", s.kind}, {"seed", s.seed}, {"channels", s.channels}, {"patch", s.patch}};
}

void encoder_from_json(const json& j, const std::string& path, EncoderSpec& s) {
  ObjectReader r(j, path);
  r.get("kind", s.kind);
  r.get("seed", s.seed);
  r.get("channels", s.channels);
  r.get("patch", s.patch);
  r.finish();
}

}  // namespace

int ScheduleConfig::linear_probe_for(const std::string& encoder) const {
  const auto it = linear_probe_overrides.find(encoder);
  return it == linear_probe_overrides.end() ? linear_probe_epochs : it->second;
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) fail(ErrorKind::config, msg);
  };
  require(frames >= 1, "frames must be >= 1");
  require(side >= 1, "side must be >= 1");
  require(fragments.grid >= 1 && fragments.fragment_side >= 1, "fragment grid/side must be >= 1");
  for (const auto* spec : {&model.aesthetic, &model.technical})
    require(spec->patch >= 1 && spec->channels >= 1, "video encoder patch/channels must be >= 1");
  require(side % model.aesthetic.patch == 0, "aesthetic patch must divide the resize side");
  require((fragments.grid * fragments.fragment_side) % model.technical.patch == 0,
          "technical patch must divide grid * fragment_side");
  require(model.text.channels >= 1 && model.dual.channels >= 1, "text/dual channels must be >= 1");
  require(model.width >= 2, "fusion width must be >= 2");
  require(model.head_count >= 1 && model.width % model.head_count == 0,
          "fusion width must be divisible by head_count");
  require(model.explicit_tokens == "aesthetic" || model.explicit_tokens == "technical",
          "explicit_tokens must be 'aesthetic' or 'technical'");
  require(model.text_pairs.size() == 2, "implicit text guidance needs exactly two text pairs");
  for (const auto& p : model.text_pairs)
    require(!p.positive.empty() && !p.negative.empty(), "text pair entries must be non-empty");
  for (double w : model.branch_weights.values) require(std::isfinite(w), "branch weights must be finite");
  for (int c = 0; c < 3; ++c)
    require(normalization.stddev[static_cast<std::size_t>(c)] > 0, "normalization std must be positive");
  require(loss.alpha >= 0 && loss.beta >= 0, "loss weights alpha/beta must be >= 0");
  require(optimizer.lr_backbone > 0 && optimizer.lr_heads > 0, "learning rates must be > 0");
  require(optimizer.weight_decay >= 0, "weight_decay must be >= 0");
  require(optimizer.beta1 >= 0 && optimizer.beta1 < 1 && optimizer.beta2 >= 0 && optimizer.beta2 < 1,
          "Adam betas must lie in [0, 1)");
  require(optimizer.eps > 0, "Adam eps must be > 0");
  require(schedule.linear_probe_epochs >= 0 && schedule.finetune_epochs >= 0,
          "epoch counts must be >= 0");
  require(schedule.total_epochs() >= 1, "at least one training epoch required");
  for (const auto& [name, epochs] : schedule.linear_probe_overrides) {
    require(std::find(kEncoderNames.begin(), kEncoderNames.end(), name) != kEncoderNames.end(),
            "unknown encoder '" + name + "' in linear_probe_overrides");
    require(epochs >= 0, "linear_probe_overrides must be >= 0");
  }
  require(batch_size >= 2, "batch_size must be >= 2 for correlation losses");
  require(caption.embedder_dim >= 1, "caption embedder_dim must be >= 1");
  require(caption.exemplars.empty() || caption.exemplars.size() == 5,
          "caption exemplars must be empty or exactly 5");
}

nlohmann::json to_json(const TrainConfig& c) {
  json pairs = json::array();
  for (const auto& p : c.model.text_pairs) pairs.push_back({{"positive", p.positive}, {"negative", p.negative}});
  json model = {
      {"aesthetic", encoder_to_json(c.model.aesthetic)},
      {"technical", encoder_to_json(c.model.technical)},
      {"text", encoder_to_json(c.model.text)},
      {"dual", encoder_to_json(c.model.dual)},
      {"width", c.model.width},
      {"head_count", c.model.head_count},
      {"output_projection", c.model.output_projection},
      {"explicit_tokens", c.model.explicit_tokens},
      {"branches",
       {{"explicit_prompt", c.model.branches.explicit_prompt},
        {"implicit_text", c.model.branches.implicit_text},
        {"aux_cls", c.model.branches.aux_cls},
        {"caption_sim", c.model.branches.caption_sim}}},
      {"branch_weights", c.model.branch_weights.values},
      {"text_pairs", pairs},
      {"init_seed", c.model.init_seed},
  };
  return {
      {"model", model},
      {"frames", c.frames},
      {"side", c.side},
      {"normalization", {{"mean", c.normalization.mean}, {"std", c.normalization.stddev}}},
      {"fragments",
       {{"grid", c.fragments.grid},
        {"fragment_side", c.fragments.fragment_side},
        {"epoch_varying", c.fragments.epoch_varying}}},
      {"loss", {{"alpha", c.loss.alpha}, {"beta", c.loss.beta}, {"rank_margin", c.loss.rank_margin}}},
      {"optimizer",
       {{"lr_backbone", c.optimizer.lr_backbone},
        {"lr_heads", c.optimizer.lr_heads},
        {"weight_decay", c.optimizer.weight_decay},
        {"beta1", c.optimizer.beta1},
        {"beta2", c.optimizer.beta2},
        {"eps", c.optimizer.eps},
        {"grad_clip", c.optimizer.grad_clip}}},
      {"schedule",
       {{"linear_probe_epochs", c.schedule.linear_probe_epochs},
        {"finetune_epochs", c.schedule.finetune_epochs},
        {"linear_probe_overrides", c.schedule.linear_probe_overrides}}},
      {"batch_size", c.batch_size},
      {"seed", c.seed},
      {"workers", c.workers},
      {"deterministic", c.deterministic},
      {"caption",
       {{"max_in_flight", c.caption.max_in_flight},
        {"icl_seed", c.caption.icl_seed},
        {"embedder_dim", c.caption.embedder_dim},
        {"exemplars", c.caption.exemplars}}},
  };
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  ObjectReader top(j, "config");
  if (const json* m = top.child("model")) {
    ObjectReader r(*m, top.path("model"));
    if (const json* e = r.child("aesthetic")) encoder_from_json(*e, r.path("aesthetic"), c.model.aesthetic);
    if (const json* e = r.child("technical")) encoder_from_json(*e, r.path("technical"), c.model.technical);
    if (const json* e = r.child("text")) encoder_from_json(*e, r.path("text"), c.model.text);
    if (const json* e = r.child("dual")) encoder_from_json(*e, r.path("dual"), c.model.dual);
    r.get("width", c.model.width);
    r.get("head_count", c.model.head_count);
    r.get("output_projection", c.model.output_projection);
    r.get("explicit_tokens", c.model.explicit_tokens);
    if (const json* b = r.child("branches")) {
      ObjectReader br(*b, r.path("branches"));
      br.get("explicit_prompt", c.model.branches.explicit_prompt);
      br.get("implicit_text", c.model.branches.implicit_text);
      br.get("aux_cls", c.model.branches.aux_cls);
      br.get("caption_sim", c.model.branches.caption_sim);
      br.finish();
    }
    r.get("branch_weights", c.model.branch_weights.values);
    if (const json* pairs = r.child("text_pairs")) {
      if (!pairs->is_array()) fail(ErrorKind::config, r.path("text_pairs") + ": expected an array");
      c.model.text_pairs.clear();
      for (const auto& p : *pairs) {
        ObjectReader pr(p, r.path("text_pairs[]"));
        TextPairSpec spec;
        pr.get("positive", spec.positive);
        pr.get("negative", spec.negative);
        pr.finish();
        c.model.text_pairs.push_back(spec);
      }
    }
    r.get("init_seed", c.model.init_seed);
    r.finish();
  }
  top.get("frames", c.frames);
  top.get("side", c.side);
  if (const json* n = top.child("normalization")) {
    ObjectReader r(*n, top.path("normalization"));
    r.get("mean", c.normalization.mean);
    r.get("std", c.normalization.stddev);
    r.finish();
  }
  if (const json* f = top.child("fragments")) {
    ObjectReader r(*f, top.path("fragments"));
    r.get("grid", c.fragments.grid);
    r.get("fragment_side", c.fragments.fragment_side);
    r.get("epoch_varying", c.fragments.epoch_varying);
    r.finish();
  }
  if (const json* l = top.child("loss")) {
    ObjectReader r(*l, top.path("loss"));
    r.get("alpha", c.loss.alpha);
    r.get("beta", c.loss.beta);
    r.get("rank_margin", c.loss.rank_margin);
    r.finish();
  }
  if (const json* o = top.child("optimizer")) {
    ObjectReader r(*o, top.path("optimizer"));
    r.get("lr_backbone", c.optimizer.lr_backbone);
    r.get("lr_heads", c.optimizer.lr_heads);
    r.get("weight_decay", c.optimizer.weight_decay);
    r.get("beta1", c.optimizer.beta1);
    r.get("beta2", c.optimizer.beta2);
    r.get("eps", c.optimizer.eps);
    r.get("grad_clip", c.optimizer.grad_clip);
    r.finish();
  }
  if (const json* s = top.child("schedule")) {
    ObjectReader r(*s, top.path("schedule"));
    r.get("linear_probe_epochs", c.schedule.linear_probe_epochs);
    r.get("finetune_epochs", c.schedule.finetune_epochs);
    r.get("linear_probe_overrides", c.schedule.linear_probe_overrides);
    int total = -1;
    r.get("epochs", total);
    r.finish();
    if (total >= 0 && total != c.schedule.total_epochs())
      fail(ErrorKind::config, "schedule.epochs must equal linear_probe_epochs + finetune_epochs");
  }
  top.get("batch_size", c.batch_size);
  top.get("seed", c.seed);
  top.get("workers", c.workers);
  top.get("deterministic", c.deterministic);
  if (const json* cap = top.child("caption")) {
    ObjectReader r(*cap, top.path("caption"));
    r.get("max_in_flight", c.caption.max_in_flight);
    r.get("icl_seed", c.caption.icl_seed);
    r.get("embedder_dim", c.caption.embedder_dim);
    r.get("exemplars", c.caption.exemplars);
    r.finish();
  }
  top.finish();
  c.validate();
  return c;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorKind::config, path.string() + ": invalid JSON: " + e.what());
  }
  return train_config_from_json(j);
}

void save_train_config(const TrainConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  out << to_json(config).dump(2) << '\n';
}

}  // namespace aigcvqa
