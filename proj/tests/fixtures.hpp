// SPDX-License-Identifier: Apache-2.0
//
// Small configurations and in-memory synthetic datasets shared by the tests.

#pragma once

#include <map>
#include <memory>
#include <string>

#include "aigcvqa/config.hpp"
#include "aigcvqa/model.hpp"
#include "aigcvqa/synthetic.hpp"

namespace fixtures {

/// A config whose toy model trains in well under a second per epoch.
inline aigcvqa::TrainConfig small_config() {
  aigcvqa::TrainConfig c;
  c.frames = 4;
  c.side = 64;
  c.fragments.grid = 4;
  c.fragments.fragment_side = 16;
  for (auto* spec : {&c.model.aesthetic, &c.model.technical}) {
    spec->patch = 16;
    spec->channels = 16;
  }
  c.model.text.channels = 16;
  c.model.dual.channels = 16;
  c.model.width = 16;
  c.schedule.linear_probe_epochs = 2;
  c.schedule.finetune_epochs = 2;
  c.batch_size = 4;
  c.workers = 1;
  c.deterministic = true;
  return c;
}

/// Synthetic videos kept in memory, with a loader keyed by video_name.
struct MemoryDataset {
  std::vector<aigcvqa::SyntheticVideo> videos;
  aigcvqa::DatasetManifest manifest;
  std::shared_ptr<std::map<std::string, aigcvqa::FrameSequence>> frames =
      std::make_shared<std::map<std::string, aigcvqa::FrameSequence>>();

  aigcvqa::FrameLoader loader() const {
    return [f = frames](const aigcvqa::VideoRecord& r) { return f->at(r.video_name); };
  }
};

inline MemoryDataset memory_dataset(std::size_t count, std::uint64_t seed = 0,
                                    std::uint64_t first_id = 1000) {
  aigcvqa::SyntheticOptions o;
  o.count = count;
  o.seed = seed;
  o.first_id = first_id;
  MemoryDataset d;
  d.videos = aigcvqa::make_synthetic_videos(o);
  d.manifest = aigcvqa::to_manifest(d.videos, aigcvqa::SplitTag::train);
  for (const auto& v : d.videos) (*d.frames)[v.record.video_name] = v.frames;
  return d;
}

}  // namespace fixtures
