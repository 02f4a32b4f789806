// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <atomic>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "aigcvqa/caption_sim.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace aigcvqa;
using testutil::kind_of;

namespace {

/// Looks each text up in a fixed table.
class TableEmbedder final : public SentenceEmbedder {
 public:
  explicit TableEmbedder(std::map<std::string, Eigen::VectorXd> table) : table_(std::move(table)) {}
  std::string name() const override { return "table"; }
  Eigen::VectorXd embed(std::string_view text) const override { return table_.at(std::string(text)); }

 private:
  std::map<std::string, Eigen::VectorXd> table_;
};

/// Records peak concurrency and call count.
class CountingCaptioner final : public Captioner {
 public:
  std::string name() const override { return "counting"; }
  std::string caption(const FrameSequence& frames, const std::string&) const override {
    const int now = ++active_;
    int seen = peak_.load();
    while (now > seen && !peak_.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    ++calls_;
    --active_;
    return "frame level " + std::to_string(static_cast<int>(frames.front().rgb[0] * 10));
  }
  int peak() const { return peak_.load(); }
  int calls() const { return calls_.load(); }

 private:
  mutable std::atomic<int> active_{0}, peak_{0}, calls_{0};
};

const std::vector<std::string> kFive{"a red car", "a cat on a sofa", "two dogs running",
                                     "a sunset over the sea", "a robot dancing"};

DatasetManifest manifest_of(int n) {
  DatasetManifest m;
  for (int i = 0; i < n; ++i) {
    VideoRecord r;
    r.video_name = std::to_string(i) + "_" + std::to_string(i % 10) + ".mp4";
    r.prompt = kFive[static_cast<std::size_t>(i) % kFive.size()];
    r.video_id = static_cast<std::uint64_t>(i);
    m.records.push_back(r);
  }
  return m;
}

}  // namespace

TEST(IclPrompt, ContainsExemplarsAndIsDeterministic) {
  const std::string p = build_icl_prompt(kFive, 0);
  for (const auto& e : kFive) EXPECT_NE(p.find(e), std::string::npos) << e;
  EXPECT_NE(p.find("<video>"), std::string::npos);
  EXPECT_EQ(p, build_icl_prompt(kFive, 0));
}

TEST(IclPrompt, WrongCountsAreArgumentErrors) {
  const std::vector<std::string> four(kFive.begin(), kFive.end() - 1);
  EXPECT_EQ(kind_of([&] { build_icl_prompt(four, 0); }), ErrorKind::argument);
  std::vector<std::string> six = kFive;
  six.push_back("extra");
  EXPECT_EQ(kind_of([&] { build_icl_prompt(six, 0); }), ErrorKind::argument);
  std::vector<std::string> dup = kFive;
  dup[4] = dup[0];
  EXPECT_EQ(kind_of([&] { build_icl_prompt(dup, 0); }), ErrorKind::argument);
}

TEST(IclPrompt, SamplesFiveDistinctTrainingPrompts) {
  const auto ex = sample_icl_exemplars(manifest_of(12), 3);
  ASSERT_EQ(ex.size(), 5u);
  EXPECT_EQ(std::set<std::string>(ex.begin(), ex.end()).size(), 5u);
  EXPECT_EQ(ex, sample_icl_exemplars(manifest_of(12), 3));
  EXPECT_EQ(kind_of([] { sample_icl_exemplars(manifest_of(4), 0); }), ErrorKind::argument);
}

TEST(CaptionSimilarity, IdenticalOrthogonalAntipodal) {
  ToySentenceEmbedder toy;
  const auto same = caption_similarity("a red car on a road", "a red car on a road", toy);
  EXPECT_NEAR(same.cosine, 1.0, 1e-12);
  EXPECT_NEAR(same.normalized, 1.0, 1e-12);

  Eigen::VectorXd e0 = Eigen::VectorXd::Zero(3), e1 = Eigen::VectorXd::Zero(3);
  e0(0) = 1;
  e1(1) = 2;
  const TableEmbedder table({{"x", e0}, {"y", e1}, {"minus x", -3 * e0}, {"zero", Eigen::VectorXd::Zero(3)}});
  EXPECT_EQ(caption_similarity("x", "y", table).normalized, 0.5);
  EXPECT_EQ(caption_similarity("x", "minus x", table).normalized, 0.0);
  EXPECT_EQ(kind_of([&] { caption_similarity("x", "zero", table); }), ErrorKind::degenerate);
  EXPECT_EQ(kind_of([&] { caption_similarity("", "x", table); }), ErrorKind::input);
}

TEST(CaptionSimilarity, SymmetricAndNormalizedIsAffineInCosine) {
  ToySentenceEmbedder toy(64, 9);
  const std::vector<std::string> texts{"a cat", "a red cat jumping", "fast moving blue scene",
                                       "the quick brown fox", "a dog and a cat"};
  for (const auto& a : texts)
    for (const auto& b : texts) {
      const auto ab = caption_similarity(a, b, toy), ba = caption_similarity(b, a, toy);
      EXPECT_NEAR(ab.cosine, ba.cosine, 1e-12);
      EXPECT_NEAR(ab.normalized, (ab.cosine + 1) / 2, 1e-15);
      const Eigen::VectorXd x = toy.embed(a), y = toy.embed(b);
      double dot = 0;
      for (Eigen::Index i = 0; i < x.size(); ++i) dot += x(i) * y(i);
      EXPECT_NEAR(ab.cosine, dot, 1e-12);
    }
}

TEST(ToySentenceEmbedder, UnitNormSignedHashing) {
  ToySentenceEmbedder toy(32, 1);
  const Eigen::VectorXd v = toy.embed("Alpha alpha beta");
  EXPECT_NEAR(v.norm(), 1.0, 1e-12);
  Eigen::VectorXd expected = Eigen::VectorXd::Zero(32);
  for (const char* tok : {"alpha", "alpha", "beta"}) {
    const auto [i, s] = toy.bucket(tok);
    expected(i) += s;
  }
  EXPECT_LT((v - expected / expected.norm()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ToyCaptioner, DescribesFrameStatistics) {
  ToyCaptioner cap;
  FrameSequence dark{Frame(8, 8, 0.05), Frame(8, 8, 0.05)};
  EXPECT_EQ(cap.caption(dark, ""), "a dark gray scene, static, low contrast");
  FrameSequence red{Frame(4, 4, 0.0)};
  for (std::size_t i = 0; i < red[0].rgb.size(); i += 3) red[0].rgb[i] = 1.0;
  EXPECT_NE(cap.caption(red, "").find("red"), std::string::npos);
  EXPECT_EQ(kind_of([&] { cap.caption(FrameSequence{}, ""); }), ErrorKind::input);
}

TEST(CaptionRun, BoundedConcurrencyCacheReuseAndOrder) {
  const auto manifest = manifest_of(12);
  CountingCaptioner cap;
  ToySentenceEmbedder emb;
  CaptionCache cache;
  cache[manifest.records[3].video_name] = "cached caption";
  const auto load = [](const VideoRecord& r) {
    return FrameSequence{Frame(2, 2, static_cast<double>(r.video_id) / 10.0)};
  };
  const auto rows = run_caption_similarity(manifest, "prompt", cap, emb, cache, {3, 0}, load);
  EXPECT_LE(cap.peak(), 3);
  EXPECT_EQ(cap.calls(), 11);
  ASSERT_EQ(rows.size(), 12u);
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(rows[i].video_name, manifest.records[i].video_name);
  EXPECT_EQ(rows[3].caption, "cached caption");
  EXPECT_EQ(rows[5].caption, "frame level 5");
  EXPECT_EQ(cache.size(), 12u);

  run_caption_similarity(manifest, "prompt", cap, emb, cache, {3, 0}, load);
  EXPECT_EQ(cap.calls(), 11);  // everything served from the cache
}

TEST(CaptionFiles, RoundTrip) {
  const auto dir = oracle::temp_dir("caption_files");
  CaptionCache cache{{"1_0.mp4", "a cat, sitting"}, {"2_1.mp4", "say \"hi\""}};
  save_caption_cache(cache, dir / "cache.csv");
  EXPECT_EQ(load_caption_cache(dir / "cache.csv"), cache);

  const std::vector<CaptionSimRow> rows{{"1_0.mp4", "x", similarity_from_cosine(0.25)},
                                        {"2_1.mp4", "y", similarity_from_cosine(-1.0)}};
  write_similarity_csv(rows, dir / "sim.csv");
  const auto back = read_similarity_csv(dir / "sim.csv");
  EXPECT_NEAR(back.at("1_0.mp4").normalized, 0.625, 1e-6);
  EXPECT_NEAR(back.at("2_1.mp4").cosine, -1.0, 1e-6);
}
