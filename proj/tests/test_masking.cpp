#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "ctal/masking.hpp"

using namespace ctal;

namespace {

// 3-sigma binomial band around the expected count.
bool within_3sigma(long observed, long n, double p) {
  const double mean = n * p;
  const double sigma = std::sqrt(n * p * (1.0 - p));
  return std::abs(observed - mean) <= 3.0 * sigma;
}

std::vector<int> wrapped_tokens(int body, int base = 10) {
  std::vector<int> ids;
  ids.push_back(Specials::kBos);
  for (int i = 0; i < body; ++i) ids.push_back(base + (i % 50));
  ids.push_back(Specials::kEos);
  return ids;
}

}  // namespace

TEST_CASE("collate pads ids with <pad> and audio with zero rows, masks mark real data") {
  std::vector<std::vector<int>> ids = {{0, 5, 1}, {0, 6, 7, 8, 1}};
  std::vector<MatX<float>> feats = {MatX<float>::Constant(4, 3, 1.f),
                                    MatX<float>::Constant(2, 3, 2.f)};
  auto b = PairBatch::collate(ids, feats);
  CHECK(b.text_len == 5);
  CHECK(b.audio_len == 4);
  CHECK(b.token_ids[0][3] == Specials::kPad);
  CHECK(b.token_ids[0][4] == Specials::kPad);
  CHECK(b.text_mask[0] == std::vector<uint8_t>({1, 1, 1, 0, 0}));
  CHECK(b.audio_mask[1] == std::vector<uint8_t>({1, 1, 0, 0}));
  CHECK(b.audio[1].row(3).cwiseAbs().maxCoeff() == 0.f);
}

TEST_CASE("mlm: bare specials give an empty plan") {
  Rng rng(1);
  auto plan = plan_mlm({Specials::kBos, Specials::kEos}, 300, rng);
  CHECK(plan.empty());
}

TEST_CASE("mlm: selection and action statistics sit inside binomial 3-sigma bands") {
  const int body = 20000;
  auto ids = wrapped_tokens(body);
  Rng rng(7);
  auto plan = plan_mlm(ids, 300, rng);

  CHECK(within_3sigma(static_cast<long>(plan.items.size()), body, 0.15));
  long masked = 0, randomized = 0, kept = 0;
  for (const auto& it : plan.items) {
    CHECK(it.pos >= 1);
    CHECK(it.pos <= body);  // specials at 0 and body+1 never selected
    switch (it.action) {
      case MlmPlan::Action::MaskToken: ++masked; break;
      case MlmPlan::Action::RandomToken:
        ++randomized;
        CHECK(it.replacement_id >= Specials::kByteBase);
        CHECK(it.replacement_id < 300);
        break;
      case MlmPlan::Action::Keep: ++kept; break;
    }
  }
  const long n = static_cast<long>(plan.items.size());
  CHECK(within_3sigma(masked, n, 0.80));
  CHECK(within_3sigma(randomized, n, 0.10));
  CHECK(within_3sigma(kept, n, 0.10));
}

TEST_CASE("mlm: plans are re-sampled per visit") {
  auto ids = wrapped_tokens(200);
  Rng r1(100), r2(101);
  auto p1 = plan_mlm(ids, 300, r1);
  auto p2 = plan_mlm(ids, 300, r2);
  std::set<int> s1, s2;
  for (auto& it : p1.items) s1.insert(it.pos);
  for (auto& it : p2.items) s2.insert(it.pos);
  CHECK(s1 != s2);
}

TEST_CASE("mcam: short utterance forms one tail segment and the min-1 rule selects it") {
  Rng rng(3);
  auto plan = plan_mcam(10, rng);
  REQUIRE(plan.segments.size() == 1);
  CHECK(plan.segments[0].begin == 0);
  CHECK(plan.segments[0].end == 10);
  REQUIRE(plan.selected.size() == 1);
  auto frames = plan.masked_frames();
  CHECK(frames.size() == 10);
}

TEST_CASE("mcam: segment lengths, mean length, selection rate, action split") {
  McamOptions opt;
  long drawn_total = 0, drawn_count = 0;
  long segments_total = 0, selected_total = 0;
  long zeros = 0, replaces = 0, keeps = 0;
  for (int trial = 0; trial < 60; ++trial) {
    Rng rng(1000 + trial);
    auto plan = plan_mcam(10000, rng, opt);
    for (size_t s = 0; s < plan.segments.size(); ++s) {
      const int len = plan.segments[s].end - plan.segments[s].begin;
      if (s + 1 < plan.segments.size()) {
        CHECK(len >= 20);
        CHECK(len <= 50);
        drawn_total += len;
        ++drawn_count;
      } else {
        CHECK(len <= 50);  // tail may fall short of the minimum
      }
    }
    segments_total += static_cast<long>(plan.segments.size());
    selected_total += static_cast<long>(plan.selected.size());
    for (const auto& sel : plan.selected) {
      switch (sel.action) {
        case McamPlan::Action::Zero: ++zeros; break;
        case McamPlan::Action::Replace: {
          ++replaces;
          const auto& seg = plan.segments[sel.segment];
          CHECK(sel.replacement_frames.size() == static_cast<size_t>(seg.end - seg.begin));
          for (int f : sel.replacement_frames) {
            CHECK(f >= 0);
            CHECK(f < 10000);
          }
          break;
        }
        case McamPlan::Action::Keep: ++keeps; break;
      }
    }
  }

  // mean drawn length ~ 35 (uniform over 20..50), 3 sigma of the sample mean
  const double mean_len = static_cast<double>(drawn_total) / drawn_count;
  const double sigma_one = std::sqrt((31.0 * 31.0 - 1.0) / 12.0);
  CHECK(std::abs(mean_len - 35.0) <= 3.0 * sigma_one / std::sqrt(double(drawn_count)));

  // expected segment count ~ T / 35
  const double mean_segments = static_cast<double>(segments_total) / 60.0;
  CHECK(mean_segments == doctest::Approx(10000.0 / 35.0).epsilon(0.05));

  // selection rate ~ 0.15 (deterministic rounding per utterance)
  const double rate = static_cast<double>(selected_total) / segments_total;
  CHECK(std::abs(rate - 0.15) < 0.01);

  CHECK(within_3sigma(zeros, selected_total, 0.80));
  CHECK(within_3sigma(replaces, selected_total, 0.10));
  CHECK(within_3sigma(keeps, selected_total, 0.10));
}

TEST_CASE("mcam: masked-frame fraction tracks the segment selection rate") {
  long masked = 0, total = 0;
  for (int trial = 0; trial < 40; ++trial) {
    Rng rng(7000 + trial);
    auto plan = plan_mcam(8000, rng);
    masked += static_cast<long>(plan.masked_frames().size());
    total += 8000;
  }
  const double frac = static_cast<double>(masked) / total;
  CHECK(frac == doctest::Approx(0.15).epsilon(0.15));
}

TEST_CASE("apply_plans: empty plans leave the batch unchanged") {
  std::vector<std::vector<int>> ids = {{Specials::kBos, 9, 9, Specials::kEos}};
  std::vector<MatX<float>> feats = {MatX<float>::Random(30, 8)};
  auto batch = PairBatch::collate(ids, feats);
  const auto snapshot = batch.audio[0];
  auto labels = apply_plans(batch, {MlmPlan{}}, {McamPlan{}});
  CHECK(batch.token_ids[0] == ids[0]);
  CHECK((batch.audio[0] - snapshot).cwiseAbs().maxCoeff() == 0.f);
  CHECK(labels.total_mlm_positions() == 0);
  CHECK(labels.total_mcam_frames() == 0);
}

TEST_CASE("apply_plans: zero action clears rows, keep rows stay in the label set") {
  std::vector<std::vector<int>> ids = {{Specials::kBos, 10, 11, 12, Specials::kEos}};
  std::vector<MatX<float>> feats = {MatX<float>::Random(60, 8)};
  auto batch = PairBatch::collate(ids, feats);
  const auto original = batch.audio[0];

  McamPlan mcam;
  mcam.segments = {{0, 20}, {20, 45}, {45, 60}};
  mcam.selected.push_back({0, McamPlan::Action::Zero, {}});
  mcam.selected.push_back({2, McamPlan::Action::Keep, {}});

  MlmPlan mlm;
  mlm.items.push_back({1, MlmPlan::Action::MaskToken, 10, -1});
  mlm.items.push_back({2, MlmPlan::Action::RandomToken, 11, 200});
  mlm.items.push_back({3, MlmPlan::Action::Keep, 12, -1});

  auto labels = apply_plans(batch, {mlm}, {mcam});

  CHECK(batch.token_ids[0][1] == Specials::kMask);
  CHECK(batch.token_ids[0][2] == 200);
  CHECK(batch.token_ids[0][3] == 12);  // kept, but still labeled
  REQUIRE(labels.mlm[0].size() == 3);
  CHECK(labels.mlm[0][2] == std::pair<int, int>(3, 12));

  CHECK(batch.audio[0].topRows(20).cwiseAbs().maxCoeff() == 0.f);
  CHECK((batch.audio[0].middleRows(45, 15) - original.middleRows(45, 15))
            .cwiseAbs()
            .maxCoeff() == 0.f);
  // labels carry pristine rows for zeroed and kept frames alike
  REQUIRE(labels.mcam_frames[0].size() == 35);
  for (size_t i = 0; i < labels.mcam_frames[0].size(); ++i) {
    const int frame = labels.mcam_frames[0][i];
    CHECK((labels.mcam_original[0].row(i) - original.row(frame)).cwiseAbs().maxCoeff() ==
          0.f);
  }
}

TEST_CASE("apply_plans: replacement copies pristine source rows") {
  std::vector<std::vector<int>> ids = {{Specials::kBos, Specials::kEos}};
  std::vector<MatX<float>> feats = {MatX<float>::Random(50, 4)};
  auto batch = PairBatch::collate(ids, feats);
  const auto original = batch.audio[0];

  McamPlan mcam;
  mcam.segments = {{0, 25}, {25, 50}};
  McamPlan::Selected sel;
  sel.segment = 0;
  sel.action = McamPlan::Action::Replace;
  for (int i = 0; i < 25; ++i) sel.replacement_frames.push_back(20 + i);  // overlaps itself
  mcam.selected.push_back(sel);

  apply_plans(batch, {MlmPlan{}}, {mcam});
  for (int i = 0; i < 25; ++i)
    CHECK((batch.audio[0].row(i) - original.row(20 + i)).cwiseAbs().maxCoeff() == 0.f);
}

TEST_CASE("apply_plans rejects mismatched plan counts and out-of-range positions") {
  std::vector<std::vector<int>> ids = {{Specials::kBos, 5, Specials::kEos}};
  std::vector<MatX<float>> feats = {MatX<float>::Random(25, 4)};
  auto batch = PairBatch::collate(ids, feats);
  CHECK_THROWS_AS(apply_plans(batch, {}, {}), DimensionError);

  MlmPlan bad;
  bad.items.push_back({7, MlmPlan::Action::MaskToken, 5, -1});
  CHECK_THROWS_AS(apply_plans(batch, {bad}, {McamPlan{}}), DimensionError);
}
