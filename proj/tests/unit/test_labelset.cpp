#include <gtest/gtest.h>

#include <map>
#include <set>

#include "generators.hpp"
#include "oracles.hpp"
#include "trx/error.hpp"
#include "trx/labelset.hpp"

using namespace trx;

namespace {

LabelRecord with(std::map<std::string, LabelState> cats, ViewPosition view = ViewPosition::PA) {
  LabelRecord r;
  r.studyId = "s1";
  r.patientId = "p1";
  r.view = view;
  r.categories = std::move(cats);
  return r;
}

constexpr auto P = LabelState::ConfirmedPositive;
constexpr auto N = LabelState::ConfirmedNegative;
constexpr auto U = LabelState::Uncertain;
constexpr auto E = LabelState::Empty;

}  // namespace

TEST(MergeOpacity, BranchCases) {
  EXPECT_EQ(merge_opacity_label(with({{"Pneumonia", P}})), P);
  EXPECT_EQ(merge_opacity_label(with({{"Atelectasis", U}, {"Edema", N}})), U);
  EXPECT_EQ(merge_opacity_label(with({})), N);
  EXPECT_EQ(merge_opacity_label(with({{"Consolidation", P}, {"Atelectasis", U}})), P);
  EXPECT_EQ(merge_opacity_label(with({{"Lung Opacity", N}, {"Edema", E}})), N);
}

TEST(MergeOpacity, IgnoresNonSourceCategories) {
  EXPECT_EQ(merge_opacity_label(with({{"Cardiomegaly", P}, {"Pleural Effusion", U}})), N);
}

TEST(MergeOpacity, ExhaustiveAgainstRule) {
  for (int code = 0; code < 1024; ++code) {
    std::array<LabelState, 5> states{};
    LabelRecord r = with({});
    int c = code;
    for (std::size_t k = 0; k < 5; ++k, c /= 4) {
      states[k] = static_cast<LabelState>(c % 4);
      r.categories[std::string(kOpacitySources[k])] = states[k];
    }
    ASSERT_EQ(merge_opacity_label(r), oracle::opacity_rule(states)) << "code " << code;
  }
}

TEST(MergeOpacity, Monotone) {
  Rng rng(99);
  for (int t = 0; t < 2000; ++t) {
    LabelRecord r = with({});
    for (auto s : kOpacitySources) r.categories[std::string(s)] = gen::label_state(rng);
    const LabelState before = merge_opacity_label(r);
    const std::string target(kOpacitySources[rng.uniform_below(5)]);
    LabelRecord up = r;
    if (r.state(target) != P) {
      up.categories[target] = U;
      const LabelState after = merge_opacity_label(up);
      if (before != N) EXPECT_NE(after, N);
    }
    up.categories[target] = P;
    EXPECT_EQ(merge_opacity_label(up), P);
  }
}

TEST(EncodeLabel, SoftTargets) {
  EXPECT_EQ(encode_label_value(P), 0.99);
  EXPECT_EQ(encode_label_value(N), 0.01);
  EXPECT_EQ(encode_label_value(E), 0.01);
  EXPECT_EQ(encode_label_value(U), 0.6);
  std::set<double> image;
  for (int s = 0; s < 4; ++s) image.insert(encode_label_value(static_cast<LabelState>(s)));
  EXPECT_EQ(image, (std::set<double>{0.01, 0.6, 0.99}));
}

TEST(SelectionFilters, FixedRuleOrder) {
  const FilterRules rules = FilterRules::opacity_training_set();
  EXPECT_EQ(apply_selection_filters(with({{"Support Devices", P}}, ViewPosition::Lateral), rules).reason,
            "lateral");
  EXPECT_EQ(apply_selection_filters(with({{"Support Devices", P}}, ViewPosition::AP), rules).reason, "AP");
  EXPECT_EQ(apply_selection_filters(with({{"Support Devices", P}, {"No Finding", P}}), rules).reason,
            "Support Devices");
  EXPECT_EQ(apply_selection_filters(with({{"Support Devices", U}, {"Cardiomegaly", P}}), rules).reason,
            kInclusionFailedReason);
  EXPECT_EQ(apply_selection_filters(with({{"No Finding", P}}, ViewPosition::Unknown), rules).reason,
            "unknown view");
}

TEST(SelectionFilters, InclusionRuleKeeps) {
  const FilterRules rules = FilterRules::opacity_training_set();
  EXPECT_TRUE(apply_selection_filters(with({{"No Finding", P}}), rules).keep);
  EXPECT_TRUE(apply_selection_filters(with({{"No Finding", U}}), rules).keep);
  EXPECT_TRUE(apply_selection_filters(with({{"Edema", U}}), rules).keep);
  EXPECT_TRUE(apply_selection_filters(with({{"Pneumonia", P}}), rules).keep);
  EXPECT_FALSE(apply_selection_filters(with({{"No Finding", N}, {"Edema", N}}), rules).keep);
}

TEST(SelectionFilters, PermissiveRulesKeepEverything) {
  const FilterRules none;
  for (auto v : {ViewPosition::PA, ViewPosition::AP, ViewPosition::Lateral, ViewPosition::Unknown}) {
    EXPECT_TRUE(apply_selection_filters(with({{"Support Devices", P}}, v), none).keep);
  }
}

TEST(Rle, EmptyStringDecodesToBlankMask) {
  const BinaryMask m = rle_decode("", 4, 4);
  EXPECT_EQ(m.count(), 0u);
  EXPECT_EQ(rle_decode("  \n\t", 4, 4).count(), 0u);
}

TEST(Rle, ColumnMajorOneBased) {
  const BinaryMask m = rle_decode("1 3", 2, 2);
  EXPECT_TRUE(m.at(0, 0));
  EXPECT_TRUE(m.at(0, 1));
  EXPECT_TRUE(m.at(1, 0));
  EXPECT_FALSE(m.at(1, 1));
}

TEST(Rle, EncodeSinglePixelAndBlank) {
  BinaryMask m(3, 3);
  EXPECT_EQ(rle_encode(m), "");
  m.set(1, 1, true);  // linear position 1*3 + 1 + 1 = 5
  EXPECT_EQ(rle_encode(m), "5 1");
}

TEST(Rle, EncodeMergesAdjacentRuns) {
  const BinaryMask m = rle_decode("4 2 1 3", 3, 3);
  EXPECT_EQ(rle_encode(m), "1 5");
}

TEST(Rle, Errors) {
  EXPECT_THROW(rle_decode("1", 2, 2), ValidationError);
  EXPECT_THROW(rle_decode("1 2 3", 2, 2), ValidationError);
  EXPECT_THROW(rle_decode("1 x", 2, 2), ValidationError);
  EXPECT_THROW(rle_decode("1.5 2", 2, 2), ValidationError);
  EXPECT_THROW(rle_decode("0 2", 2, 2), ValidationError);
  EXPECT_THROW(rle_decode("2 0", 2, 2), ValidationError);
  EXPECT_THROW(rle_decode("3 3", 2, 2), ValidationError);
  EXPECT_THROW(rle_decode("1 2 2 2", 2, 2), ValidationError);
  EXPECT_NO_THROW(rle_decode("4 1", 2, 2));
}

TEST(Rle, ErrorNamesTheOffendingPair) {
  try {
    rle_decode("1 1 3 9", 2, 2);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("(3 9)"), std::string::npos) << e.what();
  }
}

TEST(Rle, RoundTripAgainstLiteralOracle) {
  Rng rng(2024);
  for (int t = 0; t < 300; ++t) {
    const std::size_t w = gen::size_in(rng, 1, 40);
    const std::size_t h = gen::size_in(rng, 1, 40);
    const BinaryMask m = gen::binary_mask(rng, w, h);
    std::vector<bool> bits(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) bits[i] = m.linear(i);
    const std::string enc = rle_encode(m);
    ASSERT_EQ(enc, oracle::rle_from_bits(bits));
    ASSERT_EQ(rle_decode(enc, w, h), m);
  }
}

TEST(Split, FiveAndFiveGivesOneOfEach) {
  std::vector<LabelRecord> recs;
  for (int i = 0; i < 10; ++i) {
    LabelRecord r = with({{"Pneumothorax", i < 5 ? P : N}});
    r.studyId = "s" + std::to_string(i);
    r.patientId = "p" + std::to_string(i);
    recs.push_back(r);
  }
  const auto pos = [](const LabelRecord& r) { return r.state("Pneumothorax") == P; };
  const SplitManifest m = patient_level_split(recs, pos, 0.2, 17);
  ASSERT_EQ(m.tuneIds.size(), 2u);
  int tunePos = 0;
  for (const auto& r : recs) tunePos += m.tuneIds.contains(r.studyId) && pos(r) ? 1 : 0;
  EXPECT_EQ(tunePos, 1);
  EXPECT_EQ(m.trainIds.size(), 8u);
}

TEST(Split, PatientStudiesCoLocate) {
  std::vector<LabelRecord> recs;
  for (int i = 0; i < 3; ++i) {
    LabelRecord r = with({});
    r.studyId = "a" + std::to_string(i);
    r.patientId = "multi";
    recs.push_back(r);
  }
  for (int i = 0; i < 6; ++i) {
    LabelRecord r = with({});
    r.studyId = "b" + std::to_string(i);
    r.patientId = "solo" + std::to_string(i);
    recs.push_back(r);
  }
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const SplitManifest m = patient_level_split(recs, [](const LabelRecord&) { return false; }, 0.2, seed);
    const bool inTune = m.tuneIds.contains("a0");
    EXPECT_EQ(m.tuneIds.contains("a1"), inTune);
    EXPECT_EQ(m.tuneIds.contains("a2"), inTune);
  }
}

TEST(Split, QuotaUsesCeiling) {
  for (std::size_t n = 0; n < 200; ++n) EXPECT_EQ(tune_quota(n, 0.2), oracle::fifth_quota(n)) << n;
  EXPECT_EQ(tune_quota(10, 0.25), 3u);
  EXPECT_EQ(tune_quota(1, 0.01), 1u);
}

TEST(Split, Errors) {
  std::vector<LabelRecord> recs{with({})};
  const auto any = [](const LabelRecord&) { return true; };
  EXPECT_THROW(patient_level_split(recs, any, 0.0, 1), ValidationError);
  EXPECT_THROW(patient_level_split(recs, any, 1.0, 1), ValidationError);
  EXPECT_THROW(patient_level_split({}, any, 0.2, 1), ValidationError);
  recs.push_back(with({}));
  EXPECT_THROW(patient_level_split(recs, any, 0.2, 1), ValidationError);
  recs[1].studyId = "s2";
  recs[1].patientId = "";
  EXPECT_THROW(patient_level_split(recs, any, 0.2, 1), ValidationError);
}

TEST(Split, OrderInvariantAndSeedDeterministic) {
  Rng rng(5);
  const auto pos = [](const LabelRecord& r) { return r.state("Pneumothorax") == P; };
  for (int t = 0; t < 50; ++t) {
    auto recs = gen::label_records(rng, gen::size_in(rng, 1, 40));
    const SplitManifest a = patient_level_split(recs, pos, 0.2, t);
    rng.shuffle(std::span(recs));
    EXPECT_EQ(patient_level_split(recs, pos, 0.2, t), a);
  }
}
