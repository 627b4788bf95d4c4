#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "trx/error.hpp"
#include "trx/fusion.hpp"
#include "trx/rng.hpp"
#include "trx/types.hpp"

using namespace trx;

TEST(Findings, FourKindsInCanonicalOrder) {
  ASSERT_EQ(kAllFindings.size(), 4u);
  EXPECT_EQ(kAllFindings[0], FindingKind::Pneumothorax);
  EXPECT_EQ(kAllFindings[1], FindingKind::PleuralEffusion);
  EXPECT_EQ(kAllFindings[2], FindingKind::LungOpacity);
  EXPECT_EQ(kAllFindings[3], FindingKind::Fracture);
}

TEST(Findings, ParseAcceptsSlugsAndDisplayNames) {
  for (FindingKind k : kAllFindings) {
    EXPECT_EQ(parse_finding(slug(k)), k);
    EXPECT_EQ(parse_finding(display_name(k)), k);
  }
  EXPECT_EQ(parse_finding("Pleural-Effusion"), FindingKind::PleuralEffusion);
  EXPECT_EQ(parse_finding("PleuralEffusion"), FindingKind::PleuralEffusion);
  EXPECT_FALSE(parse_finding("cardiomegaly"));
}

TEST(Findings, ExpectedKindBinding) {
  EXPECT_EQ(expected_kind(FindingKind::Pneumothorax), OutputKind::Mask);
  EXPECT_EQ(expected_kind(FindingKind::PleuralEffusion), OutputKind::Mask);
  EXPECT_EQ(expected_kind(FindingKind::LungOpacity), OutputKind::Softmax);
  EXPECT_EQ(expected_kind(FindingKind::Fracture), OutputKind::Boxes);
}

TEST(PublishedThresholds, ExactCutpoints) {
  const ThresholdConfig cfg = default_paper_thresholds();
  EXPECT_EQ(cfg.cutpoint(FindingKind::PleuralEffusion), 3440.5);
  EXPECT_EQ(cfg.cutpoint(FindingKind::Pneumothorax), 144.43);
  EXPECT_EQ(cfg.cutpoint(FindingKind::LungOpacity), 0.98);
  EXPECT_EQ(cfg.cutpoint(FindingKind::Fracture), 0.15);
}

TEST(ThresholdConfig, RejectsNonFiniteAndOutOfRangeSoftmaxCut) {
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_THROW(ThresholdConfig(FindingMap<double>(inf, 1, 0.5, 0.1)), ValidationError);
  EXPECT_THROW(ThresholdConfig(FindingMap<double>(1, std::nan(""), 0.5, 0.1)), ValidationError);
  EXPECT_THROW(ThresholdConfig(FindingMap<double>(1, 1, 0.0, 0.1)), ValidationError);
  EXPECT_THROW(ThresholdConfig(FindingMap<double>(1, 1, 1.0, 0.1)), ValidationError);
  EXPECT_NO_THROW(ThresholdConfig(FindingMap<double>(-3, 0, 0.5, 2.0)));
}

TEST(MaskGrid, ValidatesCells) {
  EXPECT_THROW(MaskGrid(2, 2, {0, 0, 0}), ValidationError);
  EXPECT_THROW(MaskGrid(0, 2, {}), ValidationError);
  EXPECT_THROW(MaskGrid(1, 1, {1.5f}), ValidationError);
  EXPECT_THROW(MaskGrid(1, 1, {-0.1f}), ValidationError);
  EXPECT_THROW(MaskGrid(1, 1, {std::nanf("")}), ValidationError);
  const MaskGrid g(3, 2, {0, 0.1f, 0.2f, 0.3f, 0.4f, 1.0f});
  EXPECT_FLOAT_EQ(g.at(2, 0), 0.2f);
  EXPECT_FLOAT_EQ(g.at(0, 1), 0.3f);
}

TEST(SoftmaxPair, SumTolerance) {
  EXPECT_NO_THROW(SoftmaxPair(0.02, 0.98));
  EXPECT_NO_THROW(SoftmaxPair(0.5, 0.5 + 0.9e-6));
  EXPECT_THROW(SoftmaxPair(0.5, 0.5 + 2e-6), ValidationError);
  EXPECT_THROW(SoftmaxPair(-0.1, 1.1), ValidationError);
}

TEST(BoxList, ValidatesGeometryAndConfidence) {
  EXPECT_NO_THROW(BoxList(std::vector<ScoredBox>{}));
  EXPECT_THROW(BoxList({{5, 0, 5, 3, 0.5}}), ValidationError);
  EXPECT_THROW(BoxList({{0, 4, 3, 1, 0.5}}), ValidationError);
  EXPECT_THROW(BoxList({{0, 0, 3, 3, 1.2}}), ValidationError);
}

TEST(StudyOutputs, RejectsKindMismatch) {
  const MaskGrid m = MaskGrid::zeros(2, 2);
  EXPECT_THROW(StudyOutputs("s", FindingMap<RawOutput>(BoxList{}, m, SoftmaxPair(1, 0), BoxList{})),
               ValidationError);
  EXPECT_THROW(StudyOutputs("s", FindingMap<RawOutput>(m, m, m, BoxList{})), ValidationError);
  EXPECT_THROW(StudyOutputs("s", FindingMap<RawOutput>(m, m, SoftmaxPair(1, 0), SoftmaxPair(1, 0))),
               ValidationError);
  EXPECT_THROW(StudyOutputs("", FindingMap<RawOutput>(m, m, SoftmaxPair(1, 0), BoxList{})), ValidationError);
  const StudyOutputs ok("s", FindingMap<RawOutput>(m, m, SoftmaxPair(1, 0), BoxList{}));
  EXPECT_EQ(ok.softmax().positive(), 0.0);
  EXPECT_TRUE(ok.boxes().empty());
}

TEST(TriageResult, ConsistentMeansOrOfFlags) {
  TriageResult r;
  r.flags = FindingMap<bool>(false, false, true, false);
  r.abnormal = true;
  EXPECT_TRUE(r.consistent());
  r.abnormal = false;
  EXPECT_FALSE(r.consistent());
}

TEST(Rng, SplitMixReferenceValue) {
  std::uint64_t state = 0;
  EXPECT_EQ(splitmix64(state), 0xE220A8397B1DCDAFULL);
}

TEST(Rng, DeterministicAndSeedSensitive) {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    EXPECT_NE(x, c.next());
  }
}

TEST(Rng, UniformBelowStaysInRangeAndCoversIt) {
  Rng rng(7);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const auto v = rng.uniform_below(7);
    ASSERT_LT(v, 7u);
    ++counts[v];
  }
  for (int c : counts) EXPECT_NEAR(c, 1000, 150);
}

TEST(Rng, Uniform01HalfOpen) {
  Rng rng(3);
  double lo = 1, hi = 0, sum = 0;
  for (int i = 0; i < 20000; ++i) {
    const double u = rng.uniform01();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  EXPECT_GE(lo, 0.0);
  EXPECT_LT(hi, 1.0);
  EXPECT_NEAR(sum / 20000, 0.5, 0.01);
}

TEST(Rng, ShuffleIsAPermutation) {
  Rng rng(11);
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  rng.shuffle(std::span(v));
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
  EXPECT_FALSE(std::is_sorted(v.begin(), v.end()));
}

TEST(Rng, SubstreamsDiffer) {
  std::set<std::uint64_t> firsts;
  for (std::uint64_t s = 0; s < 1000; ++s) firsts.insert(Rng::substream(5, s).next());
  EXPECT_EQ(firsts.size(), 1000u);
  EXPECT_EQ(Rng::substream(5, 9).next(), Rng::substream(5, 9).next());
}
