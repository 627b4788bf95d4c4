#include "trx/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <thread>

#include "trx/error.hpp"
#include "trx/rng.hpp"

namespace trx {

ConfusionCounts confusion_counts(const std::vector<bool>& preds, const std::vector<bool>& labels) {
  if (preds.size() != labels.size()) {
    throw ValidationError("prediction/label length mismatch: " + std::to_string(preds.size()) +
                          " vs " + std::to_string(labels.size()));
  }
  if (preds.empty()) throw ValidationError("confusion counts need at least one case");
  ConfusionCounts c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i]) {
      ++(labels[i] ? c.tp : c.fp);
    } else {
      ++(labels[i] ? c.fn : c.tn);
    }
  }
  return c;
}

DiagnosticMetrics diagnostic_metrics(const ConfusionCounts& c) noexcept {
  const auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  return {ratio(c.tp, c.tp + c.fn), ratio(c.tn, c.tn + c.fp), ratio(c.tp, c.tp + c.fp),
          ratio(c.tn, c.tn + c.fn)};
}

namespace {

void require_both_classes(std::span<const ScoredCase> cases, const char* what) {
  const auto positives = std::count_if(cases.begin(), cases.end(), [](const ScoredCase& c) { return c.label; });
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(cases.size())) {
    throw DegenerateDataError(std::string(what) + " needs at least one positive and one negative case");
  }
}

}  // namespace

RocCurve roc_curve(std::span<const ScoredCase> cases) {
  require_both_classes(cases, "ROC curve");
  std::vector<ScoredCase> sorted(cases.begin(), cases.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredCase& a, const ScoredCase& b) { return a.score > b.score; });
  std::size_t positives = 0;
  for (const ScoredCase& c : sorted) positives += c.label ? 1 : 0;
  const auto negatives = static_cast<double>(sorted.size() - positives);
  const auto pos = static_cast<double>(positives);

  RocCurve curve{{0.0, 0.0}};
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    const double value = sorted[i].score;
    while (i < sorted.size() && sorted[i].score == value) {
      ++(sorted[i].label ? tp : fp);
      ++i;
    }
    curve.push_back({static_cast<double>(fp) / negatives, static_cast<double>(tp) / pos});
  }
  return curve;
}

double auroc(std::span<const ScoredCase> cases) {
  const RocCurve curve = roc_curve(cases);
  double area = 0.0;
  for (std::size_t k = 1; k < curve.size(); ++k) {
    area += (curve[k].fpr - curve[k - 1].fpr) * (curve[k].tpr + curve[k - 1].tpr) / 2.0;
  }
  return area;
}

AurocRanker::AurocRanker(std::span<const ScoredCase> cases)
    : order_(cases.size()), labels_(cases.size()) {
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::stable_sort(order_.begin(), order_.end(),
                   [&](std::size_t a, std::size_t b) { return cases[a].score < cases[b].score; });
  for (std::size_t i = 0; i < cases.size(); ++i) labels_[i] = cases[i].label;
  for (std::size_t k = 0; k < order_.size(); ++k) {
    if (k == 0 || cases[order_[k]].score != cases[order_[k - 1]].score) blockStarts_.push_back(k);
  }
  blockStarts_.push_back(order_.size());
}

namespace {

// Mann-Whitney over tie blocks in ascending order, in exact integer
// arithmetic: 2 * sum over blocks of (pos * negBelow) + pos * neg.
template <class WeightOf>
std::optional<double> block_auroc(const std::vector<std::size_t>& order,
                                  const std::vector<std::size_t>& blockStarts,
                                  const std::vector<bool>& labels, WeightOf weightOf) {
  std::uint64_t doubled = 0;
  std::uint64_t negBelow = 0;
  std::uint64_t posTotal = 0;
  for (std::size_t b = 0; b + 1 < blockStarts.size(); ++b) {
    std::uint64_t pos = 0;
    std::uint64_t neg = 0;
    for (std::size_t k = blockStarts[b]; k < blockStarts[b + 1]; ++k) {
      const std::size_t idx = order[k];
      const std::uint64_t w = weightOf(idx);
      if (labels[idx]) {
        pos += w;
      } else {
        neg += w;
      }
    }
    doubled += 2 * pos * negBelow + pos * neg;
    negBelow += neg;
    posTotal += pos;
  }
  if (posTotal == 0 || negBelow == 0) return std::nullopt;
  return static_cast<double>(doubled) /
         (2.0 * static_cast<double>(posTotal) * static_cast<double>(negBelow));
}

}  // namespace

std::optional<double> AurocRanker::weighted(std::span<const std::uint32_t> weights) const {
  if (weights.size() != labels_.size()) throw ValidationError("weight count mismatch");
  return block_auroc(order_, blockStarts_, labels_, [&](std::size_t i) { return weights[i]; });
}

std::optional<double> AurocRanker::group(std::span<const std::uint8_t> membership,
                                         std::uint8_t group) const {
  if (membership.size() != labels_.size()) throw ValidationError("membership count mismatch");
  return block_auroc(order_, blockStarts_, labels_,
                     [&](std::size_t i) { return membership[i] == group ? 1u : 0u; });
}

double interpolated_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw ValidationError("quantile of an empty sample");
  const double h = static_cast<double>(sorted.size() - 1) * std::clamp(p, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<std::optional<ConfidenceInterval>> bootstrap_ci_many(const MultiStatistic& statistic,
                                                                 std::size_t statisticCount,
                                                                 std::size_t n,
                                                                 const BootstrapOptions& options) {
  if (n == 0) throw ValidationError("bootstrap needs at least one case");
  if (options.resamples == 0) throw ValidationError("bootstrap needs at least one resample");
  if (!(options.level > 0.0 && options.level < 1.0)) {
    throw ValidationError("confidence level must lie in (0, 1)");
  }
  const std::size_t resamples = options.resamples;
  std::vector<std::optional<double>> values(resamples * statisticCount);

  const auto run = [&](std::size_t begin, std::size_t end) {
    std::vector<std::size_t> indices(n);
    for (std::size_t r = begin; r < end; ++r) {
      Rng rng = Rng::substream(options.seed, r);
      for (auto& idx : indices) idx = static_cast<std::size_t>(rng.uniform_below(n));
      statistic(indices, std::span(values).subspan(r * statisticCount, statisticCount));
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, resamples);
  if (workers == 1) {
    run(0, resamples);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (resamples + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(resamples, begin + chunk);
      if (begin < end) pool.emplace_back(run, begin, end);
    }
  }

  const double alpha = 1.0 - options.level;
  std::vector<std::optional<ConfidenceInterval>> out(statisticCount);
  std::vector<double> kept;
  for (std::size_t s = 0; s < statisticCount; ++s) {
    kept.clear();
    for (std::size_t r = 0; r < resamples; ++r) {
      if (const auto& v = values[r * statisticCount + s]; v) kept.push_back(*v);
    }
    const std::size_t discarded = resamples - kept.size();
    if (kept.empty() || 2 * discarded > resamples) continue;
    std::sort(kept.begin(), kept.end());
    ConfidenceInterval ci;
    ci.low = interpolated_quantile(kept, alpha / 2.0);
    ci.high = interpolated_quantile(kept, 1.0 - alpha / 2.0);
    ci.level = options.level;
    ci.resamples = resamples;
    ci.seed = options.seed;
    ci.discarded = discarded;
    out[s] = ci;
  }
  return out;
}

ConfidenceInterval bootstrap_ci(const Statistic& statistic, std::size_t n,
                                const BootstrapOptions& options) {
  const auto result = bootstrap_ci_many(
      [&](std::span<const std::size_t> idx, std::span<std::optional<double>> out) {
        out[0] = statistic(idx);
      },
      1, n, options);
  if (!result[0]) {
    throw DegenerateDataError("bootstrap statistic undefined on more than half of the resamples");
  }
  return *result[0];
}

double dice_score(const BinaryMask& pred, const BinaryMask& gt) {
  if (pred.width() != gt.width() || pred.height() != gt.height()) {
    throw ValidationError("DICE inputs differ in size");
  }
  std::size_t inter = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) inter += pred.linear(i) && gt.linear(i) ? 1 : 0;
  const std::size_t total = pred.count() + gt.count();
  if (total == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(total);
}

SubgroupComparison compare_subgroup_auroc(std::span<const ScoredCase> groupA,
                                          std::span<const ScoredCase> groupB, std::size_t permutations,
                                          std::uint64_t seed) {
  require_both_classes(groupA, "subgroup A");
  require_both_classes(groupB, "subgroup B");

  std::vector<ScoredCase> pooled(groupA.begin(), groupA.end());
  pooled.insert(pooled.end(), groupB.begin(), groupB.end());
  const AurocRanker ranker(pooled);

  std::vector<std::uint8_t> membership(pooled.size(), 0);
  std::fill(membership.begin() + static_cast<std::ptrdiff_t>(groupA.size()), membership.end(), 1);

  const auto delta = [&](std::span<const std::uint8_t> m) {
    return std::abs(*ranker.group(m, 0) - *ranker.group(m, 1));
  };
  SubgroupComparison result;
  result.observedDelta = delta(membership);

  std::vector<std::size_t> posIdx;
  std::vector<std::size_t> negIdx;
  for (std::size_t i = 0; i < pooled.size(); ++i) (pooled[i].label ? posIdx : negIdx).push_back(i);
  std::vector<std::uint8_t> posGroups;
  std::vector<std::uint8_t> negGroups;
  for (std::size_t i : posIdx) posGroups.push_back(membership[i]);
  for (std::size_t i : negIdx) negGroups.push_back(membership[i]);

  std::size_t atLeast = 0;
  std::vector<std::uint8_t> permuted(pooled.size());
  std::vector<std::uint8_t> pg;
  std::vector<std::uint8_t> ng;
  for (std::size_t p = 0; p < permutations; ++p) {
    Rng rng = Rng::substream(seed, p);
    pg = posGroups;
    ng = negGroups;
    rng.shuffle(std::span(pg));
    rng.shuffle(std::span(ng));
    for (std::size_t k = 0; k < posIdx.size(); ++k) permuted[posIdx[k]] = pg[k];
    for (std::size_t k = 0; k < negIdx.size(); ++k) permuted[negIdx[k]] = ng[k];
    if (delta(permuted) >= result.observedDelta - 1e-12) ++atLeast;
  }
  result.pValue = static_cast<double>(1 + atLeast) / static_cast<double>(permutations + 1);
  return result;
}

}  // namespace trx
