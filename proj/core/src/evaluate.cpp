#include "trx/evaluate.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

#include <nlohmann/json.hpp>
#include "trx/error.hpp"
#include "trx/fusion.hpp"
#include "trx/rng.hpp"

namespace trx {

std::vector<std::string> task_names() {
  std::vector<std::string> names{std::string(kAbnormalityTask)};
  for (FindingKind kind : kAllFindings) names.emplace_back(slug(kind));
  return names;
}

std::string_view to_string(SubgroupVariable v) noexcept {
  switch (v) {
    case SubgroupVariable::None:
      return "none";
    case SubgroupVariable::Sex:
      return "sex";
    case SubgroupVariable::AgeBand:
      return "ageband";
  }
  return "none";
}

std::optional<SubgroupVariable> parse_subgroup_variable(std::string_view text) {
  if (text == "none") return SubgroupVariable::None;
  if (text == "sex") return SubgroupVariable::Sex;
  if (text == "ageband" || text == "age") return SubgroupVariable::AgeBand;
  return std::nullopt;
}

const TaskReport& EvalReport::task(std::string_view name) const {
  for (const TaskReport& t : tasks) {
    if (t.task == name) return t;
  }
  throw ValidationError("no task named '" + std::string(name) + "'");
}

bool finding_truth(const LabelRecord& label, FindingKind kind) {
  return label.state(display_name(kind)) == LabelState::ConfirmedPositive;
}

std::string age_band(int age, std::span<const int> edges) {
  if (edges.empty()) return "all";
  if (age < edges.front()) return "<" + std::to_string(edges.front());
  for (std::size_t k = 1; k < edges.size(); ++k) {
    if (age < edges[k]) return std::to_string(edges[k - 1]) + "-" + std::to_string(edges[k]);
  }
  return ">=" + std::to_string(edges.back());
}

namespace {

struct TaskData {
  std::vector<ScoredCase> cases;
  std::vector<bool> preds;
};

enum StatIndex : std::size_t { kAuroc, kSens, kSpec, kPpv, kNpv, kStatCount };

TaskReport evaluate_task(const std::string& name, const TaskData& data, const BootstrapOptions& boot) {
  TaskReport report;
  report.task = name;
  std::vector<bool> labels;
  labels.reserve(data.cases.size());
  for (const ScoredCase& c : data.cases) {
    labels.push_back(c.label);
    ++(c.label ? report.positives : report.negatives);
  }
  if (report.positives == 0 || report.negatives == 0) {
    report.unavailableReason = report.positives == 0 ? "no positive cases" : "no negative cases";
    return report;
  }
  report.available = true;
  report.counts = confusion_counts(data.preds, labels);
  const DiagnosticMetrics dm = diagnostic_metrics(report.counts);
  report.auroc.value = auroc(data.cases);
  report.roc = roc_curve(data.cases);
  report.sensitivity.value = dm.sensitivity;
  report.specificity.value = dm.specificity;
  report.ppv.value = dm.ppv;
  report.npv.value = dm.npv;

  const AurocRanker ranker(data.cases);
  const std::size_t n = data.cases.size();
  const auto statistic = [&](std::span<const std::size_t> idx, std::span<std::optional<double>> out) {
    std::vector<std::uint32_t> weights(n, 0);
    for (std::size_t i : idx) ++weights[i];
    out[kAuroc] = ranker.weighted(weights);
    ConfusionCounts c;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t w = weights[i];
      if (w == 0) continue;
      if (data.preds[i]) {
        (labels[i] ? c.tp : c.fp) += w;
      } else {
        (labels[i] ? c.fn : c.tn) += w;
      }
    }
    const DiagnosticMetrics m = diagnostic_metrics(c);
    out[kSens] = m.sensitivity;
    out[kSpec] = m.specificity;
    out[kPpv] = m.ppv;
    out[kNpv] = m.npv;
  };
  const auto cis = bootstrap_ci_many(statistic, kStatCount, n, boot);
  report.auroc.ci = cis[kAuroc];
  report.sensitivity.ci = cis[kSens];
  report.specificity.ci = cis[kSpec];
  report.ppv.ci = cis[kPpv];
  report.npv.ci = cis[kNpv];
  return report;
}

std::string group_of(const LabelRecord& label, const EvalOptions& options) {
  if (options.subgroup == SubgroupVariable::Sex) return std::string(to_string(label.sex));
  return age_band(label.age, options.ageEdges);
}

// Group names in a stable, meaningful order.
std::vector<std::string> group_order(SubgroupVariable v, std::span<const int> edges,
                                     const std::set<std::string>& present) {
  std::vector<std::string> order;
  if (v == SubgroupVariable::Sex) {
    for (Sex s : {Sex::Female, Sex::Male, Sex::Unknown}) order.emplace_back(to_string(s));
  } else {
    order.push_back(age_band(edges.empty() ? 0 : edges.front() - 1, edges));
    for (std::size_t k = 0; k < edges.size(); ++k) order.push_back(age_band(edges[k], edges));
  }
  std::vector<std::string> out;
  for (const std::string& g : order) {
    if (present.contains(g)) out.push_back(g);
  }
  return out;
}

SubgroupReport evaluate_subgroups(const std::vector<const LabelRecord*>& labels,
                                  const std::vector<TaskData>& tasks, const std::vector<TaskReport>& reports,
                                  const EvalOptions& options) {
  SubgroupReport out;
  out.variable = options.subgroup;
  out.permutations = options.permutations;
  if (options.subgroup == SubgroupVariable::AgeBand) out.ageEdges = options.ageEdges;

  std::vector<std::string> membership;
  std::set<std::string> present;
  for (const LabelRecord* l : labels) {
    membership.push_back(group_of(*l, options));
    present.insert(membership.back());
  }
  const std::vector<std::string> groups = group_order(options.subgroup, options.ageEdges, present);

  for (std::size_t t = 0; t < tasks.size(); ++t) {
    if (!reports[t].available) continue;
    TaskSubgroups ts;
    ts.task = reports[t].task;
    std::map<std::string, std::vector<ScoredCase>> byGroup;
    for (std::size_t i = 0; i < labels.size(); ++i) byGroup[membership[i]].push_back(tasks[t].cases[i]);

    std::vector<std::string> comparable;
    for (const std::string& g : groups) {
      const auto& cases = byGroup[g];
      GroupSummary s;
      s.name = g;
      s.size = cases.size();
      s.positives = static_cast<std::size_t>(
          std::count_if(cases.begin(), cases.end(), [](const ScoredCase& c) { return c.label; }));
      if (s.positives > 0 && s.positives < s.size) {
        s.auroc = auroc(cases);
        comparable.push_back(g);
      }
      ts.groups.push_back(std::move(s));
    }
    const std::uint64_t taskSeed = derive_seed(options.seed, 0x100 + t);
    std::uint64_t pair = 0;
    for (std::size_t a = 0; a < comparable.size(); ++a) {
      for (std::size_t b = a + 1; b < comparable.size(); ++b) {
        const SubgroupComparison cmp = compare_subgroup_auroc(
            byGroup[comparable[a]], byGroup[comparable[b]], options.permutations, derive_seed(taskSeed, pair++));
        ts.comparisons.push_back({comparable[a], comparable[b], cmp.observedDelta, cmp.pValue});
      }
    }
    out.tasks.push_back(std::move(ts));
  }
  return out;
}

}  // namespace

EvalReport evaluate_cohort(std::span<const StudyOutputs> outputs, std::span<const LabelRecord> labels,
                           const ThresholdConfig& cfg, const EvalOptions& options) {
  if (outputs.empty()) throw ValidationError("no studies to evaluate");
  if (options.subgroup == SubgroupVariable::AgeBand &&
      !std::is_sorted(options.ageEdges.begin(), options.ageEdges.end(), std::less_equal<>())) {
    throw ValidationError("age band edges must be strictly increasing");
  }
  std::map<std::string_view, const LabelRecord*> labelById;
  for (const LabelRecord& l : labels) {
    if (!labelById.emplace(l.studyId, &l).second) throw ValidationError("duplicate label for study " + l.studyId);
  }
  std::vector<const StudyOutputs*> studies;
  for (const StudyOutputs& s : outputs) studies.push_back(&s);
  std::sort(studies.begin(), studies.end(),
            [](const StudyOutputs* a, const StudyOutputs* b) { return a->study_id() < b->study_id(); });
  for (std::size_t i = 1; i < studies.size(); ++i) {
    if (studies[i]->study_id() == studies[i - 1]->study_id()) {
      throw ValidationError("duplicate outputs for study " + studies[i]->study_id());
    }
  }

  std::vector<TaskData> tasks(1 + kAllFindings.size());
  std::vector<const LabelRecord*> studyLabels;
  for (const StudyOutputs* s : studies) {
    const auto it = labelById.find(s->study_id());
    if (it == labelById.end()) throw ValidationError("no label for study " + s->study_id());
    const LabelRecord& label = *it->second;
    studyLabels.push_back(&label);
    const TriageResult r = run_pipeline(*s, cfg);
    bool anyPositive = false;
    for (std::size_t k = 0; k < kAllFindings.size(); ++k) {
      const FindingKind kind = kAllFindings[k];
      const bool truth = finding_truth(label, kind);
      anyPositive = anyPositive || truth;
      tasks[1 + k].cases.push_back({r.scores[kind], truth});
      tasks[1 + k].preds.push_back(r.flags[kind]);
    }
    tasks[0].cases.push_back({abnormality_score(r.scores, cfg), anyPositive});
    tasks[0].preds.push_back(r.abnormal);
  }

  EvalReport report;
  report.seed = options.seed;
  report.resamples = options.resamples;
  report.level = options.level;
  report.studies = studies.size();
  const std::vector<std::string> names = task_names();
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    BootstrapOptions boot;
    boot.resamples = options.resamples;
    boot.level = options.level;
    boot.seed = derive_seed(options.seed, t);
    boot.workers = options.workers;
    report.tasks.push_back(evaluate_task(names[t], tasks[t], boot));
  }
  if (options.subgroup != SubgroupVariable::None) {
    report.subgroups = evaluate_subgroups(studyLabels, tasks, report.tasks, options);
  }
  return report;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

using Json = nlohmann::ordered_json;

Json opt(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<double> opt_double(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

Json ci_json(const std::optional<ConfidenceInterval>& ci) {
  if (!ci) return nullptr;
  Json j;
  j["low"] = ci->low;
  j["high"] = ci->high;
  j["level"] = ci->level;
  j["resamples"] = ci->resamples;
  j["seed"] = ci->seed;
  j["discarded"] = ci->discarded;
  return j;
}

std::optional<ConfidenceInterval> ci_from(const Json& j) {
  if (j.is_null()) return std::nullopt;
  ConfidenceInterval ci;
  ci.low = j.at("low").get<double>();
  ci.high = j.at("high").get<double>();
  ci.level = j.at("level").get<double>();
  ci.resamples = j.at("resamples").get<std::size_t>();
  ci.seed = j.at("seed").get<std::uint64_t>();
  ci.discarded = j.at("discarded").get<std::size_t>();
  return ci;
}

Json metric_json(const MetricEstimate& m) {
  Json j;
  j["value"] = opt(m.value);
  j["ci"] = ci_json(m.ci);
  return j;
}

MetricEstimate metric_from(const Json& j) { return {opt_double(j.at("value")), ci_from(j.at("ci"))}; }

const std::array<std::pair<const char*, MetricEstimate TaskReport::*>, 5> kMetricFields = {{
    {"auroc", &TaskReport::auroc},
    {"sensitivity", &TaskReport::sensitivity},
    {"specificity", &TaskReport::specificity},
    {"ppv", &TaskReport::ppv},
    {"npv", &TaskReport::npv},
}};

}  // namespace

std::string report_to_json(const EvalReport& report) {
  Json j;
  j["seed"] = report.seed;
  j["resamples"] = report.resamples;
  j["level"] = report.level;
  j["studies"] = report.studies;
  Json tasks = Json::array();
  for (const TaskReport& t : report.tasks) {
    Json tj;
    tj["task"] = t.task;
    tj["available"] = t.available;
    if (!t.available) tj["reason"] = t.unavailableReason;
    tj["positives"] = t.positives;
    tj["negatives"] = t.negatives;
    tj["counts"] = {{"tp", t.counts.tp}, {"fp", t.counts.fp}, {"tn", t.counts.tn}, {"fn", t.counts.fn}};
    for (const auto& [key, field] : kMetricFields) tj[key] = metric_json(t.*field);
    Json roc = Json::array();
    for (const RocPoint& p : t.roc) roc.push_back({p.fpr, p.tpr});
    tj["roc"] = roc;
    tasks.push_back(std::move(tj));
  }
  j["tasks"] = tasks;
  if (report.subgroups) {
    const SubgroupReport& s = *report.subgroups;
    Json sj;
    sj["variable"] = std::string(to_string(s.variable));
    if (s.variable == SubgroupVariable::AgeBand) sj["age_edges"] = s.ageEdges;
    sj["permutations"] = s.permutations;
    Json st = Json::array();
    for (const TaskSubgroups& ts : s.tasks) {
      Json tj;
      tj["task"] = ts.task;
      Json groups = Json::array();
      for (const GroupSummary& g : ts.groups) {
        groups.push_back({{"name", g.name}, {"size", g.size}, {"positives", g.positives}, {"auroc", opt(g.auroc)}});
      }
      tj["groups"] = groups;
      Json cmps = Json::array();
      for (const GroupComparison& c : ts.comparisons) {
        cmps.push_back({{"a", c.groupA}, {"b", c.groupB}, {"delta", c.observedDelta}, {"p_value", c.pValue}});
      }
      tj["comparisons"] = cmps;
      st.push_back(std::move(tj));
    }
    sj["tasks"] = st;
    j["subgroups"] = sj;
  }
  return j.dump(2) + "\n";
}

EvalReport report_from_json(std::string_view text) {
  try {
    const Json j = Json::parse(text);
    EvalReport r;
    r.seed = j.at("seed").get<std::uint64_t>();
    r.resamples = j.at("resamples").get<std::size_t>();
    r.level = j.at("level").get<double>();
    r.studies = j.at("studies").get<std::size_t>();
    for (const Json& tj : j.at("tasks")) {
      TaskReport t;
      t.task = tj.at("task").get<std::string>();
      t.available = tj.at("available").get<bool>();
      if (!t.available) t.unavailableReason = tj.at("reason").get<std::string>();
      t.positives = tj.at("positives").get<std::size_t>();
      t.negatives = tj.at("negatives").get<std::size_t>();
      const Json& c = tj.at("counts");
      t.counts = {c.at("tp").get<std::size_t>(), c.at("fp").get<std::size_t>(), c.at("tn").get<std::size_t>(),
                  c.at("fn").get<std::size_t>()};
      for (const auto& [key, field] : kMetricFields) t.*field = metric_from(tj.at(key));
      for (const Json& p : tj.at("roc")) t.roc.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      r.tasks.push_back(std::move(t));
    }
    if (j.contains("subgroups")) {
      const Json& sj = j.at("subgroups");
      SubgroupReport s;
      const auto v = parse_subgroup_variable(sj.at("variable").get<std::string>());
      if (!v) throw ValidationError("report: unknown subgroup variable");
      s.variable = *v;
      if (sj.contains("age_edges")) s.ageEdges = sj.at("age_edges").get<std::vector<int>>();
      s.permutations = sj.at("permutations").get<std::size_t>();
      for (const Json& tj : sj.at("tasks")) {
        TaskSubgroups ts;
        ts.task = tj.at("task").get<std::string>();
        for (const Json& g : tj.at("groups")) {
          ts.groups.push_back({g.at("name").get<std::string>(), g.at("size").get<std::size_t>(),
                               g.at("positives").get<std::size_t>(), opt_double(g.at("auroc"))});
        }
        for (const Json& c : tj.at("comparisons")) {
          ts.comparisons.push_back({c.at("a").get<std::string>(), c.at("b").get<std::string>(),
                                    c.at("delta").get<double>(), c.at("p_value").get<double>()});
        }
        s.tasks.push_back(std::move(ts));
      }
      r.subgroups = std::move(s);
    }
    return r;
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("report: ") + e.what());
  }
}

std::string report_summary(const EvalReport& report) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-18s %6s %6s  %-24s %-8s %-8s %-8s %-8s\n", "task", "pos", "neg",
                "auroc [ci]", "sens", "spec", "ppv", "npv");
  out += line;
  const auto fmt = [](const std::optional<double>& v) {
    char buf[32];
    if (!v) return std::string("-");
    std::snprintf(buf, sizeof buf, "%.4f", *v);
    return std::string(buf);
  };
  for (const TaskReport& t : report.tasks) {
    if (!t.available) {
      std::snprintf(line, sizeof line, "%-18s %6zu %6zu  unavailable (%s)\n", t.task.c_str(), t.positives,
                    t.negatives, t.unavailableReason.c_str());
      out += line;
      continue;
    }
    std::string auc = fmt(t.auroc.value);
    if (t.auroc.ci) auc += " [" + fmt(t.auroc.ci->low) + ", " + fmt(t.auroc.ci->high) + "]";
    std::snprintf(line, sizeof line, "%-18s %6zu %6zu  %-24s %-8s %-8s %-8s %-8s\n", t.task.c_str(), t.positives,
                  t.negatives, auc.c_str(), fmt(t.sensitivity.value).c_str(), fmt(t.specificity.value).c_str(),
                  fmt(t.ppv.value).c_str(), fmt(t.npv.value).c_str());
    out += line;
  }
  if (report.subgroups) {
    out += "\nsubgroups by " + std::string(to_string(report.subgroups->variable)) + "\n";
    for (const TaskSubgroups& ts : report.subgroups->tasks) {
      out += "  " + ts.task + ":";
      for (const GroupSummary& g : ts.groups) out += " " + g.name + "=" + fmt(g.auroc);
      for (const GroupComparison& c : ts.comparisons) {
        out += "  p(" + c.groupA + " vs " + c.groupB + ")=" + fmt(c.pValue);
      }
      out += "\n";
    }
  }
  return out;
}

}  // namespace trx
