#include "gemid/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gemid/dataset.hpp"
#include "gemid/error.hpp"
#include "gemid/random.hpp"
#include "gemid/text.hpp"

namespace gemid {

using nlohmann::ordered_json;

namespace {

std::vector<std::string> sorted_labels(const Partition& p, std::span<const std::size_t> rows) {
  std::set<std::string> s;
  for (auto r : rows) s.insert(p.records[r].label);
  return {s.begin(), s.end()};
}

std::vector<std::size_t> all_rows(const Partition& p) {
  std::vector<std::size_t> v(p.records.size());
  std::iota(v.begin(), v.end(), 0);
  return v;
}

/// Trains on train_rows of `tp`, predicts test_rows of `sp`, appending
/// into `out` keyed by test row index.
void run_split(const Partition& tp, std::span<const std::size_t> train_rows, const Partition& sp,
               std::span<const std::size_t> test_rows, const ModelSpec& spec,
               const std::vector<std::string>& features, std::uint64_t seed, const std::vector<std::string>& classes,
               std::map<std::size_t, PacketPrediction>& out, std::set<std::string>& unseen, std::size_t& dropped,
               std::optional<TimingResult>* timing) {
  const Dataset train = Dataset::from_partition(tp, features).select_rows(train_rows);
  const auto model = gemid::train(spec, train, seed);
  const std::set<std::string> known(model.classes().begin(), model.classes().end());
  std::vector<std::size_t> keep;
  for (auto r : test_rows) {
    if (known.count(sp.records[r].label)) {
      keep.push_back(r);
    } else {
      unseen.insert(sp.records[r].label);
      ++dropped;
    }
  }
  if (keep.empty()) return;
  const Dataset test = Dataset::from_partition(sp, features).select_rows(keep);
  const auto proba = model.predict_proba(test);
  std::vector<std::size_t> col;  // model class -> context class
  for (const auto& c : model.classes())
    col.push_back(static_cast<std::size_t>(std::lower_bound(classes.begin(), classes.end(), c) - classes.begin()));
  for (std::size_t i = 0; i < keep.size(); ++i) {
    const auto& rec = sp.records[keep[i]];
    PacketPrediction p;
    p.source_key = rec.meta.source_key;
    p.session = rec.meta.session;
    p.frame = rec.meta.frame;
    p.truth = rec.label;
    p.proba.assign(classes.size(), 0.0);
    std::size_t best = 0;
    for (std::size_t c = 0; c < col.size(); ++c) {
      p.proba[col[c]] = proba[i][c];
      if (proba[i][c] > proba[i][best]) best = c;
    }
    p.predicted = model.classes()[best];
    out.emplace(keep[i], std::move(p));
  }
  if (timing) *timing = time_inference([&] { (void)model.predict_proba(test); }, test.rows());
}

}  // namespace

ContextPredictions predict_context(const EvalContext& ctx, const std::vector<Partition>& parts,
                                   const ModelSpec& spec, const std::vector<std::string>& features,
                                   std::uint64_t seed, std::optional<TimingResult>* timing) {
  const Partition& tp = parts.at(ctx.train);
  const Partition& sp = parts.at(ctx.test);
  if (ctx.kind != ContextKind::CV) assert_disjoint(tp, sp);
  ContextPredictions out;
  std::map<std::size_t, PacketPrediction> rows;
  std::set<std::string> unseen;
  const auto tr_all = all_rows(tp);
  out.classes = sorted_labels(tp, tr_all);
  if (ctx.kind == ContextKind::CV) {
    const auto fold = fold_assignment(tp.records.size(), ctx.folds, derive_seed(seed, "cv-folds", ctx.train));
    for (int f = 0; f < ctx.folds; ++f) {
      std::vector<std::size_t> tr, te;
      for (std::size_t r = 0; r < tp.records.size(); ++r) (fold[r] == f ? te : tr).push_back(r);
      run_split(tp, tr, tp, te, spec, features, derive_seed(seed, "train", static_cast<std::uint64_t>(f)),
                out.classes, rows, unseen, out.dropped_rows, f + 1 == ctx.folds ? timing : nullptr);
    }
    out.train_rows = tp.records.size();
  } else {
    const auto te = all_rows(sp);
    const auto test_classes = sorted_labels(sp, te);
    std::vector<std::string> shared;
    std::set_intersection(out.classes.begin(), out.classes.end(), test_classes.begin(), test_classes.end(),
                          std::back_inserter(shared));
    if (shared.empty()) throw InputError("context " + ctx.name + " has no class on both sides");
    run_split(tp, tr_all, sp, te, spec, features, derive_seed(seed, "train"), out.classes, rows, unseen,
              out.dropped_rows, timing);
    out.train_rows = tp.records.size();
  }
  out.unseen.assign(unseen.begin(), unseen.end());
  for (auto& [_, p] : rows) out.rows.push_back(std::move(p));
  return out;
}

EvalReport report_from(const EvalContext& ctx, const ContextPredictions& preds) {
  EvalReport r;
  r.kind = ctx.kind;
  r.name = ctx.name;
  ConfusionMatrix cm(preds.classes);
  for (const auto& p : preds.rows) cm.add(p.truth, p.predicted);
  r.confusion = cm;
  if (cm.total() > 0) r.score = score(cm);
  for (std::size_t c = 0; c < cm.size(); ++c)
    if (cm.support(c) == 0) r.train_only.push_back(cm.classes()[c]);
  r.test_only = preds.unseen;
  r.train_rows = preds.train_rows;
  r.test_rows = preds.rows.size();
  return r;
}

EvalReport evaluate_context(const EvalContext& ctx, const std::vector<Partition>& parts, const ModelSpec& spec,
                            const std::vector<std::string>& features, std::uint64_t seed) {
  return report_from(ctx, predict_context(ctx, parts, spec, features, seed));
}

// ---------------------------------------------------------------------------
// Aggregation

ContextPredictions aggregate_predictions(const ContextPredictions& preds, const AggregationConfig& cfg) {
  if (cfg.group_size < 1) throw InputError("aggregation group size must be at least 1");
  const auto g = static_cast<std::size_t>(cfg.group_size);
  ContextPredictions out;
  out.classes = preds.classes;
  out.unseen = preds.unseen;
  out.train_rows = preds.train_rows;
  out.dropped_rows = preds.dropped_rows;

  // Members of each key in input order; keys ordered by first appearance.
  std::map<std::pair<std::string, std::string>, std::size_t> key_index;
  std::vector<std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < preds.rows.size(); ++i) {
    const auto& p = preds.rows[i];
    auto [it, fresh] = key_index.emplace(std::make_pair(p.source_key, p.session), members.size());
    if (fresh) members.emplace_back();
    members[it->second].push_back(i);
  }
  struct Group {
    std::size_t first;
    PacketPrediction pred;
  };
  std::vector<Group> groups;
  const std::size_t k = preds.classes.size();
  for (const auto& m : members) {
    for (std::size_t b = 0; b < m.size(); b += g) {
      const std::size_t e = std::min(m.size(), b + g);
      std::map<std::string, std::size_t> votes;
      std::vector<double> mean(k, 0.0);
      for (std::size_t i = b; i < e; ++i) {
        const auto& p = preds.rows[m[i]];
        ++votes[p.predicted];
        for (std::size_t c = 0; c < k && c < p.proba.size(); ++c) mean[c] += p.proba[c];
      }
      for (auto& v : mean) v /= static_cast<double>(e - b);
      auto mean_of = [&](const std::string& cls) {
        const auto it = std::lower_bound(preds.classes.begin(), preds.classes.end(), cls);
        return it != preds.classes.end() && *it == cls ? mean[static_cast<std::size_t>(it - preds.classes.begin())]
                                                       : 0.0;
      };
      // votes iterates in name order, so strict comparisons keep the
      // smaller name on a full tie.
      const std::string* best = nullptr;
      std::size_t best_votes = 0;
      double best_mean = 0;
      for (const auto& [cls, n] : votes) {
        const double pm = mean_of(cls);
        if (!best || n > best_votes || (n == best_votes && pm > best_mean)) {
          best = &cls;
          best_votes = n;
          best_mean = pm;
        }
      }
      const auto& head = preds.rows[m[b]];
      PacketPrediction gp;
      gp.source_key = head.source_key;
      gp.session = head.session;
      gp.frame = head.frame;
      gp.truth = head.truth;
      gp.predicted = *best;
      gp.proba = std::move(mean);
      groups.push_back({m[b], std::move(gp)});
    }
  }
  std::stable_sort(groups.begin(), groups.end(), [](const Group& a, const Group& b) { return a.first < b.first; });
  for (auto& gr : groups) out.rows.push_back(std::move(gr.pred));
  return out;
}

EvalReport evaluate_aggregated(const EvalContext& ctx, const std::vector<Partition>& parts, const ModelSpec& spec,
                               const std::vector<std::string>& features, std::uint64_t seed,
                               const AggregationConfig& cfg) {
  auto r = report_from(ctx, aggregate_predictions(predict_context(ctx, parts, spec, features, seed), cfg));
  r.granularity = "group";
  return r;
}

// ---------------------------------------------------------------------------
// Study

StudyPlan StudyPlan::from_json(std::string_view text, const std::filesystem::path& base) {
  StudyPlan plan;
  plan.base = base;
  try {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_object()) throw InputError("study plan must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
      const auto& key = it.key();
      if (key != "seed" && key != "folds" && key != "aggregate" && key != "sweep" && key != "timing" &&
          key != "markdown" && key != "methods")
        throw InputError("unknown study setting '" + key + "'");
    }
    plan.seed = j.value("seed", plan.seed);
    plan.folds = j.value("folds", plan.folds);
    if (j.contains("aggregate") && !j["aggregate"].is_null()) plan.aggregate = j["aggregate"].get<int>();
    if (j.contains("sweep")) plan.sweep = j["sweep"].get<std::vector<int>>();
    plan.timing = j.value("timing", plan.timing);
    plan.markdown = j.value("markdown", plan.markdown);
    const auto& methods = j.at("methods");
    if (!methods.is_array() || methods.empty()) throw InputError("study plan needs at least one method");
    std::set<std::string> names;
    for (const auto& mj : methods) {
      StudyMethod m;
      m.name = mj.at("name").get<std::string>();
      if (m.name.empty() || !names.insert(m.name).second)
        throw InputError("study method names must be unique and non-empty");
      for (const auto& p : mj.at("partitions")) m.partitions.emplace_back(p.get<std::string>());
      if (m.partitions.size() < 2) throw InputError("method '" + m.name + "' needs at least two partitions");
      m.model = ModelSpec::from_json(mj.at("model").dump());
      if (mj.contains("features")) {
        const auto& f = mj["features"];
        if (f.is_array()) {
          m.features = f.get<std::vector<std::string>>();
        } else if (f.is_string() && f.get<std::string>() != "all") {
          std::filesystem::path fp = f.get<std::string>();
          m.features = load_feature_list(fp.is_absolute() ? fp : base / fp);
        } else if (!f.is_string()) {
          throw InputError("features of method '" + m.name + "' must be a list, a path or \"all\"");
        }
      }
      plan.methods.push_back(std::move(m));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad study plan: ") + e.what());
  }
  if (plan.folds < 2) throw InputError("folds must be at least 2");
  if (plan.aggregate && *plan.aggregate < 1) throw InputError("aggregate must be at least 1");
  for (int g : plan.sweep)
    if (g < 1) throw InputError("sweep group sizes must be at least 1");
  return plan;
}

std::string StudyPlan::to_json() const {
  ordered_json j;
  j["seed"] = seed;
  j["folds"] = folds;
  j["aggregate"] = aggregate ? ordered_json(*aggregate) : ordered_json(nullptr);
  j["sweep"] = sweep;
  j["timing"] = timing;
  j["markdown"] = markdown;
  auto& ms = j["methods"] = ordered_json::array();
  for (const auto& m : methods) {
    ordered_json mj;
    mj["name"] = m.name;
    auto& ps = mj["partitions"] = ordered_json::array();
    for (const auto& p : m.partitions) ps.push_back(p.generic_string());
    mj["model"] = ordered_json::parse(m.model.to_json());
    mj["features"] = m.features ? ordered_json(*m.features) : ordered_json("all");
    ms.push_back(std::move(mj));
  }
  return j.dump(2) + "\n";
}

std::optional<double> MethodResult::mean(ContextKind k, bool agg) const {
  const auto& rs = agg ? aggregated : reports;
  double acc = 0;
  int n = 0;
  for (const auto& r : rs)
    if (r.kind == k) {
      acc += r.score.macro_f1;
      ++n;
    }
  if (n == 0) return std::nullopt;
  return acc / n;
}

StudyResult run_study(const StudyPlan& plan) {
  if (plan.methods.empty()) throw InputError("study plan has no methods");
  StudyResult out;
  for (const auto& m : plan.methods) {
    std::vector<Partition> parts;
    for (const auto& p : m.partitions) parts.push_back(load_partition(p.is_absolute() ? p : plan.base / p));
    MethodResult mr;
    mr.name = m.name;
    mr.model = m.model;
    mr.features = m.features ? *m.features : parts.front().schema.active_names();
    const auto contexts = build_contexts(parts, plan.folds);
    // Contexts run one after another so the timing pass is not contended;
    // training and prediction parallelize internally.
    std::vector<ContextPredictions> preds;
    for (std::size_t c = 0; c < contexts.size(); ++c) {
      std::optional<TimingResult> t;
      preds.push_back(predict_context(contexts[c], parts, m.model, mr.features, derive_seed(plan.seed, "study", c),
                                      plan.timing ? &t : nullptr));
      mr.reports.push_back(report_from(contexts[c], preds.back()));
      mr.timing.push_back(t);
    }
    if (plan.aggregate) {
      for (std::size_t c = 0; c < contexts.size(); ++c) {
        auto r = report_from(contexts[c], aggregate_predictions(preds[c], {*plan.aggregate}));
        r.granularity = "group";
        mr.aggregated.push_back(std::move(r));
      }
      for (int g : plan.sweep) {
        double acc = 0;
        int n = 0;
        for (std::size_t c = 0; c < contexts.size(); ++c) {
          if (contexts[c].kind != ContextKind::DD) continue;
          acc += report_from(contexts[c], aggregate_predictions(preds[c], {g})).score.macro_f1;
          ++n;
        }
        if (n) mr.sweep.emplace_back(g, acc / n);
      }
    }
    out.methods.push_back(std::move(mr));
  }
  return out;
}

namespace {

void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream o(p, std::ios::binary);
  if (!o) throw InputError("cannot write " + p.string());
  o << s;
}

std::string file_safe(std::string s) {
  for (auto& c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
  return s;
}

ordered_json report_json(const EvalReport& r) {
  ordered_json j;
  j["kind"] = std::string(to_string(r.kind));
  j["context"] = r.name;
  j["granularity"] = r.granularity;
  j["train_rows"] = r.train_rows;
  j["test_rows"] = r.test_rows;
  j["train_only"] = r.train_only;
  j["test_only"] = r.test_only;
  j["score"] = ordered_json::parse(r.score.to_json());
  return j;
}

struct Row {
  ContextKind kind;
  std::string name;
};

std::vector<Row> context_union(const StudyResult& r) {
  std::vector<Row> rows;
  for (const auto& m : r.methods)
    for (const auto& rep : m.reports)
      if (std::none_of(rows.begin(), rows.end(),
                       [&](const Row& x) { return x.kind == rep.kind && x.name == rep.name; }))
        rows.push_back({rep.kind, rep.name});
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.kind < b.kind; });
  return rows;
}

std::string table1(const StudyResult& r, bool agg) {
  std::ostringstream o;
  o << "kind,context";
  for (const auto& m : r.methods) o << ',' << csv_cell(m.name);
  o << '\n';
  for (const auto& row : context_union(r)) {
    o << to_string(row.kind) << ',' << csv_cell(row.name);
    for (const auto& m : r.methods) {
      o << ',';
      for (const auto& rep : agg ? m.aggregated : m.reports)
        if (rep.kind == row.kind && rep.name == row.name) o << format_double(rep.score.macro_f1);
    }
    o << '\n';
  }
  for (auto k : {ContextKind::CV, ContextKind::SS, ContextKind::DD}) {
    o << "mean," << to_string(k);
    for (const auto& m : r.methods) {
      o << ',';
      if (auto v = m.mean(k, agg)) o << format_double(*v);
    }
    o << '\n';
  }
  return o.str();
}

std::string table1_markdown(const StudyResult& r) {
  std::ostringstream o;
  o << "| Kind | Context |";
  for (const auto& m : r.methods) o << ' ' << m.name << " |";
  o << "\n|---|---|";
  for (std::size_t i = 0; i < r.methods.size(); ++i) o << "---|";
  o << '\n';
  for (const auto& row : context_union(r)) {
    o << "| " << to_string(row.kind) << " | " << row.name << " |";
    for (const auto& m : r.methods) {
      o << ' ';
      for (const auto& rep : m.reports)
        if (rep.kind == row.kind && rep.name == row.name) o << format_fixed(rep.score.macro_f1, 3);
      o << " |";
    }
    o << '\n';
  }
  for (auto k : {ContextKind::CV, ContextKind::SS, ContextKind::DD}) {
    o << "| **Mean** | " << to_string(k) << " |";
    for (const auto& m : r.methods) {
      o << ' ';
      if (auto v = m.mean(k)) o << "**" << format_fixed(*v, 3) << "**";
      o << " |";
    }
    o << '\n';
  }
  return o.str();
}

std::string table2(const StudyResult& r) {
  std::vector<std::string> dd;
  for (const auto& row : context_union(r))
    if (row.kind == ContextKind::DD) dd.push_back(row.name);
  std::ostringstream o;
  o << "method,device";
  for (const auto& n : dd) o << ',' << csv_cell(n);
  o << ",mean\n";
  for (const auto& m : r.methods) {
    std::set<std::string> devices;
    for (const auto& rep : m.reports) {
      for (const auto& c : rep.confusion.classes()) devices.insert(c);
      for (const auto& c : rep.test_only) devices.insert(c);
    }
    for (const auto& dev : devices) {
      o << csv_cell(m.name) << ',' << csv_cell(dev);
      double acc = 0;
      int n = 0;
      for (const auto& name : dd) {
        o << ',';
        for (const auto& rep : m.reports) {
          if (rep.kind != ContextKind::DD || rep.name != name) continue;
          for (const auto& cs : rep.score.classes)
            if (cs.name == dev && cs.support > 0) {
              o << format_double(cs.f1);
              acc += cs.f1;
              ++n;
            }
        }
      }
      o << ',';
      if (n) o << format_double(acc / n);
      o << '\n';
    }
  }
  return o.str();
}

}  // namespace

void write_study(const StudyResult& r, const StudyPlan& plan, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  ordered_json suite;
  suite["seed"] = plan.seed;
  suite["folds"] = plan.folds;
  auto& ms = suite["methods"] = ordered_json::array();
  ordered_json timing;
  timing["note"] = "wall-clock inference time on the test side; varies between runs";
  auto& tm = timing["methods"] = ordered_json::array();
  for (const auto& m : r.methods) {
    ordered_json mj;
    mj["name"] = m.name;
    mj["model"] = ordered_json::parse(m.model.to_json());
    mj["features"] = m.features;
    auto& cs = mj["contexts"] = ordered_json::array();
    for (std::size_t i = 0; i < m.reports.size(); ++i) {
      auto j = report_json(m.reports[i]);
      if (!m.aggregated.empty()) j["aggregated"] = report_json(m.aggregated[i]);
      cs.push_back(std::move(j));
    }
    auto& means = mj["means"];
    for (auto k : {ContextKind::CV, ContextKind::SS, ContextKind::DD}) {
      const auto v = m.mean(k);
      means[std::string(to_string(k))] = v ? ordered_json(*v) : ordered_json(nullptr);
    }
    if (!m.aggregated.empty()) {
      auto& am = mj["aggregated_means"];
      am["group_size"] = *plan.aggregate;
      for (auto k : {ContextKind::CV, ContextKind::SS, ContextKind::DD}) {
        const auto v = m.mean(k, true);
        am[std::string(to_string(k))] = v ? ordered_json(*v) : ordered_json(nullptr);
      }
    }
    ms.push_back(std::move(mj));

    ordered_json tj;
    tj["name"] = m.name;
    auto& tc = tj["contexts"] = ordered_json::array();
    for (std::size_t i = 0; i < m.reports.size(); ++i) {
      if (!m.timing[i]) continue;
      tc.push_back({{"context", m.reports[i].name},
                    {"median_seconds_per_1k", m.timing[i]->median_seconds_per_1k},
                    {"mean_seconds_per_1k", m.timing[i]->mean_seconds_per_1k},
                    {"repetitions", m.timing[i]->repetitions}});
    }
    tm.push_back(std::move(tj));

    for (const auto& rep : m.reports)
      write_text(dir / ("confusion_" + file_safe(m.name) + "_" + file_safe(rep.name) + ".csv"),
                 rep.confusion.to_csv());
  }
  write_text(dir / "suite_report.json", suite.dump(2) + "\n");
  write_text(dir / "table1.csv", table1(r, false));
  write_text(dir / "table2_per_device.csv", table2(r));
  if (plan.timing) write_text(dir / "timing.json", timing.dump(2) + "\n");
  if (plan.markdown) write_text(dir / "table1.md", table1_markdown(r));
  if (plan.aggregate) {
    write_text(dir / "table1_aggregated.csv", table1(r, true));
    std::ostringstream o;
    o << "method,group_size,dd_mean_macro_f1\n";
    for (const auto& m : r.methods)
      for (const auto& [g, v] : m.sweep) o << csv_cell(m.name) << ',' << g << ',' << format_double(v) << '\n';
    write_text(dir / "aggregation_sweep.csv", o.str());
  }
}

}  // namespace gemid
