#include "gemid/selection.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "gemid/error.hpp"
#include "gemid/metrics.hpp"
#include "gemid/parallel.hpp"
#include "gemid/random.hpp"
#include "gemid/text.hpp"

namespace gemid {

using nlohmann::ordered_json;

std::string_view to_string(ContextKind k) {
  switch (k) {
    case ContextKind::CV: return "CV";
    case ContextKind::SS: return "SS";
    case ContextKind::DD: return "DD";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Contexts

void assert_disjoint(const Partition& train, const Partition& test) {
  std::unordered_map<std::string, int> ids;
  ids.reserve(train.records.size());
  for (const auto& r : train.records) ids.emplace(r.meta.record_id(), 0);
  for (const auto& r : test.records) {
    const auto id = r.meta.record_id();
    if (ids.count(id))
      throw LeakageError("record " + id + " appears in both " + train.name + " and " + test.name);
  }
}

std::vector<EvalContext> build_contexts(const std::vector<Partition>& parts, int folds) {
  if (parts.empty()) throw InputError("no partitions given");
  if (folds < 2) throw InputError("cross-validation needs at least 2 folds");
  std::set<std::string> names;
  for (const auto& p : parts) {
    if (p.family.empty()) throw InputError("partition '" + p.name + "' declares no dataset family");
    if (!names.insert(p.name).second) throw InputError("duplicate partition '" + p.name + "'");
  }
  std::vector<EvalContext> out;
  for (std::size_t i = 0; i < parts.size(); ++i)
    out.push_back({ContextKind::CV, parts[i].name, i, i, folds});
  auto pairs = [&](ContextKind kind) {
    for (std::size_t i = 0; i < parts.size(); ++i)
      for (std::size_t j = 0; j < parts.size(); ++j) {
        if (i == j) continue;
        const bool same = parts[i].family == parts[j].family;
        if (kind == ContextKind::SS && (!same || parts[i].session == parts[j].session)) continue;
        if (kind == ContextKind::DD && same) continue;
        assert_disjoint(parts[i], parts[j]);
        out.push_back({kind, parts[i].name + "|" + parts[j].name, i, j, folds});
      }
  };
  pairs(ContextKind::SS);
  pairs(ContextKind::DD);
  return out;
}

std::vector<int> fold_assignment(std::size_t rows, int folds, std::uint64_t seed) {
  std::vector<std::size_t> perm(rows);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<int> fold(rows);
  for (std::size_t k = 0; k < rows; ++k) fold[perm[k]] = static_cast<int>(k % static_cast<std::size_t>(folds));
  return fold;
}

namespace {

Dataset restrict_to_classes(const Dataset& test, const std::vector<std::string>& classes) {
  const std::set<std::string> known(classes.begin(), classes.end());
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < test.rows(); ++r)
    if (known.count(test.labels[r])) keep.push_back(r);
  if (keep.size() == test.rows()) return test;
  return test.select_rows(keep);
}

std::string mask_key(const Mask& m) {
  std::string s(m.size(), '0');
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i]) s[i] = '1';
  return s;
}

std::vector<std::uint32_t> mask_indices(const Mask& m) {
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i]) out.push_back(static_cast<std::uint32_t>(i));
  return out;
}

std::vector<std::size_t> mask_members(const Mask& m) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i]) out.push_back(i);
  return out;
}

/// Class index predictions of `tree` on `test`; ties go to the lower index.
ConfusionMatrix tree_confusion(const DecisionTree& tree, const BinnedData& b, const Dataset& test) {
  ConfusionMatrix cm(b.classes);
  const std::size_t k = b.classes.size();
  for (std::size_t r = 0; r < test.rows(); ++r) {
    const double* p = tree.proba_row(test, r);
    const std::size_t pred = static_cast<std::size_t>(std::max_element(p, p + k) - p);
    const auto t = std::lower_bound(b.classes.begin(), b.classes.end(), test.labels[r]) - b.classes.begin();
    cm.add(static_cast<std::size_t>(t), pred);
  }
  return cm;
}

}  // namespace

std::vector<ContextSplit> materialize(const EvalContext& ctx, const std::vector<Partition>& parts,
                                      const std::vector<std::string>& features, std::uint64_t seed) {
  std::vector<ContextSplit> out;
  if (ctx.kind == ContextKind::CV) {
    const Dataset all = Dataset::from_partition(parts.at(ctx.train), features);
    const auto fold = fold_assignment(all.rows(), ctx.folds, derive_seed(seed, "cv-folds", ctx.train));
    for (int f = 0; f < ctx.folds; ++f) {
      std::vector<std::size_t> tr, te;
      for (std::size_t r = 0; r < all.rows(); ++r) (fold[r] == f ? te : tr).push_back(r);
      ContextSplit s{all.select_rows(tr), {}};
      s.test = restrict_to_classes(all.select_rows(te), s.train.classes());
      out.push_back(std::move(s));
    }
    return out;
  }
  ContextSplit s{Dataset::from_partition(parts.at(ctx.train), features), {}};
  s.test = restrict_to_classes(Dataset::from_partition(parts.at(ctx.test), features), s.train.classes());
  out.push_back(std::move(s));
  return out;
}

// ---------------------------------------------------------------------------
// Scan and vote

ModelSpec scan_tree_spec() {
  ModelSpec s;
  s.algorithm = Algorithm::DT;
  s.criterion = Criterion::Entropy;
  s.max_depth = 14;
  return s;
}

std::string KappaTable::to_csv() const {
  std::ostringstream o;
  o << "feature";
  for (const auto& c : contexts) o << ',' << csv_cell(std::string(to_string(c.kind)) + ":" + c.name);
  o << '\n';
  for (std::size_t f = 0; f < features.size(); ++f) {
    o << csv_cell(features[f]);
    for (double v : kappa[f]) o << ',' << format_double(v);
    o << '\n';
  }
  return o.str();
}

KappaTable univariate_scan(const std::vector<Partition>& parts, const std::vector<EvalContext>& contexts,
                           const std::vector<std::string>& features, std::uint64_t seed) {
  if (contexts.empty()) throw InputError("univariate scan needs at least one context");
  KappaTable kt;
  kt.features = features;
  kt.contexts = contexts;
  kt.kappa.assign(features.size(), std::vector<double>(contexts.size(), 0.0));
  const ModelSpec spec = scan_tree_spec();
  // One context at a time keeps only its splits in memory.
  for (std::size_t c = 0; c < contexts.size(); ++c) {
    const auto splits = materialize(contexts[c], parts, features, seed);
    std::vector<BinnedData> binned(splits.size());
    parallel_for(splits.size(), [&](std::size_t s) { binned[s] = BinnedData::build(splits[s].train); });
    std::vector<double> cell(features.size() * splits.size());
    parallel_for(cell.size(), [&](std::size_t i) {
      const std::size_t f = i / splits.size(), s = i % splits.size();
      const auto& b = binned[s];
      std::vector<std::uint32_t> rows(b.rows());
      std::iota(rows.begin(), rows.end(), 0u);
      const std::uint32_t feat = static_cast<std::uint32_t>(f);
      const auto tree = DecisionTree::fit(b, rows, {&feat, 1}, spec, tree_seed(seed, 0));
      const auto cm = tree_confusion(tree, b, splits[s].test);
      cell[i] = cm.total() == 0 ? 0.0 : kappa_detail(cm).value;
    });
    for (std::size_t f = 0; f < features.size(); ++f) {
      double acc = 0;
      for (std::size_t s = 0; s < splits.size(); ++s) acc += cell[f * splits.size() + s];
      kt.kappa[f][c] = acc / static_cast<double>(splits.size());
    }
  }
  return kt;
}

std::vector<Vote> vote_filter(const KappaTable& kt, const VoteConfig& cfg) {
  std::vector<Vote> out;
  for (std::size_t f = 0; f < kt.features.size(); ++f) {
    Vote v;
    v.feature = kt.features[f];
    for (std::size_t c = 0; c < kt.contexts.size(); ++c) {
      if (!(kt.kappa[f][c] >= cfg.kappa_cut)) continue;
      switch (kt.contexts[c].kind) {
        case ContextKind::CV: ++v.cv_votes; break;
        case ContextKind::SS: ++v.ss_votes; break;
        case ContextKind::DD: ++v.dd_votes; break;
      }
    }
    v.selected = (v.dd_votes >= cfg.quota || v.ss_votes >= cfg.quota) && v.dd_votes >= cfg.min_dd;
    out.push_back(v);
  }
  return out;
}

std::string votes_csv(const std::vector<Vote>& votes) {
  std::ostringstream o;
  o << "feature,cv_votes,ss_votes,dd_votes,selected\n";
  for (const auto& v : votes)
    o << csv_cell(v.feature) << ',' << v.cv_votes << ',' << v.ss_votes << ',' << v.dd_votes << ','
      << (v.selected ? 1 : 0) << '\n';
  return o.str();
}

// ---------------------------------------------------------------------------
// GA

GaRunResult ga_optimize(std::size_t length, const MaskFitness& fitness, const GaConfig& cfg,
                        std::uint64_t seed) {
  if (length == 0) throw InputError("GA needs at least one candidate feature");
  if (cfg.population < 2 || cfg.generations < 0 || cfg.tournament < 1 || cfg.elitism < 0 ||
      cfg.elitism > cfg.population || cfg.crossover < 0 || cfg.crossover > 1 || cfg.mutation > 1)
    throw InputError("invalid GA configuration");
  const double mut = cfg.mutation < 0 ? 1.0 / static_cast<double>(length) : cfg.mutation;
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> bit(0, length - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto repair = [&](Mask& m) {
    if (std::find(m.begin(), m.end(), true) == m.end()) m[bit(rng)] = true;
  };

  std::map<std::string, double> cache;
  auto score_all = [&](const std::vector<Mask>& pop) {
    std::vector<std::string> keys;
    std::vector<const Mask*> todo;
    std::set<std::string> pending;
    for (const auto& m : pop) {
      auto k = mask_key(m);
      if (!cache.count(k) && pending.insert(k).second) {
        keys.push_back(std::move(k));
        todo.push_back(&m);
      }
    }
    const auto vals = parallel_map<double>(todo.size(), [&](std::size_t i) { return fitness(*todo[i]); });
    for (std::size_t i = 0; i < keys.size(); ++i) cache.emplace(keys[i], vals[i]);
    std::vector<double> out;
    for (const auto& m : pop) out.push_back(cache.at(mask_key(m)));
    return out;
  };
  // Index of the best individual; ties go to the lower index.
  auto best_of = [](const std::vector<double>& fit) {
    return static_cast<std::size_t>(std::max_element(fit.begin(), fit.end()) - fit.begin());
  };

  const auto n = static_cast<std::size_t>(cfg.population);
  std::vector<Mask> pop(n, Mask(length));
  for (auto& m : pop) {
    for (std::size_t i = 0; i < length; ++i) m[i] = unit(rng) < 0.5;
    repair(m);
  }
  auto fit = score_all(pop);
  GaRunResult r;
  r.trace.push_back(fit[best_of(fit)]);

  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  auto tournament = [&]() -> const Mask& {
    std::size_t best = pick(rng);
    for (int t = 1; t < cfg.tournament; ++t) {
      const std::size_t c = pick(rng);
      if (fit[c] > fit[best] || (fit[c] == fit[best] && c < best)) best = c;
    }
    return pop[best];
  };

  for (int g = 0; g < cfg.generations; ++g) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fit[a] > fit[b]; });
    std::vector<Mask> next;
    next.reserve(n);
    for (int e = 0; e < cfg.elitism; ++e) next.push_back(pop[order[static_cast<std::size_t>(e)]]);
    while (next.size() < n) {
      const Mask& a = tournament();
      const Mask& b = tournament();
      Mask child = a;
      if (unit(rng) < cfg.crossover)
        for (std::size_t i = 0; i < length; ++i)
          if (unit(rng) < 0.5) child[i] = b[i];
      for (std::size_t i = 0; i < length; ++i)
        if (unit(rng) < mut) child[i] = !child[i];
      repair(child);
      next.push_back(std::move(child));
    }
    pop = std::move(next);
    fit = score_all(pop);
    r.trace.push_back(fit[best_of(fit)]);
  }
  const std::size_t b = best_of(fit);
  r.mask = pop[b];
  r.fitness = fit[b];
  r.evaluations = cache.size();
  return r;
}

DdCase::DdCase(std::string name, Dataset train, Dataset test, std::uint64_t seed)
    : name_(std::move(name)), train_(std::move(train)), seed_(seed) {
  binned_ = BinnedData::build(train_);
  test_ = restrict_to_classes(test, binned_.classes);
  if (test_.rows() == 0) throw InputError("DD case " + name_ + " shares no class between train and test");
  if (test_.features != train_.features) throw IncompatibleError("DD case sides have different features");
}

double DdCase::fitness(const Mask& mask) const {
  if (mask.size() != width()) throw InputError("mask length does not match candidate count");
  const auto feats = mask_indices(mask);
  if (feats.empty()) return 0.0;
  std::vector<std::uint32_t> rows(binned_.rows());
  std::iota(rows.begin(), rows.end(), 0u);
  const auto tree = DecisionTree::fit(binned_, rows, feats, scan_tree_spec(), tree_seed(seed_, 0));
  return macro_f1(tree_confusion(tree, binned_, test_));
}

GaRunResult ga_select(const DdCase& dd_case, const GaConfig& cfg, std::uint64_t seed) {
  auto r = ga_optimize(dd_case.width(), [&](const Mask& m) { return dd_case.fitness(m); }, cfg, seed);
  r.dd_case = dd_case.name();
  return r;
}

std::vector<std::vector<std::size_t>> intersection_vote(const std::vector<GaRunResult>& results) {
  if (results.size() < 2) throw InputError("intersection vote needs at least two GA runs");
  const std::size_t len = results.front().mask.size();
  std::vector<int> count(len, 0);
  for (const auto& r : results) {
    if (r.mask.size() != len) throw InputError("GA masks differ in length");
    for (std::size_t i = 0; i < len; ++i) count[i] += r.mask[i];
  }
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t k = 2; k <= results.size(); ++k) {
    std::vector<std::size_t> g;
    for (std::size_t i = 0; i < len; ++i)
      if (static_cast<std::size_t>(count[i]) >= k) g.push_back(i);
    groups.push_back(std::move(g));
  }
  return groups;
}

std::vector<CrossEvalRow> cross_evaluate(const std::vector<FeatureSet>& sets,
                                         const std::vector<const DdCase*>& cases) {
  if (sets.empty()) throw InputError("cross evaluation needs at least one feature set");
  if (cases.empty()) throw InputError("cross evaluation needs at least one DD case");
  const std::size_t width = cases.front()->width();
  std::vector<double> cell(sets.size() * cases.size());
  parallel_for(cell.size(), [&](std::size_t i) {
    const auto& s = sets[i / cases.size()];
    Mask m(width);
    for (auto f : s.members) m.at(f) = true;
    cell[i] = cases[i % cases.size()]->fitness(m);
  });
  std::vector<CrossEvalRow> rows;
  for (std::size_t s = 0; s < sets.size(); ++s) {
    CrossEvalRow r;
    r.set = sets[s];
    r.empty = sets[s].members.empty();
    r.f1.assign(cell.begin() + static_cast<std::ptrdiff_t>(s * cases.size()),
                cell.begin() + static_cast<std::ptrdiff_t>((s + 1) * cases.size()));
    double acc = 0;
    for (double v : r.f1) acc += v;
    r.mean = acc / static_cast<double>(cases.size());
    rows.push_back(std::move(r));
  }
  return rows;
}

const CrossEvalRow& pick_final(const std::vector<CrossEvalRow>& rows) {
  if (rows.empty()) throw InputError("no feature sets to pick from");
  const CrossEvalRow* best = nullptr;
  for (const auto& r : rows) {
    if (r.empty) continue;
    if (!best || r.mean > best->mean ||
        (r.mean == best->mean && (r.set.members.size() < best->set.members.size() ||
                                  (r.set.members.size() == best->set.members.size() && r.set.k < best->set.k))))
      best = &r;
  }
  if (!best) throw InputError("every feature set is empty");
  return *best;
}

// ---------------------------------------------------------------------------
// Config

std::string SelectionConfig::to_json() const {
  ordered_json j;
  j["seed"] = seed;
  j["folds"] = folds;
  j["vote"] = {{"kappa_cut", vote.kappa_cut}, {"quota", vote.quota}, {"min_dd", vote.min_dd}};
  j["ga"] = {{"population", ga.population}, {"generations", ga.generations},
             {"tournament", ga.tournament}, {"crossover", ga.crossover},
             {"mutation", ga.mutation},     {"elitism", ga.elitism}};
  return j.dump(2) + "\n";
}

SelectionConfig SelectionConfig::from_json(std::string_view text) {
  SelectionConfig c;
  try {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_object()) throw InputError("selection config must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
      const auto& key = it.key();
      const auto& v = it.value();
      if (key == "seed") {
        c.seed = v.get<std::uint64_t>();
      } else if (key == "folds") {
        c.folds = v.get<int>();
      } else if (key == "vote") {
        for (auto e = v.begin(); e != v.end(); ++e) {
          if (e.key() == "kappa_cut") c.vote.kappa_cut = e.value().get<double>();
          else if (e.key() == "quota") c.vote.quota = e.value().get<int>();
          else if (e.key() == "min_dd") c.vote.min_dd = e.value().get<int>();
          else throw InputError("unknown vote setting '" + e.key() + "'");
        }
      } else if (key == "ga") {
        for (auto e = v.begin(); e != v.end(); ++e) {
          if (e.key() == "population") c.ga.population = e.value().get<int>();
          else if (e.key() == "generations") c.ga.generations = e.value().get<int>();
          else if (e.key() == "tournament") c.ga.tournament = e.value().get<int>();
          else if (e.key() == "crossover") c.ga.crossover = e.value().get<double>();
          else if (e.key() == "mutation") c.ga.mutation = e.value().get<double>();
          else if (e.key() == "elitism") c.ga.elitism = e.value().get<int>();
          else throw InputError("unknown GA setting '" + e.key() + "'");
        }
      } else {
        throw InputError("unknown selection setting '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad selection config: ") + e.what());
  }
  if (c.folds < 2) throw InputError("folds must be at least 2");
  return c;
}

// ---------------------------------------------------------------------------
// Pipeline

SelectionResult run_selection(const std::vector<Partition>& parts, const SelectionConfig& cfg) {
  if (parts.empty()) throw InputError("no partitions given");
  const auto hash = parts.front().schema.hash();
  for (const auto& p : parts)
    if (p.schema.hash() != hash)
      throw IncompatibleError("partition '" + p.name + "' was extracted with a different schema");
  const auto contexts = build_contexts(parts, cfg.folds);
  std::vector<EvalContext> dd;
  for (const auto& c : contexts)
    if (c.kind == ContextKind::DD) dd.push_back(c);
  if (dd.empty()) throw InputError("selection needs partitions from at least two dataset families");

  SelectionResult r;
  r.schema_hash = hash;
  const auto all = parts.front().schema.active_names();
  r.kappa = univariate_scan(parts, contexts, all, derive_seed(cfg.seed, "scan"));
  r.votes = vote_filter(r.kappa, cfg.vote);
  for (const auto& v : r.votes)
    if (v.selected) r.candidates.push_back(v.feature);
  if (r.candidates.empty()) throw InputError("no feature passed the vote");

  std::vector<DdCase> cases;
  cases.reserve(dd.size());
  for (std::size_t i = 0; i < dd.size(); ++i)
    cases.emplace_back(dd[i].name, Dataset::from_partition(parts[dd[i].train], r.candidates),
                       Dataset::from_partition(parts[dd[i].test], r.candidates),
                       derive_seed(cfg.seed, "ga-fitness", i));
  // Runs are sequential; each parallelizes over its generation.
  for (std::size_t i = 0; i < cases.size(); ++i)
    r.ga_runs.push_back(ga_select(cases[i], cfg.ga, derive_seed(cfg.seed, "ga", i)));

  std::vector<FeatureSet> sets;
  for (const auto& g : r.ga_runs) sets.push_back({"GA:" + g.dd_case, mask_members(g.mask), 0});
  if (r.ga_runs.size() >= 2) {
    const auto groups = intersection_vote(r.ga_runs);
    for (std::size_t k = 0; k < groups.size(); ++k)
      sets.push_back({"Vote+" + std::to_string(k + 2), groups[k], static_cast<int>(k + 2)});
  }
  std::vector<const DdCase*> ptrs;
  for (const auto& c : cases) ptrs.push_back(&c);
  r.cross_eval = cross_evaluate(sets, ptrs);
  const auto& best = pick_final(r.cross_eval);
  r.final_set = best.set.name;
  r.final_mean_f1 = best.mean;
  for (auto i : best.set.members) r.final_features.push_back(r.candidates[i]);
  return r;
}

namespace {

void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream o(p, std::ios::binary);
  if (!o) throw InputError("cannot write " + p.string());
  o << s;
}

}  // namespace

void write_selection(const SelectionResult& r, const SelectionConfig& cfg, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text(dir / "kappa_table.csv", r.kappa.to_csv());
  write_text(dir / "votes.csv", votes_csv(r.votes));

  ordered_json runs = ordered_json::array();
  for (const auto& g : r.ga_runs) {
    ordered_json j;
    j["dd_case"] = g.dd_case;
    j["mask"] = mask_key(g.mask);
    auto& f = j["features"] = ordered_json::array();
    for (std::size_t i = 0; i < g.mask.size(); ++i)
      if (g.mask[i]) f.push_back(r.candidates[i]);
    j["fitness"] = g.fitness;
    j["trace"] = g.trace;
    j["evaluations"] = g.evaluations;
    runs.push_back(std::move(j));
  }
  write_text(dir / "ga_runs.json", runs.dump(2) + "\n");

  std::ostringstream ce;
  ce << "set,n_features";
  if (!r.cross_eval.empty())
    for (const auto& g : r.ga_runs) ce << ',' << csv_cell(g.dd_case);
  ce << ",mean,empty\n";
  for (const auto& row : r.cross_eval) {
    ce << csv_cell(row.set.name) << ',' << row.set.members.size();
    for (double v : row.f1) ce << ',' << format_double(v);
    ce << ',' << format_double(row.mean) << ',' << (row.empty ? 1 : 0) << '\n';
  }
  write_text(dir / "cross_eval.csv", ce.str());

  ordered_json fin;
  fin["set"] = r.final_set;
  fin["mean_f1"] = r.final_mean_f1;
  fin["schema_hash"] = r.schema_hash;
  fin["features"] = r.final_features;
  write_text(dir / "final_features.json", fin.dump(2) + "\n");
  write_text(dir / "config.json", cfg.to_json());
}

std::vector<std::string> load_feature_list(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open feature list " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    const auto j = nlohmann::json::parse(ss.str());
    const auto& arr = j.is_object() ? j.at("features") : j;
    auto out = arr.get<std::vector<std::string>>();
    if (out.empty()) throw InputError("feature list " + path.string() + " is empty");
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("bad feature list " + path.string() + ": " + e.what());
  }
}

}  // namespace gemid
