#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include <json.hpp>

#include "gemid/error.hpp"
#include "gemid/selection.hpp"
#include "test_util.hpp"

using namespace gemid;

namespace {

// Two families with two sessions each; in family DI feature f2 names the
// wrong class (shifted by one), so it only carries within-family signal.
std::vector<Partition> four_partitions(int per_class = 40) {
  const std::vector<std::string> cls = {"cam", "plug", "hub"};
  return {testutil::toy_partition("AD-S1", "AD", cls, per_class, 1, 0),
          testutil::toy_partition("AD-S2", "AD", cls, per_class, 2, 0),
          testutil::toy_partition("DI-S1", "DI", cls, per_class, 3, 1),
          testutil::toy_partition("DI-S2", "DI", cls, per_class, 4, 1)};
}

KappaTable crafted_table(const std::vector<int>& ss, const std::vector<int>& dd, std::mt19937_64& rng) {
  // One feature; `ss`/`dd` give per-context pass (1) or fail (0); values
  // sit strictly on either side of the cut.
  KappaTable t;
  t.features = {"x"};
  t.kappa.assign(1, {});
  std::uniform_real_distribution<double> hi(0.0501, 1.0), lo(-1.0, 0.0499);
  auto push = [&](ContextKind k, int pass) {
    EvalContext c;
    c.kind = k;
    t.contexts.push_back(c);
    t.kappa[0].push_back(pass ? hi(rng) : lo(rng));
  };
  for (int i = 0; i < 4; ++i) push(ContextKind::CV, 1);
  for (int v : ss) push(ContextKind::SS, v);
  for (int v : dd) push(ContextKind::DD, v);
  return t;
}

}  // namespace

TEST(Contexts, CountsAndNames) {
  const auto parts = four_partitions(5);
  const auto ctx = build_contexts(parts);
  ASSERT_EQ(ctx.size(), 16u);
  int cv = 0, ss = 0, dd = 0;
  std::set<std::string> names;
  for (const auto& c : ctx) {
    cv += c.kind == ContextKind::CV;
    ss += c.kind == ContextKind::SS;
    dd += c.kind == ContextKind::DD;
    names.insert(c.name);
    if (c.kind == ContextKind::CV) EXPECT_EQ(c.train, c.test);
    if (c.kind == ContextKind::SS) EXPECT_EQ(parts[c.train].family, parts[c.test].family);
    if (c.kind == ContextKind::DD) EXPECT_NE(parts[c.train].family, parts[c.test].family);
  }
  EXPECT_EQ(cv, 4);
  EXPECT_EQ(ss, 4);
  EXPECT_EQ(dd, 8);
  EXPECT_TRUE(names.count("AD-S1|DI-S2"));
  EXPECT_TRUE(names.count("DI-S2|AD-S1"));
  EXPECT_TRUE(names.count("AD-S1"));
  EXPECT_EQ(ctx.front().kind, ContextKind::CV);
  EXPECT_EQ(ctx.back().kind, ContextKind::DD);
}

TEST(Contexts, LeakageAndMissingFamily) {
  auto parts = four_partitions(5);
  auto clone = parts[0];
  clone.name = "AD-S3";
  clone.session = "AD-S3";
  // Same record ids as AD-S1.
  EXPECT_THROW(assert_disjoint(parts[0], clone), LeakageError);
  parts.push_back(clone);
  EXPECT_THROW(build_contexts(parts), LeakageError);
  parts = four_partitions(5);
  parts[1].family.clear();
  EXPECT_THROW(build_contexts(parts), InputError);
}

TEST(Contexts, FoldsBalancedAndSeeded) {
  const auto f = fold_assignment(103, 5, 9);
  std::vector<int> counts(5);
  for (int v : f) ++counts.at(v);
  EXPECT_LE(*std::max_element(counts.begin(), counts.end()) - *std::min_element(counts.begin(), counts.end()), 1);
  EXPECT_EQ(f, fold_assignment(103, 5, 9));
  EXPECT_NE(f, fold_assignment(103, 5, 10));
}

TEST(Contexts, MaterializeRestrictsToSeenLabels) {
  auto parts = four_partitions(10);
  parts[2] = testutil::toy_partition("DI-S1", "DI", {"cam", "plug", "tv"}, 10, 3, 1);
  const auto ctx = build_contexts(parts);
  for (const auto& c : ctx) {
    if (c.name != "AD-S1|DI-S1") continue;
    const auto s = materialize(c, parts, {"f0"}, 1);
    ASSERT_EQ(s.size(), 1u);
    for (const auto& l : s[0].test.labels) EXPECT_NE(l, "tv");
    EXPECT_EQ(s[0].test.rows(), 20u);
  }
  const auto cv = materialize(ctx[0], parts, {"f0", "f1"}, 1);
  EXPECT_EQ(cv.size(), 5u);
  std::size_t total = 0;
  for (const auto& s : cv) total += s.test.rows();
  EXPECT_EQ(total, parts[0].records.size());
}

TEST(Scan, SeparatesInvariantFromConfounded) {
  const auto parts = four_partitions();
  const auto ctx = build_contexts(parts);
  const auto kt = univariate_scan(parts, ctx, {"f0", "f1", "f2"}, 7);
  ASSERT_EQ(kt.kappa.size(), 3u);
  for (std::size_t c = 0; c < ctx.size(); ++c) {
    EXPECT_GT(kt.kappa[0][c], 0.9) << ctx[c].name;
    if (ctx[c].kind == ContextKind::DD) EXPECT_LT(kt.kappa[2][c], 0.05) << ctx[c].name;
    else EXPECT_GT(kt.kappa[2][c], 0.9) << ctx[c].name;
  }
  const auto votes = vote_filter(kt);
  EXPECT_TRUE(votes[0].selected);
  EXPECT_FALSE(votes[1].selected);
  EXPECT_FALSE(votes[2].selected);
  EXPECT_EQ(votes[2].ss_votes, 4);
  EXPECT_EQ(votes[2].dd_votes, 0);
  EXPECT_EQ(votes_csv(votes).substr(0, 41), "feature,cv_votes,ss_votes,dd_votes,select");
}

TEST(Vote, RuleOnCraftedTables) {
  std::mt19937_64 rng(2);
  struct Case {
    std::vector<int> ss, dd;
  };
  const std::vector<Case> cases = {
      {{1, 1, 1, 1}, {0, 0, 0, 0, 0, 0, 0, 0}},  // SS quota, no DD: rejected
      {{1, 1, 1, 1}, {1, 0, 0, 0, 0, 0, 0, 0}},  // SS quota plus one DD
      {{0, 0, 0, 0}, {1, 1, 1, 1, 0, 0, 0, 0}},  // DD quota
      {{1, 1, 1, 0}, {1, 1, 1, 0, 0, 0, 0, 0}},  // 3 and 3
      {{0, 0, 0, 0}, {1, 1, 1, 0, 0, 0, 0, 0}},
  };
  const bool expected[] = {false, true, true, false, false};
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto v = vote_filter(crafted_table(cases[i].ss, cases[i].dd, rng));
    EXPECT_EQ(v[0].selected, expected[i]) << "case " << i;
    EXPECT_EQ(v[0].cv_votes, 4);
  }
  // Kappa exactly at the cut counts as a vote.
  auto t = crafted_table({0, 0, 0, 0}, {1, 1, 1, 0, 0, 0, 0, 0}, rng);
  t.kappa[0].back() = 0.05;
  EXPECT_TRUE(vote_filter(t)[0].selected);
}

TEST(Vote, RaisingTheCutNeverAddsFeatures) {
  std::mt19937_64 rng(3);
  KappaTable t;
  for (int f = 0; f < 30; ++f) t.features.push_back("f" + std::to_string(f));
  for (auto k : {ContextKind::CV, ContextKind::SS, ContextKind::SS, ContextKind::SS, ContextKind::SS,
                 ContextKind::DD, ContextKind::DD, ContextKind::DD, ContextKind::DD, ContextKind::DD}) {
    EvalContext c;
    c.kind = k;
    t.contexts.push_back(c);
  }
  std::uniform_real_distribution<double> u(-0.2, 1.0);
  t.kappa.assign(30, {});
  for (auto& row : t.kappa)
    for (std::size_t c = 0; c < t.contexts.size(); ++c) row.push_back(u(rng));
  std::size_t prev = t.features.size() + 1;
  for (double cut : {0.0, 0.05, 0.2, 0.4, 0.6, 0.8}) {
    VoteConfig cfg;
    cfg.kappa_cut = cut;
    std::size_t n = 0;
    for (const auto& v : vote_filter(t, cfg)) n += v.selected;
    EXPECT_LE(n, prev);
    prev = n;
  }
}

TEST(Ga, FindsExhaustiveOptimumOnToy) {
  // Fitness rewards bits 1 and 2 and charges for the others.
  const MaskFitness fit = [](const Mask& m) {
    double s = 0;
    for (std::size_t i = 0; i < m.size(); ++i) s += (i == 1 || i == 2) ? (m[i] ? 1.0 : 0.0) : (m[i] ? -0.3 : 0.0);
    return s;
  };
  GaConfig cfg;
  cfg.population = 20;
  cfg.generations = 25;
  const auto r = ga_optimize(6, fit, cfg, 1);
  EXPECT_EQ(r.mask, (Mask{false, true, true, false, false, false}));
  EXPECT_DOUBLE_EQ(r.fitness, 2.0);
  ASSERT_EQ(r.trace.size(), static_cast<std::size_t>(cfg.generations) + 1);
  for (std::size_t g = 1; g < r.trace.size(); ++g) EXPECT_GE(r.trace[g], r.trace[g - 1]);
  EXPECT_EQ(r.trace.back(), r.fitness);
  EXPECT_LE(r.evaluations, 64u);

  const auto again = ga_optimize(6, fit, cfg, 1);
  EXPECT_EQ(again.trace, r.trace);
}

TEST(Ga, DdCaseFitness) {
  const auto parts = four_partitions(20);
  DdCase c("AD-S1|DI-S1", Dataset::from_partition(parts[0], {"f0", "f1", "f2"}),
           Dataset::from_partition(parts[2], {"f0", "f1", "f2"}), 5);
  EXPECT_EQ(c.width(), 3u);
  EXPECT_GT(c.fitness({true, false, false}), 0.95);
  EXPECT_LT(c.fitness({false, false, true}), 0.2);
  EXPECT_EQ(c.fitness({false, false, false}), 0.0);
  GaConfig cfg;
  cfg.population = 10;
  cfg.generations = 5;
  const auto r = ga_select(c, cfg, 3);
  EXPECT_TRUE(r.mask[0]);
  EXPECT_EQ(r.dd_case, "AD-S1|DI-S1");
}

TEST(Intersection, NestedLevels) {
  std::vector<GaRunResult> runs(4);
  runs[0].mask = {1, 1, 0, 0, 1};
  runs[1].mask = {1, 0, 1, 0, 1};
  runs[2].mask = {1, 1, 0, 0, 0};
  runs[3].mask = {1, 0, 0, 1, 0};
  const auto v = intersection_vote(runs);
  ASSERT_EQ(v.size(), 3u);  // k = 2, 3, 4
  EXPECT_EQ(v[0], (std::vector<std::size_t>{0, 1, 4}));
  EXPECT_EQ(v[1], (std::vector<std::size_t>{0}));
  EXPECT_EQ(v[2], (std::vector<std::size_t>{0}));
  for (std::size_t k = 1; k < v.size(); ++k)
    for (auto m : v[k]) EXPECT_NE(std::find(v[k - 1].begin(), v[k - 1].end(), m), v[k - 1].end());
}

TEST(PickFinal, TieBreaks) {
  auto row = [](std::string name, std::vector<std::size_t> m, int k, double mean) {
    CrossEvalRow r;
    r.set = {std::move(name), std::move(m), k};
    r.mean = mean;
    return r;
  };
  std::vector<CrossEvalRow> rows = {row("GA-run-1", {0, 1, 2}, 0, 0.9), row("Vote+2", {0, 1}, 2, 0.9),
                                    row("Vote+3", {0, 1}, 3, 0.9), row("GA-run-2", {0}, 0, 0.8)};
  EXPECT_EQ(pick_final(rows).set.name, "Vote+2");
  rows[3].mean = 0.95;
  EXPECT_EQ(pick_final(rows).set.name, "GA-run-2");
  std::vector<CrossEvalRow> same = {row("a", {1}, 0, 0.5), row("b", {2}, 0, 0.5)};
  EXPECT_EQ(pick_final(same).set.name, "a");
}

TEST(SelectionConfig, StrictParsing) {
  const auto c = SelectionConfig::from_json(R"({"seed": 7, "vote": {"quota": 3}, "ga": {"population": 12}})");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.vote.quota, 3);
  EXPECT_EQ(c.ga.population, 12);
  EXPECT_EQ(SelectionConfig::from_json(c.to_json()).to_json(), c.to_json());
  EXPECT_THROW(SelectionConfig::from_json(R"({"sed": 7})"), InputError);
  EXPECT_THROW(SelectionConfig::from_json(R"({"ga": {"pop": 7}})"), InputError);
  EXPECT_THROW(SelectionConfig::from_json(R"({"folds": 1})"), InputError);
  EXPECT_THROW(SelectionConfig::from_json("[1,2]"), InputError);
}

TEST(Selection, EndToEndOnToyPartitions) {
  testutil::TempDir tmp("sel");
  const auto parts = four_partitions(30);
  SelectionConfig cfg;
  cfg.ga.population = 10;
  cfg.ga.generations = 4;
  const auto r = run_selection(parts, cfg);
  EXPECT_EQ(r.candidates, (std::vector<std::string>{"f0"}));
  EXPECT_EQ(r.final_features, (std::vector<std::string>{"f0"}));
  EXPECT_EQ(r.ga_runs.size(), 8u);
  EXPECT_GT(r.final_mean_f1, 0.95);
  write_selection(r, cfg, tmp.path());
  for (const char* f : {"kappa_table.csv", "votes.csv", "ga_runs.json", "cross_eval.csv", "final_features.json",
                        "config.json"})
    EXPECT_TRUE(std::filesystem::exists(tmp / f)) << f;
  EXPECT_EQ(load_feature_list(tmp / "final_features.json"), r.final_features);

  std::ofstream(tmp / "plain.json") << R"(["a","b"])";
  EXPECT_EQ(load_feature_list(tmp / "plain.json"), (std::vector<std::string>{"a", "b"}));

  // Single family: no DD contexts to vote with.
  std::vector<Partition> one = {parts[0], parts[1]};
  EXPECT_THROW(run_selection(one, cfg), InputError);
}
