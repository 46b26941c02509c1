#include <gtest/gtest.h>

#include <map>
#include <set>

#include <json.hpp>

#include "gemid/error.hpp"
#include "gemid/evaluation.hpp"
#include "gemid/text.hpp"
#include "test_util.hpp"

using namespace gemid;

namespace {

PacketPrediction pred(const std::string& src, const std::string& truth, const std::string& p,
                      std::vector<double> proba, std::uint64_t frame = 0) {
  PacketPrediction r;
  r.source_key = src;
  r.session = "s";
  r.frame = frame;
  r.truth = truth;
  r.predicted = p;
  r.proba = std::move(proba);
  return r;
}

ContextPredictions two_class(std::vector<PacketPrediction> rows) {
  ContextPredictions c;
  c.classes = {"A", "B"};
  c.rows = std::move(rows);
  return c;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& p) {
  std::vector<std::vector<std::string>> out;
  std::istringstream in(testutil::slurp(p));
  std::string line;
  while (std::getline(in, line)) out.push_back(split_csv_line(line));
  return out;
}

std::vector<Partition> four_partitions(int per_class = 30) {
  const std::vector<std::string> cls = {"cam", "plug", "hub"};
  return {testutil::toy_partition("AD-S1", "AD", cls, per_class, 1, 0),
          testutil::toy_partition("AD-S2", "AD", cls, per_class, 2, 0),
          testutil::toy_partition("DI-S1", "DI", cls, per_class, 3, 1),
          testutil::toy_partition("DI-S2", "DI", cls, per_class, 4, 1)};
}

ModelSpec small_forest() {
  ModelSpec s;
  s.algorithm = Algorithm::RF;
  s.n_estimators = 5;
  return s;
}

}  // namespace

TEST(Aggregation, MajorityWins) {
  const auto out = aggregate_predictions(
      two_class({pred("x", "A", "A", {1, 0}), pred("x", "A", "A", {1, 0}), pred("x", "A", "B", {0, 1})}), {3});
  ASSERT_EQ(out.rows.size(), 1u);
  EXPECT_EQ(out.rows[0].predicted, "A");
  EXPECT_EQ(out.rows[0].truth, "A");
  EXPECT_NEAR(out.rows[0].proba[0], 2.0 / 3.0, 1e-12);
}

TEST(Aggregation, TieGoesToHigherMeanProbabilityThenName) {
  auto out =
      aggregate_predictions(two_class({pred("x", "A", "A", {0.9, 0.1}), pred("x", "A", "B", {0.2, 0.8})}), {2});
  ASSERT_EQ(out.rows.size(), 1u);
  EXPECT_NEAR(out.rows[0].proba[0], 0.55, 1e-12);
  EXPECT_EQ(out.rows[0].predicted, "A");
  out = aggregate_predictions(two_class({pred("x", "A", "B", {0.4, 0.6}), pred("x", "A", "A", {0.6, 0.4})}), {2});
  EXPECT_EQ(out.rows[0].predicted, "A");  // equal means: smaller name
  out = aggregate_predictions(two_class({pred("x", "B", "A", {0.55, 0.45}), pred("x", "B", "B", {0.1, 0.9})}), {2});
  EXPECT_EQ(out.rows[0].predicted, "B");
}

TEST(Aggregation, GroupSizeOneIsIdentity) {
  const auto in = two_class({pred("x", "A", "A", {0.7, 0.3}, 1), pred("y", "B", "A", {0.6, 0.4}, 2),
                             pred("x", "A", "B", {0.1, 0.9}, 3)});
  const auto out = aggregate_predictions(in, {1});
  ASSERT_EQ(out.rows.size(), in.rows.size());
  for (std::size_t i = 0; i < in.rows.size(); ++i) {
    EXPECT_EQ(out.rows[i].predicted, in.rows[i].predicted);
    EXPECT_EQ(out.rows[i].truth, in.rows[i].truth);
    EXPECT_EQ(out.rows[i].proba, in.rows[i].proba);
  }
}

TEST(Aggregation, GroupsPerSourceWithPartialTail) {
  std::vector<PacketPrediction> rows;
  // Interleave 5 rows of x with 7 of y.
  for (int i = 0; i < 7; ++i) {
    if (i < 5) rows.push_back(pred("x", "A", "A", {1, 0}));
    rows.push_back(pred("y", "B", "B", {0, 1}));
  }
  const auto out = aggregate_predictions(two_class(rows), {3});
  std::map<std::string, int> groups;
  for (const auto& r : out.rows) {
    ++groups[r.source_key];
    EXPECT_EQ(r.truth, r.source_key == "x" ? "A" : "B");
  }
  EXPECT_EQ(groups["x"], 2);  // ceil(5/3)
  EXPECT_EQ(groups["y"], 3);  // ceil(7/3)
  EXPECT_EQ(out.rows.front().source_key, "x");
  EXPECT_THROW(aggregate_predictions(two_class(rows), {0}), InputError);
}

TEST(Aggregation, SessionsDoNotMix) {
  auto a = pred("x", "A", "A", {1, 0}), b = pred("x", "A", "B", {0, 1});
  b.session = "other";
  EXPECT_EQ(aggregate_predictions(two_class({a, b}), {2}).rows.size(), 2u);
}

TEST(Evaluate, ReportDropsUnseenAndListsTrainOnly) {
  auto parts = four_partitions(10);
  parts[2] = testutil::toy_partition("DI-S1", "DI", {"cam", "plug", "tv"}, 10, 3, 0);
  const auto ctx = build_contexts(parts);
  for (const auto& c : ctx) {
    if (c.name != "AD-S1|DI-S1") continue;
    const auto rep = evaluate_context(c, parts, small_forest(), {"f0"}, 1);
    EXPECT_EQ(rep.test_only, (std::vector<std::string>{"tv"}));
    EXPECT_EQ(rep.train_only, (std::vector<std::string>{"hub"}));
    EXPECT_EQ(rep.test_rows, 20u);
    EXPECT_EQ(rep.confusion.classes(), (std::vector<std::string>{"cam", "hub", "plug"}));
    EXPECT_EQ(rep.score.macro_classes, (std::vector<std::string>{"cam", "plug"}));
  }
}

TEST(Evaluate, NoSharedClassIsAnError) {
  std::vector<Partition> parts = {testutil::toy_partition("AD-S1", "AD", {"a", "b"}, 5, 1),
                                  testutil::toy_partition("DI-S1", "DI", {"c", "d"}, 5, 2)};
  const auto ctx = build_contexts(parts);
  EXPECT_THROW(evaluate_context(ctx.back(), parts, small_forest(), {"f0"}, 1), InputError);
}

TEST(Evaluate, AggregatedAtOneEqualsPacketLevel) {
  const auto parts = four_partitions(15);
  for (const auto& c : build_contexts(parts)) {
    const auto a = evaluate_context(c, parts, small_forest(), {"f0", "f1", "f2"}, 3);
    const auto b = evaluate_aggregated(c, parts, small_forest(), {"f0", "f1", "f2"}, 3, {1});
    EXPECT_EQ(a.confusion, b.confusion) << c.name;
    EXPECT_EQ(a.score.macro_f1, b.score.macro_f1) << c.name;
    EXPECT_EQ(b.granularity, "group");
  }
}

TEST(Study, TablesAndPerDeviceUnion) {
  testutil::TempDir tmp("study");
  auto parts = four_partitions(20);
  // One device shows up in a single partition only.
  parts[3] = testutil::toy_partition("DI-S2", "DI", {"cam", "plug", "hub", "tv"}, 20, 4, 1);
  nlohmann::json plan;
  plan["seed"] = 5;
  plan["aggregate"] = 4;
  plan["sweep"] = {1, 4};
  plan["timing"] = false;
  plan["markdown"] = true;
  nlohmann::json m;
  m["name"] = "toy";
  m["model"] = nlohmann::json::parse(small_forest().to_json());
  m["features"] = {"f0", "f1"};
  for (const auto& p : parts) {
    store_partition(p, tmp / p.name);
    m["partitions"].push_back(p.name);
  }
  plan["methods"] = {m};
  const auto sp = StudyPlan::from_json(plan.dump(), tmp.path());
  const auto r = run_study(sp);
  write_study(r, sp, tmp / "out");

  const auto t1 = read_csv(tmp / "out" / "table1.csv");
  ASSERT_EQ(t1.size(), 1u + 16 + 3);
  EXPECT_EQ(t1[0], (std::vector<std::string>{"kind", "context", "toy"}));
  EXPECT_EQ(t1[1][0], "CV");
  EXPECT_EQ(t1[17], (std::vector<std::string>{"mean", "CV", format_double(*r.methods[0].mean(ContextKind::CV))}));
  EXPECT_EQ(read_csv(tmp / "out" / "table1_aggregated.csv").size(), 20u);

  std::set<std::string> devices;
  for (const auto& row : read_csv(tmp / "out" / "table2_per_device.csv")) devices.insert(row[1]);
  devices.erase("device");
  EXPECT_EQ(devices, (std::set<std::string>{"cam", "hub", "plug", "tv"}));

  const auto sweep = read_csv(tmp / "out" / "aggregation_sweep.csv");
  ASSERT_EQ(sweep.size(), 3u);
  EXPECT_EQ(sweep[1][2], format_double(*r.methods[0].mean(ContextKind::DD)));  // g = 1
  EXPECT_FALSE(std::filesystem::exists(tmp / "out" / "timing.json"));
  EXPECT_TRUE(std::filesystem::exists(tmp / "out" / "table1.md"));
  EXPECT_TRUE(std::filesystem::exists(tmp / "out" / "confusion_toy_AD-S1_DI-S2.csv"));  // '|' made file-safe

  // Plans echo back and reject unknown keys.
  EXPECT_EQ(StudyPlan::from_json(sp.to_json(), tmp.path()).to_json(), sp.to_json());
  plan["colour"] = 1;
  EXPECT_THROW(StudyPlan::from_json(plan.dump(), tmp.path()), InputError);
}
