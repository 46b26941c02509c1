#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gemid/error.hpp"
#include "gemid/models.hpp"
#include "test_util.hpp"

using namespace gemid;

namespace {

// Values on a coarse grid so ties are common; about 5% missing.
Dataset random_table(std::uint64_t seed, std::size_t rows = 120, std::size_t width = 5, int classes = 3) {
  std::mt19937_64 rng(seed);
  Dataset d;
  for (std::size_t f = 0; f < width; ++f) d.features.push_back("f" + std::to_string(f));
  d.cols.assign(width, {});
  for (std::size_t r = 0; r < rows; ++r) {
    const int c = static_cast<int>(rng() % classes);
    d.labels.push_back("k" + std::to_string(c));
    for (std::size_t f = 0; f < width; ++f) {
      double v = static_cast<double>(rng() % 8) + (f == 0 ? 3.0 * c : 0.0);
      if (rng() % 20 == 0) v = std::nan("");
      d.cols[f].push_back(v);
    }
  }
  return d;
}

// Two well separated Gaussian blobs per class along every feature.
Dataset blobs(std::uint64_t seed, std::size_t per_class) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0, 0.5);
  Dataset d;
  d.features = {"a", "b"};
  d.cols.assign(2, {});
  for (std::size_t i = 0; i < per_class; ++i)
    for (int c = 0; c < 3; ++c) {
      d.labels.push_back("c" + std::to_string(c));
      d.cols[0].push_back(5.0 * c + n(rng));
      d.cols[1].push_back(-4.0 * c + n(rng));
    }
  return d;
}

double accuracy_on(const TrainedModel& m, const Dataset& d) {
  const auto p = m.predict(d);
  double ok = 0;
  for (std::size_t i = 0; i < p.size(); ++i) ok += p[i] == d.labels[i];
  return ok / static_cast<double>(p.size());
}

}  // namespace

TEST(Models, SingleTreeForestEqualsTree) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto d = random_table(100 + s);
    ModelSpec dt;
    dt.algorithm = Algorithm::DT;
    ModelSpec rf = dt;
    rf.algorithm = Algorithm::RF;
    rf.n_estimators = 1;
    rf.bootstrap = false;
    rf.max_features = 0;
    const auto a = train(dt, d, s), b = train(rf, d, s);
    const auto probe = random_table(900 + s, 60);
    EXPECT_EQ(a.predict_proba(probe), b.predict_proba(probe)) << "table " << s;
  }
}

TEST(Models, LogisticGradientMatchesCentralDifferences) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 1);
  std::vector<std::vector<double>> x(40, std::vector<double>(4));
  LogisticProblem p;
  for (auto& row : x) {
    for (auto& v : row) v = n(rng);
    p.y.push_back(row[0] + 0.5 * row[1] + 0.3 * n(rng) > 0 ? 1.0 : 0.0);
  }
  p.x = &x;
  for (bool l2 : {true, false}) {
    p.l2 = l2;
    p.C = 0.7;
    std::vector<double> w(5);
    for (auto& v : w) v = 0.5 * n(rng);
    const auto g = p.gradient(w);
    ASSERT_EQ(g.size(), w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double h = 1e-5;
      auto up = w, dn = w;
      up[i] += h;
      dn[i] -= h;
      const double fd = (p.objective(up) - p.objective(dn)) / (2 * h);
      EXPECT_LE(std::abs(fd - g[i]), 1e-4 * std::max(1.0, std::abs(fd))) << "param " << i;
    }
  }
}

TEST(Models, SaveLoadRoundTripIsExact) {
  testutil::TempDir tmp("model");
  const auto d = random_table(42);
  for (auto alg : {Algorithm::DT, Algorithm::RF, Algorithm::KNN, Algorithm::NB, Algorithm::LR}) {
    ModelSpec s;
    s.algorithm = alg;
    if (alg == Algorithm::RF) s.n_estimators = 7;  // other algorithms store only their own fields
    const auto m = train(s, d, 9);
    const auto path = tmp / (std::string(to_string(alg)) + ".json");
    m.save(path);
    const auto back = TrainedModel::load(path);
    EXPECT_EQ(back.to_json(), m.to_json()) << to_string(alg);
    EXPECT_EQ(back.predict_proba(d), m.predict_proba(d)) << to_string(alg);
    EXPECT_EQ(back.spec(), m.spec());
  }
}

TEST(Models, TruncatedOrForeignFilesRejected) {
  testutil::TempDir tmp("modelbad");
  ModelSpec s;
  const auto m = train(s, random_table(1), 1);
  m.save(tmp / "m.json");
  const auto text = testutil::slurp(tmp / "m.json");
  std::ofstream(tmp / "cut.json") << text.substr(0, text.size() / 2);
  EXPECT_THROW(TrainedModel::load(tmp / "cut.json"), InputError);
  EXPECT_THROW(TrainedModel::load(tmp / "absent.json"), NotFoundError);

  auto other = random_table(2);
  other.features[0] = "renamed";
  EXPECT_THROW(m.predict(other), IncompatibleError);
}

TEST(Models, ProbabilitiesSumToOne) {
  const auto d = random_table(8);
  for (auto alg : {Algorithm::DT, Algorithm::RF, Algorithm::KNN, Algorithm::NB, Algorithm::LR}) {
    ModelSpec s;
    s.algorithm = alg;
    s.n_estimators = 5;
    for (const auto& row : train(s, d, 4).predict_proba(d)) {
      double sum = 0;
      for (double v : row) {
        EXPECT_GE(v, 0);
        sum += v;
      }
      EXPECT_NEAR(sum, 1.0, 1e-9) << to_string(alg);
    }
  }
}

TEST(Models, SeparableBlobs) {
  const auto tr = blobs(1, 60), te = blobs(2, 40);
  for (auto alg : {Algorithm::DT, Algorithm::RF, Algorithm::KNN, Algorithm::NB, Algorithm::LR}) {
    ModelSpec s;
    s.algorithm = alg;
    s.n_estimators = 10;
    EXPECT_GE(accuracy_on(train(s, tr, 5), te), 0.97) << to_string(alg);
  }
}

TEST(Models, OneNeighbourRecallsTrainingSet) {
  const auto d = blobs(3, 30);
  ModelSpec s;
  s.algorithm = Algorithm::KNN;
  s.k = 1;
  EXPECT_DOUBLE_EQ(accuracy_on(train(s, d, 0), d), 1.0);
}

TEST(Models, TreeGrowthIsDeterministic) {
  const auto d = random_table(77, 300, 6);
  ModelSpec s;
  s.algorithm = Algorithm::RF;
  s.n_estimators = 8;
  s.max_features = 2;
  EXPECT_EQ(train(s, d, 123).to_json(), train(s, d, 123).to_json());
  EXPECT_NE(train(s, d, 123).to_json(), train(s, d, 124).to_json());
}

TEST(Models, DepthLimitHonoured) {
  const auto d = random_table(10, 400);
  const auto b = BinnedData::build(d);
  std::vector<std::uint32_t> rows(b.rows()), feats(b.width());
  for (std::uint32_t i = 0; i < rows.size(); ++i) rows[i] = i;
  for (std::uint32_t i = 0; i < feats.size(); ++i) feats[i] = i;
  for (int depth : {1, 2, 4}) {
    ModelSpec s;
    s.max_depth = depth;
    EXPECT_LE(DecisionTree::fit(b, rows, feats, s, 0).depth(), depth);
  }
}

TEST(Models, MissingPolicies) {
  Dataset d;
  d.features = {"x"};
  d.cols = {{1, 2, 3, 10, 11, 12, std::nan(""), std::nan("")}};
  d.labels = {"lo", "lo", "lo", "hi", "hi", "hi", "lo", "lo"};
  ModelSpec s;
  s.missing = MissingPolicy::AsLowest;
  Dataset probe;
  probe.features = {"x"};
  probe.cols = {{std::nan("")}};
  probe.labels = {"?"};  // rows() counts labels
  EXPECT_EQ(train(s, d, 0).predict(probe)[0], "lo");
  s.missing = MissingPolicy::MajorityChild;
  EXPECT_EQ(train(s, d, 0).predict(probe).size(), 1u);
}

TEST(Models, TrainRejectsDegenerateInput) {
  auto d = random_table(1, 20, 2, 1);
  ModelSpec s;
  EXPECT_THROW(train(s, d, 0), InputError);
  Dataset empty;
  empty.labels = {"a", "b"};
  EXPECT_THROW(train(s, empty, 0), InputError);
}

TEST(ModelSpec, JsonRoundTripAndValidation) {
  // Only the fields of the chosen algorithm are stored and checked.
  ModelSpec s;
  s.algorithm = Algorithm::RF;
  s.criterion = Criterion::Entropy;
  s.max_depth = 7;
  s.missing = MissingPolicy::AsLowest;
  s.bootstrap = false;
  EXPECT_EQ(ModelSpec::from_json(s.to_json()), s);
  ModelSpec lr;
  lr.algorithm = Algorithm::LR;
  lr.l2 = false;
  lr.C = 0.25;
  EXPECT_EQ(ModelSpec::from_json(lr.to_json()), lr);
  EXPECT_THROW(ModelSpec::from_json(R"({"algorithm":"SVM"})"), InputError);
  ModelSpec bad;
  bad.algorithm = Algorithm::RF;
  bad.n_estimators = 0;
  EXPECT_THROW(bad.validate(), InputError);
  bad = ModelSpec{};
  bad.algorithm = Algorithm::KNN;
  bad.k = 0;
  EXPECT_THROW(bad.validate(), InputError);
  bad = ModelSpec{};
  bad.max_depth = 0;
  EXPECT_THROW(bad.validate(), InputError);
  EXPECT_EQ(parse_algorithm("RF"), Algorithm::RF);
}

TEST(Search, DeterministicAndFirstDrawMatchesSequence) {
  const auto tr = random_table(20), te = random_table(21);
  std::vector<SearchContext> ctx = {{&tr, &te}};
  const auto a = random_search(Algorithm::DT, 6, ctx, 99);
  const auto b = random_search(Algorithm::DT, 6, ctx, 99);
  ASSERT_EQ(a.trace.size(), 6u);
  EXPECT_EQ(a.best, b.best);
  EXPECT_EQ(a.best_score, b.best_score);
  const auto specs = draw_specs(Algorithm::DT, 6, static_cast<int>(tr.width()), 99);
  for (std::size_t i = 0; i < specs.size(); ++i) EXPECT_EQ(a.trace[i].spec, specs[i]);

  const auto one = random_search(Algorithm::DT, 1, ctx, 99);
  EXPECT_EQ(one.best, specs[0]);
  double best = -1;
  for (const auto& t : a.trace) best = std::max(best, t.score);
  EXPECT_EQ(a.best_score, best);
}

TEST(Search, DrawsStayInRange) {
  for (auto alg : {Algorithm::DT, Algorithm::RF, Algorithm::KNN, Algorithm::NB, Algorithm::LR})
    for (const auto& s : draw_specs(alg, 30, 4, 5)) {
      EXPECT_EQ(s.algorithm, alg);
      EXPECT_NO_THROW(s.validate());
      EXPECT_LE(s.max_features, 4);
    }
}
