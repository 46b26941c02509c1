#include "gemid/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <set>
#include <sstream>

#include "gemid/error.hpp"
#include "gemid/metrics.hpp"
#include "gemid/parallel.hpp"
#include "gemid/random.hpp"
#include "gemid/schema.hpp"

namespace gemid {

using json = nlohmann::ordered_json;

std::string_view to_string(Algorithm a) {
  static constexpr const char* kNames[] = {"DT", "RF", "KNN", "NB", "LR"};
  return kNames[static_cast<int>(a)];
}

Algorithm parse_algorithm(std::string_view s) {
  std::string up(s);
  for (auto& c : up) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (up == "DT") return Algorithm::DT;
  if (up == "RF") return Algorithm::RF;
  if (up == "KNN") return Algorithm::KNN;
  if (up == "NB") return Algorithm::NB;
  if (up == "LR") return Algorithm::LR;
  throw InputError("unknown algorithm '" + std::string(s) + "' (expected DT, RF, KNN, NB or LR)");
}

// ---------------------------------------------------------------------------
// ModelSpec

void ModelSpec::validate() const {
  auto bad = [](const std::string& what) { throw InputError("model spec: " + what); };
  if (algorithm == Algorithm::DT || algorithm == Algorithm::RF) {
    if (max_depth < 1 || max_depth > 32) bad("max_depth must be in 1..32");
    if (max_features < 0) bad("max_features must be >= 0");
    if (min_samples_split < 2) bad("min_samples_split must be >= 2");
    if (algorithm == Algorithm::RF && n_estimators < 1) bad("n_estimators must be >= 1");
  }
  if (algorithm == Algorithm::KNN && k < 1) bad("k must be >= 1");
  if (algorithm == Algorithm::NB && !(var_smoothing >= 0)) bad("var_smoothing must be >= 0");
  if (algorithm == Algorithm::LR && (!(C > 0) || max_iter < 1)) bad("C must be > 0 and max_iter >= 1");
}

namespace {

json spec_json(const ModelSpec& s) {
  json j;
  j["algorithm"] = to_string(s.algorithm);
  switch (s.algorithm) {
    case Algorithm::RF:
      j["bootstrap"] = s.bootstrap;
      j["n_estimators"] = s.n_estimators;
      [[fallthrough]];
    case Algorithm::DT:
      j["criterion"] = s.criterion == Criterion::Gini ? "gini" : "entropy";
      j["max_depth"] = s.max_depth;
      j["max_features"] = s.max_features;
      j["min_samples_split"] = s.min_samples_split;
      j["missing"] = s.missing == MissingPolicy::MajorityChild ? "majority_child" : "as_lowest";
      break;
    case Algorithm::KNN:
      j["k"] = s.k;
      j["weights"] = s.distance_weights ? "distance" : "uniform";
      j["leaf_size"] = s.leaf_size;
      break;
    case Algorithm::NB:
      j["var_smoothing"] = s.var_smoothing;
      break;
    case Algorithm::LR:
      j["C"] = s.C;
      j["penalty"] = s.l2 ? "l2" : "none";
      j["max_iter"] = s.max_iter;
      break;
  }
  return j;
}

ModelSpec spec_from(const nlohmann::json& j) {
  ModelSpec s;
  try {
    s.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
    const auto crit = j.value("criterion", std::string("gini"));
    if (crit != "gini" && crit != "entropy") throw InputError("unknown criterion '" + crit + "'");
    s.criterion = crit == "gini" ? Criterion::Gini : Criterion::Entropy;
    s.max_depth = j.value("max_depth", s.max_depth);
    s.max_features = j.value("max_features", s.max_features);
    s.min_samples_split = j.value("min_samples_split", s.min_samples_split);
    const auto miss = j.value("missing", std::string("majority_child"));
    if (miss != "majority_child" && miss != "as_lowest") throw InputError("unknown missing policy '" + miss + "'");
    s.missing = miss == "majority_child" ? MissingPolicy::MajorityChild : MissingPolicy::AsLowest;
    s.bootstrap = j.value("bootstrap", s.bootstrap);
    s.n_estimators = j.value("n_estimators", s.n_estimators);
    s.k = j.value("k", s.k);
    const auto w = j.value("weights", std::string("uniform"));
    if (w != "uniform" && w != "distance") throw InputError("unknown weights '" + w + "'");
    s.distance_weights = w == "distance";
    s.leaf_size = j.value("leaf_size", s.leaf_size);
    s.var_smoothing = j.value("var_smoothing", s.var_smoothing);
    s.C = j.value("C", s.C);
    const auto pen = j.value("penalty", std::string("l2"));
    if (pen != "l2" && pen != "none") throw InputError("unknown penalty '" + pen + "'");
    s.l2 = pen == "l2";
    s.max_iter = j.value("max_iter", s.max_iter);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad model spec: ") + e.what());
  }
  s.validate();
  return s;
}

}  // namespace

std::string ModelSpec::to_json() const { return spec_json(*this).dump(2); }

ModelSpec ModelSpec::from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("model spec is not valid JSON: ") + e.what());
  }
  return spec_from(j);
}

std::string ModelSpec::describe() const {
  std::ostringstream o;
  o << to_string(algorithm) << "(";
  switch (algorithm) {
    case Algorithm::DT:
    case Algorithm::RF:
      o << (criterion == Criterion::Gini ? "gini" : "entropy") << ", depth " << max_depth << ", mf "
        << (max_features ? std::to_string(max_features) : "all") << ", split " << min_samples_split;
      if (algorithm == Algorithm::RF)
        o << ", " << n_estimators << " trees" << (bootstrap ? ", bootstrap" : "");
      break;
    case Algorithm::KNN:
      o << "k " << k << ", " << (distance_weights ? "distance" : "uniform");
      break;
    case Algorithm::NB:
      o << "var_smoothing " << var_smoothing;
      break;
    case Algorithm::LR:
      o << "C " << C << ", " << (l2 ? "l2" : "none");
      break;
  }
  o << ")";
  return o.str();
}

// ---------------------------------------------------------------------------
// Logistic regression

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double log_sigmoid(double z) { return z >= 0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z)); }

double dot_bias(std::span<const double> p, const std::vector<double>& x) {
  double z = p[x.size()];
  for (std::size_t j = 0; j < x.size(); ++j) z += p[j] * x[j];
  return z;
}

}  // namespace

double LogisticProblem::objective(std::span<const double> p) const {
  double ll = 0;
  for (std::size_t i = 0; i < x->size(); ++i) {
    const double z = dot_bias(p, (*x)[i]);
    ll += y[i] * log_sigmoid(z) + (1 - y[i]) * log_sigmoid(-z);
  }
  if (l2) {
    double w2 = 0;
    for (std::size_t j = 0; j + 1 < p.size(); ++j) w2 += p[j] * p[j];
    ll -= w2 / (2 * C);
  }
  return ll;
}

std::vector<double> LogisticProblem::gradient(std::span<const double> p) const {
  std::vector<double> g(p.size(), 0.0);
  const std::size_t d = p.size() - 1;
  for (std::size_t i = 0; i < x->size(); ++i) {
    const auto& xi = (*x)[i];
    const double r = y[i] - sigmoid(dot_bias(p, xi));
    for (std::size_t j = 0; j < d; ++j) g[j] += r * xi[j];
    g[d] += r;
  }
  if (l2)
    for (std::size_t j = 0; j < d; ++j) g[j] -= p[j] / C;
  return g;
}

// ---------------------------------------------------------------------------
// Trained models

struct TrainedModel::Impl {
  ModelSpec spec;
  std::vector<std::string> classes, features;
  std::uint64_t seed = 0;
  // trees
  std::vector<DecisionTree> trees;
  // standardization (KNN, LR)
  std::vector<double> mean, scale;
  // KNN
  std::vector<std::vector<double>> train_x;
  std::vector<std::uint32_t> train_y;
  // NB
  std::vector<std::vector<double>> theta, var;
  std::vector<double> log_prior;
  // LR: one row of weights+bias per class
  std::vector<std::vector<double>> coef;
};

namespace {

constexpr double kMissingSentinel = -1.0;

double fill(double v) { return std::isnan(v) ? kMissingSentinel : v; }

std::vector<double> row_of(const Dataset& d, std::size_t r, const TrainedModel::Impl& m, bool standardize) {
  std::vector<double> x(d.width());
  for (std::size_t j = 0; j < d.width(); ++j) {
    x[j] = fill(d.cols[j][r]);
    if (standardize) x[j] = (x[j] - m.mean[j]) / m.scale[j];
  }
  return x;
}

void fit_standardizer(const Dataset& d, TrainedModel::Impl& m) {
  m.mean.assign(d.width(), 0.0);
  m.scale.assign(d.width(), 1.0);
  const double n = static_cast<double>(d.rows());
  for (std::size_t j = 0; j < d.width(); ++j) {
    double s = 0, ss = 0;
    for (double v : d.cols[j]) s += fill(v);
    const double mu = s / n;
    for (double v : d.cols[j]) ss += (fill(v) - mu) * (fill(v) - mu);
    const double sd = std::sqrt(ss / n);
    m.mean[j] = mu;
    m.scale[j] = sd > 0 ? sd : 1.0;
  }
}

std::vector<std::vector<double>> standardized_rows(const Dataset& d, const TrainedModel::Impl& m) {
  std::vector<std::vector<double>> rows(d.rows());
  for (std::size_t r = 0; r < d.rows(); ++r) rows[r] = row_of(d, r, m, true);
  return rows;
}

void train_trees(TrainedModel::Impl& m, const BinnedData& b) {
  std::vector<std::uint32_t> features(b.width());
  std::iota(features.begin(), features.end(), 0u);
  const std::size_t n = b.rows();
  if (m.spec.algorithm == Algorithm::DT) {
    std::vector<std::uint32_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0u);
    m.trees.push_back(DecisionTree::fit(b, rows, features, m.spec, tree_seed(m.seed, 0)));
    return;
  }
  m.trees = parallel_map<DecisionTree>(static_cast<std::size_t>(m.spec.n_estimators), [&](std::size_t t) {
    const auto ts = tree_seed(m.seed, t);
    std::vector<std::uint32_t> rows(n);
    if (m.spec.bootstrap) {
      Rng rng(derive_seed(ts, "bootstrap"));
      std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(n - 1));
      for (auto& r : rows) r = pick(rng);
    } else {
      std::iota(rows.begin(), rows.end(), 0u);
    }
    return DecisionTree::fit(b, rows, features, m.spec, ts);
  });
}

void train_nb(TrainedModel::Impl& m, const Dataset& d, const std::vector<std::uint32_t>& y) {
  const std::size_t k = m.classes.size(), w = d.width();
  m.theta.assign(k, std::vector<double>(w, 0.0));
  m.var.assign(k, std::vector<double>(w, 0.0));
  std::vector<double> count(k, 0.0);
  for (auto c : y) count[c] += 1;
  double max_var = 0;
  const double n = static_cast<double>(d.rows());
  for (std::size_t j = 0; j < w; ++j) {
    double s = 0, ss = 0;
    for (double v : d.cols[j]) s += fill(v);
    const double mu = s / n;
    for (double v : d.cols[j]) ss += (fill(v) - mu) * (fill(v) - mu);
    max_var = std::max(max_var, ss / n);
    for (std::size_t r = 0; r < d.rows(); ++r) m.theta[y[r]][j] += fill(d.cols[j][r]);
    for (std::size_t c = 0; c < k; ++c) m.theta[c][j] /= count[c];
    for (std::size_t r = 0; r < d.rows(); ++r) {
      const double diff = fill(d.cols[j][r]) - m.theta[y[r]][j];
      m.var[y[r]][j] += diff * diff;
    }
    for (std::size_t c = 0; c < k; ++c) m.var[c][j] /= count[c];
  }
  const double eps = m.spec.var_smoothing * max_var;
  for (auto& row : m.var)
    for (auto& v : row) {
      v += eps;
      if (v <= 0) v = std::numeric_limits<double>::min();
    }
  m.log_prior.resize(k);
  for (std::size_t c = 0; c < k; ++c) m.log_prior[c] = std::log(count[c] / n);
}

void train_lr(TrainedModel::Impl& m, const Dataset& d, const std::vector<std::uint32_t>& y) {
  fit_standardizer(d, m);
  const auto rows = standardized_rows(d, m);
  const std::size_t k = m.classes.size(), w = d.width();
  const double n = static_cast<double>(d.rows());
  // Lipschitz bound of the mean objective's gradient for standardized inputs.
  const double lip = 0.25 * static_cast<double>(w + 1) + (m.spec.l2 ? 1.0 / (m.spec.C * n) : 0.0);
  const double step = 1.0 / (lip * n);
  m.coef = parallel_map<std::vector<double>>(k, [&](std::size_t c) {
    LogisticProblem p;
    p.x = &rows;
    p.y.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) p.y[i] = y[i] == c ? 1.0 : 0.0;
    p.C = m.spec.C;
    p.l2 = m.spec.l2;
    std::vector<double> params(w + 1, 0.0);
    for (int it = 0; it < m.spec.max_iter; ++it) {
      const auto g = p.gradient(params);
      double norm = 0;
      for (std::size_t j = 0; j < params.size(); ++j) {
        params[j] += step * g[j];
        norm = std::max(norm, std::abs(g[j]) / n);
      }
      if (norm < 1e-6) break;
    }
    return params;
  });
}

void check_features(const TrainedModel::Impl& m, const Dataset& d) {
  if (d.features != m.features)
    throw IncompatibleError("model was trained on features " + feature_list_hash(m.features) +
                            ", table has " + feature_list_hash(d.features));
}

}  // namespace

TrainedModel::TrainedModel() : impl_(std::make_unique<Impl>()) {}
TrainedModel::~TrainedModel() = default;
TrainedModel::TrainedModel(TrainedModel&&) noexcept = default;
TrainedModel& TrainedModel::operator=(TrainedModel&&) noexcept = default;
TrainedModel::TrainedModel(const TrainedModel& o) : impl_(std::make_unique<Impl>(*o.impl_)) {}
TrainedModel& TrainedModel::operator=(const TrainedModel& o) {
  if (this != &o) impl_ = std::make_unique<Impl>(*o.impl_);
  return *this;
}

const ModelSpec& TrainedModel::spec() const { return impl_->spec; }
const std::vector<std::string>& TrainedModel::classes() const { return impl_->classes; }
const std::vector<std::string>& TrainedModel::features() const { return impl_->features; }
std::string TrainedModel::feature_hash() const { return feature_list_hash(impl_->features); }
std::uint64_t TrainedModel::seed() const { return impl_->seed; }

TrainedModel train(const ModelSpec& spec, const Dataset& data, std::uint64_t seed) {
  spec.validate();
  if (data.rows() == 0) throw InputError("training table is empty");
  const BinnedData b = BinnedData::build(data);
  TrainedModel model;
  auto& m = *model.impl_;
  m.spec = spec;
  m.classes = b.classes;
  m.features = data.features;
  m.seed = seed;
  switch (spec.algorithm) {
    case Algorithm::DT:
    case Algorithm::RF:
      train_trees(m, b);
      break;
    case Algorithm::KNN:
      fit_standardizer(data, m);
      m.train_x = standardized_rows(data, m);
      m.train_y = b.y;
      break;
    case Algorithm::NB:
      train_nb(m, data, b.y);
      break;
    case Algorithm::LR:
      train_lr(m, data, b.y);
      break;
  }
  return model;
}

std::vector<std::vector<double>> TrainedModel::predict_proba(const Dataset& d) const {
  const auto& m = *impl_;
  check_features(m, d);
  const std::size_t k = m.classes.size();
  std::vector<std::vector<double>> out(d.rows(), std::vector<double>(k, 0.0));
  switch (m.spec.algorithm) {
    case Algorithm::DT:
    case Algorithm::RF: {
      const double nt = static_cast<double>(m.trees.size());
      for (std::size_t r = 0; r < d.rows(); ++r) {
        auto& row = out[r];
        for (const auto& t : m.trees) {
          const double* p = t.proba_row(d, r);
          for (std::size_t c = 0; c < k; ++c) row[c] += p[c];
        }
        if (m.trees.size() > 1)
          for (auto& v : row) v /= nt;
      }
      break;
    }
    case Algorithm::KNN: {
      const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(m.spec.k), m.train_x.size());
      parallel_for(d.rows(), [&](std::size_t r) {
        const auto x = row_of(d, r, m, true);
        std::vector<std::pair<double, std::uint32_t>> dist(m.train_x.size());
        for (std::size_t i = 0; i < m.train_x.size(); ++i) {
          double s = 0;
          const auto& t = m.train_x[i];
          for (std::size_t j = 0; j < x.size(); ++j) s += (x[j] - t[j]) * (x[j] - t[j]);
          dist[i] = {s, static_cast<std::uint32_t>(i)};
        }
        std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk - 1), dist.end());
        std::sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk));
        auto& row = out[r];
        const bool exact = m.spec.distance_weights && dist[0].first == 0.0;
        for (std::size_t i = 0; i < kk; ++i) {
          const auto [d2, idx] = dist[i];
          double w = 1.0;
          if (m.spec.distance_weights) {
            if (exact) {
              w = d2 == 0.0 ? 1.0 : 0.0;
            } else {
              w = 1.0 / std::sqrt(d2);
            }
          }
          row[m.train_y[idx]] += w;
        }
        double s = 0;
        for (double v : row) s += v;
        for (auto& v : row) v /= s;
      });
      break;
    }
    case Algorithm::NB: {
      constexpr double kLog2Pi = 1.8378770664093453;
      for (std::size_t r = 0; r < d.rows(); ++r) {
        auto& row = out[r];
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
          double lp = m.log_prior[c];
          for (std::size_t j = 0; j < d.width(); ++j) {
            const double diff = fill(d.cols[j][r]) - m.theta[c][j];
            lp -= 0.5 * (kLog2Pi + std::log(m.var[c][j]) + diff * diff / m.var[c][j]);
          }
          row[c] = lp;
          mx = std::max(mx, lp);
        }
        double s = 0;
        for (auto& v : row) s += (v = std::exp(v - mx));
        for (auto& v : row) v /= s;
      }
      break;
    }
    case Algorithm::LR: {
      for (std::size_t r = 0; r < d.rows(); ++r) {
        const auto x = row_of(d, r, m, true);
        auto& row = out[r];
        double s = 0;
        for (std::size_t c = 0; c < k; ++c) s += (row[c] = sigmoid(dot_bias(m.coef[c], x)));
        for (auto& v : row) v = s > 0 ? v / s : 1.0 / static_cast<double>(k);
      }
      break;
    }
  }
  return out;
}

std::vector<std::string> TrainedModel::predict(const Dataset& d) const {
  const auto proba = predict_proba(d);
  std::vector<std::string> out;
  out.reserve(proba.size());
  for (const auto& row : proba) {
    const auto it = std::max_element(row.begin(), row.end());
    out.push_back(impl_->classes[static_cast<std::size_t>(it - row.begin())]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

std::string TrainedModel::to_json() const {
  const auto& m = *impl_;
  json j;
  j["format_version"] = kModelFormatVersion;
  j["spec"] = spec_json(m.spec);
  j["features"] = m.features;
  j["feature_hash"] = feature_hash();
  j["classes"] = m.classes;
  j["seed"] = m.seed;
  json s;
  switch (m.spec.algorithm) {
    case Algorithm::DT:
    case Algorithm::RF: {
      auto& trees = s["trees"] = json::array();
      for (const auto& t : m.trees) {
        json tj;
        std::vector<int> feature, left, right, leaf;
        std::vector<double> thr;
        std::vector<bool> ml;
        for (const auto& n : t.nodes_) {
          feature.push_back(n.feature);
          thr.push_back(n.threshold);
          ml.push_back(n.missing_left);
          left.push_back(n.left);
          right.push_back(n.right);
          leaf.push_back(n.leaf);
        }
        tj["feature"] = feature;
        tj["threshold"] = thr;
        tj["missing_left"] = ml;
        tj["left"] = left;
        tj["right"] = right;
        tj["leaf"] = leaf;
        tj["leaves"] = t.leaves_;
        trees.push_back(std::move(tj));
      }
      break;
    }
    case Algorithm::KNN:
      s["mean"] = m.mean;
      s["scale"] = m.scale;
      s["train_x"] = m.train_x;
      s["train_y"] = m.train_y;
      break;
    case Algorithm::NB:
      s["theta"] = m.theta;
      s["var"] = m.var;
      s["log_prior"] = m.log_prior;
      break;
    case Algorithm::LR:
      s["mean"] = m.mean;
      s["scale"] = m.scale;
      s["coef"] = m.coef;
      break;
  }
  j["structure"] = std::move(s);
  return j.dump() + "\n";
}

TrainedModel TrainedModel::from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("model file is not valid JSON: ") + e.what());
  }
  TrainedModel model;
  auto& m = *model.impl_;
  try {
    if (j.at("format_version").get<int>() != kModelFormatVersion)
      throw IncompatibleError("unsupported model format version " + j.at("format_version").dump());
    m.spec = spec_from(j.at("spec"));
    m.features = j.at("features").get<std::vector<std::string>>();
    m.classes = j.at("classes").get<std::vector<std::string>>();
    m.seed = j.at("seed").get<std::uint64_t>();
    if (j.at("feature_hash").get<std::string>() != feature_list_hash(m.features))
      throw IncompatibleError("model feature hash does not match its feature list");
    const auto& s = j.at("structure");
    switch (m.spec.algorithm) {
      case Algorithm::DT:
      case Algorithm::RF:
        for (const auto& tj : s.at("trees")) {
          DecisionTree t;
          t.n_classes_ = m.classes.size();
          const auto feature = tj.at("feature").get<std::vector<int>>();
          const auto thr = tj.at("threshold").get<std::vector<double>>();
          const auto ml = tj.at("missing_left").get<std::vector<bool>>();
          const auto left = tj.at("left").get<std::vector<int>>();
          const auto right = tj.at("right").get<std::vector<int>>();
          const auto leaf = tj.at("leaf").get<std::vector<int>>();
          t.leaves_ = tj.at("leaves").get<std::vector<double>>();
          const auto nn = feature.size();
          if (thr.size() != nn || ml.size() != nn || left.size() != nn || right.size() != nn ||
              leaf.size() != nn || nn == 0)
            throw InputError("model tree arrays have inconsistent lengths");
          for (std::size_t i = 0; i < nn; ++i) {
            TreeNode n{feature[i], thr[i], ml[i], left[i], right[i], leaf[i]};
            const bool ok = n.feature < 0
                                ? (n.leaf >= 0 && (static_cast<std::size_t>(n.leaf) + 1) * t.n_classes_ <= t.leaves_.size())
                                : (static_cast<std::size_t>(n.feature) < m.features.size() && n.left > static_cast<int>(i) &&
                                   n.right > static_cast<int>(i) && static_cast<std::size_t>(n.left) < nn &&
                                   static_cast<std::size_t>(n.right) < nn);
            if (!ok) throw InputError("model tree node " + std::to_string(i) + " is malformed");
            t.nodes_.push_back(n);
          }
          m.trees.push_back(std::move(t));
        }
        if (m.trees.empty()) throw InputError("model has no trees");
        break;
      case Algorithm::KNN:
        m.mean = s.at("mean").get<std::vector<double>>();
        m.scale = s.at("scale").get<std::vector<double>>();
        m.train_x = s.at("train_x").get<std::vector<std::vector<double>>>();
        m.train_y = s.at("train_y").get<std::vector<std::uint32_t>>();
        break;
      case Algorithm::NB:
        m.theta = s.at("theta").get<std::vector<std::vector<double>>>();
        m.var = s.at("var").get<std::vector<std::vector<double>>>();
        m.log_prior = s.at("log_prior").get<std::vector<double>>();
        break;
      case Algorithm::LR:
        m.mean = s.at("mean").get<std::vector<double>>();
        m.scale = s.at("scale").get<std::vector<double>>();
        m.coef = s.at("coef").get<std::vector<std::vector<double>>>();
        break;
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad model file: ") + e.what());
  }
  return model;
}

void TrainedModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << to_json();
}

TrainedModel TrainedModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("model file not found: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

// ---------------------------------------------------------------------------
// Search

double score_on(const TrainedModel& model, const Dataset& test) {
  const std::set<std::string> known(model.classes().begin(), model.classes().end());
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < test.rows(); ++r)
    if (known.count(test.labels[r])) keep.push_back(r);
  if (keep.empty()) throw InputError("test table shares no class with the model");
  const Dataset sub = keep.size() == test.rows() ? test : test.select_rows(keep);
  const auto pred = model.predict(sub);
  const auto cm = ConfusionMatrix::from_labels(model.classes(), sub.labels, pred);
  return macro_f1(cm);
}

std::vector<ModelSpec> draw_specs(Algorithm algorithm, int n_draws, int n_features, std::uint64_t seed) {
  if (n_draws < 1) throw InputError("random search needs at least one draw");
  Rng rng = make_rng(seed, "search");
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto coin = [&] { return uni(0, 1) == 1; };
  auto log_uni = [&](double lo, double hi) {
    return std::exp(std::uniform_real_distribution<double>(std::log(lo), std::log(hi))(rng));
  };
  std::vector<ModelSpec> out;
  for (int i = 0; i < n_draws; ++i) {
    ModelSpec s;
    s.algorithm = algorithm;
    switch (algorithm) {
      case Algorithm::RF:
        s.bootstrap = coin();
        s.n_estimators = uni(1, 200);
        [[fallthrough]];
      case Algorithm::DT:
        s.criterion = coin() ? Criterion::Entropy : Criterion::Gini;
        s.max_depth = uni(1, 32);
        s.max_features = uni(1, std::max(1, n_features));
        s.min_samples_split = uni(2, 10);
        break;
      case Algorithm::KNN:
        s.k = uni(1, 64);
        s.distance_weights = coin();
        s.leaf_size = uni(1, 64);
        break;
      case Algorithm::NB:
        s.var_smoothing = log_uni(1e-9, 1.0);
        break;
      case Algorithm::LR:
        s.C = log_uni(1e-5, 100.0);
        s.l2 = coin();
        break;
    }
    out.push_back(s);
  }
  return out;
}

SearchResult random_search(Algorithm algorithm, int n_draws, const std::vector<SearchContext>& contexts,
                           std::uint64_t seed) {
  if (contexts.empty()) throw InputError("random search needs at least one evaluation context");
  const int width = static_cast<int>(contexts.front().train->width());
  const auto specs = draw_specs(algorithm, n_draws, width, seed);
  const auto scores = parallel_map<double>(specs.size(), [&](std::size_t i) {
    double s = 0;
    for (std::size_t c = 0; c < contexts.size(); ++c) {
      const auto model = train(specs[i], *contexts[c].train, derive_seed(seed, "search-train", c));
      s += score_on(model, *contexts[c].test);
    }
    return s / static_cast<double>(contexts.size());
  });
  SearchResult r;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    r.trace.push_back({specs[i], scores[i]});
    if (i == 0 || scores[i] > r.best_score) {
      r.best = specs[i];
      r.best_score = scores[i];
    }
  }
  return r;
}

}  // namespace gemid
