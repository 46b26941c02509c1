#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gemid/dataset.hpp"

namespace gemid {

enum class Algorithm { DT, RF, KNN, NB, LR };
std::string_view to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view s);

enum class Criterion { Gini, Entropy };
/// Where a tree sends missing values: to the child holding more training
/// rows, or treated as smaller than every present value.
enum class MissingPolicy { MajorityChild, AsLowest };

struct ModelSpec {
  Algorithm algorithm = Algorithm::DT;
  // DT / RF
  Criterion criterion = Criterion::Gini;
  int max_depth = 32;
  int max_features = 0;  // 0 means all
  int min_samples_split = 2;
  MissingPolicy missing = MissingPolicy::MajorityChild;
  bool bootstrap = true;
  int n_estimators = 100;
  // KNN
  int k = 5;
  bool distance_weights = false;
  int leaf_size = 30;  // accepted, unused by brute-force search
  // NB
  double var_smoothing = 1e-9;
  // LR
  double C = 1.0;
  bool l2 = true;
  int max_iter = 300;

  /// Throws InputError for out-of-range values.
  void validate() const;
  std::string to_json() const;
  static ModelSpec from_json(std::string_view text);
  /// Short human form, e.g. "RF(entropy, depth 17, mf 3, split 5, 71 trees)".
  std::string describe() const;
  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

// ---------------------------------------------------------------------------
// Trees

struct TreeNode {
  int feature = -1;  // -1 for a leaf
  double threshold = 0;
  bool missing_left = true;
  int left = -1, right = -1;
  int leaf = -1;  // index into leaf distributions
};

class DecisionTree {
 public:
  /// Grows a CART tree on `rows` of `data` using only `features`.
  static DecisionTree fit(const BinnedData& data, std::span<const std::uint32_t> rows,
                          std::span<const std::uint32_t> features, const ModelSpec& spec,
                          std::uint64_t seed);

  /// Class distribution for row `r` of a dataset whose columns are in
  /// training order.
  const double* proba_row(const Dataset& d, std::size_t r) const;
  std::size_t n_classes() const { return n_classes_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  int depth() const;

  std::vector<TreeNode> nodes_;
  std::vector<double> leaves_;  // n_leaves * n_classes
  std::size_t n_classes_ = 0;
};

/// Seed of tree `index` in a forest trained with `seed`; a single tree
/// uses index 0 so a one-tree forest without bootstrap equals it.
std::uint64_t tree_seed(std::uint64_t seed, std::size_t index);

// ---------------------------------------------------------------------------
// Logistic regression internals (exposed for gradient checks)

/// One binary problem of the one-vs-rest scheme, on standardized inputs.
struct LogisticProblem {
  const std::vector<std::vector<double>>* x = nullptr;  // rows
  std::vector<double> y;                               // 0/1
  double C = 1.0;
  bool l2 = true;

  /// Sum of log-likelihoods minus |w|^2 / (2C); params = weights then bias.
  double objective(std::span<const double> params) const;
  std::vector<double> gradient(std::span<const double> params) const;
};

// ---------------------------------------------------------------------------
// Trained models

class TrainedModel {
 public:
  TrainedModel();
  ~TrainedModel();
  TrainedModel(TrainedModel&&) noexcept;
  TrainedModel& operator=(TrainedModel&&) noexcept;
  TrainedModel(const TrainedModel&);
  TrainedModel& operator=(const TrainedModel&);

  const ModelSpec& spec() const;
  const std::vector<std::string>& classes() const;
  const std::vector<std::string>& features() const;
  std::string feature_hash() const;
  std::uint64_t seed() const;

  /// Rows sum to 1. Throws IncompatibleError when `d` has other features.
  std::vector<std::vector<double>> predict_proba(const Dataset& d) const;
  std::vector<std::string> predict(const Dataset& d) const;

  std::string to_json() const;
  static TrainedModel from_json(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static TrainedModel load(const std::filesystem::path& path);

  struct Impl;

 private:
  friend TrainedModel train(const ModelSpec&, const Dataset&, std::uint64_t);
  std::unique_ptr<Impl> impl_;
};

/// Throws InputError for fewer than two classes or zero features.
TrainedModel train(const ModelSpec& spec, const Dataset& data, std::uint64_t seed);

inline constexpr int kModelFormatVersion = 1;

// ---------------------------------------------------------------------------
// Random search

struct SearchContext {
  const Dataset* train = nullptr;
  const Dataset* test = nullptr;
};

struct SearchDraw {
  ModelSpec spec;
  double score = 0;
};

struct SearchResult {
  ModelSpec best;
  double best_score = 0;
  std::vector<SearchDraw> trace;
};

/// Draws `n_draws` specs uniformly from the documented ranges for
/// `algorithm` and scores each by mean macro F1 over `contexts`. Ties go
/// to the earliest draw. max_features ranges over the training width.
SearchResult random_search(Algorithm algorithm, int n_draws,
                           const std::vector<SearchContext>& contexts, std::uint64_t seed);

/// The first `n_draws` specs of the search sequence, unscored.
std::vector<ModelSpec> draw_specs(Algorithm algorithm, int n_draws, int n_features,
                                  std::uint64_t seed);

/// Macro F1 of `model` on `test`, over classes present on both sides.
double score_on(const TrainedModel& model, const Dataset& test);

}  // namespace gemid
