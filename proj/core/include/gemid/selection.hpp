#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gemid/dataset.hpp"
#include "gemid/models.hpp"
#include "gemid/partition.hpp"

namespace gemid {

// ---------------------------------------------------------------------------
// Evaluation contexts

enum class ContextKind { CV, SS, DD };
std::string_view to_string(ContextKind k);

struct EvalContext {
  ContextKind kind = ContextKind::CV;
  std::string name;       // "P" for CV, "TRAIN|TEST" otherwise
  std::size_t train = 0;  // partition indices; equal for CV
  std::size_t test = 0;
  int folds = 5;
};

/// CV per partition, SS for ordered pairs within a family (different
/// sessions), DD for ordered pairs across families; in that order, pairs
/// in partition order. Throws InputError when a partition lacks a family,
/// LeakageError when an SS/DD pair shares record ids.
std::vector<EvalContext> build_contexts(const std::vector<Partition>& parts, int folds = 5);

/// Throws LeakageError naming one shared record id.
void assert_disjoint(const Partition& train, const Partition& test);

/// Shuffled fold id per row, balanced to within one row.
std::vector<int> fold_assignment(std::size_t rows, int folds, std::uint64_t seed);

/// Materialized train/test tables of one context (CV: one entry per fold).
struct ContextSplit {
  Dataset train;
  Dataset test;  // restricted to labels seen in train
};
std::vector<ContextSplit> materialize(const EvalContext& ctx, const std::vector<Partition>& parts,
                                      const std::vector<std::string>& features, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Univariate scan and voting

struct KappaTable {
  std::vector<std::string> features;
  std::vector<EvalContext> contexts;
  std::vector<std::vector<double>> kappa;  // [feature][context]

  std::string to_csv() const;
};

/// The single-feature tree used by the scan and the GA fitness.
ModelSpec scan_tree_spec();

/// Kappa of a single-feature tree per (feature, context); CV is the mean
/// over folds.
KappaTable univariate_scan(const std::vector<Partition>& parts, const std::vector<EvalContext>& contexts,
                           const std::vector<std::string>& features, std::uint64_t seed);

struct VoteConfig {
  double kappa_cut = 0.05;
  int quota = 4;   // DD or SS votes needed
  int min_dd = 1;  // DD votes always needed
};

struct Vote {
  std::string feature;
  int cv_votes = 0, ss_votes = 0, dd_votes = 0;
  bool selected = false;
};

/// CV columns are counted but never select.
std::vector<Vote> vote_filter(const KappaTable& kt, const VoteConfig& cfg = {});
std::string votes_csv(const std::vector<Vote>& votes);

// ---------------------------------------------------------------------------
// Genetic wrapper

struct GaConfig {
  int population = 50;
  int generations = 30;
  int tournament = 3;
  double crossover = 0.6;
  double mutation = -1;  // per-bit rate; negative means 1/L
  int elitism = 1;
};

using Mask = std::vector<bool>;
using MaskFitness = std::function<double(const Mask&)>;

struct GaRunResult {
  std::string dd_case;
  Mask mask;
  std::vector<double> trace;  // best fitness per generation, generation 0 first
  double fitness = 0;
  std::size_t evaluations = 0;  // distinct masks scored
};

/// Generic bitmask GA over L bits. Fitness calls within a generation run
/// in parallel; results are cached per mask.
GaRunResult ga_optimize(std::size_t length, const MaskFitness& fitness, const GaConfig& cfg,
                        std::uint64_t seed);

/// Fitness oracle of one DD case: macro F1 of the scan tree trained on the
/// masked candidate columns.
class DdCase {
 public:
  DdCase(std::string name, Dataset train, Dataset test, std::uint64_t seed);
  const std::string& name() const { return name_; }
  double fitness(const Mask& mask) const;
  std::size_t width() const { return train_.width(); }

 private:
  std::string name_;
  Dataset train_, test_;
  BinnedData binned_;
  std::uint64_t seed_;
};

GaRunResult ga_select(const DdCase& dd_case, const GaConfig& cfg, std::uint64_t seed);

/// vote[k-2] lists candidate indices appearing in at least k masks, for
/// k = 2..results.size().
std::vector<std::vector<std::size_t>> intersection_vote(const std::vector<GaRunResult>& results);

struct FeatureSet {
  std::string name;  // "GA-run-3", "Vote+2", ...
  std::vector<std::size_t> members;  // candidate indices
  int k = 0;  // vote threshold, 0 for GA runs
};

struct CrossEvalRow {
  FeatureSet set;
  std::vector<double> f1;  // per DD case
  double mean = 0;
  bool empty = false;
};

std::vector<CrossEvalRow> cross_evaluate(const std::vector<FeatureSet>& sets,
                                         const std::vector<const DdCase*>& cases);

/// Highest mean; ties to fewer features, then lower k, then earlier row.
const CrossEvalRow& pick_final(const std::vector<CrossEvalRow>& rows);

// ---------------------------------------------------------------------------
// Full pipeline

struct SelectionConfig {
  std::uint64_t seed = 42;
  int folds = 5;
  VoteConfig vote;
  GaConfig ga;

  std::string to_json() const;
  static SelectionConfig from_json(std::string_view text);
};

struct SelectionResult {
  std::vector<std::string> candidates;  // vote survivors, schema order
  KappaTable kappa;
  std::vector<Vote> votes;
  std::vector<GaRunResult> ga_runs;
  std::vector<CrossEvalRow> cross_eval;
  std::string final_set;
  std::vector<std::string> final_features;
  double final_mean_f1 = 0;
  std::string schema_hash;
};

/// Scan, vote, GA per DD case, Vote+k grouping, cross-evaluation and final
/// pick. Throws InputError with fewer than two families or when no
/// feature survives the vote.
SelectionResult run_selection(const std::vector<Partition>& parts, const SelectionConfig& cfg);

/// kappa_table.csv, votes.csv, ga_runs.json, cross_eval.csv,
/// final_features.json and config.json.
void write_selection(const SelectionResult& r, const SelectionConfig& cfg,
                     const std::filesystem::path& dir);

/// Reads the feature list from final_features.json (or a plain JSON
/// array of names).
std::vector<std::string> load_feature_list(const std::filesystem::path& path);

}  // namespace gemid
