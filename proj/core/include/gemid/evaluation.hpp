#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gemid/metrics.hpp"
#include "gemid/models.hpp"
#include "gemid/partition.hpp"
#include "gemid/selection.hpp"

namespace gemid {

/// One test-side prediction with the keys aggregation groups by.
struct PacketPrediction {
  std::string source_key;
  std::string session;
  std::uint64_t frame = 0;
  std::string truth;
  std::string predicted;
  std::vector<double> proba;  // aligned with the context's class list
};

struct ContextPredictions {
  std::vector<std::string> classes;  // sorted; covers every model class
  std::vector<PacketPrediction> rows;  // capture order within each session
  std::vector<std::string> unseen;     // test classes the model never saw
  std::size_t train_rows = 0, dropped_rows = 0;
};

struct EvalReport {
  ContextKind kind = ContextKind::CV;
  std::string name;
  std::string granularity = "packet";  // or "group"
  ScoreReport score;
  ConfusionMatrix confusion;
  std::vector<std::string> train_only;  // classes never seen on the test side
  std::vector<std::string> test_only;   // test classes the model never saw; rows dropped
  std::size_t train_rows = 0, test_rows = 0;
};

/// Trains on the context's train side (per fold for CV, predictions
/// pooled) and predicts its test side. Throws InputError when train and
/// test share no class.
ContextPredictions predict_context(const EvalContext& ctx, const std::vector<Partition>& parts,
                                   const ModelSpec& spec, const std::vector<std::string>& features,
                                   std::uint64_t seed, std::optional<TimingResult>* timing = nullptr);

/// Macro F1 averages the classes supported on the test side, which are
/// the train/test intersection.
EvalReport report_from(const EvalContext& ctx, const ContextPredictions& preds);

EvalReport evaluate_context(const EvalContext& ctx, const std::vector<Partition>& parts,
                            const ModelSpec& spec, const std::vector<std::string>& features,
                            std::uint64_t seed);

// ---------------------------------------------------------------------------
// Aggregation

struct AggregationConfig {
  int group_size = 12;
};

/// Consecutive runs of g predictions per (source_key, session) vote on one
/// label: majority, then highest mean probability, then the smaller class
/// name. The trailing partial run is kept. Groups come out in order of
/// their first row. Probabilities of a group are the member means.
ContextPredictions aggregate_predictions(const ContextPredictions& preds, const AggregationConfig& cfg);

EvalReport evaluate_aggregated(const EvalContext& ctx, const std::vector<Partition>& parts,
                               const ModelSpec& spec, const std::vector<std::string>& features,
                               std::uint64_t seed, const AggregationConfig& cfg);

// ---------------------------------------------------------------------------
// Study

struct StudyMethod {
  std::string name;
  std::vector<std::filesystem::path> partitions;  // partition store directories
  ModelSpec model;
  std::optional<std::vector<std::string>> features;  // unset means every active feature
};

struct StudyPlan {
  std::uint64_t seed = 42;
  int folds = 5;
  std::optional<int> aggregate;  // group size g
  std::vector<int> sweep = {1, 2, 4, 8, 12, 16, 24, 32};
  bool timing = true;
  bool markdown = false;
  std::vector<StudyMethod> methods;
  std::filesystem::path base;  // relative partition paths resolve against it

  /// Relative paths resolve against `base`. Feature lists may be inline
  /// arrays, "all", or a path to a feature-list JSON file.
  static StudyPlan from_json(std::string_view text, const std::filesystem::path& base);
  std::string to_json() const;
};

struct MethodResult {
  std::string name;
  ModelSpec model;
  std::vector<std::string> features;
  std::vector<EvalReport> reports;             // plan order: CV, SS, DD
  std::vector<EvalReport> aggregated;          // same order, empty without aggregation
  std::vector<std::pair<int, double>> sweep;   // (g, DD mean macro F1)
  std::vector<std::optional<TimingResult>> timing;

  /// Mean macro F1 per kind; nullopt when the kind has no context.
  std::optional<double> mean(ContextKind k, bool aggregated = false) const;
};

struct StudyResult {
  std::vector<MethodResult> methods;
};

StudyResult run_study(const StudyPlan& plan);

/// suite_report.json, table1.csv, table2_per_device.csv,
/// confusion_<method>_<ctx>.csv, timing.json, and with aggregation
/// table1_aggregated.csv and aggregation_sweep.csv. Timing is the only
/// file whose content varies between runs.
void write_study(const StudyResult& r, const StudyPlan& plan, const std::filesystem::path& dir);

}  // namespace gemid
