#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace gemid {

/// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::vector<std::string> classes);
  ConfusionMatrix(std::vector<std::string> classes, std::vector<std::vector<std::uint64_t>> counts);

  /// Builds the matrix over `classes`; labels outside it throw InputError.
  static ConfusionMatrix from_labels(std::vector<std::string> classes,
                                     const std::vector<std::string>& truth,
                                     const std::vector<std::string>& predicted);

  void add(std::size_t truth, std::size_t predicted, std::uint64_t n = 1);
  void add(const std::string& truth, const std::string& predicted);

  const std::vector<std::string>& classes() const { return classes_; }
  std::size_t size() const { return classes_.size(); }
  std::uint64_t at(std::size_t t, std::size_t p) const { return counts_[t][p]; }
  std::uint64_t total() const;
  std::uint64_t support(std::size_t c) const;    // row sum
  std::uint64_t predicted(std::size_t c) const;  // column sum
  std::uint64_t trace() const;

  /// Same matrix with classes reordered by `order` (indices into classes()).
  ConfusionMatrix permuted(const std::vector<std::size_t>& order) const;

  std::string to_csv() const;
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t index_of(const std::string& c) const;
  std::vector<std::string> classes_;
  std::vector<std::vector<std::uint64_t>> counts_;
};

struct KappaResult {
  double value = 0;
  bool degenerate = false;  // chance agreement was 1
};

/// Throws InputError for an empty matrix.
KappaResult kappa_detail(const ConfusionMatrix& cm);
double kappa(const ConfusionMatrix& cm);

double accuracy(const ConfusionMatrix& cm);

struct ClassScore {
  std::string name;
  double precision = 0, recall = 0, f1 = 0;
  std::uint64_t support = 0;
};

/// Zero denominators give 0.
std::vector<ClassScore> per_class_scores(const ConfusionMatrix& cm);

struct MacroOptions {
  /// Leave zero-support classes out of the mean.
  bool exclude_zero_support = true;
  /// If set, average only over these classes (names not in the matrix are
  /// ignored).
  std::optional<std::vector<std::string>> classes;
};

double macro_f1(const ConfusionMatrix& cm, const MacroOptions& opts = {});

struct TimingResult {
  double median_seconds_per_1k = 0;
  double mean_seconds_per_1k = 0;
  int repetitions = 0;
};

/// Times `predict` (which must process `n_records`) `repetitions` times.
/// Throws InputError when n_records is 0.
TimingResult time_inference(const std::function<void()>& predict, std::size_t n_records,
                            int repetitions = 5);

struct ScoreReport {
  double accuracy = 0;
  double kappa = 0;
  bool kappa_degenerate = false;
  double macro_f1 = 0;
  std::vector<ClassScore> classes;
  std::vector<std::string> macro_classes;  // classes averaged in macro_f1
  std::optional<TimingResult> timing;

  std::string to_json() const;
};

ScoreReport score(const ConfusionMatrix& cm, const MacroOptions& opts = {});

}  // namespace gemid
