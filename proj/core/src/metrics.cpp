#include "gemid/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <json.hpp>
#include <set>

#include "gemid/error.hpp"
#include "gemid/text.hpp"

namespace gemid {

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> classes)
    : classes_(std::move(classes)),
      counts_(classes_.size(), std::vector<std::uint64_t>(classes_.size(), 0)) {}

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> classes,
                                 std::vector<std::vector<std::uint64_t>> counts)
    : classes_(std::move(classes)), counts_(std::move(counts)) {
  if (counts_.size() != classes_.size()) throw InputError("confusion matrix rows != classes");
  for (const auto& row : counts_)
    if (row.size() != classes_.size()) throw InputError("confusion matrix is not square");
}

ConfusionMatrix ConfusionMatrix::from_labels(std::vector<std::string> classes,
                                             const std::vector<std::string>& truth,
                                             const std::vector<std::string>& predicted) {
  if (truth.size() != predicted.size()) throw InputError("truth and prediction lengths differ");
  ConfusionMatrix cm(std::move(classes));
  for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], predicted[i]);
  return cm;
}

std::size_t ConfusionMatrix::index_of(const std::string& c) const {
  auto it = std::find(classes_.begin(), classes_.end(), c);
  if (it == classes_.end()) throw InputError("label '" + c + "' is not in the class list");
  return static_cast<std::size_t>(it - classes_.begin());
}

void ConfusionMatrix::add(std::size_t t, std::size_t p, std::uint64_t n) { counts_.at(t).at(p) += n; }

void ConfusionMatrix::add(const std::string& t, const std::string& p) { add(index_of(t), index_of(p)); }

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t s = 0;
  for (const auto& row : counts_)
    for (auto v : row) s += v;
  return s;
}

std::uint64_t ConfusionMatrix::support(std::size_t c) const {
  std::uint64_t s = 0;
  for (auto v : counts_[c]) s += v;
  return s;
}

std::uint64_t ConfusionMatrix::predicted(std::size_t c) const {
  std::uint64_t s = 0;
  for (const auto& row : counts_) s += row[c];
  return s;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < counts_.size(); ++i) s += counts_[i][i];
  return s;
}

ConfusionMatrix ConfusionMatrix::permuted(const std::vector<std::size_t>& order) const {
  if (order.size() != classes_.size()) throw InputError("permutation size mismatch");
  std::vector<std::string> cls;
  std::vector<std::vector<std::uint64_t>> counts(order.size(), std::vector<std::uint64_t>(order.size()));
  for (std::size_t i = 0; i < order.size(); ++i) {
    cls.push_back(classes_[order[i]]);
    for (std::size_t j = 0; j < order.size(); ++j) counts[i][j] = counts_[order[i]][order[j]];
  }
  return ConfusionMatrix(std::move(cls), std::move(counts));
}

std::string ConfusionMatrix::to_csv() const {
  std::string out = "true\\pred";
  for (const auto& c : classes_) out += "," + csv_cell(c);
  out += '\n';
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    out += csv_cell(classes_[i]);
    for (auto v : counts_[i]) out += "," + std::to_string(v);
    out += '\n';
  }
  return out;
}

KappaResult kappa_detail(const ConfusionMatrix& cm) {
  const auto n = cm.total();
  if (n == 0) throw InputError("kappa of an empty confusion matrix");
  const double total = static_cast<double>(n);
  const double po = static_cast<double>(cm.trace()) / total;
  double pe = 0;
  for (std::size_t i = 0; i < cm.size(); ++i)
    pe += static_cast<double>(cm.support(i)) * static_cast<double>(cm.predicted(i));
  pe /= total * total;
  if (pe >= 1.0) return {0.0, true};
  return {(po - pe) / (1.0 - pe), false};
}

double kappa(const ConfusionMatrix& cm) { return kappa_detail(cm).value; }

double accuracy(const ConfusionMatrix& cm) {
  const auto n = cm.total();
  if (n == 0) throw InputError("accuracy of an empty confusion matrix");
  return static_cast<double>(cm.trace()) / static_cast<double>(n);
}

std::vector<ClassScore> per_class_scores(const ConfusionMatrix& cm) {
  std::vector<ClassScore> out;
  for (std::size_t c = 0; c < cm.size(); ++c) {
    ClassScore s;
    s.name = cm.classes()[c];
    s.support = cm.support(c);
    const double tp = static_cast<double>(cm.at(c, c));
    const double pred = static_cast<double>(cm.predicted(c));
    const double sup = static_cast<double>(s.support);
    s.precision = pred > 0 ? tp / pred : 0.0;
    s.recall = sup > 0 ? tp / sup : 0.0;
    s.f1 = (pred + sup) > 0 ? 2 * tp / (pred + sup) : 0.0;
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

std::vector<std::size_t> macro_members(const ConfusionMatrix& cm, const MacroOptions& opts) {
  std::vector<std::size_t> idx;
  std::set<std::string> subset;
  if (opts.classes) subset.insert(opts.classes->begin(), opts.classes->end());
  for (std::size_t c = 0; c < cm.size(); ++c) {
    if (opts.classes && !subset.count(cm.classes()[c])) continue;
    if (opts.exclude_zero_support && cm.support(c) == 0) continue;
    idx.push_back(c);
  }
  return idx;
}

}  // namespace

double macro_f1(const ConfusionMatrix& cm, const MacroOptions& opts) {
  const auto scores = per_class_scores(cm);
  const auto idx = macro_members(cm, opts);
  if (idx.empty()) return 0.0;
  double s = 0;
  for (auto i : idx) s += scores[i].f1;
  return s / static_cast<double>(idx.size());
}

TimingResult time_inference(const std::function<void()>& predict, std::size_t n_records,
                            int repetitions) {
  if (n_records == 0) throw InputError("cannot time inference on zero records");
  if (repetitions < 1) throw InputError("timing needs at least one repetition");
  std::vector<double> per_1k;
  for (int r = 0; r < repetitions; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    predict();
    const auto t1 = std::chrono::steady_clock::now();
    const double secs = std::chrono::duration<double>(t1 - t0).count();
    per_1k.push_back(secs * 1000.0 / static_cast<double>(n_records));
  }
  TimingResult t;
  t.repetitions = repetitions;
  double sum = 0;
  for (double v : per_1k) sum += v;
  t.mean_seconds_per_1k = sum / repetitions;
  std::sort(per_1k.begin(), per_1k.end());
  const auto m = per_1k.size() / 2;
  t.median_seconds_per_1k = per_1k.size() % 2 ? per_1k[m] : 0.5 * (per_1k[m - 1] + per_1k[m]);
  return t;
}

ScoreReport score(const ConfusionMatrix& cm, const MacroOptions& opts) {
  ScoreReport r;
  r.accuracy = accuracy(cm);
  const auto k = kappa_detail(cm);
  r.kappa = k.value;
  r.kappa_degenerate = k.degenerate;
  r.macro_f1 = macro_f1(cm, opts);
  r.classes = per_class_scores(cm);
  for (auto i : macro_members(cm, opts)) r.macro_classes.push_back(cm.classes()[i]);
  return r;
}

std::string ScoreReport::to_json() const {
  nlohmann::ordered_json j;
  j["accuracy"] = accuracy;
  j["kappa"] = kappa;
  j["kappa_degenerate"] = kappa_degenerate;
  j["macro_f1"] = macro_f1;
  j["macro_classes"] = macro_classes;
  auto& cls = j["per_class"] = nlohmann::ordered_json::array();
  for (const auto& c : classes) {
    cls.push_back({{"class", c.name},
                   {"precision", c.precision},
                   {"recall", c.recall},
                   {"f1", c.f1},
                   {"support", c.support}});
  }
  if (timing) {
    j["timing"] = {{"median_seconds_per_1k", timing->median_seconds_per_1k},
                   {"mean_seconds_per_1k", timing->mean_seconds_per_1k},
                   {"repetitions", timing->repetitions}};
  }
  return j.dump(2);
}

}  // namespace gemid
