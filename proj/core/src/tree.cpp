#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gemid/error.hpp"
#include "gemid/models.hpp"
#include "gemid/random.hpp"

namespace gemid {
namespace {

double impurity(const double* counts, std::size_t k, double n, Criterion c) {
  if (n <= 0) return 0.0;
  double acc = 0;
  if (c == Criterion::Gini) {
    for (std::size_t i = 0; i < k; ++i) {
      const double p = counts[i] / n;
      acc += p * p;
    }
    return 1.0 - acc;
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (counts[i] <= 0) continue;
    const double p = counts[i] / n;
    acc -= p * std::log2(p);
  }
  return acc;
}

struct Split {
  double gain = 0;
  std::uint32_t feature = 0;
  std::uint32_t last_left_code = 0;  // codes 1..last_left_code go left
  double threshold = 0;
  bool missing_left = true;
  bool found = false;
};

/// Scratch space reused across the nodes of one tree.
struct Workspace {
  std::vector<double> hist;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  std::vector<double> left, right, missing, group, tmp_l, tmp_r;
  std::vector<std::uint32_t> feats;
};

class Grower {
 public:
  Grower(const BinnedData& data, const ModelSpec& spec, std::uint64_t seed)
      : d_(data), spec_(spec), k_(data.classes.size()), rng_(seed) {
    ws_.left.resize(k_);
    ws_.right.resize(k_);
    ws_.missing.resize(k_);
    ws_.group.resize(k_);
    ws_.tmp_l.resize(k_);
    ws_.tmp_r.resize(k_);
  }

  DecisionTree grow(std::vector<std::uint32_t> idx, std::span<const std::uint32_t> features) {
    DecisionTree t;
    t.n_classes_ = k_;
    struct Item {
      std::size_t b, e;
      int depth;
      int node;
    };
    std::vector<Item> stack;
    t.nodes_.push_back({});
    stack.push_back({0, idx.size(), 0, 0});
    std::vector<double> counts(k_);
    while (!stack.empty()) {
      const Item it = stack.back();
      stack.pop_back();
      std::fill(counts.begin(), counts.end(), 0.0);
      for (std::size_t i = it.b; i < it.e; ++i) counts[d_.y[idx[i]]] += 1;
      const auto n = static_cast<double>(it.e - it.b);
      std::size_t nonzero = 0;
      for (double c : counts) nonzero += c > 0;

      Split best;
      if (it.depth < spec_.max_depth && it.e - it.b >= static_cast<std::size_t>(spec_.min_samples_split) &&
          nonzero > 1) {
        const double parent = impurity(counts.data(), k_, n, spec_.criterion);
        choose_features(features);
        for (auto f : ws_.feats) evaluate(idx, it.b, it.e, f, parent, best);
      }
      if (!best.found) {
        t.nodes_[it.node].leaf = static_cast<int>(t.leaves_.size() / k_);
        for (double c : counts) t.leaves_.push_back(c / n);
        continue;
      }
      const auto& codes = d_.codes[best.feature];
      auto mid = std::stable_partition(idx.begin() + it.b, idx.begin() + it.e, [&](std::uint32_t r) {
        const auto c = codes[r];
        return c == 0 ? best.missing_left : c <= best.last_left_code;
      });
      const std::size_t m = static_cast<std::size_t>(mid - idx.begin());
      const int left = static_cast<int>(t.nodes_.size());
      t.nodes_.push_back({});
      t.nodes_.push_back({});
      auto& node = t.nodes_[it.node];
      node.feature = static_cast<int>(best.feature);
      node.threshold = best.threshold;
      node.missing_left = best.missing_left;
      node.left = left;
      node.right = left + 1;
      stack.push_back({m, it.e, it.depth + 1, left + 1});
      stack.push_back({it.b, m, it.depth + 1, left});
    }
    return t;
  }

 private:
  void choose_features(std::span<const std::uint32_t> features) {
    ws_.feats.assign(features.begin(), features.end());
    const auto mf = static_cast<std::size_t>(spec_.max_features);
    if (mf == 0 || mf >= ws_.feats.size()) return;
    for (std::size_t i = 0; i < mf; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, ws_.feats.size() - 1);
      std::swap(ws_.feats[i], ws_.feats[pick(rng_)]);
    }
    ws_.feats.resize(mf);
  }

  void consider(const std::vector<double>& left, double n_left, const std::vector<double>& present,
                double n_present, double n_missing, double parent, double n,
                std::uint32_t f, std::uint32_t last_code, double threshold, bool missing_as_lowest,
                Split& best) {
    auto& l = ws_.tmp_l;
    auto& r = ws_.tmp_r;
    double nl = n_left, nr = n_present - n_left;
    bool missing_left = true;
    for (std::size_t c = 0; c < k_; ++c) {
      l[c] = left[c];
      r[c] = present[c] - left[c];
    }
    if (!missing_as_lowest && n_missing > 0) {
      missing_left = nl >= nr;
      auto& dst = missing_left ? l : r;
      for (std::size_t c = 0; c < k_; ++c) dst[c] += ws_.missing[c];
      (missing_left ? nl : nr) += n_missing;
    }
    if (nl <= 0 || nr <= 0) return;
    const double gain = parent - (nl / n) * impurity(l.data(), k_, nl, spec_.criterion) -
                        (nr / n) * impurity(r.data(), k_, nr, spec_.criterion);
    if (gain > 1e-12 && (!best.found || gain > best.gain)) {
      best.found = true;
      best.gain = gain;
      best.feature = f;
      best.last_left_code = last_code;
      best.threshold = threshold;
      best.missing_left = missing_left;
    }
  }

  void evaluate(const std::vector<std::uint32_t>& idx, std::size_t b, std::size_t e, std::uint32_t f,
                double parent, Split& best) {
    const auto& codes = d_.codes[f];
    const auto& vals = d_.values[f];
    const std::size_t u = vals.size();
    if (u == 0) return;
    const double n = static_cast<double>(e - b);
    const bool as_lowest = spec_.missing == MissingPolicy::AsLowest;

    std::fill(ws_.missing.begin(), ws_.missing.end(), 0.0);
    std::vector<double> present(k_, 0.0);
    double n_missing = 0;

    // Present groups in ascending code order, produced by either path.
    auto& left = ws_.left;
    std::fill(left.begin(), left.end(), 0.0);
    double n_left = 0;
    std::uint32_t prev_code = 0;
    bool have_prev = false;
    double n_present = 0;

    const bool use_hist = (u + 1) * k_ <= 4 * (e - b) + 64;
    if (use_hist) {
      ws_.hist.assign((u + 1) * k_, 0.0);
      for (std::size_t i = b; i < e; ++i) {
        const auto r = idx[i];
        ws_.hist[codes[r] * k_ + d_.y[r]] += 1;
      }
      for (std::size_t c = 0; c < k_; ++c) {
        ws_.missing[c] = ws_.hist[c];
        n_missing += ws_.hist[c];
      }
    } else {
      ws_.pairs.clear();
      for (std::size_t i = b; i < e; ++i) {
        const auto r = idx[i];
        if (codes[r] == 0) {
          ws_.missing[d_.y[r]] += 1;
          n_missing += 1;
        } else {
          ws_.pairs.emplace_back(codes[r], d_.y[r]);
        }
      }
      std::sort(ws_.pairs.begin(), ws_.pairs.end());
    }
    n_present = n - n_missing;
    if (n_present <= 0) return;
    if (use_hist) {
      for (std::size_t code = 1; code <= u; ++code)
        for (std::size_t c = 0; c < k_; ++c) present[c] += ws_.hist[code * k_ + c];
    } else {
      for (const auto& p : ws_.pairs) present[p.second] += 1;
    }

    // Missing as its own lowest group: a boundary between it and the
    // smallest present value is a legal split.
    if (as_lowest && n_missing > 0) {
      for (std::size_t c = 0; c < k_; ++c) {
        left[c] = ws_.missing[c];
        present[c] += ws_.missing[c];
      }
      n_left = n_missing;
      n_present += n_missing;
      have_prev = true;
      prev_code = 0;
    }

    auto boundary = [&](std::uint32_t next_code) {
      double thr;
      if (prev_code == 0) {
        thr = std::numeric_limits<double>::lowest();
      } else {
        const double a = vals[prev_code - 1], bv = vals[next_code - 1];
        thr = a + (bv - a) / 2;
        if (!(thr < bv)) thr = a;
      }
      consider(left, n_left, present, n_present, as_lowest ? 0.0 : n_missing, parent, n, f,
               prev_code, thr, as_lowest, best);
    };

    if (use_hist) {
      for (std::uint32_t code = 1; code <= u; ++code) {
        const double* g = &ws_.hist[code * k_];
        double tot = 0;
        for (std::size_t c = 0; c < k_; ++c) tot += g[c];
        if (tot == 0) continue;
        if (have_prev) boundary(code);
        for (std::size_t c = 0; c < k_; ++c) left[c] += g[c];
        n_left += tot;
        prev_code = code;
        have_prev = true;
      }
    } else {
      std::size_t i = 0;
      while (i < ws_.pairs.size()) {
        const auto code = ws_.pairs[i].first;
        if (have_prev) boundary(code);
        while (i < ws_.pairs.size() && ws_.pairs[i].first == code) {
          left[ws_.pairs[i].second] += 1;
          n_left += 1;
          ++i;
        }
        prev_code = code;
        have_prev = true;
      }
    }
  }

  const BinnedData& d_;
  const ModelSpec& spec_;
  std::size_t k_;
  Rng rng_;
  Workspace ws_;
};

}  // namespace

std::uint64_t tree_seed(std::uint64_t seed, std::size_t index) { return derive_seed(seed, "tree", index); }

DecisionTree DecisionTree::fit(const BinnedData& data, std::span<const std::uint32_t> rows,
                               std::span<const std::uint32_t> features, const ModelSpec& spec,
                               std::uint64_t seed) {
  if (features.empty()) throw InputError("tree needs at least one feature");
  if (rows.empty()) throw InputError("tree needs at least one row");
  Grower g(data, spec, seed);
  return g.grow(std::vector<std::uint32_t>(rows.begin(), rows.end()), features);
}

const double* DecisionTree::proba_row(const Dataset& d, std::size_t r) const {
  int i = 0;
  while (nodes_[i].feature >= 0) {
    const auto& n = nodes_[i];
    const double v = d.cols[n.feature][r];
    const bool go_left = std::isnan(v) ? n.missing_left : v <= n.threshold;
    i = go_left ? n.left : n.right;
  }
  return &leaves_[static_cast<std::size_t>(nodes_[i].leaf) * n_classes_];
}

int DecisionTree::depth() const {
  std::vector<int> depth(nodes_.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].feature < 0) continue;
    depth[nodes_[i].left] = depth[nodes_[i].right] = depth[i] + 1;
    best = std::max(best, depth[i] + 1);
  }
  return best;
}

}  // namespace gemid
