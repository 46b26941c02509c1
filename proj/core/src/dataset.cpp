#include "gemid/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "gemid/error.hpp"

namespace gemid {

Dataset Dataset::from_records(const std::vector<PacketRecord>& records, const FeatureSchema& schema,
                              const std::vector<std::string>& features) {
  const auto names = schema.active_names();
  std::vector<std::size_t> idx;
  for (const auto& f : features) {
    auto it = std::find(names.begin(), names.end(), f);
    if (it == names.end()) throw InputError("feature '" + f + "' is not in the partition schema");
    idx.push_back(static_cast<std::size_t>(it - names.begin()));
  }
  Dataset d;
  d.features = features;
  d.cols.assign(features.size(), std::vector<double>(records.size()));
  d.labels.reserve(records.size());
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.values.size() != names.size()) throw InputError("record width does not match schema");
    for (std::size_t j = 0; j < idx.size(); ++j) d.cols[j][r] = rec.values[idx[j]];
    d.labels.push_back(rec.label);
  }
  return d;
}

Dataset Dataset::from_partition(const Partition& p, const std::vector<std::string>& features) {
  return from_records(p.records, p.schema, features);
}

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const {
  Dataset d;
  d.features = features;
  d.cols.assign(features.size(), {});
  for (std::size_t j = 0; j < features.size(); ++j) {
    d.cols[j].reserve(rows.size());
    for (auto r : rows) d.cols[j].push_back(cols[j][r]);
  }
  d.labels.reserve(rows.size());
  for (auto r : rows) d.labels.push_back(labels[r]);
  return d;
}

Dataset Dataset::select_features(std::span<const std::size_t> fs) const {
  Dataset d;
  for (auto f : fs) {
    d.features.push_back(features.at(f));
    d.cols.push_back(cols[f]);
  }
  d.labels = labels;
  return d;
}

std::vector<std::string> Dataset::classes() const {
  std::set<std::string> s(labels.begin(), labels.end());
  return {s.begin(), s.end()};
}

BinnedData BinnedData::build(const Dataset& d) {
  BinnedData b;
  b.classes = d.classes();
  if (b.classes.size() < 2) throw InputError("training needs at least two classes");
  if (d.width() == 0) throw InputError("training needs at least one feature");
  b.y.reserve(d.rows());
  for (const auto& l : d.labels) {
    const auto it = std::lower_bound(b.classes.begin(), b.classes.end(), l);
    b.y.push_back(static_cast<std::uint32_t>(it - b.classes.begin()));
  }
  b.codes.resize(d.width());
  b.values.resize(d.width());
  for (std::size_t f = 0; f < d.width(); ++f) {
    const auto& col = d.cols[f];
    auto& vals = b.values[f];
    for (double v : col)
      if (!std::isnan(v)) vals.push_back(v);
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    auto& codes = b.codes[f];
    codes.resize(col.size());
    for (std::size_t r = 0; r < col.size(); ++r) {
      const double v = col[r];
      codes[r] = std::isnan(v) ? 0
                               : static_cast<std::uint32_t>(
                                     std::lower_bound(vals.begin(), vals.end(), v) - vals.begin() + 1);
    }
  }
  return b;
}

}  // namespace gemid
