#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gemid/partition.hpp"

namespace gemid {

/// Column-major numeric table with string labels. NaN marks missing.
struct Dataset {
  std::vector<std::string> features;
  std::vector<std::vector<double>> cols;
  std::vector<std::string> labels;

  std::size_t rows() const { return labels.size(); }
  std::size_t width() const { return features.size(); }
  double at(std::size_t row, std::size_t feature) const { return cols[feature][row]; }

  /// Picks `features` (by name) out of records laid out by `schema`.
  /// Throws InputError for names the schema lacks.
  static Dataset from_records(const std::vector<PacketRecord>& records, const FeatureSchema& schema,
                              const std::vector<std::string>& features);
  static Dataset from_partition(const Partition& p, const std::vector<std::string>& features);

  Dataset select_rows(std::span<const std::size_t> rows) const;
  Dataset select_features(std::span<const std::size_t> features) const;

  /// Sorted distinct labels.
  std::vector<std::string> classes() const;
};

/// Per-feature rank codes used by tree training: 0 is missing, 1..U are
/// the sorted distinct values.
struct BinnedData {
  std::vector<std::string> classes;
  std::vector<std::uint32_t> y;  // class index per row
  std::vector<std::vector<std::uint32_t>> codes;
  std::vector<std::vector<double>> values;  // distinct values per feature, ascending

  std::size_t rows() const { return y.size(); }
  std::size_t width() const { return codes.size(); }

  /// Throws InputError with fewer than two classes or no features.
  static BinnedData build(const Dataset& d);
};

}  // namespace gemid
