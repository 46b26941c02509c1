#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gemid/labels.hpp"
#include "gemid/partition.hpp"
#include "gemid/schema.hpp"

namespace gemid {

enum class SchemaFamily { Header, Flow, Window };

std::string_view to_string(SchemaFamily f);
/// Throws InputError for anything but header, flow or window.
SchemaFamily parse_schema_family(std::string_view s);

/// Built-in schema of a family (the header one unfiltered).
const FeatureSchema& builtin_schema(SchemaFamily f);

/// Pcaps that make up one partition.
struct CaptureSet {
  std::string name;
  std::string family;
  std::string session;
  std::vector<std::filesystem::path> pcaps;
};

struct ExtractOptions {
  SchemaFamily family = SchemaFamily::Header;
  /// Header only: use this schema (and its filter statuses) instead of
  /// filtering the built-in catalog on the extracted sample.
  std::optional<FeatureSchema> schema;
};

struct ExtractSummary {
  std::string partition;
  std::map<std::string, std::size_t> per_device;  // emitted records
  std::size_t packets = 0;
  std::size_t skipped = 0;    // unlabeled source
  std::size_t malformed = 0;  // below Ethernet size
};

struct ExtractResult {
  /// Full schema including filtered descriptors and their reasons.
  FeatureSchema schema;
  std::vector<Partition> partitions;
  std::vector<ExtractSummary> summaries;
};

/// Reads, labels and featurizes every capture set. Files are processed in
/// parallel and reassembled in input order. Header filters are computed
/// over the union of all sets. Record sessions are pcap file stems.
ExtractResult extract_partitions(const std::vector<CaptureSet>& sets, const LabelMap& labels,
                                 const ExtractOptions& opts);

}  // namespace gemid
