#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "gemid/pcap.hpp"
#include "gemid/schema.hpp"

namespace gemid {

struct RecordMeta {
  std::string partition;   // partition the record was first extracted into
  std::string session;     // capture session (source pcap stem)
  std::string source_key;  // opaque device-instance id, see MacAddress::key
  Timestamp ts;
  std::uint64_t frame = 0;  // 1-based packet ordinal in the session capture

  /// Identity used by the leakage guard.
  std::string record_id() const { return session + "#" + std::to_string(frame); }
  friend bool operator==(const RecordMeta&, const RecordMeta&) = default;
};

/// One labeled sample. `values` aligns with the partition schema's active
/// descriptors; NaN is the missing marker.
struct PacketRecord {
  RecordMeta meta;
  std::vector<double> values;
  std::string label;

  friend bool operator==(const PacketRecord& a, const PacketRecord& b);
};

/// Labeled, session-scoped slice of a dataset. Immutable once built.
struct Partition {
  std::string name;
  std::string family;   // dataset family / environment, drives DD pairing
  std::string session;  // session id within the family, drives SS pairing
  FeatureSchema schema;  // active descriptors only
  std::vector<PacketRecord> records;
  std::vector<std::string> source_files;

  std::set<std::string> class_set() const;
  friend bool operator==(const Partition&, const Partition&) = default;
};

/// Concatenates partitions in input order. Throws InputError on duplicate
/// input names and IncompatibleError on differing schemas.
Partition merge_sessions(const std::vector<Partition>& parts, const std::string& name);

inline constexpr int kStoreFormatVersion = 1;

/// Writes manifest.json, schema.json and features.csv into `dir`;
/// returns the manifest path.
std::filesystem::path store_partition(const Partition& p, const std::filesystem::path& dir);

/// Throws NotFoundError when the manifest is missing and IncompatibleError
/// when the stored schema hash disagrees with the schema or table.
Partition load_partition(const std::filesystem::path& dir);

/// Feature-table CSV (shared by partitions and the extract command).
void write_feature_table(std::ostream& out, const FeatureSchema& schema,
                         const std::vector<PacketRecord>& records);

}  // namespace gemid
