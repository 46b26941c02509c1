#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gemid/dissect.hpp"
#include "gemid/schema.hpp"

namespace gemid {

/// Value of one catalog field before filtering: absent layer, number, or
/// text (addresses, names).
using FieldValue = std::variant<std::monostate, double, std::string>;
using RawRow = std::vector<FieldValue>;

/// Ports with a dedicated dstport_class id, in id order (1..9).
inline constexpr std::array<std::uint16_t, 9> kDstportAllowList = {53,  67,   68,   80,  123,
                                                                   443, 1900, 5353, 8080};

/// 0 for no port, 1..9 for the allow-list, then 10 well-known, 11
/// registered, 12 dynamic.
int dstport_class(std::optional<std::uint16_t> port);

/// The full built-in header catalog, every descriptor active.
const FeatureSchema& header_catalog();

/// Binds each descriptor of a schema to its field getter. Throws InputError
/// for names the dissector does not know.
class HeaderExtractor {
 public:
  explicit HeaderExtractor(FeatureSchema schema);

  const FeatureSchema& schema() const { return schema_; }

  /// One value per descriptor, active or not.
  RawRow raw(const Dissection& d) const;

  /// One value per active descriptor; absent layer becomes NaN.
  std::vector<double> values(const Dissection& d) const;

 private:
  using Getter = std::function<FieldValue(const Dissection&)>;
  FeatureSchema schema_;
  std::vector<Getter> getters_;
  std::vector<std::size_t> active_;
};

/// Convenience wrapper: dissect and read the active features.
std::vector<double> extract_features(const RawPacket& packet, const FeatureSchema& schema);

/// Streaming form of apply_filters: observe rows (possibly in several
/// accumulators that are merged afterwards), then finish.
class FilterAccumulator {
 public:
  explicit FilterAccumulator(std::size_t width);

  void observe(const RawRow& row);
  void merge(const FilterAccumulator& other);
  std::size_t rows() const { return rows_; }
  FeatureSchema finish(const FeatureSchema& schema) const;

 private:
  struct Column {
    std::optional<FieldValue> first;
    bool varies = false;
    bool text = false, mac = false, ip = false;
    std::set<std::string> seen;
  };
  void note_text(Column& c, const std::string& t);
  std::vector<Column> cols_;
  std::size_t rows_ = 0;
};

/// Marks descriptors filtered by the first matching rule: contains-mac,
/// contains-ip, string-valued, constant. Rows align with
/// schema.descriptors(). Already-filtered descriptors keep their reason.
/// Throws InputError on an empty sample or when nothing stays active.
FeatureSchema apply_filters(const FeatureSchema& schema, std::span<const RawRow> sample);

bool looks_like_mac(std::string_view s);
bool looks_like_ip(std::string_view s);

}  // namespace gemid
