#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gemid {

enum class Protocol {
  ETH, IP, TCP, UDP, ICMP, IGMP, DNS, DHCP, NTP, TLS, HTTP, STUN, EAPOL, DERIVED,
  FLOW,    // bidirectional flow statistics
  WINDOW,  // damped window statistics
};

enum class FeatureKind { Numeric, Categorical, Flag };

enum class FilterReason { StringValued, ContainsMac, ContainsIp, Constant };

std::string_view to_string(Protocol p);
std::string_view to_string(FeatureKind k);
std::string_view to_string(FilterReason r);
Protocol parse_protocol(std::string_view s);
FeatureKind parse_kind(std::string_view s);

struct FeatureDescriptor {
  std::string name;
  Protocol protocol = Protocol::DERIVED;
  FeatureKind kind = FeatureKind::Numeric;
  std::optional<FilterReason> filtered;  // nullopt == active

  bool active() const { return !filtered.has_value(); }
  friend bool operator==(const FeatureDescriptor&, const FeatureDescriptor&) = default;
};

/// Ordered feature catalog. Order is fixed for a run; only active
/// descriptors appear in tables.
class FeatureSchema {
 public:
  static constexpr std::string_view kVersion = "1.0.0";

  FeatureSchema() = default;
  FeatureSchema(std::string family, std::vector<FeatureDescriptor> descriptors,
                std::string version = std::string(kVersion));

  const std::string& family() const { return family_; }
  const std::string& version() const { return version_; }
  const std::vector<FeatureDescriptor>& descriptors() const { return descriptors_; }
  std::vector<FeatureDescriptor>& descriptors() { return descriptors_; }

  std::size_t active_count() const;
  std::vector<std::string> active_names() const;
  std::vector<std::size_t> active_indices() const;
  std::optional<std::size_t> find(std::string_view name) const;

  /// Digest over active names and kinds, hex encoded. Changes iff the
  /// active list changes.
  std::string hash() const;

  /// Schema restricted to the active descriptors.
  FeatureSchema active_only() const;

  std::string to_json() const;
  static FeatureSchema from_json(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static FeatureSchema load(const std::filesystem::path& path);

  friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;

 private:
  std::string family_;
  std::vector<FeatureDescriptor> descriptors_;
  std::string version_ = std::string(kVersion);
};

/// Hash of an arbitrary ordered feature-name list (used by models that are
/// trained on a subset of a schema).
std::string feature_list_hash(const std::vector<std::string>& names);

}  // namespace gemid
