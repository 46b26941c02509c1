#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gemid/pcap.hpp"

namespace gemid {

struct MacAddress {
  std::array<std::uint8_t, 6> bytes{};

  /// Parses aa:bb:cc:dd:ee:ff (either case); throws InputError otherwise.
  static MacAddress parse(std::string_view text);
  static MacAddress from_bytes(std::span<const std::uint8_t> six);
  /// Lowercase colon-separated form.
  std::string to_string() const;
  /// Opaque per-device instance id used as PacketRecord::source_key.
  std::string key() const;

  friend auto operator<=>(const MacAddress&, const MacAddress&) = default;
};

/// Device inventory keyed by source MAC.
class LabelMap {
 public:
  LabelMap() = default;

  /// Throws InputError on duplicate MACs or empty labels.
  void add(const MacAddress& mac, std::string device);
  std::optional<std::string_view> lookup(const MacAddress& mac) const;

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::map<MacAddress, std::string>& entries() const { return entries_; }
  std::vector<std::string> devices() const;

  /// CSV with header `mac,device`.
  static LabelMap load_csv(const std::filesystem::path& path);
  void save_csv(const std::filesystem::path& path) const;

 private:
  std::map<MacAddress, std::string> entries_;
};

struct LabeledPacket {
  const RawPacket* packet;
  std::string_view device;
  MacAddress source;
  std::uint64_t frame;  // 1-based position in the input sequence
};

struct LabelingResult {
  std::vector<LabeledPacket> kept;
  std::size_t skipped = 0;    // source MAC not in the map
  std::size_t malformed = 0;  // shorter than an Ethernet header
};

/// Keeps a packet iff its *source* MAC is in `labels`. Destination is
/// ignored, so traffic addressed to a device is never attributed to it.
LabelingResult label_packets(std::span<const RawPacket> packets, const LabelMap& labels);

}  // namespace gemid
