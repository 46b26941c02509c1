#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace gemid {

/// Capture time in microseconds since the epoch.
struct Timestamp {
  std::int64_t micros = 0;

  static constexpr Timestamp from_seconds(double s) {
    return Timestamp{static_cast<std::int64_t>(s * 1e6 + (s >= 0 ? 0.5 : -0.5))};
  }
  constexpr double seconds() const { return static_cast<double>(micros) / 1e6; }
  /// "sec.usec" with exactly six decimals; stable text form for tables.
  std::string to_string() const;

  friend constexpr auto operator<=>(Timestamp, Timestamp) = default;
};

struct RawPacket {
  Timestamp ts;
  std::vector<std::uint8_t> bytes;  // captured link-layer bytes, size == caplen
  std::uint32_t origlen = 0;

  std::uint32_t caplen() const { return static_cast<std::uint32_t>(bytes.size()); }
};

inline constexpr std::uint32_t kLinkTypeEthernet = 1;

/// Streaming reader for classic (libpcap) capture files. Accepts the
/// microsecond and nanosecond magics in either byte order; rejects pcapng
/// and non-Ethernet link types.
class PcapReader {
 public:
  explicit PcapReader(const std::filesystem::path& path);

  /// Next packet, or false at a clean end of file. A record cut short
  /// raises PartialReadError carrying the number of packets already read.
  bool next(RawPacket& out);

  std::size_t packets_read() const { return count_; }
  std::uint32_t link_type() const { return link_type_; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::uint32_t read32(const std::uint8_t* p) const;

  std::filesystem::path path_;
  std::ifstream in_;
  bool swapped_ = false;
  bool nanos_ = false;
  std::uint32_t link_type_ = 0;
  std::uint32_t snaplen_ = 0;
  std::size_t count_ = 0;
};

std::vector<RawPacket> read_pcap(const std::filesystem::path& path);

/// Writes native-endian microsecond pcap files.
class PcapWriter {
 public:
  explicit PcapWriter(const std::filesystem::path& path, std::uint32_t snaplen = 65535);
  void write(const RawPacket& packet);
  void write(Timestamp ts, std::span<const std::uint8_t> frame);
  void close();

 private:
  std::ofstream out_;
  std::uint32_t snaplen_;
};

}  // namespace gemid
