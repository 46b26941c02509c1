#include "gemid/pcap.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstring>

#include "gemid/error.hpp"

namespace gemid {
namespace {

constexpr std::uint32_t kMagicMicros = 0xa1b2c3d4;
constexpr std::uint32_t kMagicNanos = 0xa1b23c4d;
constexpr std::uint32_t kMagicPcapng = 0x0a0d0d0a;

std::uint32_t bswap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0xff00) | ((v << 8) & 0xff0000) | (v << 24);
}

std::uint32_t load_le32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
         std::uint32_t(p[3]) << 24;
}

void store_le32(std::uint8_t* p, std::uint32_t v) {
  p[0] = std::uint8_t(v);
  p[1] = std::uint8_t(v >> 8);
  p[2] = std::uint8_t(v >> 16);
  p[3] = std::uint8_t(v >> 24);
}

void store_le16(std::uint8_t* p, std::uint16_t v) {
  p[0] = std::uint8_t(v);
  p[1] = std::uint8_t(v >> 8);
}

}  // namespace

std::string Timestamp::to_string() const {
  const bool neg = micros < 0;
  const auto mag = static_cast<unsigned long long>(neg ? -micros : micros);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%s%llu.%06llu", neg ? "-" : "", mag / 1000000ULL,
                mag % 1000000ULL);
  return buf;
}

PcapReader::PcapReader(const std::filesystem::path& path) : path_(path) {
  if (!std::filesystem::exists(path)) throw NotFoundError("pcap not found: " + path.string());
  in_.open(path, std::ios::binary);
  if (!in_) throw NotFoundError("cannot open pcap: " + path.string());

  std::array<std::uint8_t, 24> header{};
  in_.read(reinterpret_cast<char*>(header.data()), header.size());
  if (in_.gcount() != static_cast<std::streamsize>(header.size()))
    throw UnsupportedFormatError("not a pcap file (missing global header): " + path.string());

  const std::uint32_t magic = load_le32(header.data());
  if (magic == kMagicMicros || magic == kMagicNanos) {
    swapped_ = false;
  } else if (bswap32(magic) == kMagicMicros || bswap32(magic) == kMagicNanos) {
    swapped_ = true;
  } else if (magic == kMagicPcapng) {
    throw UnsupportedFormatError("pcapng is not supported: " + path.string());
  } else {
    throw UnsupportedFormatError("bad pcap magic in " + path.string());
  }
  nanos_ = (swapped_ ? bswap32(magic) : magic) == kMagicNanos;
  snaplen_ = read32(header.data() + 16);
  link_type_ = read32(header.data() + 20) & 0x0fffffff;
  if (link_type_ != kLinkTypeEthernet)
    throw UnsupportedFormatError("unsupported link type " + std::to_string(link_type_) + " in " +
                                 path.string() + " (only Ethernet)");
}

std::uint32_t PcapReader::read32(const std::uint8_t* p) const {
  const std::uint32_t v = load_le32(p);
  return swapped_ ? bswap32(v) : v;
}

bool PcapReader::next(RawPacket& out) {
  std::array<std::uint8_t, 16> rec{};
  in_.read(reinterpret_cast<char*>(rec.data()), rec.size());
  const auto got = in_.gcount();
  if (got == 0) return false;
  if (got != static_cast<std::streamsize>(rec.size()))
    throw PartialReadError("truncated record header in " + path_.string() + " after " +
                               std::to_string(count_) + " packets",
                           count_);

  const std::uint32_t sec = read32(rec.data());
  const std::uint32_t frac = read32(rec.data() + 4);
  const std::uint32_t caplen = read32(rec.data() + 8);
  const std::uint32_t origlen = read32(rec.data() + 12);
  if (caplen > origlen && origlen != 0)
    throw UnsupportedFormatError("caplen exceeds origlen in " + path_.string());
  if (caplen > (1u << 26)) throw UnsupportedFormatError("implausible caplen in " + path_.string());

  out.bytes.resize(caplen);
  in_.read(reinterpret_cast<char*>(out.bytes.data()), caplen);
  if (in_.gcount() != static_cast<std::streamsize>(caplen))
    throw PartialReadError("truncated packet data in " + path_.string() + " after " +
                               std::to_string(count_) + " packets",
                           count_);
  const std::int64_t usec = nanos_ ? frac / 1000 : frac;
  out.ts = Timestamp{static_cast<std::int64_t>(sec) * 1000000 + usec};
  out.origlen = origlen == 0 ? caplen : origlen;
  ++count_;
  return true;
}

std::vector<RawPacket> read_pcap(const std::filesystem::path& path) {
  PcapReader reader(path);
  std::vector<RawPacket> packets;
  RawPacket p;
  while (reader.next(p)) packets.push_back(std::move(p));
  return packets;
}

PcapWriter::PcapWriter(const std::filesystem::path& path, std::uint32_t snaplen)
    : out_(path, std::ios::binary | std::ios::trunc), snaplen_(snaplen) {
  if (!out_) throw InputError("cannot write pcap: " + path.string());
  std::array<std::uint8_t, 24> h{};
  store_le32(h.data(), kMagicMicros);
  store_le16(h.data() + 4, 2);
  store_le16(h.data() + 6, 4);
  store_le32(h.data() + 16, snaplen_);
  store_le32(h.data() + 20, kLinkTypeEthernet);
  out_.write(reinterpret_cast<const char*>(h.data()), h.size());
}

void PcapWriter::write(const RawPacket& packet) {
  write(packet.ts, packet.bytes);
}

void PcapWriter::write(Timestamp ts, std::span<const std::uint8_t> frame) {
  std::array<std::uint8_t, 16> rec{};
  store_le32(rec.data(), static_cast<std::uint32_t>(ts.micros / 1000000));
  store_le32(rec.data() + 4, static_cast<std::uint32_t>(ts.micros % 1000000));
  const auto caplen = static_cast<std::uint32_t>(std::min<std::size_t>(frame.size(), snaplen_));
  store_le32(rec.data() + 8, caplen);
  store_le32(rec.data() + 12, static_cast<std::uint32_t>(frame.size()));
  out_.write(reinterpret_cast<const char*>(rec.data()), rec.size());
  out_.write(reinterpret_cast<const char*>(frame.data()), caplen);
}

void PcapWriter::close() { out_.close(); }

}  // namespace gemid
