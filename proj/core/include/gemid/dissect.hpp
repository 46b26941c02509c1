#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gemid/labels.hpp"
#include "gemid/pcap.hpp"

namespace gemid {

struct EthLayer {
  MacAddress dst, src;
  std::uint16_t ethertype = 0;  // after any 802.1Q tags
  std::uint32_t frame_len = 0;
  std::uint32_t vlan_tags = 0;
};

/// IPv4, or the version-agnostic subset of IPv6 (version, length, hop
/// limit as ttl, next header as proto). IPv4-only fields are 0 for IPv6.
struct IpLayer {
  std::uint8_t version = 4;
  std::uint8_t hdr_len = 20;  // bytes
  std::uint8_t tos = 0;
  std::uint16_t total_len = 0;
  std::uint16_t id = 0;
  std::uint8_t flags = 0;  // 3 bits: reserved, DF, MF
  std::uint16_t frag_offset = 0;
  std::uint8_t ttl = 0;
  std::uint8_t proto = 0;
  std::uint16_t checksum = 0;
  std::array<std::uint8_t, 16> src{}, dst{};  // v4 uses the first 4 bytes
  std::uint16_t payload_offset = 0;           // into the frame
  std::uint16_t payload_len = 0;

  std::string src_text() const;
  std::string dst_text() const;
};

struct TcpLayer {
  std::uint16_t srcport = 0, dstport = 0;
  std::uint32_t seq = 0, ack = 0;
  std::uint8_t hdr_len = 20;
  std::uint16_t flags = 0;  // 9 bits: NS CWR ECE URG ACK PSH RST SYN FIN
  std::uint16_t window = 0;
  std::uint16_t checksum = 0;
  std::uint16_t urgent = 0;
  std::uint16_t payload_len = 0;
  std::uint16_t options_len = 0;
  std::uint16_t mss = 0;
  std::uint8_t wscale = 0;
  bool sack_perm = false;
  std::uint32_t tsval = 0, tsecr = 0;
  std::uint8_t nop_count = 0;
  std::uint16_t payload_offset = 0;
};

struct UdpLayer {
  std::uint16_t srcport = 0, dstport = 0, length = 0, checksum = 0;
  std::uint16_t payload_offset = 0;
  std::uint16_t payload_len = 0;
};

struct IcmpLayer {
  std::uint8_t type = 0, code = 0;
  std::uint16_t checksum = 0, ident = 0, seq = 0;
  std::uint16_t data_len = 0;
};

struct IgmpLayer {
  std::uint8_t version = 0, type = 0, max_resp = 0;
  std::uint16_t checksum = 0;
  std::array<std::uint8_t, 4> group{};
  std::uint16_t num_records = 0;
};

struct DnsLayer {
  std::uint16_t id = 0, flags = 0;
  std::uint16_t qdcount = 0, ancount = 0, nscount = 0, arcount = 0;
  std::string qname;  // dotted, empty when no question
  std::uint16_t qname_len = 0;
  std::uint16_t qname_labels = 0;
  std::uint16_t qtype = 0, qclass = 0;
};

struct DhcpLayer {
  std::uint8_t op = 0, htype = 0, hlen = 0, hops = 0;
  std::uint32_t xid = 0;
  std::uint16_t secs = 0, flags = 0;
  std::array<std::uint8_t, 4> ciaddr{}, yiaddr{};
  MacAddress chaddr;
  std::uint8_t msg_type = 0;
  std::uint16_t option_count = 0;
  std::uint16_t max_msg_size = 0;
  std::uint16_t param_req_count = 0;
  std::uint32_t lease_time = 0;
};

struct NtpLayer {
  std::uint8_t li = 0, vn = 0, mode = 0, stratum = 0;
  std::int8_t poll = 0, precision = 0;
  std::uint32_t root_delay = 0, root_dispersion = 0, ref_id = 0;
};

struct TlsLayer {
  std::uint8_t content_type = 0;
  std::uint16_t version = 0, length = 0;
  std::uint8_t handshake_type = 0;  // 0 unless content_type == 22
  std::uint16_t record_count = 0;
};

struct HttpLayer {
  bool request = false, response = false;
  std::string method, uri;
  std::uint16_t response_code = 0;
  std::uint32_t content_length = 0;
  std::uint16_t header_count = 0;
};

struct StunLayer {
  std::uint16_t type = 0, length = 0;
  std::uint32_t cookie = 0;
  std::uint16_t attr_count = 0;
};

struct EapolLayer {
  std::uint8_t version = 0, type = 0;
  std::uint16_t length = 0;
  std::uint8_t key_descriptor = 0;
  std::uint16_t key_info = 0;
};

/// Layered view of one frame. A layer is present iff it parsed cleanly;
/// a malformed upper layer is simply absent.
struct Dissection {
  EthLayer eth;
  std::optional<IpLayer> ip;
  std::optional<TcpLayer> tcp;
  std::optional<UdpLayer> udp;
  std::optional<IcmpLayer> icmp;
  std::optional<IgmpLayer> igmp;
  std::optional<DnsLayer> dns;
  std::optional<DhcpLayer> dhcp;
  std::optional<NtpLayer> ntp;
  std::optional<TlsLayer> tls;
  std::optional<HttpLayer> http;
  std::optional<StunLayer> stun;
  std::optional<EapolLayer> eapol;

  /// Destination port of the transport layer, if any.
  std::optional<std::uint16_t> dstport() const;
  std::optional<std::uint16_t> srcport() const;
};

/// Throws MalformedPacketError when the frame is shorter than an Ethernet
/// header; never throws for upper-layer problems.
Dissection dissect(const RawPacket& packet);

}  // namespace gemid
