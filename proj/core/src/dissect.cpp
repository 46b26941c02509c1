#include "gemid/dissect.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <span>
#include <string_view>

#include "gemid/error.hpp"

namespace gemid {
namespace {

using Bytes = std::span<const std::uint8_t>;

std::uint16_t be16(Bytes b, std::size_t off) {
  return static_cast<std::uint16_t>(b[off] << 8 | b[off + 1]);
}
std::uint32_t be32(Bytes b, std::size_t off) {
  return std::uint32_t(b[off]) << 24 | std::uint32_t(b[off + 1]) << 16 |
         std::uint32_t(b[off + 2]) << 8 | b[off + 3];
}

constexpr std::uint16_t kEthIpv4 = 0x0800;
constexpr std::uint16_t kEthIpv6 = 0x86dd;
constexpr std::uint16_t kEthVlan = 0x8100;
constexpr std::uint16_t kEthQinQ = 0x88a8;
constexpr std::uint16_t kEthEapol = 0x888e;

std::optional<IpLayer> parse_ipv4(Bytes f, std::size_t off) {
  if (f.size() < off + 20) return std::nullopt;
  Bytes b = f.subspan(off);
  if ((b[0] >> 4) != 4) return std::nullopt;
  IpLayer ip;
  ip.version = 4;
  ip.hdr_len = static_cast<std::uint8_t>((b[0] & 0x0f) * 4);
  if (ip.hdr_len < 20 || b.size() < ip.hdr_len) return std::nullopt;
  ip.tos = b[1];
  ip.total_len = be16(b, 2);
  if (ip.total_len < ip.hdr_len) return std::nullopt;
  ip.id = be16(b, 4);
  ip.flags = static_cast<std::uint8_t>(b[6] >> 5);
  ip.frag_offset = static_cast<std::uint16_t>(be16(b, 6) & 0x1fff);
  ip.ttl = b[8];
  ip.proto = b[9];
  ip.checksum = be16(b, 10);
  std::copy_n(b.begin() + 12, 4, ip.src.begin());
  std::copy_n(b.begin() + 16, 4, ip.dst.begin());
  ip.payload_offset = static_cast<std::uint16_t>(off + ip.hdr_len);
  const std::size_t avail = f.size() - ip.payload_offset;
  ip.payload_len = static_cast<std::uint16_t>(std::min<std::size_t>(ip.total_len - ip.hdr_len, avail));
  return ip;
}

std::optional<IpLayer> parse_ipv6(Bytes f, std::size_t off) {
  if (f.size() < off + 40) return std::nullopt;
  Bytes b = f.subspan(off);
  if ((b[0] >> 4) != 6) return std::nullopt;
  IpLayer ip;
  ip.version = 6;
  ip.hdr_len = 40;
  ip.tos = static_cast<std::uint8_t>((be16(b, 0) >> 4) & 0xff);
  const std::uint16_t payload = be16(b, 4);
  ip.total_len = static_cast<std::uint16_t>(std::min<std::uint32_t>(payload + 40u, 0xffff));
  ip.proto = b[6];
  ip.ttl = b[7];
  std::copy_n(b.begin() + 8, 16, ip.src.begin());
  std::copy_n(b.begin() + 24, 16, ip.dst.begin());
  ip.payload_offset = static_cast<std::uint16_t>(off + 40);
  ip.payload_len = static_cast<std::uint16_t>(std::min<std::size_t>(payload, f.size() - off - 40));
  return ip;
}

std::optional<TcpLayer> parse_tcp(Bytes f, const IpLayer& ip) {
  Bytes b = f.subspan(ip.payload_offset, ip.payload_len);
  if (b.size() < 20) return std::nullopt;
  TcpLayer t;
  t.srcport = be16(b, 0);
  t.dstport = be16(b, 2);
  t.seq = be32(b, 4);
  t.ack = be32(b, 8);
  t.hdr_len = static_cast<std::uint8_t>((b[12] >> 4) * 4);
  if (t.hdr_len < 20 || b.size() < t.hdr_len) return std::nullopt;
  t.flags = static_cast<std::uint16_t>((b[12] & 0x01) << 8 | b[13]);
  t.window = be16(b, 14);
  t.checksum = be16(b, 16);
  t.urgent = be16(b, 18);
  t.options_len = static_cast<std::uint16_t>(t.hdr_len - 20);
  t.payload_offset = static_cast<std::uint16_t>(ip.payload_offset + t.hdr_len);
  t.payload_len = static_cast<std::uint16_t>(b.size() - t.hdr_len);

  std::size_t i = 20;
  while (i < t.hdr_len) {
    const std::uint8_t kind = b[i];
    if (kind == 0) break;
    if (kind == 1) {
      ++t.nop_count;
      ++i;
      continue;
    }
    if (i + 1 >= t.hdr_len) break;
    const std::uint8_t len = b[i + 1];
    if (len < 2 || i + len > t.hdr_len) break;
    switch (kind) {
      case 2:
        if (len == 4) t.mss = be16(b, i + 2);
        break;
      case 3:
        if (len == 3) t.wscale = b[i + 2];
        break;
      case 4:
        t.sack_perm = true;
        break;
      case 8:
        if (len == 10) {
          t.tsval = be32(b, i + 2);
          t.tsecr = be32(b, i + 6);
        }
        break;
      default:
        break;
    }
    i += len;
  }
  return t;
}

std::optional<UdpLayer> parse_udp(Bytes f, const IpLayer& ip) {
  Bytes b = f.subspan(ip.payload_offset, ip.payload_len);
  if (b.size() < 8) return std::nullopt;
  UdpLayer u;
  u.srcport = be16(b, 0);
  u.dstport = be16(b, 2);
  u.length = be16(b, 4);
  u.checksum = be16(b, 6);
  if (u.length < 8) return std::nullopt;
  u.payload_offset = static_cast<std::uint16_t>(ip.payload_offset + 8);
  u.payload_len = static_cast<std::uint16_t>(std::min<std::size_t>(u.length - 8u, b.size() - 8));
  return u;
}

std::optional<IcmpLayer> parse_icmp(Bytes f, const IpLayer& ip) {
  Bytes b = f.subspan(ip.payload_offset, ip.payload_len);
  if (b.size() < 8) return std::nullopt;
  IcmpLayer c;
  c.type = b[0];
  c.code = b[1];
  c.checksum = be16(b, 2);
  c.ident = be16(b, 4);
  c.seq = be16(b, 6);
  c.data_len = static_cast<std::uint16_t>(b.size() - 8);
  return c;
}

std::optional<IgmpLayer> parse_igmp(Bytes f, const IpLayer& ip) {
  Bytes b = f.subspan(ip.payload_offset, ip.payload_len);
  if (b.size() < 8) return std::nullopt;
  IgmpLayer g;
  g.type = b[0];
  g.max_resp = b[1];
  g.checksum = be16(b, 2);
  std::copy_n(b.begin() + 4, 4, g.group.begin());
  switch (g.type) {
    case 0x11:
      g.version = b.size() >= 12 ? 3 : (g.max_resp == 0 ? 1 : 2);
      break;
    case 0x12:
      g.version = 1;
      break;
    case 0x16:
    case 0x17:
      g.version = 2;
      break;
    case 0x22:
      g.version = 3;
      g.group = {};
      g.num_records = be16(b, 6);
      break;
    default:
      return std::nullopt;
  }
  return g;
}

// Reads a possibly-compressed name starting at `off`; returns the offset
// just past the name in the original position, or nullopt if malformed.
std::optional<std::size_t> read_dns_name(Bytes b, std::size_t off, std::string& out,
                                         std::uint16_t& labels) {
  std::size_t pos = off;
  std::optional<std::size_t> end;
  int jumps = 0;
  for (;;) {
    if (pos >= b.size()) return std::nullopt;
    const std::uint8_t len = b[pos];
    if (len == 0) {
      if (!end) end = pos + 1;
      break;
    }
    if ((len & 0xc0) == 0xc0) {
      if (pos + 1 >= b.size() || ++jumps > 16) return std::nullopt;
      if (!end) end = pos + 2;
      pos = static_cast<std::size_t>((len & 0x3f) << 8 | b[pos + 1]);
      continue;
    }
    if ((len & 0xc0) != 0 || pos + 1 + len > b.size()) return std::nullopt;
    if (!out.empty()) out.push_back('.');
    out.append(reinterpret_cast<const char*>(b.data() + pos + 1), len);
    ++labels;
    pos += 1 + len;
    if (out.size() > 255) return std::nullopt;
  }
  return end;
}

std::optional<DnsLayer> parse_dns(Bytes b) {
  if (b.size() < 12) return std::nullopt;
  DnsLayer d;
  d.id = be16(b, 0);
  d.flags = be16(b, 2);
  d.qdcount = be16(b, 4);
  d.ancount = be16(b, 6);
  d.nscount = be16(b, 8);
  d.arcount = be16(b, 10);
  if (d.qdcount > 0) {
    auto end = read_dns_name(b, 12, d.qname, d.qname_labels);
    if (!end || *end + 4 > b.size()) return std::nullopt;
    d.qname_len = static_cast<std::uint16_t>(d.qname.size());
    d.qtype = be16(b, *end);
    d.qclass = be16(b, *end + 2);
  }
  return d;
}

std::optional<DhcpLayer> parse_dhcp(Bytes b) {
  if (b.size() < 240) return std::nullopt;
  if (be32(b, 236) != 0x63825363) return std::nullopt;
  DhcpLayer d;
  d.op = b[0];
  d.htype = b[1];
  d.hlen = b[2];
  d.hops = b[3];
  d.xid = be32(b, 4);
  d.secs = be16(b, 8);
  d.flags = be16(b, 10);
  std::copy_n(b.begin() + 12, 4, d.ciaddr.begin());
  std::copy_n(b.begin() + 16, 4, d.yiaddr.begin());
  d.chaddr = MacAddress::from_bytes(b.subspan(28, 6));
  std::size_t i = 240;
  while (i < b.size()) {
    const std::uint8_t code = b[i];
    if (code == 255) break;
    if (code == 0) {
      ++i;
      continue;
    }
    if (i + 1 >= b.size()) return std::nullopt;
    const std::uint8_t len = b[i + 1];
    if (i + 2 + len > b.size()) return std::nullopt;
    Bytes v = b.subspan(i + 2, len);
    ++d.option_count;
    switch (code) {
      case 53:
        if (len >= 1) d.msg_type = v[0];
        break;
      case 57:
        if (len == 2) d.max_msg_size = be16(v, 0);
        break;
      case 55:
        d.param_req_count = len;
        break;
      case 51:
        if (len == 4) d.lease_time = be32(v, 0);
        break;
      default:
        break;
    }
    i += 2 + len;
  }
  return d;
}

std::optional<NtpLayer> parse_ntp(Bytes b) {
  if (b.size() < 48) return std::nullopt;
  NtpLayer n;
  n.li = static_cast<std::uint8_t>(b[0] >> 6);
  n.vn = static_cast<std::uint8_t>((b[0] >> 3) & 0x7);
  n.mode = static_cast<std::uint8_t>(b[0] & 0x7);
  if (n.vn < 1 || n.vn > 4 || n.mode == 0) return std::nullopt;
  n.stratum = b[1];
  n.poll = static_cast<std::int8_t>(b[2]);
  n.precision = static_cast<std::int8_t>(b[3]);
  n.root_delay = be32(b, 4);
  n.root_dispersion = be32(b, 8);
  n.ref_id = be32(b, 12);
  return n;
}

std::optional<StunLayer> parse_stun(Bytes b) {
  if (b.size() < 20 || (b[0] & 0xc0) != 0) return std::nullopt;
  if (be32(b, 4) != 0x2112a442) return std::nullopt;
  StunLayer s;
  s.type = be16(b, 0);
  s.length = be16(b, 2);
  s.cookie = be32(b, 4);
  if (s.length % 4 != 0 || 20u + s.length > b.size()) return std::nullopt;
  std::size_t i = 20;
  while (i + 4 <= 20u + s.length) {
    const std::uint16_t alen = be16(b, i + 2);
    ++s.attr_count;
    i += 4 + ((alen + 3u) & ~3u);
  }
  return s;
}

std::optional<TlsLayer> parse_tls(Bytes b) {
  if (b.size() < 5) return std::nullopt;
  const std::uint8_t ct = b[0];
  if (ct < 20 || ct > 24 || b[1] != 3 || b[2] > 4) return std::nullopt;
  TlsLayer t;
  t.content_type = ct;
  t.version = be16(b, 1);
  t.length = be16(b, 3);
  if (t.length == 0 || t.length > (1u << 14) + 2048) return std::nullopt;
  if (ct == 22 && b.size() >= 6) t.handshake_type = b[5];
  std::size_t off = 0;
  while (off + 5 <= b.size()) {
    if (b[off] < 20 || b[off] > 24 || b[off + 1] != 3) break;
    ++t.record_count;
    off += 5 + be16(b, off + 3);
  }
  return t;
}

bool iequals_prefix(std::string_view line, std::string_view prefix) {
  if (line.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(line[i])) != prefix[i]) return false;
  return true;
}

std::optional<HttpLayer> parse_http(Bytes b) {
  static constexpr std::string_view kMethods[] = {"GET ",    "POST ",  "HEAD ",    "PUT ",
                                                  "DELETE ", "PATCH ", "OPTIONS ", "NOTIFY ",
                                                  "M-SEARCH ", "SUBSCRIBE "};
  const std::string_view text(reinterpret_cast<const char*>(b.data()), b.size());
  const auto eol = text.find("\r\n");
  if (eol == std::string_view::npos) return std::nullopt;
  const std::string_view start = text.substr(0, eol);
  HttpLayer h;
  if (start.rfind("HTTP/1.", 0) == 0) {
    if (start.size() < 12) return std::nullopt;
    h.response = true;
    int code = 0;
    for (std::size_t i = 9; i < 12; ++i) {
      if (!std::isdigit(static_cast<unsigned char>(start[i]))) return std::nullopt;
      code = code * 10 + (start[i] - '0');
    }
    h.response_code = static_cast<std::uint16_t>(code);
  } else {
    for (auto m : kMethods) {
      if (start.rfind(m, 0) == 0) {
        h.request = true;
        h.method = std::string(m.substr(0, m.size() - 1));
        const auto rest = start.substr(m.size());
        h.uri = std::string(rest.substr(0, rest.find(' ')));
        break;
      }
    }
    if (!h.request || start.find(" HTTP/1.") == std::string_view::npos) return std::nullopt;
  }
  std::size_t pos = eol + 2;
  while (pos < text.size()) {
    const auto next = text.find("\r\n", pos);
    if (next == std::string_view::npos || next == pos) break;
    const auto line = text.substr(pos, next - pos);
    ++h.header_count;
    if (iequals_prefix(line, "content-length:")) {
      auto v = line.substr(15);
      while (!v.empty() && v.front() == ' ') v.remove_prefix(1);
      std::uint32_t n = 0;
      for (char c : v) {
        if (!std::isdigit(static_cast<unsigned char>(c))) break;
        n = n * 10 + static_cast<std::uint32_t>(c - '0');
      }
      h.content_length = n;
    }
    pos = next + 2;
  }
  return h;
}

std::optional<EapolLayer> parse_eapol(Bytes b) {
  if (b.size() < 4) return std::nullopt;
  EapolLayer e;
  e.version = b[0];
  e.type = b[1];
  e.length = be16(b, 2);
  if (e.version < 1 || e.version > 3 || e.type > 8) return std::nullopt;
  if (e.type == 3 && b.size() >= 7) {
    e.key_descriptor = b[4];
    e.key_info = be16(b, 5);
  }
  return e;
}

std::string ip_text(const std::array<std::uint8_t, 16>& a, std::uint8_t version) {
  char buf[48];
  if (version == 4) {
    std::snprintf(buf, sizeof buf, "%u.%u.%u.%u", a[0], a[1], a[2], a[3]);
    return buf;
  }
  std::string out;
  for (int i = 0; i < 8; ++i) {
    std::snprintf(buf, sizeof buf, "%s%x", i ? ":" : "", a[2 * i] << 8 | a[2 * i + 1]);
    out += buf;
  }
  return out;
}

bool either_port(std::uint16_t a, std::uint16_t b, std::uint16_t p) { return a == p || b == p; }

}  // namespace

std::string IpLayer::src_text() const { return ip_text(src, version); }
std::string IpLayer::dst_text() const { return ip_text(dst, version); }

std::optional<std::uint16_t> Dissection::dstport() const {
  if (tcp) return tcp->dstport;
  if (udp) return udp->dstport;
  return std::nullopt;
}

std::optional<std::uint16_t> Dissection::srcport() const {
  if (tcp) return tcp->srcport;
  if (udp) return udp->srcport;
  return std::nullopt;
}

Dissection dissect(const RawPacket& packet) {
  const Bytes f(packet.bytes);
  if (f.size() < 14)
    throw MalformedPacketError("frame of " + std::to_string(f.size()) +
                               " bytes is shorter than an Ethernet header");
  Dissection d;
  d.eth.dst = MacAddress::from_bytes(f.subspan(0, 6));
  d.eth.src = MacAddress::from_bytes(f.subspan(6, 6));
  d.eth.frame_len = packet.origlen ? packet.origlen : packet.caplen();
  std::size_t off = 12;
  std::uint16_t type = be16(f, off);
  off += 2;
  while ((type == kEthVlan || type == kEthQinQ) && f.size() >= off + 4) {
    ++d.eth.vlan_tags;
    type = be16(f, off + 2);
    off += 4;
  }
  d.eth.ethertype = type;

  if (type == kEthEapol) {
    d.eapol = parse_eapol(f.subspan(off));
    return d;
  }
  if (type == kEthIpv4) {
    d.ip = parse_ipv4(f, off);
  } else if (type == kEthIpv6) {
    d.ip = parse_ipv6(f, off);
  }
  if (!d.ip) return d;
  const IpLayer& ip = *d.ip;
  if (ip.version == 4 && ip.frag_offset != 0) return d;  // non-first fragment

  switch (ip.proto) {
    case 1:
      if (ip.version == 4) d.icmp = parse_icmp(f, ip);
      break;
    case 2:
      if (ip.version == 4) d.igmp = parse_igmp(f, ip);
      break;
    case 6:
      d.tcp = parse_tcp(f, ip);
      break;
    case 17:
      d.udp = parse_udp(f, ip);
      break;
    default:
      break;
  }

  if (d.tcp && d.tcp->payload_len > 0) {
    const Bytes payload = f.subspan(d.tcp->payload_offset, d.tcp->payload_len);
    d.tls = parse_tls(payload);
    if (!d.tls) d.http = parse_http(payload);
  }
  if (d.udp && d.udp->payload_len > 0) {
    const Bytes payload = f.subspan(d.udp->payload_offset, d.udp->payload_len);
    const auto sp = d.udp->srcport, dp = d.udp->dstport;
    if (either_port(sp, dp, 53) || either_port(sp, dp, 5353)) {
      d.dns = parse_dns(payload);
    } else if (either_port(sp, dp, 67) || either_port(sp, dp, 68)) {
      d.dhcp = parse_dhcp(payload);
    } else if (either_port(sp, dp, 123)) {
      d.ntp = parse_ntp(payload);
    } else if (either_port(sp, dp, 1900)) {
      d.http = parse_http(payload);
    }
    if (!d.dns && !d.dhcp && !d.ntp && !d.http) d.stun = parse_stun(payload);
  }
  return d;
}

}  // namespace gemid
