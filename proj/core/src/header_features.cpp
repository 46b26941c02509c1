#include "gemid/header_features.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <regex>
#include <set>
#include <type_traits>
#include <unordered_map>

#include "gemid/error.hpp"
#include "gemid/text.hpp"

namespace gemid {
namespace {

using Getter = std::function<FieldValue(const Dissection&)>;

template <typename T>
FieldValue to_field(T v) {
  if constexpr (std::is_same_v<T, std::string>) {
    return FieldValue(std::move(v));
  } else {
    return FieldValue(static_cast<double>(v));
  }
}

template <typename L, typename F>
Getter layer(std::optional<L> Dissection::*member, F f) {
  return [member, f](const Dissection& d) -> FieldValue {
    const auto& l = d.*member;
    if (!l) return {};
    return to_field(f(*l));
  };
}

std::string ipv4_text(const std::array<std::uint8_t, 4>& a) {
  return std::to_string(a[0]) + "." + std::to_string(a[1]) + "." + std::to_string(a[2]) + "." +
         std::to_string(a[3]);
}

struct Entry {
  const char* name;
  Protocol protocol;
  FeatureKind kind;
  Getter get;
};

constexpr auto N = FeatureKind::Numeric;
constexpr auto C = FeatureKind::Categorical;
constexpr auto F = FeatureKind::Flag;

std::vector<Entry> build_entries() {
  std::vector<Entry> e;
  auto add = [&](const char* name, Protocol p, FeatureKind k, Getter g) {
    e.push_back({name, p, k, std::move(g)});
  };

  using P = Protocol;
  // Ethernet is always present.
  add("eth.dst", P::ETH, C, [](const Dissection& d) -> FieldValue { return d.eth.dst.to_string(); });
  add("eth.src", P::ETH, C, [](const Dissection& d) -> FieldValue { return d.eth.src.to_string(); });
  add("eth.type", P::ETH, C, [](const Dissection& d) -> FieldValue { return double(d.eth.ethertype); });
  add("eth.frame_len", P::ETH, N, [](const Dissection& d) -> FieldValue { return double(d.eth.frame_len); });

  auto ip = [](auto f) { return layer(&Dissection::ip, f); };
  add("ip.version", P::IP, C, ip([](const IpLayer& l) { return l.version; }));
  add("ip.hdr_len", P::IP, N, ip([](const IpLayer& l) { return l.hdr_len; }));
  add("ip.dsfield", P::IP, C, ip([](const IpLayer& l) { return l.tos; }));
  add("ip.dsfield.dscp", P::IP, C, ip([](const IpLayer& l) { return l.tos >> 2; }));
  add("ip.dsfield.ecn", P::IP, C, ip([](const IpLayer& l) { return l.tos & 3; }));
  add("ip.len", P::IP, N, ip([](const IpLayer& l) { return l.total_len; }));
  add("ip.id", P::IP, N, ip([](const IpLayer& l) { return l.id; }));
  add("ip.flags", P::IP, C, ip([](const IpLayer& l) { return l.flags; }));
  add("ip.flags.rb", P::IP, F, ip([](const IpLayer& l) { return (l.flags >> 2) & 1; }));
  add("ip.flags.df", P::IP, F, ip([](const IpLayer& l) { return (l.flags >> 1) & 1; }));
  add("ip.flags.mf", P::IP, F, ip([](const IpLayer& l) { return l.flags & 1; }));
  add("ip.frag_offset", P::IP, N, ip([](const IpLayer& l) { return l.frag_offset; }));
  add("ip.ttl", P::IP, N, ip([](const IpLayer& l) { return l.ttl; }));
  add("ip.proto", P::IP, C, ip([](const IpLayer& l) { return l.proto; }));
  add("ip.checksum", P::IP, N, ip([](const IpLayer& l) { return l.checksum; }));
  add("ip.src", P::IP, C, ip([](const IpLayer& l) { return l.src_text(); }));
  add("ip.dst", P::IP, C, ip([](const IpLayer& l) { return l.dst_text(); }));
  add("ip.options_len", P::IP, N, ip([](const IpLayer& l) { return l.hdr_len - 20; }));

  auto tcp = [](auto f) { return layer(&Dissection::tcp, f); };
  add("tcp.srcport", P::TCP, C, tcp([](const TcpLayer& l) { return l.srcport; }));
  add("tcp.dstport", P::TCP, C, tcp([](const TcpLayer& l) { return l.dstport; }));
  add("tcp.seq", P::TCP, N, tcp([](const TcpLayer& l) { return l.seq; }));
  add("tcp.ack", P::TCP, N, tcp([](const TcpLayer& l) { return l.ack; }));
  add("tcp.hdr_len", P::TCP, N, tcp([](const TcpLayer& l) { return l.hdr_len; }));
  add("tcp.flags", P::TCP, C, tcp([](const TcpLayer& l) { return l.flags; }));
  static constexpr const char* kTcpFlagNames[] = {"tcp.flags.fin", "tcp.flags.syn",  "tcp.flags.reset",
                                                  "tcp.flags.push", "tcp.flags.ack", "tcp.flags.urg",
                                                  "tcp.flags.ece", "tcp.flags.cwr",  "tcp.flags.ns"};
  for (int bit = 8; bit >= 0; --bit)
    add(kTcpFlagNames[bit], P::TCP, F, tcp([bit](const TcpLayer& l) { return (l.flags >> bit) & 1; }));
  add("tcp.window_size", P::TCP, N, tcp([](const TcpLayer& l) { return l.window; }));
  add("tcp.checksum", P::TCP, N, tcp([](const TcpLayer& l) { return l.checksum; }));
  add("tcp.urgent_pointer", P::TCP, N, tcp([](const TcpLayer& l) { return l.urgent; }));
  add("tcp.len", P::TCP, N, tcp([](const TcpLayer& l) { return l.payload_len; }));
  add("tcp.options_len", P::TCP, N, tcp([](const TcpLayer& l) { return l.options_len; }));
  add("tcp.options.mss_val", P::TCP, N, tcp([](const TcpLayer& l) { return l.mss; }));
  add("tcp.options.wscale.shift", P::TCP, N, tcp([](const TcpLayer& l) { return l.wscale; }));
  add("tcp.options.sack_perm", P::TCP, F, tcp([](const TcpLayer& l) { return l.sack_perm ? 1 : 0; }));
  add("tcp.options.timestamp.tsval", P::TCP, N, tcp([](const TcpLayer& l) { return l.tsval; }));
  add("tcp.options.timestamp.tsecr", P::TCP, N, tcp([](const TcpLayer& l) { return l.tsecr; }));
  add("tcp.options.nop_count", P::TCP, N, tcp([](const TcpLayer& l) { return l.nop_count; }));

  auto udp = [](auto f) { return layer(&Dissection::udp, f); };
  add("udp.srcport", P::UDP, C, udp([](const UdpLayer& l) { return l.srcport; }));
  add("udp.dstport", P::UDP, C, udp([](const UdpLayer& l) { return l.dstport; }));
  add("udp.length", P::UDP, N, udp([](const UdpLayer& l) { return l.length; }));
  add("udp.checksum", P::UDP, N, udp([](const UdpLayer& l) { return l.checksum; }));

  auto icmp = [](auto f) { return layer(&Dissection::icmp, f); };
  add("icmp.type", P::ICMP, C, icmp([](const IcmpLayer& l) { return l.type; }));
  add("icmp.code", P::ICMP, C, icmp([](const IcmpLayer& l) { return l.code; }));
  add("icmp.checksum", P::ICMP, N, icmp([](const IcmpLayer& l) { return l.checksum; }));
  add("icmp.ident", P::ICMP, N, icmp([](const IcmpLayer& l) { return l.ident; }));
  add("icmp.seq", P::ICMP, N, icmp([](const IcmpLayer& l) { return l.seq; }));
  add("icmp.data_len", P::ICMP, N, icmp([](const IcmpLayer& l) { return l.data_len; }));

  auto igmp = [](auto f) { return layer(&Dissection::igmp, f); };
  add("igmp.version", P::IGMP, C, igmp([](const IgmpLayer& l) { return l.version; }));
  add("igmp.type", P::IGMP, C, igmp([](const IgmpLayer& l) { return l.type; }));
  add("igmp.max_resp", P::IGMP, N, igmp([](const IgmpLayer& l) { return l.max_resp; }));
  add("igmp.checksum", P::IGMP, N, igmp([](const IgmpLayer& l) { return l.checksum; }));
  add("igmp.maddr", P::IGMP, C, igmp([](const IgmpLayer& l) { return ipv4_text(l.group); }));
  add("igmp.num_grp_recs", P::IGMP, N, igmp([](const IgmpLayer& l) { return l.num_records; }));

  auto dns = [](auto f) { return layer(&Dissection::dns, f); };
  add("dns.id", P::DNS, N, dns([](const DnsLayer& l) { return l.id; }));
  add("dns.flags", P::DNS, C, dns([](const DnsLayer& l) { return l.flags; }));
  add("dns.flags.response", P::DNS, F, dns([](const DnsLayer& l) { return l.flags >> 15; }));
  add("dns.flags.opcode", P::DNS, C, dns([](const DnsLayer& l) { return (l.flags >> 11) & 0xf; }));
  add("dns.flags.authoritative", P::DNS, F, dns([](const DnsLayer& l) { return (l.flags >> 10) & 1; }));
  add("dns.flags.truncated", P::DNS, F, dns([](const DnsLayer& l) { return (l.flags >> 9) & 1; }));
  add("dns.flags.recdesired", P::DNS, F, dns([](const DnsLayer& l) { return (l.flags >> 8) & 1; }));
  add("dns.flags.recavail", P::DNS, F, dns([](const DnsLayer& l) { return (l.flags >> 7) & 1; }));
  add("dns.flags.z", P::DNS, F, dns([](const DnsLayer& l) { return (l.flags >> 6) & 1; }));
  add("dns.flags.authenticated", P::DNS, F, dns([](const DnsLayer& l) { return (l.flags >> 5) & 1; }));
  add("dns.flags.checkdisable", P::DNS, F, dns([](const DnsLayer& l) { return (l.flags >> 4) & 1; }));
  add("dns.flags.rcode", P::DNS, C, dns([](const DnsLayer& l) { return l.flags & 0xf; }));
  add("dns.count.queries", P::DNS, N, dns([](const DnsLayer& l) { return l.qdcount; }));
  add("dns.count.answers", P::DNS, N, dns([](const DnsLayer& l) { return l.ancount; }));
  add("dns.count.auth_rr", P::DNS, N, dns([](const DnsLayer& l) { return l.nscount; }));
  add("dns.count.add_rr", P::DNS, N, dns([](const DnsLayer& l) { return l.arcount; }));
  add("dns.qry.name", P::DNS, C, dns([](const DnsLayer& l) { return l.qname; }));
  add("dns.qry.name.len", P::DNS, N, dns([](const DnsLayer& l) { return l.qname_len; }));
  add("dns.count.labels", P::DNS, N, dns([](const DnsLayer& l) { return l.qname_labels; }));
  add("dns.qry.type", P::DNS, C, dns([](const DnsLayer& l) { return l.qtype; }));
  add("dns.qry.class", P::DNS, C, dns([](const DnsLayer& l) { return l.qclass; }));

  auto dhcp = [](auto f) { return layer(&Dissection::dhcp, f); };
  add("dhcp.type", P::DHCP, C, dhcp([](const DhcpLayer& l) { return l.op; }));
  add("dhcp.hw.type", P::DHCP, C, dhcp([](const DhcpLayer& l) { return l.htype; }));
  add("dhcp.hw.len", P::DHCP, N, dhcp([](const DhcpLayer& l) { return l.hlen; }));
  add("dhcp.hops", P::DHCP, N, dhcp([](const DhcpLayer& l) { return l.hops; }));
  add("dhcp.id", P::DHCP, N, dhcp([](const DhcpLayer& l) { return l.xid; }));
  add("dhcp.secs", P::DHCP, N, dhcp([](const DhcpLayer& l) { return l.secs; }));
  add("dhcp.flags.bc", P::DHCP, F, dhcp([](const DhcpLayer& l) { return l.flags >> 15; }));
  add("dhcp.ip.client", P::DHCP, C, dhcp([](const DhcpLayer& l) { return ipv4_text(l.ciaddr); }));
  add("dhcp.ip.your", P::DHCP, C, dhcp([](const DhcpLayer& l) { return ipv4_text(l.yiaddr); }));
  add("dhcp.hw.mac_addr", P::DHCP, C, dhcp([](const DhcpLayer& l) { return l.chaddr.to_string(); }));
  add("dhcp.option.dhcp", P::DHCP, C, dhcp([](const DhcpLayer& l) { return l.msg_type; }));
  add("dhcp.option.count", P::DHCP, N, dhcp([](const DhcpLayer& l) { return l.option_count; }));
  add("dhcp.option.max_msg_size", P::DHCP, N, dhcp([](const DhcpLayer& l) { return l.max_msg_size; }));
  add("dhcp.option.param_req_count", P::DHCP, N, dhcp([](const DhcpLayer& l) { return l.param_req_count; }));
  add("dhcp.option.lease_time", P::DHCP, N, dhcp([](const DhcpLayer& l) { return l.lease_time; }));

  auto ntp = [](auto f) { return layer(&Dissection::ntp, f); };
  add("ntp.flags.li", P::NTP, C, ntp([](const NtpLayer& l) { return l.li; }));
  add("ntp.flags.vn", P::NTP, C, ntp([](const NtpLayer& l) { return l.vn; }));
  add("ntp.flags.mode", P::NTP, C, ntp([](const NtpLayer& l) { return l.mode; }));
  add("ntp.stratum", P::NTP, N, ntp([](const NtpLayer& l) { return l.stratum; }));
  add("ntp.ppoll", P::NTP, N, ntp([](const NtpLayer& l) { return l.poll; }));
  add("ntp.precision", P::NTP, N, ntp([](const NtpLayer& l) { return l.precision; }));
  add("ntp.rootdelay", P::NTP, N, ntp([](const NtpLayer& l) { return l.root_delay / 65536.0; }));
  add("ntp.rootdispersion", P::NTP, N, ntp([](const NtpLayer& l) { return l.root_dispersion / 65536.0; }));
  add("ntp.refid", P::NTP, N, ntp([](const NtpLayer& l) { return l.ref_id; }));

  auto tls = [](auto f) { return layer(&Dissection::tls, f); };
  add("tls.record.content_type", P::TLS, C, tls([](const TlsLayer& l) { return l.content_type; }));
  add("tls.record.version", P::TLS, C, tls([](const TlsLayer& l) { return l.version; }));
  add("tls.record.length", P::TLS, N, tls([](const TlsLayer& l) { return l.length; }));
  add("tls.handshake.type", P::TLS, C, tls([](const TlsLayer& l) { return l.handshake_type; }));
  add("tls.record.count", P::TLS, N, tls([](const TlsLayer& l) { return l.record_count; }));

  auto http = [](auto f) { return layer(&Dissection::http, f); };
  add("http.request", P::HTTP, F, http([](const HttpLayer& l) { return l.request ? 1 : 0; }));
  add("http.response", P::HTTP, F, http([](const HttpLayer& l) { return l.response ? 1 : 0; }));
  add("http.response.code", P::HTTP, C, http([](const HttpLayer& l) { return l.response_code; }));
  add("http.content_length", P::HTTP, N, http([](const HttpLayer& l) { return l.content_length; }));
  add("http.request.method", P::HTTP, C, http([](const HttpLayer& l) { return l.method; }));
  add("http.request.uri", P::HTTP, C, http([](const HttpLayer& l) { return l.uri; }));
  add("http.header_count", P::HTTP, N, http([](const HttpLayer& l) { return l.header_count; }));

  auto stun = [](auto f) { return layer(&Dissection::stun, f); };
  add("stun.type", P::STUN, C, stun([](const StunLayer& l) { return l.type; }));
  add("stun.type.class", P::STUN, C,
      stun([](const StunLayer& l) { return ((l.type >> 7) & 2) | ((l.type >> 4) & 1); }));
  add("stun.type.method", P::STUN, C,
      stun([](const StunLayer& l) { return (l.type & 0xf) | ((l.type >> 1) & 0x70) | ((l.type >> 2) & 0xf80); }));
  add("stun.length", P::STUN, N, stun([](const StunLayer& l) { return l.length; }));
  add("stun.attr_count", P::STUN, N, stun([](const StunLayer& l) { return l.attr_count; }));

  auto eapol = [](auto f) { return layer(&Dissection::eapol, f); };
  add("eapol.version", P::EAPOL, C, eapol([](const EapolLayer& l) { return l.version; }));
  add("eapol.type", P::EAPOL, C, eapol([](const EapolLayer& l) { return l.type; }));
  add("eapol.len", P::EAPOL, N, eapol([](const EapolLayer& l) { return l.length; }));
  add("eapol.keydes.type", P::EAPOL, C, eapol([](const EapolLayer& l) { return l.key_descriptor; }));
  add("eapol.keydes.key_info", P::EAPOL, C, eapol([](const EapolLayer& l) { return l.key_info; }));

  add("dstport_class", P::DERIVED, C,
      [](const Dissection& d) -> FieldValue { return double(dstport_class(d.dstport())); });
  return e;
}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> e = build_entries();
  return e;
}

const std::unordered_map<std::string, std::size_t>& entry_index() {
  static const auto m = [] {
    std::unordered_map<std::string, std::size_t> m;
    const auto& e = entries();
    for (std::size_t i = 0; i < e.size(); ++i) m.emplace(e[i].name, i);
    return m;
  }();
  return m;
}

double numeric_or_nan(const FieldValue& v) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

int dstport_class(std::optional<std::uint16_t> port) {
  if (!port) return 0;
  for (std::size_t i = 0; i < kDstportAllowList.size(); ++i)
    if (kDstportAllowList[i] == *port) return static_cast<int>(i) + 1;
  if (*port <= 1023) return 10;
  if (*port <= 49151) return 11;
  return 12;
}

const FeatureSchema& header_catalog() {
  static const FeatureSchema schema = [] {
    std::vector<FeatureDescriptor> ds;
    for (const auto& e : entries()) ds.push_back({e.name, e.protocol, e.kind, std::nullopt});
    return FeatureSchema("header", std::move(ds));
  }();
  return schema;
}

HeaderExtractor::HeaderExtractor(FeatureSchema schema) : schema_(std::move(schema)) {
  const auto& idx = entry_index();
  for (std::size_t i = 0; i < schema_.descriptors().size(); ++i) {
    const auto& name = schema_.descriptors()[i].name;
    auto it = idx.find(name);
    if (it == idx.end()) throw InputError("header schema names unknown field '" + name + "'");
    getters_.push_back(entries()[it->second].get);
    if (schema_.descriptors()[i].active()) active_.push_back(i);
  }
}

RawRow HeaderExtractor::raw(const Dissection& d) const {
  RawRow row;
  row.reserve(getters_.size());
  for (const auto& g : getters_) row.push_back(g(d));
  return row;
}

std::vector<double> HeaderExtractor::values(const Dissection& d) const {
  std::vector<double> out;
  out.reserve(active_.size());
  for (auto i : active_) out.push_back(numeric_or_nan(getters_[i](d)));
  return out;
}

std::vector<double> extract_features(const RawPacket& packet, const FeatureSchema& schema) {
  return HeaderExtractor(schema).values(dissect(packet));
}

bool looks_like_mac(std::string_view s) {
  static const std::regex re("([0-9a-fA-F]{2}[:-]){5}[0-9a-fA-F]{2}");
  return std::regex_search(s.begin(), s.end(), re);
}

bool looks_like_ip(std::string_view s) {
  static const std::regex v4(R"((^|[^0-9.])(\d{1,3}\.){3}\d{1,3}($|[^0-9.]))");
  static const std::regex v6("([0-9a-fA-F]{1,4})?(:[0-9a-fA-F]{0,4}){2,7}");
  return std::regex_search(s.begin(), s.end(), v4) || std::regex_search(s.begin(), s.end(), v6);
}

FilterAccumulator::FilterAccumulator(std::size_t width) : cols_(width) {}

void FilterAccumulator::note_text(Column& c, const std::string& t) {
  c.text = true;
  if (!c.seen.insert(t).second) return;
  c.mac = c.mac || looks_like_mac(t);
  c.ip = c.ip || looks_like_ip(t);
}

void FilterAccumulator::observe(const RawRow& row) {
  if (row.size() != cols_.size()) throw InputError("raw row width does not match schema");
  ++rows_;
  for (std::size_t j = 0; j < row.size(); ++j) {
    auto& c = cols_[j];
    const auto& v = row[j];
    if (!c.first) {
      c.first = v;
    } else if (!c.varies && !(*c.first == v)) {
      c.varies = true;
    }
    if (const auto* t = std::get_if<std::string>(&v)) note_text(c, *t);
  }
}

void FilterAccumulator::merge(const FilterAccumulator& other) {
  if (other.cols_.size() != cols_.size()) throw InputError("cannot merge filter state of different widths");
  rows_ += other.rows_;
  for (std::size_t j = 0; j < cols_.size(); ++j) {
    auto& c = cols_[j];
    const auto& o = other.cols_[j];
    if (!o.first) continue;
    if (!c.first) {
      c.first = o.first;
    } else if (!(*c.first == *o.first)) {
      c.varies = true;
    }
    c.varies = c.varies || o.varies;
    for (const auto& t : o.seen) note_text(c, t);
  }
}

FeatureSchema FilterAccumulator::finish(const FeatureSchema& schema) const {
  if (rows_ == 0) throw InputError("cannot filter features on an empty sample");
  if (schema.descriptors().size() != cols_.size()) throw InputError("schema width does not match filter state");
  auto out = schema.descriptors();
  for (std::size_t j = 0; j < cols_.size(); ++j) {
    if (!out[j].active()) continue;
    const auto& c = cols_[j];
    if (c.mac) {
      out[j].filtered = FilterReason::ContainsMac;
    } else if (c.ip) {
      out[j].filtered = FilterReason::ContainsIp;
    } else if (c.text) {
      out[j].filtered = FilterReason::StringValued;
    } else if (!c.varies) {
      out[j].filtered = FilterReason::Constant;
    }
  }
  FeatureSchema filtered(schema.family(), std::move(out), schema.version());
  if (filtered.active_count() == 0) throw InputError("every feature was filtered out");
  return filtered;
}

FeatureSchema apply_filters(const FeatureSchema& schema, std::span<const RawRow> sample) {
  FilterAccumulator acc(schema.descriptors().size());
  for (const auto& row : sample) acc.observe(row);
  return acc.finish(schema);
}

}  // namespace gemid
