#include "gemid/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include <json.hpp>

#include "gemid/error.hpp"
#include "gemid/parallel.hpp"
#include "gemid/pcap.hpp"
#include "gemid/random.hpp"

namespace gemid {
namespace {

using Bytes = std::vector<std::uint8_t>;

void put16(Bytes& b, std::uint16_t v) {
  b.push_back(static_cast<std::uint8_t>(v >> 8));
  b.push_back(static_cast<std::uint8_t>(v));
}
void put32(Bytes& b, std::uint32_t v) {
  put16(b, static_cast<std::uint16_t>(v >> 16));
  put16(b, static_cast<std::uint16_t>(v));
}
void set16(Bytes& b, std::size_t at, std::uint16_t v) {
  b[at] = static_cast<std::uint8_t>(v >> 8);
  b[at + 1] = static_cast<std::uint8_t>(v);
}

std::uint32_t sum16(const std::uint8_t* p, std::size_t n, std::uint32_t acc = 0) {
  for (std::size_t i = 0; i + 1 < n; i += 2) acc += static_cast<std::uint32_t>(p[i] << 8 | p[i + 1]);
  if (n % 2) acc += static_cast<std::uint32_t>(p[n - 1] << 8);
  return acc;
}
std::uint16_t fold(std::uint32_t acc) {
  while (acc >> 16) acc = (acc & 0xffff) + (acc >> 16);
  return static_cast<std::uint16_t>(~acc);
}

using Ip = std::uint32_t;
Ip ip_of(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d) {
  return static_cast<Ip>(a) << 24 | static_cast<Ip>(b) << 16 | static_cast<Ip>(c) << 8 | d;
}

struct IpFields {
  MacAddress src_mac, dst_mac;
  Ip src = 0, dst = 0;
  std::uint8_t ttl = 64;
  bool df = true;
  std::uint16_t id = 0;
  std::uint8_t tos = 0;
};

/// Ethernet + IPv4 around an L4 segment whose checksum field sits at
/// `csum_at` (relative to the segment); -1 skips it.
Bytes frame(const IpFields& f, std::uint8_t proto, Bytes l4, int csum_at) {
  if (csum_at >= 0) {
    std::uint32_t acc = 0;
    const std::uint8_t pseudo[12] = {static_cast<std::uint8_t>(f.src >> 24), static_cast<std::uint8_t>(f.src >> 16),
                                     static_cast<std::uint8_t>(f.src >> 8),  static_cast<std::uint8_t>(f.src),
                                     static_cast<std::uint8_t>(f.dst >> 24), static_cast<std::uint8_t>(f.dst >> 16),
                                     static_cast<std::uint8_t>(f.dst >> 8),  static_cast<std::uint8_t>(f.dst),
                                     0,
                                     proto,
                                     static_cast<std::uint8_t>(l4.size() >> 8),
                                     static_cast<std::uint8_t>(l4.size())};
    acc = sum16(pseudo, 12, acc);
    acc = sum16(l4.data(), l4.size(), acc);
    std::uint16_t c = fold(acc);
    if (c == 0 && proto == 17) c = 0xffff;
    set16(l4, static_cast<std::size_t>(csum_at), c);
  }
  Bytes b;
  b.reserve(34 + l4.size());
  b.insert(b.end(), f.dst_mac.bytes.begin(), f.dst_mac.bytes.end());
  b.insert(b.end(), f.src_mac.bytes.begin(), f.src_mac.bytes.end());
  put16(b, 0x0800);
  const std::size_t ip = b.size();
  b.push_back(0x45);
  b.push_back(f.tos);
  put16(b, static_cast<std::uint16_t>(20 + l4.size()));
  put16(b, f.id);
  put16(b, f.df ? 0x4000 : 0);
  b.push_back(f.ttl);
  b.push_back(proto);
  put16(b, 0);
  put32(b, f.src);
  put32(b, f.dst);
  set16(b, ip + 10, fold(sum16(b.data() + ip, 20)));
  b.insert(b.end(), l4.begin(), l4.end());
  return b;
}

constexpr std::uint8_t kFin = 0x01, kSyn = 0x02, kRst = 0x04, kPsh = 0x08, kAck = 0x10;

Bytes tcp(std::uint16_t sport, std::uint16_t dport, std::uint32_t seq, std::uint32_t ack, std::uint8_t flags,
          std::uint16_t window, const Bytes& options, const Bytes& payload) {
  Bytes b;
  put16(b, sport);
  put16(b, dport);
  put32(b, seq);
  put32(b, ack);
  b.push_back(static_cast<std::uint8_t>(((20 + options.size()) / 4) << 4));
  b.push_back(flags);
  put16(b, window);
  put16(b, 0);  // checksum
  put16(b, 0);  // urgent
  b.insert(b.end(), options.begin(), options.end());
  b.insert(b.end(), payload.begin(), payload.end());
  return b;
}

Bytes udp(std::uint16_t sport, std::uint16_t dport, const Bytes& payload) {
  Bytes b;
  put16(b, sport);
  put16(b, dport);
  put16(b, static_cast<std::uint16_t>(8 + payload.size()));
  put16(b, 0);
  b.insert(b.end(), payload.begin(), payload.end());
  return b;
}

void dns_name(Bytes& b, const std::string& name) {
  std::size_t start = 0;
  while (start <= name.size()) {
    const auto dot = name.find('.', start);
    const auto end = dot == std::string::npos ? name.size() : dot;
    b.push_back(static_cast<std::uint8_t>(end - start));
    b.insert(b.end(), name.begin() + static_cast<std::ptrdiff_t>(start), name.begin() + static_cast<std::ptrdiff_t>(end));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  b.push_back(0);
}

Bytes text_bytes(const std::string& s) { return Bytes(s.begin(), s.end()); }

MacAddress mac_from(std::uint64_t v) {
  MacAddress m;
  for (int i = 0; i < 6; ++i) m.bytes[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v >> (8 * (5 - i)));
  m.bytes[0] = static_cast<std::uint8_t>((m.bytes[0] & 0xfc) | 0x02);  // locally administered unicast
  return m;
}

// ---------------------------------------------------------------------------
// Session generation

struct Event {
  std::int64_t micros;
  std::uint64_t seq;
  Bytes bytes;
};

struct Host {
  MacAddress mac;
  Ip ip = 0;
};

class SessionWriter {
 public:
  SessionWriter(const std::vector<DeviceProfile>& devices, const EnvironmentProfile& env, int env_index,
                double start, std::uint64_t seed)
      : devs_(devices), env_(env), env_index_(env_index), start_(start), seed_(seed) {
    const auto& s = env.subnet;
    gateway_ = {mac_from(derive_seed(seed, "gateway-mac")), ip_of(s[0], s[1], s[2], 1)};
    Rng r = make_rng(seed, "servers");
    std::uniform_int_distribution<int> oct(1, 254);
    for (int g = 0; g < 8; ++g)
      servers_.push_back(ip_of(static_cast<std::uint8_t>(13 + 20 * g), static_cast<std::uint8_t>(oct(r)),
                               static_cast<std::uint8_t>(oct(r)), static_cast<std::uint8_t>(oct(r))));
    ntp_server_ = ip_of(static_cast<std::uint8_t>(129 + env_index), static_cast<std::uint8_t>(oct(r)),
                        static_cast<std::uint8_t>(oct(r)), static_cast<std::uint8_t>(oct(r)));
  }

  /// Emits conversations for device `d` until it has sent `quota` frames.
  void device(std::size_t d, int quota) {
    const auto& p = devs_[d];
    Rng rng = make_rng(seed_, "device", d);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    State st;
    st.host = {p.mac, ip_of(env_.subnet[0], env_.subnet[1], env_.subnet[2], static_cast<std::uint8_t>(10 + d))};
    st.ip_id = static_cast<std::uint16_t>(rng());
    st.clock = static_cast<std::uint32_t>(rng());
    st.port = static_cast<std::uint16_t>(32768 + rng() % 20000);
    const double gap = env_.gap.at(d) * env_.iat_scale;
    std::exponential_distribution<double> wait(1.0 / gap);
    double t = start_ + unit(rng) * gap;
    std::discrete_distribution<int> kind(p.mix.begin(), p.mix.end());
    while (st.sent < quota) {
      const bool mark = unit(rng) < p.confound;
      const bool port = unit(rng) < p.confound;
      st.tos = static_cast<std::uint8_t>(mark ? p.env_dscp[static_cast<std::size_t>(env_index_)] << 2 : 0);
      double end = t;
      switch (kind(rng)) {
        case 0: end = tcp_session(d, st, rng, t, port); break;
        case 1: end = dns_query(d, st, rng, t); break;
        case 2: end = ntp_query(d, st, rng, t); break;
        default: end = ssdp(d, st, rng, t); break;
      }
      t = end + wait(rng);
    }
  }

  /// Unlabeled chatter from a background host.
  void noise(int i, double until) {
    Rng rng = make_rng(seed_, "noise", static_cast<std::uint64_t>(i));
    Host h{mac_from(derive_seed(seed_, "noise-mac", static_cast<std::uint64_t>(i))),
           ip_of(env_.subnet[0], env_.subnet[1], env_.subnet[2], static_cast<std::uint8_t>(100 + i))};
    std::exponential_distribution<double> wait(1.0 / 20.0);
    for (double t = start_ + wait(rng); t < until; t += wait(rng)) {
      IpFields f{h.mac, gateway_.mac, h.ip, gateway_.ip, 64, true, static_cast<std::uint16_t>(rng()), 0};
      Bytes q;
      put16(q, static_cast<std::uint16_t>(rng()));
      put16(q, 0x0100);
      put16(q, 1);
      put16(q, 0);
      put16(q, 0);
      put16(q, 0);
      dns_name(q, "time" + std::to_string(i) + ".example.net");
      put16(q, 1);
      put16(q, 1);
      emit(t, frame(f, 17, udp(static_cast<std::uint16_t>(40000 + rng() % 20000), 53, q), 6));
    }
  }

  double end_time() const {
    double m = start_;
    for (const auto& e : events_) m = std::max(m, static_cast<double>(e.micros) / 1e6);
    return m;
  }

  std::vector<Event> take() {
    std::sort(events_.begin(), events_.end(),
              [](const Event& a, const Event& b) { return a.micros != b.micros ? a.micros < b.micros : a.seq < b.seq; });
    return std::move(events_);
  }

 private:
  struct State {
    Host host;
    std::uint16_t ip_id = 0;
    std::uint32_t clock = 0;  // TCP timestamp clock offset, ms
    std::uint16_t port = 0;
    std::uint8_t tos = 0;
    int sent = 0;
  };

  std::uint16_t next_id(const DeviceProfile& p, State& st, Rng& rng) {
    switch (p.ip_id_mode) {
      case 0: return 0;
      case 1: return st.ip_id++;
      default: return static_cast<std::uint16_t>(rng());
    }
  }
  std::uint16_t next_port(State& st) {
    st.port = static_cast<std::uint16_t>(st.port >= 60999 ? 32768 : st.port + 1);
    return st.port;
  }

  IpFields out_fields(const DeviceProfile& p, State& st, Rng& rng, Ip dst, const MacAddress& dst_mac) {
    return {p.mac, dst_mac, st.host.ip, dst, static_cast<std::uint8_t>(p.ttl), p.df, next_id(p, st, rng), st.tos};
  }
  IpFields in_fields(const State& st, Ip src, Rng& rng) {
    return {gateway_.mac, st.host.mac, src, st.host.ip, 52, true, static_cast<std::uint16_t>(rng()), 0};
  }

  void emit(double t, Bytes b) { events_.push_back({Timestamp::from_seconds(t).micros, seq_++, std::move(b)}); }
  void sent(State& st, double t, Bytes b) {
    emit(t, std::move(b));
    ++st.sent;
  }

  Bytes ts_option(std::uint32_t tsval, std::uint32_t tsecr, bool pad) {
    Bytes o;
    if (pad) {
      o.push_back(1);
      o.push_back(1);
    }
    o.push_back(8);
    o.push_back(10);
    put32(o, tsval);
    put32(o, tsecr);
    return o;
  }

  double tcp_session(std::size_t d, State& st, Rng& rng, double t, bool confound_port) {
    const auto& p = devs_[d];
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const Ip server = servers_[static_cast<std::size_t>(p.group) % servers_.size()];
    const std::uint16_t sport = next_port(st);
    const std::uint16_t dport = confound_port ? p.env_port[static_cast<std::size_t>(env_index_)] : p.service_port;
    const double rtt_base = env_.rtt.at(d);
    auto rtt = [&] { return rtt_base * (0.85 + 0.3 * unit(rng)); };
    const double think = env_.think.at(d);
    std::uint32_t seq = static_cast<std::uint32_t>(rng()), srv_seq = static_cast<std::uint32_t>(rng());
    std::uint32_t srv_clock = static_cast<std::uint32_t>(rng());
    auto clock_at = [&](std::uint32_t base, double when) {
      return base + static_cast<std::uint32_t>(std::llround((when - start_) * 1000.0));
    };
    auto window = [&] {
      return static_cast<std::uint16_t>(p.window_base + p.window_step * static_cast<int>(rng() % 4));
    };
    std::uint32_t last_srv_ts = 0;
    auto dev_opts = [&](double when) {
      return p.timestamps ? ts_option(clock_at(st.clock, when), last_srv_ts, true) : Bytes{};
    };
    auto srv_opts = [&](double when) {
      last_srv_ts = clock_at(srv_clock, when);
      return p.timestamps ? ts_option(last_srv_ts, clock_at(st.clock, when), true) : Bytes{};
    };
    auto out = [&](double when, std::uint8_t flags, const Bytes& opts, const Bytes& payload, std::uint32_t ack) {
      sent(st, when,
           frame(out_fields(p, st, rng, server, gateway_.mac), 6,
                 tcp(sport, dport, seq, ack, flags, window(), opts, payload), 16));
      seq += static_cast<std::uint32_t>(payload.size()) + ((flags & (kSyn | kFin)) ? 1u : 0u);
    };
    auto in = [&](double when, std::uint8_t flags, const Bytes& opts, const Bytes& payload) {
      emit(when, frame(in_fields(st, server, rng), 6,
                       tcp(dport, sport, srv_seq, seq, flags, env_.server_window, opts, payload), 16));
      srv_seq += static_cast<std::uint32_t>(payload.size()) + ((flags & (kSyn | kFin)) ? 1u : 0u);
    };

    // Handshake.
    Bytes syn_opts;
    syn_opts.push_back(2);
    syn_opts.push_back(4);
    put16(syn_opts, static_cast<std::uint16_t>(p.mss));
    if (p.sack_perm && p.timestamps) {
      syn_opts.push_back(4);
      syn_opts.push_back(2);
      const auto ts = ts_option(clock_at(st.clock, t), 0, false);
      syn_opts.insert(syn_opts.end(), ts.begin(), ts.end());
    } else if (p.sack_perm) {
      syn_opts.insert(syn_opts.end(), {1, 1, 4, 2});
    } else if (p.timestamps) {
      const auto ts = ts_option(clock_at(st.clock, t), 0, true);
      syn_opts.insert(syn_opts.end(), ts.begin(), ts.end());
    }
    if (p.wscale >= 0) syn_opts.insert(syn_opts.end(), {1, 3, 3, static_cast<std::uint8_t>(p.wscale)});
    out(t, kSyn, syn_opts, {}, 0);
    double now = t + rtt();
    Bytes synack_opts{2, 4, 0x05, 0xb4};
    if (p.sack_perm) synack_opts.insert(synack_opts.end(), {1, 1, 4, 2});
    if (p.timestamps) {
      last_srv_ts = clock_at(srv_clock, now);
      const auto ts = ts_option(last_srv_ts, clock_at(st.clock, t), true);
      synack_opts.insert(synack_opts.end(), ts.begin(), ts.end());
    }
    if (p.wscale >= 0) synack_opts.insert(synack_opts.end(), {1, 3, 3, 8});
    in(now, kSyn | kAck, synack_opts, {});
    now += 0.0002;
    out(now, kAck, dev_opts(now), {}, srv_seq);

    // Exchanges.
    std::normal_distribution<double> req(p.payload_mean, p.payload_sd);
    const int rounds = std::max(1, static_cast<int>(std::lround(p.rounds * env_.flow_multiplier * (0.7 + 0.6 * unit(rng)))));
    for (int r = 0; r < rounds; ++r) {
      now += think * (0.5 + unit(rng));
      Bytes payload;
      if (p.http) {
        const std::string path = "/api/v2/" + p.dns_names.front().substr(0, 6) + "/state?n=" +
                                 std::to_string(1000 + rng() % 9000);
        payload = text_bytes("GET " + path + " HTTP/1.1\r\nHost: " + p.dns_names.front() +
                             "\r\nUser-Agent: iot-agent/2.1\r\nAccept: */*\r\n\r\n");
      } else {
        const auto n = static_cast<std::size_t>(std::clamp(req(rng), 40.0, 1400.0));
        payload = {23, 3, 3, static_cast<std::uint8_t>((n - 5) >> 8), static_cast<std::uint8_t>(n - 5)};
        for (std::size_t i = 5; i < n; ++i) payload.push_back(static_cast<std::uint8_t>(rng()));
      }
      out(now, kPsh | kAck, dev_opts(now), payload, srv_seq);
      now += rtt();
      auto body = static_cast<std::size_t>(
          std::max(16.0, p.response_mean * env_.response_scale * (0.7 + 0.6 * unit(rng))));
      Bytes resp;
      if (p.http) {
        resp = text_bytes("HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: " +
                          std::to_string(body) + "\r\n\r\n");
        for (std::size_t i = 0; i < body; ++i) resp.push_back(static_cast<std::uint8_t>('a' + rng() % 26));
      } else {
        resp = {23, 3, 3, static_cast<std::uint8_t>(body >> 8), static_cast<std::uint8_t>(body)};
        for (std::size_t i = 0; i < body; ++i) resp.push_back(static_cast<std::uint8_t>(rng()));
      }
      for (std::size_t off = 0; off < resp.size(); off += 1400) {
        const Bytes seg(resp.begin() + static_cast<std::ptrdiff_t>(off),
                        resp.begin() + static_cast<std::ptrdiff_t>(std::min(resp.size(), off + 1400)));
        in(now, kPsh | kAck, srv_opts(now), seg);
        now += 0.0001;
      }
      now += 0.0003;
      out(now, kAck, dev_opts(now), {}, srv_seq);
    }

    // Teardown.
    now += think * (0.5 + unit(rng));
    switch (p.close) {
      case DeviceProfile::Close::Rst:
        out(now, kRst | kAck, dev_opts(now), {}, srv_seq);
        break;
      case DeviceProfile::Close::ServerFin:
        in(now, kFin | kAck, srv_opts(now), {});
        now += 0.0002;
        out(now, kFin | kAck, dev_opts(now), {}, srv_seq);
        now += rtt();
        in(now, kAck, srv_opts(now), {});
        break;
      case DeviceProfile::Close::Fin:
        out(now, kFin | kAck, dev_opts(now), {}, srv_seq);
        now += rtt();
        in(now, kFin | kAck, srv_opts(now), {});
        now += 0.0002;
        out(now, kAck, dev_opts(now), {}, srv_seq);
        break;
    }
    return now;
  }

  double dns_query(std::size_t d, State& st, Rng& rng, double t) {
    const auto& p = devs_[d];
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto& name = p.dns_names[rng() % p.dns_names.size()];
    const std::uint16_t id = static_cast<std::uint16_t>(rng());
    const std::uint16_t sport = next_port(st);
    Bytes q;
    put16(q, id);
    put16(q, 0x0100);
    put16(q, 1);
    put16(q, 0);
    put16(q, 0);
    put16(q, 0);
    dns_name(q, name);
    put16(q, 1);
    put16(q, 1);
    sent(st, t, frame(out_fields(p, st, rng, gateway_.ip, gateway_.mac), 17, udp(sport, 53, q),
                      p.udp_checksum ? 6 : -1));
    Bytes a = q;
    set16(a, 2, 0x8180);
    set16(a, 6, static_cast<std::uint16_t>(env_.answers));
    for (int i = 0; i < env_.answers; ++i) {
      put16(a, 0xc00c);
      put16(a, 1);
      put16(a, 1);
      put32(a, 300);
      put16(a, 4);
      put32(a, servers_[static_cast<std::size_t>(p.group) % servers_.size()] + static_cast<Ip>(i));
    }
    const double now = t + env_.gateway_latency + 0.5 * env_.rtt.at(d) * (0.85 + 0.3 * unit(rng));
    emit(now, frame(in_fields(st, gateway_.ip, rng), 17, udp(53, sport, a), 6));
    return now;
  }

  double ntp_query(std::size_t d, State& st, Rng& rng, double t) {
    const auto& p = devs_[d];
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto ntp = [&](int mode, int stratum, int poll, int precision, std::uint32_t refid, double when) {
      Bytes b;
      b.push_back(static_cast<std::uint8_t>((p.ntp_version << 3) | mode));
      b.push_back(static_cast<std::uint8_t>(stratum));
      b.push_back(static_cast<std::uint8_t>(poll));
      b.push_back(static_cast<std::uint8_t>(static_cast<std::int8_t>(precision)));
      put32(b, stratum ? 0x00000200u : 0);
      put32(b, stratum ? 0x00000400u : 0);
      put32(b, refid);
      for (int i = 0; i < 3; ++i) {
        put32(b, 0);
        put32(b, 0);
      }
      const double secs = when + 2208988800.0;
      put32(b, static_cast<std::uint32_t>(static_cast<std::uint64_t>(secs)));
      put32(b, static_cast<std::uint32_t>((secs - std::floor(secs)) * 4294967296.0));
      return b;
    };
    sent(st, t, frame(out_fields(p, st, rng, ntp_server_, gateway_.mac), 17,
                      udp(123, 123, ntp(3, 0, p.ntp_poll, p.ntp_precision, 0, t)), p.udp_checksum ? 6 : -1));
    const double now = t + env_.rtt.at(d) * (0.85 + 0.3 * unit(rng));
    emit(now, frame(in_fields(st, ntp_server_, rng), 17,
                    udp(123, 123, ntp(4, 2, p.ntp_poll, -23, 0xc0a80001u + static_cast<std::uint32_t>(env_index_), now)),
                    6));
    return now;
  }

  double ssdp(std::size_t d, State& st, Rng& rng, double t) {
    const auto& p = devs_[d];
    const MacAddress mcast = MacAddress::parse("01:00:5e:7f:ff:fa");
    const Ip group = ip_of(239, 255, 255, 250);
    const std::uint16_t sport = next_port(st);
    const auto payload = text_bytes("M-SEARCH * HTTP/1.1\r\nHOST: 239.255.255.250:1900\r\nMAN: \"ssdp:discover\"\r\nMX: 2\r\nST: " +
                                    p.ssdp_target + "\r\n\r\n");
    // A second copy follows after the device's usual pause.
    const double again = t + env_.think.at(d);
    for (double when : {t, again})
      sent(st, when, frame(out_fields(p, st, rng, group, mcast), 17, udp(sport, 1900, payload),
                           p.udp_checksum ? 6 : -1));
    return again;
  }

  const std::vector<DeviceProfile>& devs_;
  const EnvironmentProfile& env_;
  int env_index_;
  double start_;
  std::uint64_t seed_;
  Host gateway_;
  std::vector<Ip> servers_;
  Ip ntp_server_ = 0;
  std::vector<Event> events_;
  std::uint64_t seq_ = 0;
};

struct GroupHabits {
  const char* kind;
  std::array<double, 4> mix;
  double payload_mean, payload_sd, response_mean;
  int rounds;
  std::uint16_t port;
  bool http;
  bool sack, timestamps, wscale;
  std::vector<std::string> names;
  const char* ssdp;
  DeviceProfile::Close close;
};

const std::vector<GroupHabits>& group_habits() {
  static const std::vector<GroupHabits> g = {
      {"camera", {0.86, 0.08, 0.04, 0.02}, 900, 150, 180, 10, 443, false, true, true, true,
       {"stream.camvendor.com", "api.camvendor.com"}, "urn:schemas-upnp-org:device:Basic:1", DeviceProfile::Close::Rst},
      {"plug", {0.78, 0.14, 0.08, 0.0}, 120, 20, 70, 4, 443, false, true, false, true,
       {"mqtt.plugcloud.io", "ota.plugcloud.io"}, "ssdp:all", DeviceProfile::Close::Fin},
      {"hub", {0.70, 0.14, 0.06, 0.10}, 420, 60, 600, 6, 443, false, false, true, true,
       {"hub-events.smarthome.net", "hub-config.smarthome.net"}, "urn:dial-multiscreen-org:service:dial:1", DeviceProfile::Close::ServerFin},
      {"speaker", {0.74, 0.14, 0.06, 0.06}, 0, 0, 1100, 5, 80, true, true, true, false,
       {"music.speakerco.com", "dl.speakerco.com"}, "urn:schemas-upnp-org:device:MediaRenderer:1", DeviceProfile::Close::Fin},
  };
  return g;
}

}  // namespace

std::vector<std::string> planted_invariant_features() {
  return {"ip.ttl", "ip.flags.df", "tcp.window_size"};
}

std::vector<std::string> planted_confounded_features() { return {"ip.dsfield", "ip.dsfield.dscp", "tcp.dstport"}; }

std::vector<DeviceProfile> default_devices(int n, std::uint64_t seed) {
  if (n < 4) throw InputError("the generator needs at least 4 devices");
  // Pair members differ in exactly one signature field: cameras by window,
  // plugs by DF, hubs and speakers by TTL. Everything else is per group.
  static const int ttl[] = {64, 64, 255, 255, 64, 128, 128, 255};
  static const bool df[] = {true, true, true, false, false, false, true, true};
  static const int id_mode[] = {1, 1, 2, 2, 0, 0, 1, 1};
  static const int win[] = {5840, 14600, 8192, 8192, 29200, 29200, 65160, 65160};
  static const int step[] = {0, 0, 16, 16, 0, 0, 4, 4};
  static const int mss[] = {1460, 1460, 1380, 1380, 1360, 1360, 1440, 1440};
  static const int ws[] = {7, 7, 0, 0, 8, 8, 3, 3};
  static const int vn[] = {4, 4, 3, 3, 3, 3, 4, 4};
  static const int poll[] = {6, 6, 8, 8, 10, 10, 7, 7};
  static const int prec[] = {-20, -20, -10, -10, -23, -23, -15, -15};
  static const bool udp_sum[] = {true, true, true, true, false, false, true, true};
  const auto& habits = group_habits();
  std::vector<DeviceProfile> out;
  for (int d = 0; d < n; ++d) {
    const int g = (d / 2) % static_cast<int>(habits.size());
    const int member = d % 2;
    const int cycle = d / 8;  // beyond eight devices the tables repeat with offsets
    const auto& h = habits[static_cast<std::size_t>(g)];
    const auto i = static_cast<std::size_t>(d % 8);
    DeviceProfile p;
    p.name = std::string(h.kind) + "-" + std::to_string(cycle * 2 + member + 1);
    p.mac = mac_from(derive_seed(seed, "device-mac", static_cast<std::uint64_t>(d)));
    p.group = g + 4 * cycle;
    p.ttl = ttl[i];
    p.df = df[i];
    p.ip_id_mode = id_mode[i];
    p.window_base = win[i] + 97 * cycle;
    p.window_step = step[i];
    p.mss = mss[i] - 4 * cycle;
    p.wscale = h.wscale ? ws[i] : -1;
    p.sack_perm = h.sack;
    p.timestamps = h.timestamps;
    p.ntp_version = vn[i];
    p.ntp_poll = poll[i] + cycle;
    p.ntp_precision = prec[i] - cycle;
    p.udp_checksum = udp_sum[i];
    p.mix = h.mix;
    p.payload_mean = h.payload_mean + 37 * cycle;
    p.payload_sd = h.payload_sd;
    p.response_mean = h.response_mean;
    p.rounds = h.rounds;
    p.service_port = h.port;
    p.http = h.http;
    p.close = h.close;
    for (const auto& nm : h.names) p.dns_names.push_back(cycle ? "c" + std::to_string(cycle) + nm : nm);
    p.ssdp_target = h.ssdp;
    out.push_back(std::move(p));
  }
  return out;
}

std::array<EnvironmentProfile, 2> default_environments(int n, std::uint64_t seed) {
  if (n < 4) throw InputError("the generator needs at least 4 devices");
  std::array<EnvironmentProfile, 2> e;
  e[0].name = "envA";
  e[1].name = "envB";
  e[1].iat_scale = 1.3;
  e[1].gateway_latency = 0.012;
  e[1].flow_multiplier = 1.5;
  e[1].response_scale = 1.6;
  e[1].answers = 3;
  e[1].noise_devices = 3;
  e[1].subnet = {10, 0, 0};
  e[1].server_window = 29200;
  const auto un = static_cast<std::size_t>(n);
  auto ladder = [&](const char* name, double base, double ratio, std::size_t shift) {
    std::vector<std::size_t> perm(un);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng = make_rng(seed, name);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::array<std::vector<double>, 2> v;
    for (std::size_t d = 0; d < un; ++d) {
      v[0].push_back(base * std::pow(ratio, static_cast<double>(perm[d])));
      v[1].push_back(base * std::pow(ratio, static_cast<double>((perm[d] + shift) % un)));
    }
    return v;
  };
  auto gap = ladder("gap-ladder", 1.5, 1.45, un / 2);
  auto rtt = ladder("rtt-ladder", 0.004, 1.6, std::max<std::size_t>(1, un / 2 - 1));
  auto think = ladder("think-ladder", 0.05, 1.55, un / 2 + 1 < un ? un / 2 + 1 : 1);
  for (int k = 0; k < 2; ++k) {
    e[static_cast<std::size_t>(k)].gap = gap[static_cast<std::size_t>(k)];
    e[static_cast<std::size_t>(k)].rtt = rtt[static_cast<std::size_t>(k)];
    e[static_cast<std::size_t>(k)].think = think[static_cast<std::size_t>(k)];
  }
  return e;
}

std::vector<DeviceProfile> plant_confounder(std::vector<DeviceProfile> devices, double strength) {
  if (!(strength >= 0 && strength <= 1)) throw InputError("confounder strength must be in [0, 1]");
  const std::size_t n = devices.size();
  const std::size_t shift = std::max<std::size_t>(1, n / 2 - 1);
  for (std::size_t d = 0; d < n; ++d) {
    auto& p = devices[d];
    p.confound = strength;
    if (strength == 0) {
      p.env_dscp = {0, 0};
      p.env_port = {0, 0};
      continue;
    }
    auto dscp = [](std::size_t i) { return static_cast<int>(8 + 2 * (i % 28)); };
    auto port = [](std::size_t i) { return static_cast<std::uint16_t>(9000 + 37 * i); };
    p.env_dscp = {dscp(d), dscp((d + shift) % n)};
    p.env_port = {port(d), port((d + shift) % n)};
  }
  return devices;
}

SynthResult generate(const std::vector<DeviceProfile>& devices, const std::array<EnvironmentProfile, 2>& envs,
                     const SynthConfig& cfg, const std::filesystem::path& dir) {
  if (devices.size() < 4) throw InputError("the generator needs at least 4 devices");
  if (cfg.packets < 1) throw InputError("packets per device must be positive");
  if (cfg.sessions_per_env < 1) throw InputError("sessions per environment must be positive");
  std::set<MacAddress> macs;
  for (const auto& d : devices)
    if (!macs.insert(d.mac).second) throw InputError("MAC collision on " + d.mac.to_string());
  for (const auto& e : envs)
    if (e.gap.size() < devices.size() || e.rtt.size() < devices.size() || e.think.size() < devices.size())
      throw InputError("environment '" + e.name + "' lacks timing for every device");
  std::filesystem::create_directories(dir);

  SynthResult res;
  const int quota = (cfg.packets + cfg.sessions_per_env - 1) / cfg.sessions_per_env;
  std::vector<std::pair<int, int>> jobs;
  for (int e = 0; e < 2; ++e)
    for (int s = 0; s < cfg.sessions_per_env; ++s) jobs.emplace_back(e, s);
  for (const auto& [e, s] : jobs) {
    const auto& env = envs[static_cast<std::size_t>(e)];
    const std::string stem = env.name + "-s" + std::to_string(s + 1);
    res.sessions.push_back({dir / (stem + ".pcap"), env.name, stem});
  }
  parallel_for(jobs.size(), [&](std::size_t j) {
    const auto [e, s] = jobs[j];
    const auto& env = envs[static_cast<std::size_t>(e)];
    const double start = 1700000000.0 + 1000000.0 * e + 100000.0 * s;
    SessionWriter w(devices, env, e, start, derive_seed(cfg.seed, "synth-session", j));
    for (std::size_t d = 0; d < devices.size(); ++d) w.device(d, quota);
    const double until = w.end_time();
    for (int i = 0; i < env.noise_devices; ++i) w.noise(i, until);
    PcapWriter out(res.sessions[j].pcap);
    for (const auto& ev : w.take()) out.write(Timestamp{ev.micros}, ev.bytes);
    out.close();
  });

  LabelMap labels;
  for (const auto& d : devices) labels.add(d.mac, d.name);
  res.labels = dir / "labels.csv";
  labels.save_csv(res.labels);

  res.invariant = planted_invariant_features();
  double strength = 0;
  for (const auto& d : devices) strength = std::max(strength, d.confound);
  if (strength > 0) res.confounded = planted_confounded_features();

  nlohmann::ordered_json j;
  j["seed"] = cfg.seed;
  j["packets_per_device"] = cfg.packets;
  j["sessions_per_env"] = cfg.sessions_per_env;
  j["confounder_strength"] = strength;
  auto& dj = j["devices"] = nlohmann::ordered_json::array();
  for (const auto& d : devices)
    dj.push_back({{"name", d.name}, {"mac", d.mac.to_string()}, {"group", d.group}, {"ttl", d.ttl},
                  {"df", d.df}, {"window_base", d.window_base}});
  auto& sj = j["sessions"] = nlohmann::ordered_json::array();
  for (const auto& s : res.sessions)
    sj.push_back({{"file", s.pcap.filename().string()}, {"family", s.family}, {"session", s.session}});
  j["invariant"] = res.invariant;
  j["confounded"] = res.confounded;
  res.ground_truth = dir / "ground_truth.json";
  std::ofstream gt(res.ground_truth, std::ios::binary);
  if (!gt) throw InputError("cannot write " + res.ground_truth.string());
  gt << j.dump(2) << "\n";
  return res;
}

SynthResult synthesize(const SynthConfig& cfg, const std::filesystem::path& dir) {
  auto devices = plant_confounder(default_devices(cfg.devices, cfg.seed), cfg.confounder);
  return generate(devices, default_environments(cfg.devices, cfg.seed), cfg, dir);
}

}  // namespace gemid
