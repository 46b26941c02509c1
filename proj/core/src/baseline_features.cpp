#include "gemid/baseline_features.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "gemid/error.hpp"
#include "gemid/text.hpp"

namespace gemid {

// ---------------------------------------------------------------------------
// Flows

FlowKey FlowKey::of(const IpLayer& ip, std::uint16_t sport, std::uint16_t dport) {
  FlowKey k;
  k.proto = ip.proto;
  const auto a = std::tie(ip.src, sport);
  const auto b = std::tie(ip.dst, dport);
  if (a <= b) {
    k.lo_ip = ip.src, k.lo_port = sport, k.hi_ip = ip.dst, k.hi_port = dport;
  } else {
    k.lo_ip = ip.dst, k.lo_port = dport, k.hi_ip = ip.src, k.hi_port = sport;
  }
  return k;
}

void RunningStat::add(double v) {
  if (n == 0) {
    min = max = v;
  } else {
    min = std::min(min, v);
    max = std::max(max, v);
  }
  ++n;
  sum += v;
  const double d = v - mean_;
  mean_ += d / static_cast<double>(n);
  m2 += d * (v - mean_);
}

double RunningStat::std() const { return std::sqrt(std::max(var(), 0.0)); }

namespace {

constexpr std::uint16_t kFin = 0x01, kSyn = 0x02, kRst = 0x04, kPsh = 0x08, kAck = 0x10,
                        kUrg = 0x20;

void count_flags(FlowDirection& d, std::uint16_t f) {
  d.fin += (f & kFin) != 0;
  d.syn += (f & kSyn) != 0;
  d.rst += (f & kRst) != 0;
  d.psh += (f & kPsh) != 0;
  d.ack += (f & kAck) != 0;
  d.urg += (f & kUrg) != 0;
}

double seconds_between(Timestamp a, Timestamp b) { return (b.micros - a.micros) / 1e6; }

}  // namespace

void FlowAccumulator::add(const FlowPacket& p) {
  if (!started_) {
    started_ = true;
    start_ = end_ = active_start_ = active_end_ = p.ts;
  } else {
    if (p.ts < end_) throw OutOfOrderError("flow packet precedes the previous one");
    flow_iat_.add(seconds_between(end_, p.ts));
    const double gap = seconds_between(active_end_, p.ts);
    if (gap > activity_timeout_) {
      const double act = seconds_between(active_start_, active_end_);
      if (act > 0) active_.add(act);
      idle_.add(gap);
      active_start_ = active_end_ = p.ts;
    } else {
      active_end_ = p.ts;
    }
    end_ = p.ts;
  }
  auto& dir = p.forward ? fwd_ : bwd_;
  if (dir.packets > 0) dir.iat.add(seconds_between(dir.last, p.ts));
  ++dir.packets;
  dir.last = p.ts;
  dir.length.add(p.payload_len);
  dir.header_bytes += p.header_len;
  if (dir.init_window < 0 && p.window >= 0) dir.init_window = p.window;
  count_flags(dir, p.tcp_flags);
  all_len_.add(p.payload_len);
}

void FlowAccumulator::finish() {
  const double act = seconds_between(active_start_, active_end_);
  if (act > 0) active_.add(act);
  active_start_ = active_end_;
}

const FeatureSchema& flow_schema() {
  static const FeatureSchema schema = [] {
    static constexpr const char* kNames[] = {
        "ACK Flag Cnt",     "Active Max",       "Active Mean",      "Active Min",
        "Active Std",       "Bwd Header Len",   "Bwd IAT Max",      "Bwd IAT Mean",
        "Bwd IAT Min",      "Bwd IAT Std",      "Bwd IAT Tot",      "Bwd Pkt Len Mean",
        "Bwd Pkt Len Min",  "Bwd Pkts/s",       "FIN Flag Cnt",     "Flow Byts/s",
        "Flow Duration",    "Flow IAT Max",     "Flow IAT Mean",    "Flow IAT Min",
        "Flow IAT Std",     "Fwd Header Len",   "Fwd IAT Max",      "Fwd IAT Mean",
        "Fwd IAT Min",      "Fwd IAT Std",      "Fwd IAT Tot",      "Fwd Pkt Len Max",
        "Fwd Pkt Len Mean", "Fwd Pkt Len Min",  "Fwd Pkt Len Std",  "Fwd Pkts/s",
        "Idle Max",         "Idle Mean",        "Idle Min",         "Idle Std",
        "Init Bwd Win Byts", "Pkt Len Max",     "Pkt Len Mean",     "Pkt Len Min",
        "Pkt Len Std",      "Pkt Len Var",      "Pkt Size Avg",     "Protocol",
        "Src Port",         "Subflow Bwd Byts", "Subflow Fwd Byts", "Subflow Fwd Pkts",
        "Tot Bwd Pkts",     "Tot Fwd Pkts",     "TotLen Bwd Pkts",  "TotLen Fwd Pkts"};
    std::vector<FeatureDescriptor> ds;
    for (const char* n : kNames) {
      const std::string_view sv(n);
      const auto kind = (sv == "Protocol" || sv == "Src Port") ? FeatureKind::Categorical
                                                               : FeatureKind::Numeric;
      ds.push_back({n, Protocol::FLOW, kind, std::nullopt});
    }
    return FeatureSchema("flow", std::move(ds));
  }();
  return schema;
}

std::vector<double> flow_feature_vector(const FlowAccumulator& a, std::uint8_t proto,
                                        std::uint16_t src_port) {
  const double dur = a.duration();
  const auto rate = [dur](double x) { return dur > 0 ? x / dur : 0.0; };
  const auto& f = a.fwd();
  const auto& b = a.bwd();
  const double fwd_bytes = f.length.total(), bwd_bytes = b.length.total();
  const auto n = static_cast<double>(a.packets());
  // Same order as flow_schema().
  return {
      static_cast<double>(f.ack + b.ack),
      a.active().max, a.active().mean(), a.active().min, a.active().std(),
      static_cast<double>(b.header_bytes),
      b.iat.max, b.iat.mean(), b.iat.min, b.iat.std(), b.iat.total(),
      b.length.mean(), b.length.min,
      rate(static_cast<double>(b.packets)),
      static_cast<double>(f.fin + b.fin),
      rate(fwd_bytes + bwd_bytes),
      dur,
      a.iat().max, a.iat().mean(), a.iat().min, a.iat().std(),
      static_cast<double>(f.header_bytes),
      f.iat.max, f.iat.mean(), f.iat.min, f.iat.std(), f.iat.total(),
      f.length.max, f.length.mean(), f.length.min, f.length.std(),
      rate(static_cast<double>(f.packets)),
      a.idle().max, a.idle().mean(), a.idle().min, a.idle().std(),
      static_cast<double>(b.init_window),
      a.length().max, a.length().mean(), a.length().min, a.length().std(), a.length().var(),
      n > 0 ? (fwd_bytes + bwd_bytes) / n : 0.0,
      static_cast<double>(proto),
      static_cast<double>(src_port),
      bwd_bytes, fwd_bytes, static_cast<double>(f.packets),
      static_cast<double>(b.packets), static_cast<double>(f.packets),
      bwd_bytes, fwd_bytes,
  };
}

namespace {

struct OpenFlow {
  FlowAccumulator acc;
  std::array<std::uint8_t, 16> fwd_ip{};
  std::uint16_t fwd_port = 0;
  MacAddress fwd_mac;
  std::uint8_t proto = 0;
  std::uint64_t first_frame = 0;
  Timestamp last;
  bool fin_fwd = false, fin_bwd = false;
};

}  // namespace

std::vector<FlowResult> flow_extract(std::span<const RawPacket> packets, const LabelMap& labels,
                                     const FlowConfig& cfg) {
  std::map<FlowKey, OpenFlow> open;
  std::vector<FlowResult> out;
  const auto idle_us = static_cast<std::int64_t>(cfg.idle_timeout * 1e6);

  auto close = [&](const FlowKey& key, OpenFlow& f) {
    f.acc.finish();
    if (auto dev = labels.lookup(f.fwd_mac)) {
      FlowResult r;
      r.key = key;
      r.values = flow_feature_vector(f.acc, f.proto, f.fwd_port);
      r.label = std::string(*dev);
      r.forward_source = f.fwd_mac;
      r.start = f.acc.start();
      r.first_frame = f.first_frame;
      r.src_port = f.fwd_port;
      out.push_back(std::move(r));
    }
  };

  for (std::size_t i = 0; i < packets.size(); ++i) {
    const auto& raw = packets[i];
    if (raw.bytes.size() < 14) continue;
    const Dissection d = dissect(raw);
    if (!d.ip) continue;
    const std::uint16_t sport = d.srcport().value_or(0), dport = d.dstport().value_or(0);
    const FlowKey key = FlowKey::of(*d.ip, sport, dport);

    auto it = open.find(key);
    if (it != open.end() && raw.ts.micros - it->second.last.micros > idle_us) {
      close(key, it->second);
      open.erase(it);
      it = open.end();
    }
    if (it == open.end()) {
      OpenFlow f{FlowAccumulator(cfg.activity_timeout)};
      f.fwd_ip = d.ip->src;
      f.fwd_port = sport;
      f.fwd_mac = d.eth.src;
      f.proto = d.ip->proto;
      f.first_frame = i + 1;
      it = open.emplace(key, std::move(f)).first;
    }
    OpenFlow& f = it->second;
    FlowPacket p;
    p.ts = raw.ts;
    p.forward = d.ip->src == f.fwd_ip && sport == f.fwd_port;
    if (d.tcp) {
      p.payload_len = d.tcp->payload_len;
      p.header_len = d.tcp->hdr_len;
      p.tcp_flags = d.tcp->flags;
      p.window = d.tcp->window;
    } else if (d.udp) {
      p.payload_len = d.udp->payload_len;
      p.header_len = 8;
    } else {
      p.payload_len = d.ip->payload_len;
    }
    f.acc.add(p);
    f.last = raw.ts;

    if (d.tcp) {
      if (d.tcp->flags & kFin) (p.forward ? f.fin_fwd : f.fin_bwd) = true;
      if ((d.tcp->flags & kRst) || (f.fin_fwd && f.fin_bwd)) {
        close(key, f);
        open.erase(it);
      }
    }
  }
  for (auto& [key, f] : open) close(key, f);
  std::sort(out.begin(), out.end(),
            [](const FlowResult& a, const FlowResult& b) { return a.first_frame < b.first_frame; });
  return out;
}

// ---------------------------------------------------------------------------
// Damped statistics

void DampedStat::decay(double t) {
  if (!started_) {
    started_ = true;
    last_ = t;
    return;
  }
  if (t < last_) throw OutOfOrderError("damped statistic updated with an earlier timestamp");
  const double d = std::exp2(-lambda_ * (t - last_));
  w_ *= d;
  ls_ *= d;
  ss_ *= d;
  last_ = t;
}

void DampedStat::insert(double v, double t) {
  decay(t);
  w_ += 1;
  ls_ += v;
  ss_ += v * v;
}

double DampedStat::var() const {
  if (w_ <= 0) return 0.0;
  const double m = ls_ / w_;
  return std::max(ss_ / w_ - m * m, 0.0);
}

double DampedStat::std() const { return std::sqrt(var()); }

double damped_magnitude(double mean_i, double mean_j) {
  return std::sqrt(mean_i * mean_i + mean_j * mean_j);
}

double damped_radius(double var_i, double var_j) { return std::sqrt(var_i * var_i + var_j * var_j); }

void DampedCov::update(int side, double residual, double t) {
  if (started_) {
    if (t < last_) throw OutOfOrderError("covariance updated with an earlier timestamp");
    const double d = std::exp2(-lambda_ * (t - last_));
    cf_ *= d;
    w_ *= d;
  }
  started_ = true;
  last_ = t;
  cf_ += residual * last_res_[1 - side];
  w_ += 1;
  last_res_[side] = residual;
}

WindowExtractor::WindowExtractor(std::vector<double> lambdas) : lambdas_(std::move(lambdas)) {
  if (lambdas_.empty()) throw InputError("window extractor needs at least one decay rate");
}

void WindowExtractor::reset() {
  mi_.clear();
  hh_.clear();
  jit_.clear();
  hphp_.clear();
  pairs_.clear();
}

WindowExtractor::Stream1D& WindowExtractor::stream(std::unordered_map<std::string, Stream1D>& m,
                                                   const std::string& key) {
  auto it = m.find(key);
  if (it == m.end()) {
    Stream1D s;
    for (double l : lambdas_) s.stats.emplace_back(l);
    s.last_residual.assign(lambdas_.size(), 0.0);
    it = m.emplace(key, std::move(s)).first;
  }
  return it->second;
}

void WindowExtractor::emit_1d(std::vector<double>& out, Stream1D& s, double v, double t) {
  for (auto& st : s.stats) {
    st.insert(v, t);
    out.push_back(st.weight());
    out.push_back(st.mean());
    out.push_back(st.std());
  }
}

void WindowExtractor::emit_2d(std::vector<double>& out,
                              std::unordered_map<std::string, Stream1D>& m, const std::string& key,
                              const std::string& reverse, double v, double t) {
  Stream1D& si = stream(m, key);
  const auto rit = m.find(reverse);
  const Stream1D* sj = (rit != m.end() && reverse != key) ? &rit->second : nullptr;

  const bool lower = key < reverse;
  const std::string pair_key = lower ? key + "|" + reverse : reverse + "|" + key;
  auto pit = pairs_.find(pair_key);
  if (pit == pairs_.end()) {
    Pair p;
    for (double l : lambdas_) p.cov.emplace_back(l);
    pit = pairs_.emplace(pair_key, std::move(p)).first;
  }
  for (std::size_t k = 0; k < lambdas_.size(); ++k) {
    auto& st = si.stats[k];
    st.insert(v, t);
    const double residual = v - st.mean();
    auto& cov = pit->second.cov[k];
    cov.update(lower ? 0 : 1, residual, t);

    const double mean_j = sj ? sj->stats[k].mean() : 0.0;
    const double var_j = sj ? sj->stats[k].var() : 0.0;
    const double c = sj ? cov.cov() : 0.0;
    const double denom = st.std() * std::sqrt(var_j);
    double pcc = denom > 0 ? c / denom : 0.0;
    pcc = std::clamp(pcc, -1.0, 1.0);

    out.push_back(st.weight());
    out.push_back(st.mean());
    out.push_back(st.std());
    out.push_back(damped_radius(st.var(), var_j));
    out.push_back(damped_magnitude(st.mean(), mean_j));
    out.push_back(c);
    out.push_back(pcc);
  }
}

std::vector<double> WindowExtractor::update(const Dissection& d, Timestamp ts) {
  const double t = ts.seconds();
  const double size = d.eth.frame_len;
  std::string src_addr, dst_addr;
  if (d.ip) {
    src_addr = d.ip->src_text();
    dst_addr = d.ip->dst_text();
  } else {
    src_addr = d.eth.src.to_string();
    dst_addr = d.eth.dst.to_string();
  }
  const auto sport = std::to_string(d.srcport().value_or(0));
  const auto dport = std::to_string(d.dstport().value_or(0));

  std::vector<double> out;
  out.reserve(width());

  emit_1d(out, stream(mi_, d.eth.src.to_string() + "/" + src_addr), size, t);

  emit_2d(out, hh_, src_addr + ">" + dst_addr, dst_addr + ">" + src_addr, size, t);

  Stream1D& jit = stream(jit_, src_addr + ">" + dst_addr);
  const double gap = jit.last_seen < 0 ? 0.0 : t - jit.last_seen;
  jit.last_seen = t;
  emit_1d(out, jit, gap, t);

  emit_2d(out, hphp_, src_addr + ":" + sport + ">" + dst_addr + ":" + dport,
          dst_addr + ":" + dport + ">" + src_addr + ":" + sport, size, t);
  return out;
}

const FeatureSchema& window_schema() {
  static const FeatureSchema schema = [] {
    static constexpr const char* kLambdas[] = {"5", "3", "1", "0.1", "0.01"};
    std::vector<FeatureDescriptor> ds;
    auto add = [&](std::string name) {
      ds.push_back({std::move(name), Protocol::WINDOW, FeatureKind::Numeric, std::nullopt});
    };
    for (const char* l : kLambdas)
      for (const char* s : {"weight", "mean", "std"}) add(std::string("MI_dir_") + l + "_" + s);
    for (const char* l : kLambdas)
      for (const char* s : {"weight_0", "mean_0", "std_0", "radius_0_1", "magnitude_0_1",
                            "covariance_0_1", "pcc_0_1"})
        add(std::string("HH_") + l + "_" + s);
    for (const char* l : kLambdas)
      for (const char* s : {"weight", "mean", "std"}) add(std::string("HH_jit_") + l + "_" + s);
    for (const char* l : kLambdas)
      for (const char* s : {"weight_0", "mean_0", "std_0", "radius_0_1", "magnitude_0_1",
                            "covariance_0_1", "pcc_0_1"})
        add(std::string("HpHp_") + l + "_" + s);
    return FeatureSchema("window", std::move(ds));
  }();
  return schema;
}

}  // namespace gemid
