#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <json.hpp>

#include "gemid/baseline_features.hpp"
#include "gemid/dissect.hpp"
#include "gemid/error.hpp"
#include "gemid/pcap.hpp"
#include "gemid/synth.hpp"
#include "test_util.hpp"

using namespace gemid;
using testutil::fixture;

namespace {

double flow_value(const FlowResult& f, const std::string& name) {
  const auto i = flow_schema().find(name);
  EXPECT_TRUE(i.has_value()) << name;
  return f.values[*i];
}

// Minimal Ethernet/IPv4/TCP frame; checksums left zero.
RawPacket tcp_frame(std::uint8_t src_host, std::uint8_t dst_host, std::uint16_t sport, std::uint16_t dport,
                    std::uint8_t flags, std::size_t payload, double t) {
  std::vector<std::uint8_t> b(14 + 20 + 20 + payload, 0);
  const std::uint8_t dst_mac[6] = {2, 0, 0, 0, 0, dst_host}, src_mac[6] = {2, 0, 0, 0, 0, src_host};
  std::copy(dst_mac, dst_mac + 6, b.begin());
  std::copy(src_mac, src_mac + 6, b.begin() + 6);
  b[12] = 0x08;
  auto* ip = b.data() + 14;
  ip[0] = 0x45;
  const auto ip_len = static_cast<std::uint16_t>(40 + payload);
  ip[2] = ip_len >> 8;
  ip[3] = ip_len & 0xff;
  ip[8] = 64;
  ip[9] = 6;
  ip[12] = 10, ip[15] = src_host;
  ip[16] = 10, ip[19] = dst_host;
  auto* tcp = ip + 20;
  tcp[0] = sport >> 8, tcp[1] = sport & 0xff;
  tcp[2] = dport >> 8, tcp[3] = dport & 0xff;
  tcp[12] = 5 << 4;
  tcp[13] = flags;
  tcp[14] = 0x10;
  RawPacket p;
  p.bytes = std::move(b);
  p.origlen = static_cast<std::uint32_t>(p.bytes.size());
  p.ts = Timestamp{static_cast<std::int64_t>(std::llround(t * 1e6))};
  return p;
}

LabelMap two_hosts() {
  LabelMap m;
  m.add(MacAddress::parse("02:00:00:00:00:0a"), "a");
  m.add(MacAddress::parse("02:00:00:00:00:0b"), "b");
  return m;
}

constexpr std::uint8_t kAck = 0x10, kFin = 0x01, kRst = 0x04;

}  // namespace

TEST(Flow, ThreePacketHandCase) {
  const auto e = nlohmann::json::parse(testutil::slurp(fixture("expected.json")))["flow3"];
  const auto pk = read_pcap(fixture("flow3.pcap"));
  const auto flows = flow_extract(pk, LabelMap::load_csv(fixture("labels.csv")));
  ASSERT_EQ(flows.size(), 1u);
  const auto& f = flows[0];
  EXPECT_EQ(f.label, "device-a");
  EXPECT_DOUBLE_EQ(flow_value(f, "Flow Duration"), e["duration"].get<double>());
  EXPECT_DOUBLE_EQ(flow_value(f, "Fwd IAT Mean"), e["fwd_iat_mean"].get<double>());
  EXPECT_DOUBLE_EQ(flow_value(f, "Flow IAT Mean"), e["fwd_iat_mean"].get<double>());
  EXPECT_DOUBLE_EQ(flow_value(f, "Pkt Len Mean"), e["pkt_len_mean"].get<double>());
  EXPECT_DOUBLE_EQ(flow_value(f, "Tot Fwd Pkts"), e["tot_fwd_pkts"].get<double>());
  EXPECT_DOUBLE_EQ(flow_value(f, "Tot Bwd Pkts"), e["tot_bwd_pkts"].get<double>());
  EXPECT_DOUBLE_EQ(flow_value(f, "TotLen Fwd Pkts"), e["totlen_fwd"].get<double>());
  EXPECT_DOUBLE_EQ(flow_value(f, "Fwd Pkt Len Max"), 300);
  EXPECT_DOUBLE_EQ(flow_value(f, "Fwd Pkt Len Min"), 100);
  EXPECT_DOUBLE_EQ(flow_value(f, "Fwd Pkt Len Std"), 100);  // sample std of 100,200,300
  EXPECT_DOUBLE_EQ(flow_value(f, "Protocol"), 6);
  EXPECT_DOUBLE_EQ(flow_value(f, "Src Port"), 40000);
  EXPECT_EQ(f.first_frame, 1u);
}

TEST(Flow, SinglePacketFlow) {
  const auto pk = read_pcap(fixture("three_packets.pcap"));
  const auto flows = flow_extract(std::span(pk).first(1), LabelMap::load_csv(fixture("labels.csv")));
  ASSERT_EQ(flows.size(), 1u);
  EXPECT_EQ(flow_value(flows[0], "Flow Duration"), 0);
  EXPECT_EQ(flow_value(flows[0], "Flow IAT Mean"), 0);
  EXPECT_EQ(flow_value(flows[0], "Tot Fwd Pkts"), 1);
  EXPECT_EQ(flow_value(flows[0], "Tot Bwd Pkts"), 0);
  for (double v : flows[0].values) EXPECT_TRUE(std::isfinite(v));
}

TEST(Flow, InterleavedFlowsStaySeparate) {
  std::vector<RawPacket> pk = {
      tcp_frame(0x0a, 0x01, 1000, 443, kAck, 10, 0.0), tcp_frame(0x0b, 0x01, 2000, 80, kAck, 50, 0.5),
      tcp_frame(0x0a, 0x01, 1000, 443, kAck, 30, 1.0), tcp_frame(0x0b, 0x01, 2000, 80, kAck, 70, 2.5),
  };
  const auto flows = flow_extract(pk, two_hosts());
  ASSERT_EQ(flows.size(), 2u);
  EXPECT_EQ(flows[0].label, "a");
  EXPECT_EQ(flows[1].label, "b");
  EXPECT_DOUBLE_EQ(flow_value(flows[0], "Flow Duration"), 1.0);
  EXPECT_DOUBLE_EQ(flow_value(flows[0], "Pkt Len Mean"), 20);
  EXPECT_DOUBLE_EQ(flow_value(flows[1], "Flow Duration"), 2.0);
  EXPECT_DOUBLE_EQ(flow_value(flows[1], "Pkt Len Mean"), 60);
}

TEST(Flow, DirectionFollowsFirstPacket) {
  std::vector<RawPacket> pk = {tcp_frame(0x0a, 0x01, 1000, 443, kAck, 10, 0.0),
                               tcp_frame(0x01, 0x0a, 443, 1000, kAck, 90, 0.25),
                               tcp_frame(0x01, 0x0a, 443, 1000, kAck, 110, 0.5)};
  const auto flows = flow_extract(pk, two_hosts());
  ASSERT_EQ(flows.size(), 1u);
  EXPECT_EQ(flow_value(flows[0], "Tot Fwd Pkts"), 1);
  EXPECT_EQ(flow_value(flows[0], "Tot Bwd Pkts"), 2);
  EXPECT_EQ(flow_value(flows[0], "TotLen Bwd Pkts"), 200);
  EXPECT_EQ(flow_value(flows[0], "Bwd Pkt Len Mean"), 100);
  EXPECT_DOUBLE_EQ(flow_value(flows[0], "Bwd IAT Mean"), 0.25);

  // Same conversation opened by the unlabeled side: no flow is emitted.
  std::vector<RawPacket> rev = {pk[1], pk[0]};
  rev[1].ts = Timestamp{1'000'000};
  EXPECT_TRUE(flow_extract(rev, two_hosts()).empty());
}

TEST(Flow, TerminationRules) {
  // FIN from both sides closes; the next packet opens a new flow.
  std::vector<RawPacket> fin = {
      tcp_frame(0x0a, 0x01, 1000, 443, kAck, 10, 0.0), tcp_frame(0x0a, 0x01, 1000, 443, kFin | kAck, 0, 0.1),
      tcp_frame(0x01, 0x0a, 443, 1000, kFin | kAck, 0, 0.2), tcp_frame(0x0a, 0x01, 1000, 443, kAck, 5, 0.3)};
  EXPECT_EQ(flow_extract(fin, two_hosts()).size(), 2u);
  // RST closes at once.
  std::vector<RawPacket> rst = {tcp_frame(0x0a, 0x01, 1000, 443, kRst, 0, 0.0),
                                tcp_frame(0x0a, 0x01, 1000, 443, kAck, 0, 0.1)};
  EXPECT_EQ(flow_extract(rst, two_hosts()).size(), 2u);
  // Idle gap beyond the timeout splits.
  std::vector<RawPacket> idle = {tcp_frame(0x0a, 0x01, 1000, 443, kAck, 1, 0.0),
                                 tcp_frame(0x0a, 0x01, 1000, 443, kAck, 1, 10.0)};
  EXPECT_EQ(flow_extract(idle, two_hosts(), FlowConfig{5.0, 1.0}).size(), 2u);
  EXPECT_EQ(flow_extract(idle, two_hosts(), FlowConfig{120.0, 5.0}).size(), 1u);
}

TEST(Flow, KeyIsDirectionless) {
  const auto a = dissect(tcp_frame(0x0a, 0x01, 1000, 443, kAck, 0, 0));
  const auto b = dissect(tcp_frame(0x01, 0x0a, 443, 1000, kAck, 0, 0));
  EXPECT_EQ(FlowKey::of(*a.ip, 1000, 443), FlowKey::of(*b.ip, 443, 1000));
  EXPECT_NE(FlowKey::of(*a.ip, 1000, 443), FlowKey::of(*a.ip, 1001, 443));
}

TEST(Flow, SchemaShape) {
  EXPECT_EQ(flow_schema().active_count(), flow_schema().descriptors().size());
  EXPECT_EQ(flow_schema().family(), "flow");
}

TEST(Damped, TwoValuesAtOneInstant) {
  DampedStat s(1.0);
  s.insert(2, 0);
  s.insert(4, 0);
  EXPECT_DOUBLE_EQ(s.weight(), 2);
  EXPECT_DOUBLE_EQ(s.mean(), 3);
  EXPECT_DOUBLE_EQ(s.var(), 1);
  EXPECT_DOUBLE_EQ(damped_magnitude(3, 4), 5);
  EXPECT_DOUBLE_EQ(damped_radius(3, 4), 5);
}

TEST(Damped, DecayHalvesPerUnitOfLambdaTime) {
  DampedStat s(1.0);
  s.insert(10, 0);
  s.decay(1);
  EXPECT_DOUBLE_EQ(s.weight(), 0.5);
  EXPECT_DOUBLE_EQ(s.mean(), 10);  // decay preserves the mean
  DampedStat slow(0.01);
  slow.insert(1, 0);
  slow.decay(100);
  EXPECT_DOUBLE_EQ(slow.weight(), 0.5);
  EXPECT_THROW(s.decay(0.5), OutOfOrderError);
}

TEST(Damped, NoElapsedTimeMatchesPlainMoments) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(5, 2);
  DampedStat s(3.0);
  std::vector<double> xs;
  for (int i = 0; i < 200; ++i) {
    xs.push_back(n(rng));
    s.insert(xs.back(), 12.5);
  }
  double mean = 0;
  for (double x : xs) mean += x;
  mean /= xs.size();
  double var = 0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= xs.size();
  EXPECT_DOUBLE_EQ(s.weight(), 200);
  EXPECT_NEAR(s.mean(), mean, 1e-12);
  EXPECT_NEAR(s.var(), var, 1e-9);
}

TEST(Window, WidthDeterminismAndReset) {
  testutil::TempDir tmp("window");
  SynthConfig cfg;
  cfg.devices = 4;
  cfg.packets = 120;
  cfg.sessions_per_env = 1;
  const auto r = synthesize(cfg, tmp.path());
  const auto pk = read_pcap(r.sessions[0].pcap);
  WindowExtractor a, b;
  EXPECT_EQ(a.width(), window_schema().active_count());
  std::vector<std::vector<double>> first;
  for (const auto& p : pk) first.push_back(a.update(dissect(p), p.ts));
  for (std::size_t i = 0; i < pk.size(); ++i) ASSERT_EQ(b.update(dissect(pk[i]), pk[i].ts), first[i]);
  a.reset();
  for (std::size_t i = 0; i < pk.size(); ++i) ASSERT_EQ(a.update(dissect(pk[i]), pk[i].ts), first[i]);

  // Correlation outputs stay within [-1, 1]; every output is finite.
  std::vector<std::size_t> pcc;
  for (std::size_t i = 0; i < window_schema().descriptors().size(); ++i)
    if (window_schema().descriptors()[i].name.find("_pcc_") != std::string::npos) pcc.push_back(i);
  ASSERT_FALSE(pcc.empty());
  for (const auto& row : first) {
    for (double v : row) ASSERT_TRUE(std::isfinite(v));
    for (auto i : pcc) {
      EXPECT_GE(row[i], -1 - 1e-9);
      EXPECT_LE(row[i], 1 + 1e-9);
    }
  }
}

TEST(Window, OutOfOrderTimestampThrows) {
  const auto pk = read_pcap(fixture("three_packets.pcap"));
  WindowExtractor w;
  w.update(dissect(pk[1]), pk[1].ts);
  EXPECT_THROW(w.update(dissect(pk[1]), pk[0].ts), OutOfOrderError);
}
