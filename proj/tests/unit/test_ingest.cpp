#include <gtest/gtest.h>

#include <json.hpp>

#include "gemid/error.hpp"
#include "gemid/extract.hpp"
#include "gemid/labels.hpp"
#include "gemid/parallel.hpp"
#include "gemid/partition.hpp"
#include "gemid/pcap.hpp"
#include "test_util.hpp"

using namespace gemid;
using testutil::fixture;

namespace {

nlohmann::json expected() { return nlohmann::json::parse(testutil::slurp(fixture("expected.json"))); }

LabelMap fixture_labels() { return LabelMap::load_csv(fixture("labels.csv")); }

}  // namespace

TEST(Pcap, ReadsThreePacketsWithTimestamps) {
  const auto pk = read_pcap(fixture("three_packets.pcap"));
  const auto e = expected()["three_packets"];
  ASSERT_EQ(pk.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(pk[i].ts.micros, e["timestamps_us"][i].get<std::int64_t>());
    EXPECT_EQ(pk[i].caplen(), e["lengths"][i].get<std::uint32_t>());
    EXPECT_EQ(pk[i].origlen, pk[i].caplen());
  }
}

TEST(Pcap, SwappedAndNanosecondTwinsMatch) {
  const auto native = read_pcap(fixture("three_packets.pcap"));
  for (const char* twin : {"three_packets_swapped.pcap", "three_packets_nanos.pcap"}) {
    const auto other = read_pcap(fixture(twin));
    ASSERT_EQ(other.size(), native.size()) << twin;
    for (std::size_t i = 0; i < native.size(); ++i) {
      EXPECT_EQ(other[i].ts, native[i].ts) << twin;
      EXPECT_EQ(other[i].bytes, native[i].bytes) << twin;
    }
  }
}

TEST(Pcap, EmptyFileIsUnsupported) {
  EXPECT_THROW(read_pcap(fixture("empty.pcap")), UnsupportedFormatError);
}

TEST(Pcap, MissingFileIsNotFound) { EXPECT_THROW(read_pcap(fixture("nope.pcap")), NotFoundError); }

TEST(Pcap, TruncatedRecordReportsPacketsRead) {
  PcapReader r(fixture("truncated.pcap"));
  RawPacket p;
  std::size_t n = 0;
  try {
    while (r.next(p)) ++n;
    FAIL() << "expected PartialReadError";
  } catch (const PartialReadError& e) {
    EXPECT_EQ(e.packets_read(), expected()["three_packets"]["truncated_complete_packets"].get<std::size_t>());
    EXPECT_EQ(n, e.packets_read());
  }
}

TEST(Pcap, RejectsPcapngAndOtherLinkTypes) {
  testutil::TempDir tmp("pcap");
  {
    std::ofstream f(tmp / "ng.pcap", std::ios::binary);
    const unsigned char ng[] = {0x0a, 0x0d, 0x0d, 0x0a, 28, 0, 0, 0, 0x4d, 0x3c, 0x2b, 0x1a};
    f.write(reinterpret_cast<const char*>(ng), sizeof ng);
    f.write(std::string(16, '\0').data(), 16);
  }
  EXPECT_THROW(read_pcap(tmp / "ng.pcap"), UnsupportedFormatError);
  {
    auto bytes = testutil::slurp(fixture("three_packets.pcap"));
    bytes[20] = 105;  // 802.11
    std::ofstream(tmp / "wifi.pcap", std::ios::binary) << bytes;
  }
  EXPECT_THROW(read_pcap(tmp / "wifi.pcap"), UnsupportedFormatError);
}

TEST(Pcap, WriterRoundTrip) {
  testutil::TempDir tmp("pcapw");
  const auto pk = read_pcap(fixture("three_packets.pcap"));
  {
    PcapWriter w(tmp / "copy.pcap");
    for (const auto& p : pk) w.write(p);
  }
  EXPECT_EQ(testutil::slurp(tmp / "copy.pcap"), testutil::slurp(fixture("three_packets.pcap")));
}

TEST(Labels, ParseAndFormatMac) {
  const auto m = MacAddress::parse("02:00:00:00:00:AB");
  EXPECT_EQ(m.to_string(), "02:00:00:00:00:ab");
  EXPECT_THROW(MacAddress::parse("02:00:00:00:00"), InputError);
  EXPECT_THROW(MacAddress::parse("02-00-00-00-00-ab"), InputError);
  EXPECT_THROW(MacAddress::parse("zz:00:00:00:00:ab"), InputError);
}

TEST(Labels, DuplicateMacRejected) {
  LabelMap m;
  m.add(MacAddress::parse("02:00:00:00:00:01"), "a");
  EXPECT_THROW(m.add(MacAddress::parse("02:00:00:00:00:01"), "b"), InputError);
  EXPECT_THROW(m.add(MacAddress::parse("02:00:00:00:00:02"), ""), InputError);
}

TEST(Labels, CsvRoundTrip) {
  testutil::TempDir tmp("labels");
  const auto m = fixture_labels();
  m.save_csv(tmp / "l.csv");
  const auto back = LabelMap::load_csv(tmp / "l.csv");
  EXPECT_EQ(back.entries(), m.entries());
  EXPECT_THROW(LabelMap::load_csv(tmp / "missing.csv"), NotFoundError);
  std::ofstream(tmp / "bad.csv") << "address,name\n02:00:00:00:00:01,x\n";
  EXPECT_THROW(LabelMap::load_csv(tmp / "bad.csv"), InputError);
}

TEST(Labels, SourceMacOnly) {
  const auto pk = read_pcap(fixture("three_packets.pcap"));
  const auto r = label_packets(pk, fixture_labels());
  ASSERT_EQ(r.kept.size(), 2u);
  EXPECT_EQ(r.skipped, 1u);
  EXPECT_EQ(r.kept[0].device, "device-a");
  EXPECT_EQ(r.kept[1].device, "device-b");
  EXPECT_EQ(r.kept[0].frame, 1u);
  EXPECT_EQ(r.kept[1].frame, 2u);
}

TEST(Labels, EmptyMapSkipsEverything) {
  const auto pk = read_pcap(fixture("three_packets.pcap"));
  const auto r = label_packets(pk, LabelMap{});
  EXPECT_TRUE(r.kept.empty());
  EXPECT_EQ(r.skipped, 3u);
}

TEST(Labels, BroadcastDestinationKept) {
  // The third fixture frame goes to ff:ff:ff:ff:ff:ff; label its sender.
  auto labels = fixture_labels();
  labels.add(MacAddress::parse("02:00:00:00:00:ff"), "stranger");
  const auto pk = read_pcap(fixture("three_packets.pcap"));
  const auto r = label_packets(pk, labels);
  ASSERT_EQ(r.kept.size(), 3u);
  EXPECT_EQ(r.kept[2].device, "stranger");
}

TEST(Labels, ShortFramesCountedMalformed) {
  std::vector<RawPacket> pk(2);
  pk[0].bytes.assign(10, 0);
  pk[1] = read_pcap(fixture("three_packets.pcap"))[0];
  const auto r = label_packets(pk, fixture_labels());
  EXPECT_EQ(r.malformed, 1u);
  EXPECT_EQ(r.kept.size(), 1u);
  EXPECT_EQ(r.kept[0].frame, 2u);
}

namespace {

ExtractResult extract_fixture(const std::vector<std::string>& files, SchemaFamily fam = SchemaFamily::Header) {
  std::vector<CaptureSet> sets;
  for (const auto& f : files) sets.push_back({f, "fam", f, {fixture(f + ".pcap")}});
  ExtractOptions o;
  o.family = fam;
  return extract_partitions(sets, fixture_labels(), o);
}

}  // namespace

TEST(Partition, StoreLoadRoundTrip) {
  testutil::TempDir tmp("part");
  const auto r = extract_fixture({"three_packets"});
  ASSERT_EQ(r.partitions.size(), 1u);
  const auto& p = r.partitions[0];
  EXPECT_EQ(p.records.size(), 2u);
  store_partition(p, tmp / "p");
  EXPECT_EQ(load_partition(tmp / "p"), p);
}

TEST(Partition, EditedHashIsIncompatible) {
  testutil::TempDir tmp("parthash");
  const auto r = extract_fixture({"three_packets"});
  store_partition(r.partitions[0], tmp / "p");
  auto m = nlohmann::json::parse(testutil::slurp(tmp / "p" / "manifest.json"));
  m["schema_hash"] = "0000000000000000";
  std::ofstream(tmp / "p" / "manifest.json") << m.dump(2);
  EXPECT_THROW(load_partition(tmp / "p"), IncompatibleError);
}

TEST(Partition, MissingManifestIsNotFound) {
  testutil::TempDir tmp("partmiss");
  EXPECT_THROW(load_partition(tmp / "nothing"), NotFoundError);
}

TEST(Partition, MergeSessions) {
  const auto a = testutil::toy_partition("16-10-03", "AD", {"cam", "plug"}, 3, 1);
  const auto b = testutil::toy_partition("16-11-22", "AD", {"plug", "hub"}, 3, 2);
  const auto m = merge_sessions({a, b}, "DI-S1");
  EXPECT_EQ(m.name, "DI-S1");
  EXPECT_EQ(m.records.size(), a.records.size() + b.records.size());
  EXPECT_EQ(m.class_set(), (std::set<std::string>{"cam", "hub", "plug"}));

  const auto single = merge_sessions({a}, "renamed");
  EXPECT_EQ(single.records, a.records);
  EXPECT_EQ(single.name, "renamed");

  EXPECT_THROW(merge_sessions({a, a}, "x"), InputError);
  auto other = b;
  other.schema = testutil::numeric_schema(3, "g");
  EXPECT_THROW(merge_sessions({a, other}, "x"), IncompatibleError);
}

TEST(Partition, MergeAssociativeOnRecordMultisets) {
  const auto a = testutil::toy_partition("a", "F", {"x", "y"}, 4, 1);
  const auto b = testutil::toy_partition("b", "F", {"y", "z"}, 4, 2);
  const auto c = testutil::toy_partition("c", "F", {"x", "z"}, 4, 3);
  const auto left = merge_sessions({merge_sessions({a, b}, "ab"), c}, "abc");
  const auto right = merge_sessions({a, merge_sessions({b, c}, "bc")}, "abc");
  auto key = [](const Partition& p) {
    std::multiset<std::string> s;
    for (const auto& r : p.records) s.insert(r.meta.record_id() + r.label);
    return s;
  };
  EXPECT_EQ(key(left), key(right));
}

TEST(Extract, LabelingSoundness) {
  const auto r = extract_fixture({"three_packets"});
  const auto labels = fixture_labels();
  for (const auto& rec : r.partitions[0].records) {
    bool found = false;
    for (const auto& [mac, dev] : labels.entries())
      if (mac.key() == rec.meta.source_key) {
        EXPECT_EQ(dev, rec.label);
        found = true;
      }
    EXPECT_TRUE(found);
  }
  EXPECT_EQ(r.summaries[0].skipped, 1u);
  EXPECT_EQ(r.summaries[0].packets, 3u);
}

TEST(Extract, DeterministicAcrossThreadCounts) {
  testutil::TempDir tmp("extract");
  std::string first;
  for (std::size_t threads : {1u, 4u}) {
    set_thread_count(threads);
    const auto r = extract_fixture({"three_packets", "flow3", "eapol"});
    std::ostringstream o;
    for (const auto& p : r.partitions) write_feature_table(o, p.schema, p.records);
    if (first.empty())
      first = o.str();
    else
      EXPECT_EQ(o.str(), first);
  }
  set_thread_count(1);
}
