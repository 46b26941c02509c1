#include "gemid/labels.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "gemid/error.hpp"
#include "gemid/random.hpp"
#include "gemid/text.hpp"

namespace gemid {
namespace {

int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

MacAddress MacAddress::parse(std::string_view text) {
  if (text.size() != 17) throw InputError("bad MAC address: '" + std::string(text) + "'");
  MacAddress mac;
  for (std::size_t i = 0; i < 6; ++i) {
    const int hi = hex_digit(text[i * 3]);
    const int lo = hex_digit(text[i * 3 + 1]);
    if (hi < 0 || lo < 0 || (i < 5 && text[i * 3 + 2] != ':'))
      throw InputError("bad MAC address: '" + std::string(text) + "'");
    mac.bytes[i] = static_cast<std::uint8_t>(hi << 4 | lo);
  }
  return mac;
}

MacAddress MacAddress::from_bytes(std::span<const std::uint8_t> six) {
  MacAddress mac;
  for (std::size_t i = 0; i < 6; ++i) mac.bytes[i] = six[i];
  return mac;
}

std::string MacAddress::to_string() const {
  char buf[18];
  std::snprintf(buf, sizeof buf, "%02x:%02x:%02x:%02x:%02x:%02x", bytes[0], bytes[1], bytes[2],
                bytes[3], bytes[4], bytes[5]);
  return buf;
}

std::string MacAddress::key() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(mix64(fnv1a64(to_string()))));
  return std::string(buf, 12);
}

void LabelMap::add(const MacAddress& mac, std::string device) {
  if (device.empty()) throw InputError("empty device label for " + mac.to_string());
  if (!entries_.emplace(mac, std::move(device)).second)
    throw InputError("duplicate MAC in label map: " + mac.to_string());
}

std::optional<std::string_view> LabelMap::lookup(const MacAddress& mac) const {
  auto it = entries_.find(mac);
  if (it == entries_.end()) return std::nullopt;
  return std::string_view(it->second);
}

std::vector<std::string> LabelMap::devices() const {
  std::set<std::string> s;
  for (const auto& [mac, dev] : entries_) s.insert(dev);
  return {s.begin(), s.end()};
}

LabelMap LabelMap::load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("label map not found: " + path.string());
  LabelMap map;
  std::string line;
  bool header = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = std::string(trim(line));
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (header) {
      header = false;
      if (cells.size() != 2 || trim(cells[0]) != "mac" || trim(cells[1]) != "device")
        throw InputError(path.string() + ": expected header 'mac,device'");
      continue;
    }
    if (cells.size() != 2)
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected 2 columns");
    map.add(MacAddress::parse(trim(cells[0])), std::string(trim(cells[1])));
  }
  if (header) throw InputError(path.string() + ": empty label map");
  return map;
}

void LabelMap::save_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "mac,device\n";
  for (const auto& [mac, dev] : entries_) out << mac.to_string() << ',' << dev << '\n';
}

LabelingResult label_packets(std::span<const RawPacket> packets, const LabelMap& labels) {
  LabelingResult result;
  for (std::size_t i = 0; i < packets.size(); ++i) {
    const auto& p = packets[i];
    if (p.bytes.size() < 14) {
      ++result.malformed;
      continue;
    }
    const auto src = MacAddress::from_bytes(std::span(p.bytes).subspan(6, 6));
    if (auto dev = labels.lookup(src)) {
      result.kept.push_back({&p, *dev, src, i + 1});
    } else {
      ++result.skipped;
    }
  }
  return result;
}

}  // namespace gemid
