#include "gemid/schema.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "gemid/error.hpp"
#include "gemid/random.hpp"

namespace gemid {
namespace {

constexpr std::array kProtocolNames = {"ETH",  "IP",   "TCP",  "UDP",  "ICMP",
                                       "IGMP", "DNS",  "DHCP", "NTP",  "TLS",
                                       "HTTP", "STUN", "EAPOL", "DERIVED", "FLOW", "WINDOW"};
constexpr std::array kKindNames = {"numeric", "categorical", "flag"};
constexpr std::array kReasonNames = {"string-valued", "contains-mac", "contains-ip", "constant"};

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string status_string(const FeatureDescriptor& d) {
  if (d.active()) return "active";
  return "filtered:" + std::string(to_string(*d.filtered));
}

}  // namespace

std::string_view to_string(Protocol p) { return kProtocolNames[static_cast<std::size_t>(p)]; }
std::string_view to_string(FeatureKind k) { return kKindNames[static_cast<std::size_t>(k)]; }
std::string_view to_string(FilterReason r) { return kReasonNames[static_cast<std::size_t>(r)]; }

Protocol parse_protocol(std::string_view s) {
  for (std::size_t i = 0; i < kProtocolNames.size(); ++i)
    if (s == kProtocolNames[i]) return static_cast<Protocol>(i);
  throw InputError("unknown protocol '" + std::string(s) + "'");
}

FeatureKind parse_kind(std::string_view s) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i)
    if (s == kKindNames[i]) return static_cast<FeatureKind>(i);
  throw InputError("unknown feature kind '" + std::string(s) + "'");
}

FeatureSchema::FeatureSchema(std::string family, std::vector<FeatureDescriptor> descriptors,
                             std::string version)
    : family_(std::move(family)), descriptors_(std::move(descriptors)), version_(std::move(version)) {
  std::set<std::string_view> seen;
  for (const auto& d : descriptors_)
    if (!seen.insert(d.name).second) throw InputError("duplicate feature name '" + d.name + "'");
}

std::size_t FeatureSchema::active_count() const {
  std::size_t n = 0;
  for (const auto& d : descriptors_) n += d.active();
  return n;
}

std::vector<std::string> FeatureSchema::active_names() const {
  std::vector<std::string> out;
  for (const auto& d : descriptors_)
    if (d.active()) out.push_back(d.name);
  return out;
}

std::vector<std::size_t> FeatureSchema::active_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < descriptors_.size(); ++i)
    if (descriptors_[i].active()) out.push_back(i);
  return out;
}

std::optional<std::size_t> FeatureSchema::find(std::string_view name) const {
  for (std::size_t i = 0; i < descriptors_.size(); ++i)
    if (descriptors_[i].name == name) return i;
  return std::nullopt;
}

std::string FeatureSchema::hash() const {
  std::uint64_t h = fnv1a64(family_);
  for (const auto& d : descriptors_) {
    if (!d.active()) continue;
    h = fnv1a64(d.name, h);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(to_string(d.kind), h);
    h = fnv1a64("\x1e", h);
  }
  return hex64(mix64(h));
}

FeatureSchema FeatureSchema::active_only() const {
  std::vector<FeatureDescriptor> act;
  for (const auto& d : descriptors_)
    if (d.active()) act.push_back(d);
  return FeatureSchema(family_, std::move(act), version_);
}

std::string FeatureSchema::to_json() const {
  nlohmann::ordered_json j;
  j["schema"] = family_;
  j["version"] = version_;
  j["hash"] = hash();
  auto& arr = j["features"] = nlohmann::ordered_json::array();
  for (const auto& d : descriptors_) {
    nlohmann::ordered_json f;
    f["name"] = d.name;
    f["protocol"] = to_string(d.protocol);
    f["kind"] = to_string(d.kind);
    f["status"] = status_string(d);
    arr.push_back(std::move(f));
  }
  return j.dump(2) + "\n";
}

FeatureSchema FeatureSchema::from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("schema is not valid JSON: ") + e.what());
  }
  const nlohmann::json* list = &j;
  std::string family = "header";
  std::string version(kVersion);
  if (j.is_object()) {
    if (!j.contains("features")) throw InputError("schema object lacks 'features'");
    list = &j["features"];
    family = j.value("schema", family);
    version = j.value("version", version);
  }
  if (!list->is_array()) throw InputError("schema features must be a list");
  std::vector<FeatureDescriptor> ds;
  for (const auto& f : *list) {
    FeatureDescriptor d;
    try {
      d.name = f.at("name").get<std::string>();
      d.protocol = parse_protocol(f.at("protocol").get<std::string>());
      d.kind = parse_kind(f.value("kind", std::string("numeric")));
      const auto status = f.value("status", std::string("active"));
      if (status != "active") {
        constexpr std::string_view prefix = "filtered:";
        if (status.rfind(prefix, 0) != 0) throw InputError("bad status '" + status + "'");
        const auto reason = status.substr(prefix.size());
        bool ok = false;
        for (std::size_t i = 0; i < kReasonNames.size(); ++i)
          if (reason == kReasonNames[i]) {
            d.filtered = static_cast<FilterReason>(i);
            ok = true;
          }
        if (!ok) throw InputError("bad filter reason '" + reason + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw InputError(std::string("bad schema descriptor: ") + e.what());
    }
    ds.push_back(std::move(d));
  }
  return FeatureSchema(std::move(family), std::move(ds), std::move(version));
}

void FeatureSchema::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << to_json();
}

FeatureSchema FeatureSchema::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("schema not found: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string feature_list_hash(const std::vector<std::string>& names) {
  std::uint64_t h = fnv1a64("features");
  for (const auto& n : names) {
    h = fnv1a64(n, h);
    h = fnv1a64("\x1e", h);
  }
  return hex64(mix64(h));
}

}  // namespace gemid
