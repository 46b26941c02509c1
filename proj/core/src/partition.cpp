#include "gemid/partition.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <map>
#include <sstream>

#include "gemid/error.hpp"
#include "gemid/text.hpp"

namespace gemid {
namespace {

constexpr const char* kMetaColumns[] = {"partition", "session", "source_key", "ts", "frame"};
constexpr std::size_t kMetaCount = 5;

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

Timestamp parse_ts(std::string_view s) {
  s = trim(s);
  const bool neg = !s.empty() && s.front() == '-';
  if (neg) s.remove_prefix(1);
  const auto dot = s.find('.');
  std::int64_t sec = 0, usec = 0;
  try {
    sec = std::stoll(std::string(s.substr(0, dot)));
    if (dot != std::string_view::npos) {
      auto frac = std::string(s.substr(dot + 1));
      frac.resize(6, '0');
      usec = std::stoll(frac);
    }
  } catch (const std::exception&) {
    throw InputError("bad timestamp '" + std::string(s) + "'");
  }
  const std::int64_t v = sec * 1000000 + usec;
  return Timestamp{neg ? -v : v};
}

}  // namespace

bool operator==(const PacketRecord& a, const PacketRecord& b) {
  if (!(a.meta == b.meta) || a.label != b.label || a.values.size() != b.values.size()) return false;
  for (std::size_t i = 0; i < a.values.size(); ++i)
    if (!same_bits(a.values[i], b.values[i])) return false;
  return true;
}

std::set<std::string> Partition::class_set() const {
  std::set<std::string> s;
  for (const auto& r : records) s.insert(r.label);
  return s;
}

Partition merge_sessions(const std::vector<Partition>& parts, const std::string& name) {
  if (parts.empty()) throw InputError("merge_sessions needs at least one partition");
  std::set<std::string> names;
  for (const auto& p : parts)
    if (!names.insert(p.name).second) throw InputError("duplicate partition name '" + p.name + "'");

  Partition out;
  out.name = name;
  out.schema = parts.front().schema;
  out.family = parts.front().family;
  out.session = parts.front().session;
  const auto hash = out.schema.hash();
  for (const auto& p : parts) {
    if (p.schema.hash() != hash)
      throw IncompatibleError("cannot merge '" + p.name + "': schema differs");
    if (p.family != out.family) out.family.clear();
    if (p.session != out.session) out.session.clear();
    out.records.insert(out.records.end(), p.records.begin(), p.records.end());
    out.source_files.insert(out.source_files.end(), p.source_files.begin(), p.source_files.end());
  }
  if (out.session.empty()) out.session = name;
  return out;
}

void write_feature_table(std::ostream& out, const FeatureSchema& schema,
                         const std::vector<PacketRecord>& records) {
  const auto names = schema.active_names();
  out << "# schema_hash=" << schema.hash() << '\n';
  for (std::size_t i = 0; i < kMetaCount; ++i) out << kMetaColumns[i] << ',';
  for (const auto& n : names) out << csv_cell(n) << ',';
  out << "label\n";
  std::string line;
  for (const auto& r : records) {
    if (r.values.size() != names.size())
      throw Error("record width " + std::to_string(r.values.size()) + " != schema width " +
                  std::to_string(names.size()));
    line.clear();
    line += csv_cell(r.meta.partition);
    line += ',';
    line += csv_cell(r.meta.session);
    line += ',';
    line += r.meta.source_key;
    line += ',';
    line += r.meta.ts.to_string();
    line += ',';
    line += std::to_string(r.meta.frame);
    for (double v : r.values) {
      line += ',';
      line += format_double(v);
    }
    line += ',';
    line += csv_cell(r.label);
    line += '\n';
    out << line;
  }
}

std::filesystem::path store_partition(const Partition& p, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  p.schema.save(dir / "schema.json");
  {
    std::ofstream out(dir / "features.csv");
    if (!out) throw InputError("cannot write " + (dir / "features.csv").string());
    write_feature_table(out, p.schema, p.records);
  }
  std::map<std::string, std::size_t> per_class;
  for (const auto& r : p.records) ++per_class[r.label];

  nlohmann::ordered_json m;
  m["format_version"] = kStoreFormatVersion;
  m["name"] = p.name;
  m["family"] = p.family;
  m["session"] = p.session;
  m["schema"] = p.schema.family();
  m["schema_version"] = p.schema.version();
  m["schema_hash"] = p.schema.hash();
  m["class_set"] = p.class_set();
  m["counts"]["records"] = p.records.size();
  m["counts"]["features"] = p.schema.active_count();
  m["counts"]["per_class"] = per_class;
  m["source_files"] = p.source_files;
  const auto manifest = dir / "manifest.json";
  std::ofstream(manifest) << m.dump(2) << '\n';
  return manifest;
}

Partition load_partition(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path))
    throw NotFoundError("partition manifest not found: " + manifest_path.string());
  nlohmann::json m;
  try {
    std::ifstream in(manifest_path);
    m = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("bad manifest " + manifest_path.string() + ": " + e.what());
  }
  if (m.value("format_version", 0) != kStoreFormatVersion)
    throw IncompatibleError("unsupported partition store version in " + manifest_path.string());

  Partition p;
  p.name = m.value("name", std::string());
  p.family = m.value("family", std::string());
  p.session = m.value("session", std::string());
  p.source_files = m.value("source_files", std::vector<std::string>{});
  p.schema = FeatureSchema::load(dir / "schema.json").active_only();
  const auto manifest_hash = m.value("schema_hash", std::string());
  if (manifest_hash != p.schema.hash())
    throw IncompatibleError("schema hash mismatch in " + dir.string() + ": manifest " +
                            manifest_hash + ", schema " + p.schema.hash());

  std::ifstream in(dir / "features.csv");
  if (!in) throw NotFoundError("feature table not found in " + dir.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("# schema_hash=", 0) != 0)
    throw IncompatibleError("feature table lacks schema hash comment");
  if (line.substr(14) != manifest_hash)
    throw IncompatibleError("feature table schema hash differs from manifest in " + dir.string());
  if (!std::getline(in, line)) throw IncompatibleError("feature table lacks header row");
  const auto header = split_csv_line(line);
  const auto names = p.schema.active_names();
  if (header.size() != kMetaCount + names.size() + 1)
    throw IncompatibleError("feature table width does not match schema");
  for (std::size_t i = 0; i < names.size(); ++i)
    if (header[kMetaCount + i] != names[i])
      throw IncompatibleError("feature table column '" + header[kMetaCount + i] +
                              "' does not match schema '" + names[i] + "'");

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) throw InputError("ragged row in feature table");
    PacketRecord r;
    r.meta.partition = cells[0];
    r.meta.session = cells[1];
    r.meta.source_key = cells[2];
    r.meta.ts = parse_ts(cells[3]);
    r.meta.frame = std::stoull(cells[4]);
    r.values.reserve(names.size());
    for (std::size_t i = 0; i < names.size(); ++i) r.values.push_back(parse_double(cells[kMetaCount + i]));
    r.label = std::move(cells.back());
    p.records.push_back(std::move(r));
  }
  return p;
}

}  // namespace gemid
