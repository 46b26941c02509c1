#include "gemid/extract.hpp"

#include <cmath>
#include <limits>

#include "gemid/baseline_features.hpp"
#include "gemid/error.hpp"
#include "gemid/header_features.hpp"
#include "gemid/parallel.hpp"
#include "gemid/pcap.hpp"

namespace gemid {
namespace {

struct FileJob {
  std::size_t set = 0;
  std::filesystem::path pcap;
};

struct FileOutput {
  std::vector<PacketRecord> records;  // header: values span every schema descriptor
  std::optional<FilterAccumulator> filter;
  std::size_t packets = 0, skipped = 0, malformed = 0;
};

RecordMeta make_meta(const std::string& partition, const std::string& session,
                     const MacAddress& src, Timestamp ts, std::uint64_t frame) {
  return RecordMeta{partition, session, src.key(), ts, frame};
}

double numeric_or_nan(const FieldValue& v) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  return std::numeric_limits<double>::quiet_NaN();
}

FileOutput run_header(const std::vector<RawPacket>& packets, const LabelMap& labels,
                      const HeaderExtractor& ex, bool filter, const std::string& partition,
                      const std::string& session) {
  FileOutput out;
  out.packets = packets.size();
  if (filter) out.filter.emplace(ex.schema().descriptors().size());
  const auto lab = label_packets(packets, labels);
  out.skipped = lab.skipped;
  out.malformed = lab.malformed;
  out.records.reserve(lab.kept.size());
  for (const auto& lp : lab.kept) {
    const auto row = ex.raw(dissect(*lp.packet));
    if (filter) out.filter->observe(row);
    PacketRecord r;
    r.meta = make_meta(partition, session, lp.source, lp.packet->ts, lp.frame);
    r.values.reserve(row.size());
    for (const auto& v : row) r.values.push_back(numeric_or_nan(v));
    r.label = std::string(lp.device);
    out.records.push_back(std::move(r));
  }
  return out;
}

FileOutput run_flow(const std::vector<RawPacket>& packets, const LabelMap& labels,
                    const std::string& partition, const std::string& session) {
  FileOutput out;
  out.packets = packets.size();
  const auto lab = label_packets(packets, labels);
  out.skipped = lab.skipped;
  out.malformed = lab.malformed;
  for (auto& f : flow_extract(packets, labels)) {
    PacketRecord r;
    r.meta = make_meta(partition, session, f.forward_source, f.start, f.first_frame);
    r.values = std::move(f.values);
    r.label = std::move(f.label);
    out.records.push_back(std::move(r));
  }
  return out;
}

FileOutput run_window(const std::vector<RawPacket>& packets, const LabelMap& labels,
                      const std::string& partition, const std::string& session) {
  FileOutput out;
  out.packets = packets.size();
  WindowExtractor ex;
  for (std::size_t i = 0; i < packets.size(); ++i) {
    const auto& p = packets[i];
    if (p.bytes.size() < 14) {
      ++out.malformed;
      continue;
    }
    const Dissection d = dissect(p);
    auto values = ex.update(d, p.ts);
    const auto dev = labels.lookup(d.eth.src);
    if (!dev) {
      ++out.skipped;
      continue;
    }
    PacketRecord r;
    r.meta = make_meta(partition, session, d.eth.src, p.ts, i + 1);
    r.values = std::move(values);
    r.label = std::string(*dev);
    out.records.push_back(std::move(r));
  }
  return out;
}

}  // namespace

std::string_view to_string(SchemaFamily f) {
  switch (f) {
    case SchemaFamily::Header:
      return "header";
    case SchemaFamily::Flow:
      return "flow";
    case SchemaFamily::Window:
      return "window";
  }
  return "header";
}

SchemaFamily parse_schema_family(std::string_view s) {
  if (s == "header") return SchemaFamily::Header;
  if (s == "flow") return SchemaFamily::Flow;
  if (s == "window") return SchemaFamily::Window;
  throw InputError("unknown schema '" + std::string(s) + "' (expected header, flow or window)");
}

const FeatureSchema& builtin_schema(SchemaFamily f) {
  switch (f) {
    case SchemaFamily::Flow:
      return flow_schema();
    case SchemaFamily::Window:
      return window_schema();
    case SchemaFamily::Header:
      break;
  }
  return header_catalog();
}

ExtractResult extract_partitions(const std::vector<CaptureSet>& sets, const LabelMap& labels,
                                 const ExtractOptions& opts) {
  if (labels.empty()) throw InputError("label map is empty");
  std::vector<FileJob> jobs;
  for (std::size_t s = 0; s < sets.size(); ++s) {
    if (sets[s].pcaps.empty()) throw InputError("partition '" + sets[s].name + "' has no pcap files");
    for (const auto& p : sets[s].pcaps) jobs.push_back({s, p});
  }

  const bool header = opts.family == SchemaFamily::Header;
  const bool filter = header && !opts.schema;
  FeatureSchema base = opts.schema ? *opts.schema : builtin_schema(opts.family);
  if (opts.schema && base.family() != to_string(opts.family))
    throw InputError("schema file is for '" + base.family() + "', not '" +
                     std::string(to_string(opts.family)) + "'");
  std::optional<HeaderExtractor> hx;
  if (header) hx.emplace(base);

  auto outputs = parallel_map<FileOutput>(jobs.size(), [&](std::size_t i) {
    const auto& job = jobs[i];
    const auto packets = read_pcap(job.pcap);
    const auto& name = sets[job.set].name;
    const auto session = job.pcap.stem().string();
    switch (opts.family) {
      case SchemaFamily::Header:
        return run_header(packets, labels, *hx, filter, name, session);
      case SchemaFamily::Flow:
        return run_flow(packets, labels, name, session);
      case SchemaFamily::Window:
        return run_window(packets, labels, name, session);
    }
    return FileOutput{};
  });

  ExtractResult result;
  if (filter) {
    FilterAccumulator acc(base.descriptors().size());
    for (const auto& o : outputs) acc.merge(*o.filter);
    result.schema = acc.finish(base);
  } else {
    result.schema = base;
  }
  const auto active = result.schema.active_indices();
  const bool project = header && active.size() != result.schema.descriptors().size();
  const FeatureSchema active_schema = result.schema.active_only();

  for (const auto& set : sets) {
    Partition p;
    p.name = set.name;
    p.family = set.family;
    p.session = set.session.empty() ? set.name : set.session;
    p.schema = active_schema;
    for (const auto& f : set.pcaps) p.source_files.push_back(f.string());
    result.partitions.push_back(std::move(p));
    result.summaries.push_back(ExtractSummary{set.name, {}, 0, 0, 0});
  }
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    auto& o = outputs[i];
    auto& part = result.partitions[jobs[i].set];
    auto& sum = result.summaries[jobs[i].set];
    sum.packets += o.packets;
    sum.skipped += o.skipped;
    sum.malformed += o.malformed;
    for (auto& r : o.records) {
      if (project) {
        std::vector<double> v;
        v.reserve(active.size());
        for (auto j : active) v.push_back(r.values[j]);
        r.values = std::move(v);
      }
      ++sum.per_device[r.label];
      part.records.push_back(std::move(r));
    }
    o.records.clear();
  }
  return result;
}

}  // namespace gemid
