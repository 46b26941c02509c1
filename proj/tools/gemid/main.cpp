// gemid: command-line entry point for the device-identification pipeline.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gemid/error.hpp"
#include "gemid/evaluation.hpp"
#include "gemid/extract.hpp"
#include "gemid/labels.hpp"
#include "gemid/models.hpp"
#include "gemid/parallel.hpp"
#include "gemid/partition.hpp"
#include "gemid/selection.hpp"
#include "gemid/synth.hpp"
#include "gemid/text.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw gemid::NotFoundError("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& s) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw gemid::InputError("cannot write " + p.string());
  out << s;
}

std::vector<gemid::Partition> load_partitions(const std::vector<std::string>& dirs) {
  std::vector<std::string> missing;
  for (const auto& d : dirs)
    if (!fs::exists(fs::path(d) / "manifest.json")) missing.push_back(d);
  if (!missing.empty()) throw gemid::NotFoundError("missing partition stores: " + gemid::join(missing, ", "));
  std::vector<gemid::Partition> parts;
  for (const auto& d : dirs) parts.push_back(gemid::load_partition(d));
  return parts;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string out;
  gemid::SynthConfig cfg;
};

int run_synth(const SynthArgs& a) {
  const auto r = gemid::synthesize(a.cfg, a.out);
  ordered_json j;
  j["command"] = "synth";
  j["devices"] = a.cfg.devices;
  j["packets"] = a.cfg.packets;
  j["sessions_per_env"] = a.cfg.sessions_per_env;
  j["confounder"] = a.cfg.confounder;
  j["seed"] = a.cfg.seed;
  write_file(fs::path(a.out) / "config.json", j.dump(2) + "\n");
  for (const auto& s : r.sessions) std::cout << s.pcap.string() << "  family=" << s.family << "\n";
  std::cout << "labels: " << r.labels.string() << "\nground truth: " << r.ground_truth.string() << "\n";
  return 0;
}

struct ExtractArgs {
  std::vector<std::string> pcaps;
  std::vector<std::string> sets;
  std::string from_synth;
  std::string labels;
  std::string schema = "header";
  std::string apply_schema;
  std::string out;
  std::string partition, family, session;
};

int run_extract(const ExtractArgs& a) {
  std::vector<gemid::CaptureSet> sets;
  if (!a.from_synth.empty()) {
    const auto gt = nlohmann::json::parse(read_file(fs::path(a.from_synth) / "ground_truth.json"));
    for (const auto& s : gt.at("sessions"))
      sets.push_back({s.at("session").get<std::string>(), s.at("family").get<std::string>(),
                      s.at("session").get<std::string>(),
                      {fs::path(a.from_synth) / s.at("file").get<std::string>()}});
  }
  for (const auto& spec : a.sets) {
    // NAME:FAMILY:SESSION:pcap[,pcap...]
    std::vector<std::string> f;
    std::size_t start = 0;
    for (int i = 0; i < 3; ++i) {
      const auto c = spec.find(':', start);
      if (c == std::string::npos) throw gemid::InputError("--set expects NAME:FAMILY:SESSION:PCAPS, got '" + spec + "'");
      f.push_back(spec.substr(start, c - start));
      start = c + 1;
    }
    gemid::CaptureSet cs{f[0], f[1], f[2], {}};
    std::stringstream files(spec.substr(start));
    for (std::string p; std::getline(files, p, ',');)
      if (!p.empty()) cs.pcaps.emplace_back(p);
    sets.push_back(std::move(cs));
  }
  if (!a.pcaps.empty()) {
    gemid::CaptureSet cs;
    cs.name = a.partition.empty() ? fs::path(a.pcaps.front()).stem().string() : a.partition;
    cs.family = a.family;
    cs.session = a.session;
    for (const auto& p : a.pcaps) cs.pcaps.emplace_back(p);
    sets.push_back(std::move(cs));
  }
  if (sets.empty()) throw gemid::InputError("nothing to extract: give --pcap, --set or --from-synth");
  for (const auto& s : sets)
    for (const auto& p : s.pcaps)
      if (!fs::exists(p)) throw gemid::NotFoundError("pcap not found: " + p.string());
  if (a.labels.empty()) throw gemid::InputError("--labels is required");
  const auto labels = gemid::LabelMap::load_csv(a.labels);

  gemid::ExtractOptions opts;
  opts.family = gemid::parse_schema_family(a.schema);
  if (!a.apply_schema.empty()) opts.schema = gemid::FeatureSchema::load(a.apply_schema);
  const auto r = gemid::extract_partitions(sets, labels, opts);

  const fs::path out(a.out);
  fs::create_directories(out);
  r.schema.save(out / "schema.json");
  std::ostringstream summary;
  summary << "partition,device,records\n";
  for (std::size_t i = 0; i < r.partitions.size(); ++i) {
    gemid::store_partition(r.partitions[i], out / r.partitions[i].name);
    const auto& s = r.summaries[i];
    std::cout << s.partition << ": " << s.packets << " packets read, " << s.skipped << " unlabeled, "
              << s.malformed << " malformed\n";
    for (const auto& [dev, n] : s.per_device) {
      std::cout << "  " << dev << "  " << n << "\n";
      summary << gemid::csv_cell(s.partition) << ',' << gemid::csv_cell(dev) << ',' << n << '\n';
    }
  }
  write_file(out / "summary.csv", summary.str());
  ordered_json j;
  j["command"] = "extract";
  j["schema"] = a.schema;
  j["labels"] = a.labels;
  auto& sj = j["sets"] = ordered_json::array();
  for (const auto& s : sets) {
    ordered_json e{{"name", s.name}, {"family", s.family}, {"session", s.session}};
    auto& ps = e["pcaps"] = ordered_json::array();
    for (const auto& p : s.pcaps) ps.push_back(p.generic_string());
    sj.push_back(std::move(e));
  }
  if (!a.apply_schema.empty()) j["apply_schema"] = a.apply_schema;
  write_file(out / "config.json", j.dump(2) + "\n");
  std::cout << "schema " << r.schema.family() << " hash " << r.schema.active_only().hash() << ", "
            << r.schema.active_count() << " active features\n";
  return 0;
}

struct SelectArgs {
  std::vector<std::string> partitions;
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

int run_select(const SelectArgs& a) {
  auto cfg = a.config.empty() ? gemid::SelectionConfig{} : gemid::SelectionConfig::from_json(read_file(a.config));
  if (a.seed) cfg.seed = *a.seed;
  const auto parts = load_partitions(a.partitions);
  const auto r = gemid::run_selection(parts, cfg);
  gemid::write_selection(r, cfg, a.out);
  std::size_t selected = 0;
  for (const auto& v : r.votes) selected += v.selected;
  std::cout << r.kappa.contexts.size() << " contexts, " << r.kappa.features.size() << " features scanned, "
            << selected << " passed the vote\n";
  std::cout << "final set " << r.final_set << " (mean F1 " << gemid::format_fixed(r.final_mean_f1, 4)
            << "): " << gemid::join(r.final_features, ", ") << "\n";
  return 0;
}

struct TrainArgs {
  std::vector<std::string> train;
  std::vector<std::string> validate;
  std::string model;
  std::string algorithm;
  int search = 0;
  std::string features;
  std::string out;
  std::uint64_t seed = 42;
};

int run_train(const TrainArgs& a) {
  const auto parts = load_partitions(a.train);
  const auto merged = parts.size() == 1 ? parts.front() : gemid::merge_sessions(parts, "train");
  const auto features = a.features.empty() ? merged.schema.active_names() : gemid::load_feature_list(a.features);
  const auto data = gemid::Dataset::from_partition(merged, features);
  gemid::ModelSpec spec;
  ordered_json cfg;
  cfg["command"] = "train";
  cfg["train"] = a.train;
  cfg["features"] = features;
  cfg["seed"] = a.seed;
  if (a.search > 0) {
    if (a.algorithm.empty()) throw gemid::InputError("--search needs --algorithm");
    if (a.validate.empty()) throw gemid::InputError("--search needs at least one --validate partition");
    const auto vparts = load_partitions(a.validate);
    std::vector<gemid::Dataset> tests;
    for (const auto& p : vparts) tests.push_back(gemid::Dataset::from_partition(p, features));
    std::vector<gemid::SearchContext> ctx;
    for (const auto& t : tests) ctx.push_back({&data, &t});
    const auto r = gemid::random_search(gemid::parse_algorithm(a.algorithm), a.search, ctx, a.seed);
    spec = r.best;
    ordered_json trace = ordered_json::array();
    for (const auto& d : r.trace)
      trace.push_back({{"spec", ordered_json::parse(d.spec.to_json())}, {"score", d.score}});
    const fs::path out(a.out);
    write_file(out.parent_path() / (out.stem().string() + ".search.json"),
               ordered_json{{"best", ordered_json::parse(r.best.to_json())}, {"best_score", r.best_score}, {"trace", trace}}
                       .dump(2) +
                   "\n");
    cfg["search"] = {{"algorithm", a.algorithm}, {"draws", a.search}, {"validate", a.validate}};
    std::cout << "best of " << a.search << " draws: " << spec.describe() << " mean macro F1 "
              << gemid::format_fixed(r.best_score, 4) << "\n";
  } else if (!a.model.empty()) {
    spec = gemid::ModelSpec::from_json(read_file(a.model));
  } else if (!a.algorithm.empty()) {
    spec.algorithm = gemid::parse_algorithm(a.algorithm);
  } else {
    throw gemid::InputError("give --model, --algorithm or --search");
  }
  const auto model = gemid::train(spec, data, a.seed);
  model.save(a.out);
  cfg["model"] = ordered_json::parse(spec.to_json());
  const fs::path out(a.out);
  write_file(out.parent_path() / (out.stem().string() + ".config.json"), cfg.dump(2) + "\n");
  std::cout << "trained " << spec.describe() << " on " << data.rows() << " rows, " << features.size()
            << " features -> " << a.out << "\n";
  return 0;
}

struct AggregateArgs {
  std::string model;
  std::string partition;
  int group = 12;
  std::string out;
};

int run_aggregate(const AggregateArgs& a) {
  const auto model = gemid::TrainedModel::load(a.model);
  const auto part = gemid::load_partition(a.partition);
  const auto data = gemid::Dataset::from_partition(part, model.features());
  const auto proba = model.predict_proba(data);
  gemid::ContextPredictions preds;
  preds.classes = model.classes();
  std::set<std::string> unseen;
  for (std::size_t r = 0; r < data.rows(); ++r) {
    const auto& rec = part.records[r];
    if (!std::binary_search(preds.classes.begin(), preds.classes.end(), rec.label)) {
      unseen.insert(rec.label);
      ++preds.dropped_rows;
      continue;
    }
    gemid::PacketPrediction p{rec.meta.source_key, rec.meta.session, rec.meta.frame, rec.label, {}, proba[r]};
    p.predicted = preds.classes[static_cast<std::size_t>(std::max_element(proba[r].begin(), proba[r].end()) -
                                                         proba[r].begin())];
    preds.rows.push_back(std::move(p));
  }
  if (preds.rows.empty()) throw gemid::InputError("the partition shares no class with the model");
  preds.unseen.assign(unseen.begin(), unseen.end());
  gemid::EvalContext ctx;
  ctx.kind = gemid::ContextKind::DD;
  ctx.name = part.name;
  const auto packet = gemid::report_from(ctx, preds);
  const auto groups = gemid::aggregate_predictions(preds, {a.group});
  auto grouped = gemid::report_from(ctx, groups);
  grouped.granularity = "group";

  const fs::path out(a.out);
  fs::create_directories(out);
  std::ostringstream csv;
  csv << "source_key,session,first_frame,truth,predicted\n";
  for (const auto& g : groups.rows)
    csv << gemid::csv_cell(g.source_key) << ',' << gemid::csv_cell(g.session) << ',' << g.frame << ','
        << gemid::csv_cell(g.truth) << ',' << gemid::csv_cell(g.predicted) << '\n';
  write_file(out / "groups.csv", csv.str());
  ordered_json j;
  j["group_size"] = a.group;
  j["packet"] = ordered_json::parse(packet.score.to_json());
  j["group"] = ordered_json::parse(grouped.score.to_json());
  j["packets"] = preds.rows.size();
  j["groups"] = groups.rows.size();
  write_file(out / "aggregate_report.json", j.dump(2) + "\n");
  write_file(out / "config.json", ordered_json{{"command", "aggregate"},
                                               {"model", a.model},
                                               {"partition", a.partition},
                                               {"group_size", a.group}}
                                          .dump(2) +
                                      "\n");
  std::cout << "packet macro F1 " << gemid::format_fixed(packet.score.macro_f1, 4) << ", group (g=" << a.group
            << ") macro F1 " << gemid::format_fixed(grouped.score.macro_f1, 4) << "\n";
  return 0;
}

struct StudyArgs {
  std::string plan;
  std::string out;
  std::optional<int> aggregate;
  bool markdown = false;
  bool no_timing = false;
};

int run_study(const StudyArgs& a) {
  auto plan = gemid::StudyPlan::from_json(read_file(a.plan), fs::path(a.plan).parent_path());
  if (a.aggregate) plan.aggregate = *a.aggregate;
  if (a.markdown) plan.markdown = true;
  if (a.no_timing) plan.timing = false;
  std::vector<std::string> missing;
  for (const auto& m : plan.methods)
    for (const auto& p : m.partitions) {
      const auto full = p.is_absolute() ? p : plan.base / p;
      if (!fs::exists(full / "manifest.json")) missing.push_back(full.string());
    }
  if (!missing.empty()) throw gemid::NotFoundError("plan references missing partitions: " + gemid::join(missing, ", "));
  const auto r = gemid::run_study(plan);
  gemid::write_study(r, plan, a.out);
  write_file(fs::path(a.out) / "config.json", plan.to_json());
  for (const auto& m : r.methods) {
    std::cout << m.name << ":";
    for (auto k : {gemid::ContextKind::CV, gemid::ContextKind::SS, gemid::ContextKind::DD})
      if (auto v = m.mean(k)) std::cout << "  " << gemid::to_string(k) << " " << gemid::format_fixed(*v, 4);
    if (auto v = m.mean(gemid::ContextKind::DD, true))
      std::cout << "  DD(g=" << *plan.aggregate << ") " << gemid::format_fixed(*v, 4);
    std::cout << "\n";
  }
  return 0;
}

int run_schema(const std::string& family, const std::string& out) {
  const auto text = gemid::builtin_schema(gemid::parse_schema_family(family)).to_json();
  if (out.empty())
    std::cout << text;
  else
    write_file(out, text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gemid: packet-header device identification pipeline"};
  app.require_subcommand(1);
  std::size_t threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: GEMID_THREADS or hardware)");

  SynthArgs sy;
  auto* synth = app.add_subcommand("synth", "Generate a two-environment synthetic capture suite");
  synth->add_option("--out", sy.out, "Output directory")->required();
  synth->add_option("--devices", sy.cfg.devices, "Device count")->capture_default_str();
  synth->add_option("--packets", sy.cfg.packets, "Labeled packets per device per environment")->capture_default_str();
  synth->add_option("--sessions", sy.cfg.sessions_per_env, "Capture sessions per environment")->capture_default_str();
  synth->add_option("--confounder", sy.cfg.confounder, "Confounder strength in [0,1]")->capture_default_str();
  synth->add_option("--seed", sy.cfg.seed, "Master seed")->capture_default_str();

  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "Extract a feature table from pcaps");
  extract->add_option("--pcap", ex.pcaps, "Input pcap (repeatable; forms one partition)");
  extract->add_option("--set", ex.sets, "Partition as NAME:FAMILY:SESSION:PCAP[,PCAP...] (repeatable)");
  extract->add_option("--from-synth", ex.from_synth, "Synth output directory; one partition per session");
  extract->add_option("--labels", ex.labels, "labels.csv with mac,device")->required();
  extract->add_option("--schema", ex.schema, "header, flow or window")->capture_default_str();
  extract->add_option("--apply-schema", ex.apply_schema, "Reuse a stored schema's filter decisions");
  extract->add_option("--out", ex.out, "Output directory")->required();
  extract->add_option("--partition", ex.partition, "Partition name for --pcap");
  extract->add_option("--family", ex.family, "Dataset family for --pcap");
  extract->add_option("--session", ex.session, "Session id for --pcap");

  SelectArgs se;
  auto* select = app.add_subcommand("select", "Kappa vote plus GA feature selection");
  select->add_option("--partitions", se.partitions, "Partition store directories")->required();
  select->add_option("--config", se.config, "Selection config JSON");
  select->add_option("--seed", se.seed, "Override the config seed");
  select->add_option("--out", se.out, "Output directory")->required();

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train and save a model");
  train->add_option("--train", tr.train, "Training partition stores (merged)")->required();
  train->add_option("--model", tr.model, "Model spec JSON");
  train->add_option("--algorithm", tr.algorithm, "dt, rf, knn, nb or lr");
  train->add_option("--search", tr.search, "Random-search draws");
  train->add_option("--validate", tr.validate, "Partitions scored during search");
  train->add_option("--features", tr.features, "Feature list JSON (default: all active)");
  train->add_option("--seed", tr.seed, "Training seed")->capture_default_str();
  train->add_option("--out", tr.out, "Model file")->required();

  AggregateArgs ag;
  auto* aggregate = app.add_subcommand("aggregate", "Group packet predictions and report both levels");
  aggregate->add_option("--model", ag.model, "Model file")->required();
  aggregate->add_option("--partition", ag.partition, "Test partition store")->required();
  aggregate->add_option("--group-size,-g", ag.group, "Packets per group")->capture_default_str();
  aggregate->add_option("--out", ag.out, "Output directory")->required();

  StudyArgs st;
  auto* study = app.add_subcommand("study", "Run a CV/SS/DD generalizability study");
  study->add_option("--plan", st.plan, "study.json")->required();
  study->add_option("--out", st.out, "Output directory")->required();
  study->add_option("--aggregate", st.aggregate, "Also report group-level scores with this group size");
  study->add_flag("--markdown", st.markdown, "Also write table1.md");
  study->add_flag("--no-timing", st.no_timing, "Skip inference timing");

  std::string schema_family = "header", schema_out;
  auto* schema = app.add_subcommand("schema", "Print a built-in feature schema");
  schema->add_option("--family", schema_family, "header, flow or window")->capture_default_str();
  schema->add_option("--out", schema_out, "Write to a file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    gemid::set_thread_count(gemid::resolve_thread_count(threads));
    if (*synth) return run_synth(sy);
    if (*extract) return run_extract(ex);
    if (*select) return run_select(se);
    if (*train) return run_train(tr);
    if (*aggregate) return run_aggregate(ag);
    if (*study) return run_study(st);
    if (*schema) return run_schema(schema_family, schema_out);
  } catch (const gemid::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
