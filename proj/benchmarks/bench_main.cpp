#include <benchmark/benchmark.h>

#include <filesystem>
#include <random>

#include "gemid/baseline_features.hpp"
#include "gemid/dissect.hpp"
#include "gemid/evaluation.hpp"
#include "gemid/header_features.hpp"
#include "gemid/metrics.hpp"
#include "gemid/models.hpp"
#include "gemid/parallel.hpp"
#include "gemid/pcap.hpp"
#include "gemid/synth.hpp"

namespace fs = std::filesystem;
using namespace gemid;

namespace {

// One small synthetic session shared by the packet-level benchmarks.
struct Capture {
  std::vector<RawPacket> packets;
  LabelMap labels;

  Capture() {
    const auto dir = fs::temp_directory_path() / "gemid-bench-capture";
    fs::remove_all(dir);
    SynthConfig cfg;
    cfg.devices = 8;
    cfg.packets = 500;
    cfg.sessions_per_env = 1;
    const auto r = synthesize(cfg, dir);
    packets = read_pcap(r.sessions[0].pcap);
    labels = LabelMap::load_csv(r.labels);
    fs::remove_all(dir);
  }
};

const Capture& capture() {
  static const Capture c;
  return c;
}

Dataset table(std::size_t rows, std::size_t width, int classes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0, 1);
  Dataset d;
  for (std::size_t f = 0; f < width; ++f) d.features.push_back("f" + std::to_string(f));
  d.cols.assign(width, {});
  for (std::size_t r = 0; r < rows; ++r) {
    const int c = static_cast<int>(rng() % classes);
    d.labels.push_back("c" + std::to_string(c));
    for (std::size_t f = 0; f < width; ++f) d.cols[f].push_back(std::round((c * (f % 3) + n(rng)) * 8) / 8);
  }
  return d;
}

void BM_Dissect(benchmark::State& st) {
  const auto& pk = capture().packets;
  for (auto _ : st)
    for (const auto& p : pk) benchmark::DoNotOptimize(dissect(p));
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(pk.size()));
}
BENCHMARK(BM_Dissect)->Unit(benchmark::kMillisecond);

void BM_HeaderFeatures(benchmark::State& st) {
  const auto& pk = capture().packets;
  const HeaderExtractor ex(header_catalog());
  std::vector<Dissection> ds;
  for (const auto& p : pk) ds.push_back(dissect(p));
  for (auto _ : st)
    for (const auto& d : ds) benchmark::DoNotOptimize(ex.values(d));
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(ds.size()));
}
BENCHMARK(BM_HeaderFeatures)->Unit(benchmark::kMillisecond);

void BM_FlowExtract(benchmark::State& st) {
  const auto& c = capture();
  for (auto _ : st) benchmark::DoNotOptimize(flow_extract(c.packets, c.labels));
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(c.packets.size()));
}
BENCHMARK(BM_FlowExtract)->Unit(benchmark::kMillisecond);

void BM_WindowUpdate(benchmark::State& st) {
  const auto& pk = capture().packets;
  std::vector<Dissection> ds;
  for (const auto& p : pk) ds.push_back(dissect(p));
  for (auto _ : st) {
    WindowExtractor w;
    for (std::size_t i = 0; i < ds.size(); ++i) benchmark::DoNotOptimize(w.update(ds[i], pk[i].ts));
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(ds.size()));
}
BENCHMARK(BM_WindowUpdate)->Unit(benchmark::kMillisecond);

void BM_ForestTrain(benchmark::State& st) {
  set_thread_count(1);
  const auto d = table(static_cast<std::size_t>(st.range(0)), 8, 8, 1);
  ModelSpec s;
  s.algorithm = Algorithm::RF;
  s.n_estimators = 10;
  s.max_features = 3;
  for (auto _ : st) benchmark::DoNotOptimize(train(s, d, 7));
}
BENCHMARK(BM_ForestTrain)->Arg(2000)->Arg(16000)->Unit(benchmark::kMillisecond);

void BM_ForestPredict(benchmark::State& st) {
  set_thread_count(1);
  const auto d = table(8000, 8, 8, 2);
  ModelSpec s;
  s.algorithm = Algorithm::RF;
  s.n_estimators = 100;
  s.max_features = 3;
  const auto m = train(s, d, 7);
  for (auto _ : st) benchmark::DoNotOptimize(m.predict(d));
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(d.rows()));
}
BENCHMARK(BM_ForestPredict)->Unit(benchmark::kMillisecond);

void BM_Kappa(benchmark::State& st) {
  std::mt19937_64 rng(3);
  std::vector<std::string> names;
  std::vector<std::vector<std::uint64_t>> counts(32, std::vector<std::uint64_t>(32));
  for (std::size_t i = 0; i < 32; ++i) {
    names.push_back("c" + std::to_string(i));
    for (auto& v : counts[i]) v = rng() % 100;
  }
  const ConfusionMatrix cm(names, counts);
  for (auto _ : st) benchmark::DoNotOptimize(kappa(cm));
}
BENCHMARK(BM_Kappa);

void BM_Aggregate(benchmark::State& st) {
  std::mt19937_64 rng(4);
  ContextPredictions p;
  p.classes = {"a", "b", "c", "d"};
  for (int i = 0; i < 20000; ++i) {
    PacketPrediction r;
    r.source_key = "src" + std::to_string(i % 16);
    r.session = "s";
    r.truth = p.classes[i % 4];
    r.predicted = p.classes[rng() % 4];
    r.proba = {0.25, 0.25, 0.25, 0.25};
    p.rows.push_back(std::move(r));
  }
  for (auto _ : st) benchmark::DoNotOptimize(aggregate_predictions(p, {12}));
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(p.rows.size()));
}
BENCHMARK(BM_Aggregate)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
