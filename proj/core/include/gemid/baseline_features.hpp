#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "gemid/dissect.hpp"
#include "gemid/labels.hpp"
#include "gemid/pcap.hpp"
#include "gemid/schema.hpp"

namespace gemid {

// ---------------------------------------------------------------------------
// Bidirectional flows

struct FlowKey {
  std::array<std::uint8_t, 16> lo_ip{}, hi_ip{};
  std::uint16_t lo_port = 0, hi_port = 0;
  std::uint8_t proto = 0;

  /// Canonical key: both directions of a conversation map to the same key.
  static FlowKey of(const IpLayer& ip, std::uint16_t sport, std::uint16_t dport);
  friend auto operator<=>(const FlowKey&, const FlowKey&) = default;
};

/// What the accumulator needs from one packet.
struct FlowPacket {
  Timestamp ts;
  bool forward = true;
  std::uint32_t payload_len = 0;  // L4 payload bytes
  std::uint32_t header_len = 0;   // L4 header bytes
  std::uint16_t tcp_flags = 0;
  std::int32_t window = -1;  // -1 when not TCP
};

/// Running min/max/mean/std over a sequence (sample std, n-1).
struct RunningStat {
  std::uint64_t n = 0;
  double sum = 0, min = 0, max = 0;
  double mean_ = 0, m2 = 0;

  void add(double v);
  double mean() const { return n ? mean_ : 0.0; }
  double var() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  double std() const;
  double total() const { return sum; }
};

struct FlowDirection {
  std::uint64_t packets = 0;
  RunningStat length;  // payload lengths
  RunningStat iat;     // seconds between packets of this direction
  std::uint64_t header_bytes = 0;
  std::int32_t init_window = -1;
  std::uint64_t fin = 0, syn = 0, rst = 0, psh = 0, ack = 0, urg = 0;
  Timestamp last;
};

/// Symmetric per-flow state; the emitted feature list is a projection of it.
class FlowAccumulator {
 public:
  explicit FlowAccumulator(double activity_timeout = 5.0) : activity_timeout_(activity_timeout) {}

  void add(const FlowPacket& p);
  /// Closes the trailing active period; call once before reading features.
  void finish();

  const FlowDirection& fwd() const { return fwd_; }
  const FlowDirection& bwd() const { return bwd_; }
  const RunningStat& length() const { return all_len_; }
  const RunningStat& iat() const { return flow_iat_; }
  const RunningStat& active() const { return active_; }
  const RunningStat& idle() const { return idle_; }
  Timestamp start() const { return start_; }
  Timestamp end() const { return end_; }
  double duration() const { return (end_.micros - start_.micros) / 1e6; }
  std::uint64_t packets() const { return fwd_.packets + bwd_.packets; }

 private:
  double activity_timeout_;
  FlowDirection fwd_, bwd_;
  RunningStat all_len_, flow_iat_, active_, idle_;
  Timestamp start_, end_, active_start_, active_end_;
  bool started_ = false;
};

struct FlowConfig {
  double idle_timeout = 120.0;
  double activity_timeout = 5.0;
};

struct FlowResult {
  FlowKey key;
  std::vector<double> values;  // aligned with flow_schema()
  std::string label;
  MacAddress forward_source;
  Timestamp start;
  std::uint64_t first_frame = 0;  // 1-based frame of the opening packet
  std::uint16_t src_port = 0;
};

/// Projection of a finished accumulator onto flow_schema().
std::vector<double> flow_feature_vector(const FlowAccumulator& acc, std::uint8_t proto,
                                        std::uint16_t src_port);

/// Groups IP packets into flows (idle timeout, RST, or FIN seen from both
/// sides) and emits one vector per flow whose forward source MAC is
/// labeled, ordered by opening frame.
std::vector<FlowResult> flow_extract(std::span<const RawPacket> packets, const LabelMap& labels,
                                     const FlowConfig& cfg = {});

const FeatureSchema& flow_schema();

// ---------------------------------------------------------------------------
// Damped window statistics

class DampedStat {
 public:
  explicit DampedStat(double lambda = 1.0) : lambda_(lambda) {}

  /// Applies decay up to t. Throws OutOfOrderError when t precedes the
  /// last update.
  void decay(double t);
  void insert(double v, double t);

  double weight() const { return w_; }
  double mean() const { return w_ > 0 ? ls_ / w_ : 0.0; }
  double var() const;
  double std() const;
  double lambda() const { return lambda_; }
  double last_update() const { return last_; }

 private:
  double lambda_;
  double w_ = 0, ls_ = 0, ss_ = 0;
  double last_ = 0;
  bool started_ = false;
};

/// sqrt(mean_i^2 + mean_j^2)
double damped_magnitude(double mean_i, double mean_j);
/// sqrt(var_i^2 + var_j^2)
double damped_radius(double var_i, double var_j);

/// Residual-product covariance between the two directions of a stream
/// pair, decayed jointly.
class DampedCov {
 public:
  explicit DampedCov(double lambda = 1.0) : lambda_(lambda) {}
  /// Records the residual of a fresh insert on side `side` (0 or 1).
  void update(int side, double residual, double t);
  double cov() const { return w_ > 0 ? cf_ / w_ : 0.0; }

 private:
  double lambda_;
  double cf_ = 0, w_ = 0, last_ = 0;
  std::array<double, 2> last_res_{};
  bool started_ = false;
};

inline const std::vector<double>& default_lambdas() {
  static const std::vector<double> l = {5, 3, 1, 0.1, 0.01};
  return l;
}

/// Kitsune-style incremental extractor. State is fed by every packet and
/// persists until reset().
class WindowExtractor {
 public:
  explicit WindowExtractor(std::vector<double> lambdas = default_lambdas());

  /// Updates all stream families with this packet and returns its
  /// feature vector (aligned with window_schema for the default lambdas).
  std::vector<double> update(const Dissection& d, Timestamp ts);
  void reset();

  std::size_t width() const { return lambdas_.size() * 20; }

 private:
  struct Stream1D {
    std::vector<DampedStat> stats;
    std::vector<double> last_residual;
    double last_seen = -1;
  };
  struct Pair {
    std::vector<DampedCov> cov;
  };

  Stream1D& stream(std::unordered_map<std::string, Stream1D>& m, const std::string& key);
  void emit_1d(std::vector<double>& out, Stream1D& s, double v, double t);
  void emit_2d(std::vector<double>& out, std::unordered_map<std::string, Stream1D>& m,
               const std::string& key, const std::string& reverse, double v, double t);

  std::vector<double> lambdas_;
  std::unordered_map<std::string, Stream1D> mi_, hh_, jit_, hphp_;
  std::map<std::string, Pair> pairs_;
};

const FeatureSchema& window_schema();

}  // namespace gemid
