#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gemid/labels.hpp"

namespace gemid {

/// Environment-independent behaviour of one device. Devices of the same
/// `group` share every length-shaping habit and differ only in header
/// fields, so statistics over lengths and timing cannot tell them apart.
struct DeviceProfile {
  std::string name;
  MacAddress mac;
  int group = 0;

  // Header signature.
  int ttl = 64;
  bool df = true;
  int ip_id_mode = 1;  // 0 always zero, 1 per-device counter, 2 random
  int window_base = 29200;
  int window_step = 0;  // window = base + step * U{0..3}
  int mss = 1460;
  int wscale = 7;  // -1 omits the option
  bool sack_perm = true;
  bool timestamps = true;
  int ntp_version = 4;
  int ntp_poll = 6;
  int ntp_precision = -20;
  bool udp_checksum = true;

  // Group habits.
  std::array<double, 4> mix{0.8, 0.1, 0.05, 0.05};  // tcp, dns, ntp, ssdp
  double payload_mean = 300, payload_sd = 40;
  double response_mean = 200;  // server payload bytes before environment scaling
  int rounds = 8;  // request/response exchanges per TCP session
  std::uint16_t service_port = 443;
  bool http = false;
  enum class Close { Fin, Rst, ServerFin };  // how TCP sessions end
  Close close = Close::Fin;
  std::vector<std::string> dns_names;
  std::string ssdp_target = "ssdp:all";

  // Environment-coupled habits planted by plant_confounder, per
  // environment index. Used with probability `confound` per conversation.
  double confound = 0;
  std::array<int, 2> env_dscp{0, 0};
  std::array<std::uint16_t, 2> env_port{0, 0};
};

/// Timing and volume of one capture environment. Never touches header
/// signature fields.
struct EnvironmentProfile {
  std::string name;
  double iat_scale = 1.0;          // multiplies every device gap
  double gateway_latency = 0.004;  // seconds, DNS answers
  double flow_multiplier = 1.0;    // scales TCP exchanges per session
  double response_scale = 1.0;     // scales server payloads
  int answers = 1;                 // DNS answer records per response
  int noise_devices = 2;           // unlabeled chatter
  std::array<std::uint8_t, 3> subnet{192, 168, 1};
  std::uint16_t server_window = 65535;
  // Per-device timing, indexed like the device list.
  std::vector<double> gap;    // mean seconds between conversations
  std::vector<double> rtt;    // server round trip, seconds
  std::vector<double> think;  // device pause between exchanges, seconds
};

struct SynthConfig {
  int devices = 8;
  int packets = 2000;  // labeled packets per device per environment (floor; the last conversation completes)
  int sessions_per_env = 2;
  double confounder = 0.7;
  std::uint64_t seed = 42;
};

/// Default look-alike pairs; needs at least 4 devices.
std::vector<DeviceProfile> default_devices(int n, std::uint64_t seed);

/// Two environments whose per-device timing ladders are cyclic shifts of
/// each other, so no device keeps its timing across environments.
std::array<EnvironmentProfile, 2> default_environments(int n_devices, std::uint64_t seed);

/// Gives every device an environment-specific DSCP mark and TCP port,
/// used with probability `strength`. The second environment's tables are
/// cyclically shifted so a value names a different device there. Strength
/// 0 clears them. Throws InputError outside [0, 1].
std::vector<DeviceProfile> plant_confounder(std::vector<DeviceProfile> devices, double strength);

struct SynthSession {
  std::filesystem::path pcap;
  std::string family;   // environment name
  std::string session;  // pcap stem
};

struct SynthResult {
  std::vector<SynthSession> sessions;
  std::filesystem::path labels;
  std::filesystem::path ground_truth;
  std::vector<std::string> invariant;   // planted device-signature features
  std::vector<std::string> confounded;  // planted environment-coupled features
};

/// Writes <env>-s<k>.pcap per environment and session, labels.csv and
/// ground_truth.json into `dir`. Output bytes depend only on the inputs.
/// Throws InputError on MAC collisions or fewer than 4 devices.
SynthResult generate(const std::vector<DeviceProfile>& devices, const std::array<EnvironmentProfile, 2>& envs,
                     const SynthConfig& cfg, const std::filesystem::path& dir);

/// default_devices + default_environments + plant_confounder + generate.
SynthResult synthesize(const SynthConfig& cfg, const std::filesystem::path& dir);

/// Feature names the generator plants, for ground truth.
std::vector<std::string> planted_invariant_features();
std::vector<std::string> planted_confounded_features();

}  // namespace gemid
