#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "hguide/analysis.hpp"
#include "hguide/encoding.hpp"
#include "hguide/trials.hpp"

namespace hguide {

inline constexpr const char* kConfigEnvVar = "HAPTIC_GUIDE_CONFIG";

struct ServeSettings {
  int port = 8765;
  double feedback_rate_hz = 20.0;  // VB feedback cap per session
  std::uint64_t seed = 1;          // session seeds derive from this
};

// Everything a run needs besides command-line choices. The INI layout:
//
//   [encoder]   d_max dead_band_eps align_tol hysteresis_factor
//               vp_near_fraction vp_far_fraction
//   [trial]     arena_width arena_height start_x start_y endpoint_margin
//               min_spawn_distance completion_radius max_duration tick_rate
//   [agent_vb]  speed reaction_latency motor_noise_sigma bout_duration
//   [agent_vp]  (same keys)
//   [analysis]  resample_interval turn_threshold_deg
//   [serve]     port feedback_rate_hz seed
//   [session]   cohort
//
// Missing keys keep their defaults; unknown sections or keys are errors.
struct AppConfig {
  EncoderConfig encoder;
  TrialConfig trial;  // mode/seed/endpoint are filled in per run
  AgentModel vb_agent = AgentModel::default_for(FeedbackMode::VB);
  AgentModel vp_agent = AgentModel::default_for(FeedbackMode::VP);
  PathOptions analysis;
  ServeSettings serve;
  std::string cohort = "simulated";

  const AgentModel& agent_for(FeedbackMode mode) const {
    return mode == FeedbackMode::VP ? vp_agent : vb_agent;
  }
  // Validates every section; throws InvalidConfig.
  void validate() const;
};

// Throws InvalidConfig with the offending key in the message.
AppConfig parse_config(std::string_view ini_text);
AppConfig load_config(const std::filesystem::path& path);
std::string to_ini(const AppConfig& cfg);

// Agent description file: an [agent] section with kind plus the agent keys.
AgentModel load_agent_file(const std::filesystem::path& path);
AgentModel parse_agent(std::string_view ini_text);

}  // namespace hguide
