#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "hguide/encoding.hpp"

namespace hguide {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

enum class FeedbackMode { VB, VBStaged, VP };

std::string_view to_string(FeedbackMode mode);
std::optional<FeedbackMode> parse_feedback_mode(std::string_view s);

struct Arena {
  double width = 1.0;   // m
  double height = 1.0;  // m

  Vec2 clamp(Vec2 p) const;
  bool contains(Vec2 p) const;
};

struct TrialConfig {
  Arena arena;
  Vec2 start{0.5, 0.5};
  double endpoint_margin = 0.05;     // m, endpoints are uniform over the arena shrunk by this
  double min_spawn_distance = 0.10;  // m, endpoints closer to start are redrawn
  double completion_radius = 0.05;   // m
  double max_duration = 60.0;        // s
  double tick_rate = 50.0;           // Hz
  FeedbackMode mode = FeedbackMode::VB;
  std::uint64_t seed = 0;
  EncoderConfig encoder;
  std::optional<Vec2> endpoint;  // overrides sampling when set

  // Throws InvalidConfig.
  void validate() const;
  // Encoder settings as used during a trial (completion radius synced).
  EncoderConfig effective_encoder() const;
};

enum class AgentKind { VbReactive, VpFollower };

std::string_view to_string(AgentKind kind);
std::optional<AgentKind> parse_agent_kind(std::string_view s);

struct AgentModel {
  AgentKind kind = AgentKind::VbReactive;
  double speed = 0.025;              // m/s
  double reaction_latency = 0.3;     // s
  double motor_noise_sigma = 0.1;    // rad per tick
  // VpFollower only: how long the agent keeps moving after acting on a cue
  // before stopping to wait for the next one.
  double bout_duration = 4.0;        // s

  void validate() const;
  static AgentModel default_for(FeedbackMode mode);
};

using Feedback = std::variant<std::monostate, MotorCommand, VoiceCue>;

struct TraceSample {
  double t = 0.0;
  Vec2 position;
  Feedback feedback;
  std::optional<GuidanceStage> stage;
};

struct TrialTrace {
  std::vector<TraceSample> samples;
};

struct TrialOutcome {
  bool success = false;
  double completion_time = 0.0;
  double final_error_x = 0.0;  // position - endpoint at termination
  double final_error_y = 0.0;
};

struct TrialResult {
  std::uint64_t seed = 0;
  Vec2 start;
  Vec2 endpoint;
  TrialTrace trace;
  TrialOutcome outcome;
};

// A simulated participant; advances the cursor one tick given the feedback
// emitted on that tick (monostate when the encoder produced nothing).
class Agent {
 public:
  virtual ~Agent() = default;
  virtual Vec2 step(double t, double dt, Vec2 position, const Feedback& feedback) = 0;
};

std::unique_ptr<Agent> make_agent(const AgentModel& model, std::uint64_t seed);

Vec2 sample_endpoint(const TrialConfig& cfg);

// Per-trial seed inside a session.
std::uint64_t trial_seed(std::uint64_t session_seed, std::size_t index);

TrialResult run_trial(const TrialConfig& cfg, const AgentModel& agent);

// cfg.seed is the session seed; trial i runs with trial_seed(cfg.seed, i).
// Trials are independent and may run on several threads.
std::vector<TrialResult> run_session(const TrialConfig& cfg, const AgentModel& agent, std::size_t n_trials,
                                     unsigned threads = 1);

}  // namespace hguide
