#include "hguide/trials.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <thread>

#include "hguide/error.hpp"
#include "hguide/rng.hpp"

namespace hguide {

std::string_view to_string(FeedbackMode mode) {
  switch (mode) {
    case FeedbackMode::VB: return "vb";
    case FeedbackMode::VBStaged: return "vb-staged";
    case FeedbackMode::VP: return "vp";
  }
  return "vb";
}

std::optional<FeedbackMode> parse_feedback_mode(std::string_view s) {
  if (s == "vb") return FeedbackMode::VB;
  if (s == "vb-staged") return FeedbackMode::VBStaged;
  if (s == "vp") return FeedbackMode::VP;
  return std::nullopt;
}

std::string_view to_string(AgentKind kind) {
  return kind == AgentKind::VbReactive ? "vb-reactive" : "vp-follower";
}

std::optional<AgentKind> parse_agent_kind(std::string_view s) {
  if (s == "vb-reactive") return AgentKind::VbReactive;
  if (s == "vp-follower") return AgentKind::VpFollower;
  return std::nullopt;
}

Vec2 Arena::clamp(Vec2 p) const { return {std::clamp(p.x, 0.0, width), std::clamp(p.y, 0.0, height)}; }

bool Arena::contains(Vec2 p) const { return p.x >= 0.0 && p.y >= 0.0 && p.x <= width && p.y <= height; }

void TrialConfig::validate() const {
  if (!(arena.width > 0.0) || !(arena.height > 0.0)) throw Error(ErrorCode::InvalidConfig, "arena must be non-empty");
  if (!arena.contains(start)) throw Error(ErrorCode::InvalidConfig, "start lies outside the arena");
  if (!(tick_rate > 0.0)) throw Error(ErrorCode::InvalidConfig, "tick_rate must be positive");
  if (!(max_duration > 0.0)) throw Error(ErrorCode::InvalidConfig, "max_duration must be positive");
  if (!(completion_radius > 0.0)) throw Error(ErrorCode::InvalidConfig, "completion_radius must be positive");
  if (!(min_spawn_distance >= 0.0)) throw Error(ErrorCode::InvalidConfig, "min_spawn_distance must be >= 0");
  effective_encoder().validate();

  if (endpoint) {
    if (!arena.contains(*endpoint)) throw Error(ErrorCode::InvalidConfig, "endpoint lies outside the arena");
    return;
  }
  const double m = endpoint_margin;
  if (!(m >= 0.0) || 2.0 * m >= arena.width || 2.0 * m >= arena.height) {
    throw Error(ErrorCode::InvalidConfig, "endpoint margin leaves no spawn area");
  }
  // Every spawnable endpoint must be encodable from the start position.
  const double far_x = std::max(std::abs(start.x - m), std::abs(arena.width - m - start.x));
  const double far_y = std::max(std::abs(start.y - m), std::abs(arena.height - m - start.y));
  if (std::hypot(far_x, far_y) > encoder.d_max) {
    throw Error(ErrorCode::InvalidConfig, "spawn region extends beyond d_max from the start");
  }
  if (min_spawn_distance >= std::hypot(far_x, far_y)) {
    throw Error(ErrorCode::InvalidConfig, "min_spawn_distance excludes the spawn region");
  }
}

EncoderConfig TrialConfig::effective_encoder() const {
  EncoderConfig e = encoder;
  e.completion_radius = completion_radius;
  return e;
}

void AgentModel::validate() const {
  if (!(speed > 0.0)) throw Error(ErrorCode::InvalidConfig, "agent speed must be positive");
  if (!(reaction_latency >= 0.0)) throw Error(ErrorCode::InvalidConfig, "reaction latency must be >= 0");
  if (!(motor_noise_sigma >= 0.0)) throw Error(ErrorCode::InvalidConfig, "motor noise must be >= 0");
  if (!(bout_duration > 0.0)) throw Error(ErrorCode::InvalidConfig, "bout duration must be positive");
}

AgentModel AgentModel::default_for(FeedbackMode mode) {
  AgentModel m;
  m.kind = mode == FeedbackMode::VP ? AgentKind::VpFollower : AgentKind::VbReactive;
  return m;
}

namespace {

// Steers toward the side signalled by the motors: heading along
// (m1 - m3, m2 - m4). Silent motors mean "hold".
class VbReactiveAgent final : public Agent {
 public:
  VbReactiveAgent(const AgentModel& m, std::uint64_t seed) : model_(m), rng_(seed) {}

  Vec2 step(double t, double dt, Vec2 p, const Feedback& fb) override {
    if (t < model_.reaction_latency) return p;
    const auto* cmd = std::get_if<MotorCommand>(&fb);
    if (cmd == nullptr) return p;
    const double ux = cmd->m1 - cmd->m3;
    const double uy = cmd->m2 - cmd->m4;
    if (ux == 0.0 && uy == 0.0) return p;

    double heading = std::atan2(uy, ux);
    if (model_.motor_noise_sigma > 0.0) heading += rng_.normal(0.0, model_.motor_noise_sigma);
    const double s = model_.speed * dt;
    return {p.x + s * std::cos(heading), p.y + s * std::sin(heading)};
  }

 private:
  AgentModel model_;
  Rng rng_;
};

// Follows spoken words: moves along the named axis only, starting
// reaction_latency after a cue and for at most bout_duration, then waits.
// Between cues its behaviour depends only on the last cue it heard.
class VpFollowerAgent final : public Agent {
 public:
  VpFollowerAgent(const AgentModel& m, std::uint64_t seed) : model_(m), rng_(seed) {}

  Vec2 step(double t, double dt, Vec2 p, const Feedback& fb) override {
    if (const auto* cue = std::get_if<VoiceCue>(&fb)) heard_.push_back({t, *cue});
    while (!heard_.empty() && heard_.front().t + model_.reaction_latency <= t + kTimeSlack) {
      activate(heard_.front().cue, t);
      heard_.pop_front();
    }
    if (!active_ || t >= bout_end_ - kTimeSlack) return p;

    double s = model_.speed * dt;
    // Heading noise only shortens the along-axis progress; sideways drift is
    // not modelled so segments stay axis-parallel.
    if (model_.motor_noise_sigma > 0.0) s *= std::max(0.0, std::cos(rng_.normal(0.0, model_.motor_noise_sigma)));
    return {p.x + s * dir_.x, p.y + s * dir_.y};
  }

 private:
  static constexpr double kTimeSlack = 1e-9;

  struct Heard {
    double t;
    VoiceCue cue;
  };

  void activate(const VoiceCue& cue, double now) {
    switch (cue.word) {
      case VoiceWord::Right: dir_ = {1.0, 0.0}; break;
      case VoiceWord::Left: dir_ = {-1.0, 0.0}; break;
      case VoiceWord::Forward: dir_ = {0.0, 1.0}; break;
      case VoiceWord::Backward: dir_ = {0.0, -1.0}; break;
    }
    active_ = true;
    bout_end_ = now + model_.bout_duration;
  }

  AgentModel model_;
  Rng rng_;
  std::deque<Heard> heard_;
  Vec2 dir_;
  bool active_ = false;
  double bout_end_ = 0.0;
};

}  // namespace

std::unique_ptr<Agent> make_agent(const AgentModel& model, std::uint64_t seed) {
  model.validate();
  if (model.kind == AgentKind::VpFollower) return std::make_unique<VpFollowerAgent>(model, seed);
  return std::make_unique<VbReactiveAgent>(model, seed);
}

Vec2 sample_endpoint(const TrialConfig& cfg) {
  if (cfg.endpoint) return *cfg.endpoint;
  Rng rng(derive_seed(cfg.seed, 1));
  const double m = cfg.endpoint_margin;
  for (;;) {
    const Vec2 e{rng.uniform(m, cfg.arena.width - m), rng.uniform(m, cfg.arena.height - m)};
    if (std::hypot(e.x - cfg.start.x, e.y - cfg.start.y) >= cfg.min_spawn_distance) return e;
  }
}

std::uint64_t trial_seed(std::uint64_t session_seed, std::size_t index) { return derive_seed(session_seed, index); }

TrialResult run_trial(const TrialConfig& cfg, const AgentModel& agent_model) {
  cfg.validate();
  agent_model.validate();

  const EncoderConfig enc = cfg.effective_encoder();
  const double dt = 1.0 / cfg.tick_rate;
  auto agent = make_agent(agent_model, derive_seed(cfg.seed, 2));

  TrialResult result;
  result.seed = cfg.seed;
  result.start = cfg.start;
  result.endpoint = sample_endpoint(cfg);

  Vec2 pos = cfg.start;
  GuidanceStage stage = GuidanceStage::HorizontalAlign;
  double last_cue_t = -std::numeric_limits<double>::infinity();
  auto& samples = result.trace.samples;

  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) / cfg.tick_rate;
    const DisplacementUCS disp{result.endpoint.x - pos.x, result.endpoint.y - pos.y};

    const bool reached = disp.d() < cfg.completion_radius;
    if (reached || t >= cfg.max_duration) {
      TraceSample last{t, pos, std::monostate{}, std::nullopt};
      if (cfg.mode == FeedbackMode::VBStaged) last.stage = stage;
      samples.push_back(last);
      result.outcome = {reached, t, pos.x - result.endpoint.x, pos.y - result.endpoint.y};
      break;
    }

    TraceSample sample{t, pos, std::monostate{}, std::nullopt};
    switch (cfg.mode) {
      case FeedbackMode::VB:
        sample.feedback = encode_vibro(disp, enc);
        break;
      case FeedbackMode::VBStaged: {
        const StagedCommand sc = encode_vibro_staged(disp, stage, enc);
        stage = sc.stage;
        sample.feedback = sc.command;
        sample.stage = stage;
        break;
      }
      case FeedbackMode::VP:
        if (auto cue = encode_voice(disp, t - last_cue_t, enc)) {
          last_cue_t = t;
          sample.feedback = *cue;
        }
        break;
    }
    samples.push_back(sample);
    pos = cfg.arena.clamp(agent->step(t, dt, pos, sample.feedback));
  }
  return result;
}

std::vector<TrialResult> run_session(const TrialConfig& cfg, const AgentModel& agent, std::size_t n_trials,
                                     unsigned threads) {
  if (n_trials == 0) throw Error(ErrorCode::InvalidConfig, "n_trials must be positive");
  cfg.validate();
  agent.validate();

  std::vector<TrialResult> out(n_trials);
  auto run_one = [&](std::size_t i) {
    TrialConfig c = cfg;
    c.seed = trial_seed(cfg.seed, i);
    out[i] = run_trial(c, agent);
  };

  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n_trials)));
  if (threads == 1) {
    for (std::size_t i = 0; i < n_trials; ++i) run_one(i);
    return out;
  }
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n_trials; i += threads) run_one(i);
    });
  }
  pool.clear();
  return out;
}

}  // namespace hguide
