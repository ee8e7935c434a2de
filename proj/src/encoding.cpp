#include "hguide/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hguide/error.hpp"

namespace hguide {

DisplacementUCS DisplacementUCS::from_polar(double d, double theta) {
  return {d * std::cos(theta), d * std::sin(theta)};
}

double DisplacementUCS::d() const { return std::hypot(x_, y_); }

double DisplacementUCS::theta() const {
  double t = std::atan2(y_, x_);
  if (t < 0.0) t += 2.0 * std::numbers::pi;
  // atan2 can return -0.0 or a tiny negative that rounds up to 2*pi
  if (t >= 2.0 * std::numbers::pi) t = 0.0;
  return t;
}

int MotorCommand::active_count() const {
  int n = 0;
  for (double m : duties()) n += (m != 0.0) ? 1 : 0;
  return n;
}

void EncoderConfig::validate() const {
  if (!(d_max > 0.0)) throw Error(ErrorCode::InvalidConfig, "d_max must be positive");
  if (!(dead_band_eps >= 0.0)) throw Error(ErrorCode::InvalidConfig, "dead_band_eps must be >= 0");
  if (!(dead_band_eps < align_tol && align_tol < d_max)) {
    throw Error(ErrorCode::InvalidConfig, "require dead_band_eps < align_tol < d_max");
  }
  if (!(completion_radius > 0.0)) throw Error(ErrorCode::InvalidConfig, "completion_radius must be positive");
  if (!(hysteresis_factor > 1.0)) throw Error(ErrorCode::InvalidConfig, "hysteresis_factor must exceed 1");
  if (!(0.0 < vp_near_fraction && vp_near_fraction < vp_far_fraction)) {
    throw Error(ErrorCode::InvalidConfig, "require 0 < vp_near_fraction < vp_far_fraction");
  }
}

std::string_view to_string(GuidanceStage stage) {
  return stage == GuidanceStage::HorizontalAlign ? "horizontal" : "vertical";
}

std::optional<GuidanceStage> parse_stage(std::string_view s) {
  if (s == "horizontal") return GuidanceStage::HorizontalAlign;
  if (s == "vertical") return GuidanceStage::VerticalAlign;
  return std::nullopt;
}

std::string_view to_string(VoiceWord word) {
  switch (word) {
    case VoiceWord::Forward: return "forward";
    case VoiceWord::Backward: return "backward";
    case VoiceWord::Left: return "left";
    case VoiceWord::Right: return "right";
  }
  return "forward";
}

std::optional<VoiceWord> parse_voice_word(std::string_view s) {
  if (s == "forward") return VoiceWord::Forward;
  if (s == "backward") return VoiceWord::Backward;
  if (s == "left") return VoiceWord::Left;
  if (s == "right") return VoiceWord::Right;
  return std::nullopt;
}

namespace {

double duty(double numerator, double d_max) { return std::clamp(numerator / d_max, 0.0, 1.0); }

}  // namespace

MotorCommand encode_vibro(const DisplacementUCS& disp, const EncoderConfig& cfg) {
  if (!(cfg.d_max > 0.0)) throw Error(ErrorCode::InvalidConfig, "d_max must be positive");
  if (disp.d() < cfg.completion_radius) return {};

  const double x = disp.x();
  const double y = disp.y();
  const double eps = cfg.dead_band_eps;
  const double dm = cfg.d_max;

  MotorCommand c;
  if (x > eps) c.m1 = duty(dm - x, dm);
  if (x < -eps) c.m3 = duty(dm + x, dm);
  if (y > eps) c.m2 = duty(dm - y, dm);
  if (y < -eps) c.m4 = duty(dm + y, dm);
  return c;
}

StagedCommand encode_vibro_staged(const DisplacementUCS& disp, GuidanceStage stage, const EncoderConfig& cfg) {
  MotorCommand full = encode_vibro(disp, cfg);
  if (disp.d() < cfg.completion_radius) return {full, stage};

  const double ax = std::abs(disp.x());
  if (stage == GuidanceStage::HorizontalAlign && ax <= cfg.align_tol) {
    stage = GuidanceStage::VerticalAlign;
  } else if (stage == GuidanceStage::VerticalAlign && ax > cfg.hysteresis_factor * cfg.align_tol) {
    stage = GuidanceStage::HorizontalAlign;
  }

  if (stage == GuidanceStage::HorizontalAlign) {
    full.m2 = 0.0;
    full.m4 = 0.0;
  } else {
    full.m1 = 0.0;
    full.m3 = 0.0;
  }
  return {full, stage};
}

double alert_frequency(double distance, const EncoderConfig& cfg) {
  const double ratio = distance / cfg.d_max;
  if (ratio > cfg.vp_far_fraction) return kAlertFarHz;
  if (ratio > cfg.vp_near_fraction) return kAlertMidHz;
  return kAlertNearHz;
}

std::optional<VoiceCue> encode_voice(const DisplacementUCS& disp, double elapsed_since_last_cue,
                                     const EncoderConfig& cfg) {
  if (!(cfg.d_max > 0.0)) throw Error(ErrorCode::InvalidConfig, "d_max must be positive");
  if (!(elapsed_since_last_cue >= 0.0)) throw Error(ErrorCode::InvalidConfig, "elapsed time must be >= 0");
  if (elapsed_since_last_cue < kVoiceCueInterval) return std::nullopt;

  const double d = disp.d();
  if (d < cfg.completion_radius) return std::nullopt;

  VoiceCue cue;
  if (std::abs(disp.x()) >= std::abs(disp.y())) {
    cue.word = disp.x() > 0.0 ? VoiceWord::Right : VoiceWord::Left;
  } else {
    cue.word = disp.y() > 0.0 ? VoiceWord::Forward : VoiceWord::Backward;
  }
  cue.alert_freq_hz = alert_frequency(d, cfg);
  return cue;
}

PwmSchedule pwm_schedule(const MotorCommand& cmd, double period_ms, double horizon_ms) {
  if (!(period_ms > 0.0)) throw Error(ErrorCode::InvalidPeriod, "period must be positive");
  if (!(horizon_ms >= period_ms)) throw Error(ErrorCode::InvalidPeriod, "horizon must cover at least one period");

  PwmSchedule out;
  const auto duties = cmd.duties();
  for (std::size_t i = 0; i < 4; ++i) {
    const double d = std::clamp(duties[i], 0.0, 1.0);
    const double on = std::round(d * period_ms * 10.0) / 10.0;
    if (on <= 0.0) continue;

    auto& intervals = out[i];
    for (long k = 0;; ++k) {
      const double start = static_cast<double>(k) * period_ms;
      if (start >= horizon_ms) break;
      const double end = std::min(start + on, horizon_ms);
      if (!intervals.empty() && intervals.back().end_ms >= start) {
        intervals.back().end_ms = end;
      } else {
        intervals.push_back({start, end});
      }
    }
  }
  return out;
}

}  // namespace hguide
