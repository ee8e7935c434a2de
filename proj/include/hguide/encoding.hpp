#pragma once

#include <array>
#include <optional>
#include <string_view>
#include <vector>

namespace hguide {

// Hand->target offset on the horizontal user plane (+x right, +y forward).
// (x, y) is canonical; d and theta are derived on demand.
class DisplacementUCS {
 public:
  DisplacementUCS() = default;
  DisplacementUCS(double x, double y) : x_(x), y_(y) {}

  static DisplacementUCS from_polar(double d, double theta);

  double x() const { return x_; }
  double y() const { return y_; }
  double d() const;
  // Counterclockwise from +x, in [0, 2*pi).
  double theta() const;

  friend bool operator==(const DisplacementUCS&, const DisplacementUCS&) = default;

 private:
  double x_ = 0.0;
  double y_ = 0.0;
};

// PWM duty per motor in [0, 1]: m1 right, m2 front, m3 left, m4 back.
struct MotorCommand {
  double m1 = 0.0;
  double m2 = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;

  std::array<double, 4> duties() const { return {m1, m2, m3, m4}; }
  int active_count() const;
  bool silent() const { return active_count() == 0; }

  friend bool operator==(const MotorCommand&, const MotorCommand&) = default;
};

struct EncoderConfig {
  double d_max = 3.0;              // m, longest encodable distance
  double dead_band_eps = 0.005;    // m
  double completion_radius = 0.01; // m
  double align_tol = 0.01;         // m, HorizontalAlign -> VerticalAlign
  double hysteresis_factor = 2.0;  // VerticalAlign -> HorizontalAlign at factor * align_tol
  // Voice alert bands as fractions of d_max.
  double vp_near_fraction = 1.0 / 3.0;
  double vp_far_fraction = 2.0 / 3.0;

  // Throws InvalidConfig.
  void validate() const;
};

enum class GuidanceStage { HorizontalAlign, VerticalAlign };

std::string_view to_string(GuidanceStage stage);
std::optional<GuidanceStage> parse_stage(std::string_view s);

enum class VoiceWord { Forward, Backward, Left, Right };

std::string_view to_string(VoiceWord word);
std::optional<VoiceWord> parse_voice_word(std::string_view s);

inline constexpr double kAlertFarHz = 0.4;
inline constexpr double kAlertMidHz = 1.0;
inline constexpr double kAlertNearHz = 2.0;
inline constexpr double kVoiceCueInterval = 6.0;  // s

struct VoiceCue {
  VoiceWord word = VoiceWord::Forward;
  double alert_freq_hz = kAlertFarHz;

  friend bool operator==(const VoiceCue&, const VoiceCue&) = default;
};

MotorCommand encode_vibro(const DisplacementUCS& disp, const EncoderConfig& cfg);

struct StagedCommand {
  MotorCommand command;
  GuidanceStage stage = GuidanceStage::HorizontalAlign;
};

// Two-stage variant: horizontal channel only until |x| <= align_tol, then
// vertical channel only. Callers own the stage between calls.
StagedCommand encode_vibro_staged(const DisplacementUCS& disp, GuidanceStage stage, const EncoderConfig& cfg);

// Voice-prompt baseline. Returns a cue only once kVoiceCueInterval has
// elapsed since the previous one and the target is not yet reached.
std::optional<VoiceCue> encode_voice(const DisplacementUCS& disp, double elapsed_since_last_cue,
                                     const EncoderConfig& cfg);

double alert_frequency(double distance, const EncoderConfig& cfg);

struct PwmInterval {
  double start_ms = 0.0;
  double end_ms = 0.0;

  friend bool operator==(const PwmInterval&, const PwmInterval&) = default;
};

using PwmSchedule = std::array<std::vector<PwmInterval>, 4>;

// On-time per period is duty * period rounded to the nearest 0.1 ms.
// Adjacent on-intervals are merged, so duty 1 yields a single interval.
PwmSchedule pwm_schedule(const MotorCommand& cmd, double period_ms, double horizon_ms);

}  // namespace hguide
