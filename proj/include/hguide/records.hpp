#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hguide/trials.hpp"

namespace hguide {

inline constexpr std::string_view kTrialSchema = "hguide.trial.v1";

// One line of a session JSONL file. Simulated and live trials share this
// layout; live records additionally carry participant/live/end_reason and
// client timestamps.
struct TrialRecord {
  std::string session;
  std::size_t trial_index = 0;
  FeedbackMode mode = FeedbackMode::VB;
  std::string cohort = "simulated";
  std::uint64_t seed = 0;
  std::optional<AgentModel> agent;
  Arena arena;
  Vec2 start;
  Vec2 endpoint;
  double completion_radius = 0.0;
  double max_duration = 0.0;
  std::optional<double> tick_rate;  // absent for live trials
  TrialOutcome outcome;
  TrialTrace trace;

  // live-only
  std::optional<std::string> participant;
  bool live = false;
  std::optional<std::string> note;
  std::optional<std::string> end_reason;
  std::vector<double> t_client;
};

TrialRecord make_record(const TrialResult& result, const TrialConfig& cfg, const AgentModel& agent,
                        std::string session, std::size_t trial_index, std::string cohort);

std::string to_json_line(const TrialRecord& rec);

// Throws MalformedRecord.
TrialRecord parse_record(std::string_view line);

struct MalformedLine {
  std::filesystem::path file;
  std::size_t line = 0;
  std::string message;
};

// Reads every non-blank line; the first bad line is reported with its
// 1-based number via MalformedRecordError.
std::vector<TrialRecord> read_jsonl(std::istream& in, const std::filesystem::path& name = {});
std::vector<TrialRecord> read_jsonl_file(const std::filesystem::path& path);

class MalformedRecordError : public std::runtime_error {
 public:
  explicit MalformedRecordError(MalformedLine info);
  const MalformedLine& info() const { return info_; }

 private:
  MalformedLine info_;
};

}  // namespace hguide
