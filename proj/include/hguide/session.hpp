#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hguide/records.hpp"
#include "hguide/trials.hpp"

namespace hguide {

// Error codes sent in error{code, msg} messages.
namespace wire_error {
inline constexpr std::string_view kBadMessage = "bad_message";
inline constexpr std::string_view kUnknownType = "unknown_type";
inline constexpr std::string_view kUnknownSession = "unknown_session";
inline constexpr std::string_view kAlreadyGreeted = "already_greeted";
inline constexpr std::string_view kInvalidMode = "invalid_mode";
inline constexpr std::string_view kTrialAlreadyActive = "trial_already_active";
inline constexpr std::string_view kNoActiveTrial = "no_active_trial";
}  // namespace wire_error

// Reasons recorded in end_reason.
namespace end_reason {
inline constexpr std::string_view kReached = "reached";
inline constexpr std::string_view kTimeout = "timeout";
inline constexpr std::string_view kAborted = "aborted";
inline constexpr std::string_view kDisconnected = "disconnected";
inline constexpr std::string_view kInterrupted = "interrupted";
}  // namespace end_reason

struct ServiceConfig {
  TrialConfig trial;  // arena, radius, duration and encoder; mode/seed set per trial
  double feedback_rate_hz = 20.0;
  std::uint64_t seed = 1;
  bool reveal = false;  // experimenter overlay; only allowed without logging
  std::string default_cohort = "live";

  void validate() const;
};

class RecordSink {
 public:
  virtual ~RecordSink() = default;
  virtual void write(const TrialRecord& rec) = 0;
};

// Appends to <dir>/live_<session>.jsonl, flushing after every record. The
// file is created on the first write.
class JsonlFileSink : public RecordSink {
 public:
  JsonlFileSink(const std::filesystem::path& dir, const std::string& session);
  void write(const TrialRecord& rec) override;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class MemorySink : public RecordSink {
 public:
  void write(const TrialRecord& rec) override { records.push_back(rec); }
  std::vector<TrialRecord> records;
};

// One participant connection. Not thread-safe; the transport must deliver
// messages for one session in order and from one thread at a time. `now` is
// server time in seconds from any fixed origin.
class Session {
 public:
  Session(const ServiceConfig& cfg, std::string id, std::uint64_t seed, std::unique_ptr<RecordSink> sink);

  // Returns the serialized replies, in order.
  std::vector<std::string> handle_text(std::string_view text, double now);
  // Ends a trial that has run out of time.
  std::vector<std::string> poll(double now);
  // Ends the open trial, if any, with the given reason.
  std::vector<std::string> close(double now, std::string_view reason);

  const std::string& id() const { return id_; }
  bool greeted() const { return participant_.has_value(); }
  bool trial_active() const { return active_.has_value(); }
  std::size_t discarded_cursors() const { return discarded_cursors_; }
  std::size_t trials_finished() const { return next_index_ - (active_ ? 1 : 0); }

  // Observer for completed trials (used for the per-trial log line).
  std::function<void(const TrialRecord&)> on_trial_end;

 private:
  struct Active {
    TrialConfig cfg;
    std::size_t index = 0;
    Vec2 endpoint;
    double t0 = 0.0;
    std::optional<Vec2> position;
    GuidanceStage stage = GuidanceStage::HorizontalAlign;
    double last_cue_t = -std::numeric_limits<double>::infinity();
    double last_feedback_t = -std::numeric_limits<double>::infinity();
    std::optional<std::string> note;
    TrialTrace trace;
    std::vector<double> t_client;
  };

  std::vector<std::string> finalize(double t, bool success, std::string_view reason);

  ServiceConfig cfg_;
  std::string id_;
  std::uint64_t seed_;
  std::unique_ptr<RecordSink> sink_;
  std::optional<std::string> participant_;
  std::string cohort_;
  std::optional<Active> active_;
  std::size_t next_index_ = 0;
  std::size_t discarded_cursors_ = 0;
};

// Owns the sessions of one server. Session ids and seeds follow connection
// order, so a server restarted with the same seed replays the same endpoint
// sequences.
class SessionService {
 public:
  // log_dir empty means records are not persisted. Session ids are
  // <id_prefix>-<n> with n counting from 1.
  SessionService(ServiceConfig cfg, std::filesystem::path log_dir, std::string id_prefix = "live");

  std::shared_ptr<Session> open();
  void release(const std::shared_ptr<Session>& s);
  // Finalizes every open trial with reason "interrupted".
  void shutdown(double now);

  const ServiceConfig& config() const { return cfg_; }
  std::function<void(const TrialRecord&)> on_trial_end;

 private:
  ServiceConfig cfg_;
  std::filesystem::path log_dir_;
  std::string id_prefix_;
  std::mutex mu_;
  std::uint64_t counter_ = 0;
  std::vector<std::weak_ptr<Session>> sessions_;
};

std::uint64_t session_seed(std::uint64_t service_seed, std::uint64_t session_number);

}  // namespace hguide
