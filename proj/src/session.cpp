#include "hguide/session.hpp"

#include <algorithm>
#include <cmath>

#include "hguide/error.hpp"
#include "hguide/rng.hpp"
#include "json.hpp"

namespace hguide {

using json = nlohmann::json;
using ordered = nlohmann::ordered_json;

namespace {

std::string error_msg(std::string_view code, const std::string& msg) {
  ordered j;
  j["type"] = "error";
  j["code"] = code;
  j["msg"] = msg;
  return j.dump();
}

std::optional<double> number_field(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number()) return std::nullopt;
  return it->get<double>();
}

}  // namespace

void ServiceConfig::validate() const {
  trial.validate();
  if (!(feedback_rate_hz > 0.0)) throw Error(ErrorCode::InvalidConfig, "feedback_rate_hz must be > 0");
  if (default_cohort.empty()) throw Error(ErrorCode::InvalidConfig, "cohort must not be empty");
}

std::uint64_t session_seed(std::uint64_t service_seed, std::uint64_t session_number) {
  return derive_seed(service_seed, session_number);
}

JsonlFileSink::JsonlFileSink(const std::filesystem::path& dir, const std::string& session)
    : path_(dir / ("live_" + session + ".jsonl")) {}

void JsonlFileSink::write(const TrialRecord& rec) {
  if (!out_.is_open()) {
    std::filesystem::create_directories(path_.parent_path());
    out_.open(path_, std::ios::app | std::ios::binary);
    if (!out_) throw std::runtime_error("cannot open " + path_.string());
  }
  out_ << to_json_line(rec) << '\n';
  out_.flush();
  if (!out_) throw std::runtime_error("write failed: " + path_.string());
}

Session::Session(const ServiceConfig& cfg, std::string id, std::uint64_t seed, std::unique_ptr<RecordSink> sink)
    : cfg_(cfg), id_(std::move(id)), seed_(seed), sink_(std::move(sink)), cohort_(cfg.default_cohort) {}

std::vector<std::string> Session::handle_text(std::string_view text, double now) {
  json msg;
  try {
    msg = json::parse(text);
  } catch (const json::parse_error&) {
    return {error_msg(wire_error::kBadMessage, "not valid JSON")};
  }
  if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) {
    return {error_msg(wire_error::kBadMessage, "message needs a string 'type'")};
  }
  const std::string type = msg["type"].get<std::string>();

  if (type == "hello") {
    if (participant_) return {error_msg(wire_error::kAlreadyGreeted, "hello was already received")};
    if (!msg.contains("participant") || !msg["participant"].is_string() ||
        msg["participant"].get<std::string>().empty()) {
      return {error_msg(wire_error::kBadMessage, "hello needs a non-empty 'participant'")};
    }
    participant_ = msg["participant"].get<std::string>();
    if (msg.contains("cohort") && msg["cohort"].is_string() && !msg["cohort"].get<std::string>().empty()) {
      cohort_ = msg["cohort"].get<std::string>();
    }
    ordered w;
    w["type"] = "welcome";
    w["session"] = id_;
    w["participant"] = *participant_;
    w["reveal"] = cfg_.reveal;
    return {w.dump()};
  }

  if (type != "start_trial" && type != "cursor" && type != "abort") {
    return {error_msg(wire_error::kUnknownType, "unknown message type '" + type + "'")};
  }
  if (!participant_) return {error_msg(wire_error::kUnknownSession, "send hello first")};

  if (type == "start_trial") {
    if (active_) return {error_msg(wire_error::kTrialAlreadyActive, "a trial is already running")};
    const auto mode_it = msg.find("mode");
    const auto mode = (mode_it != msg.end() && mode_it->is_string())
                          ? parse_feedback_mode(mode_it->get<std::string>())
                          : std::nullopt;
    if (!mode) return {error_msg(wire_error::kInvalidMode, "mode must be vb, vb-staged or vp")};

    Active a;
    a.cfg = cfg_.trial;
    a.cfg.mode = *mode;
    a.cfg.seed = trial_seed(seed_, next_index_);
    a.cfg.endpoint.reset();
    a.index = next_index_++;
    a.endpoint = sample_endpoint(a.cfg);
    a.t0 = now;
    if (msg.contains("note") && msg["note"].is_string()) a.note = msg["note"].get<std::string>();
    active_ = std::move(a);

    const std::string trial_id = id_ + "/" + std::to_string(active_->index);
    ordered s;
    s["type"] = "trial_started";
    s["trial_id"] = trial_id;
    s["trial_index"] = active_->index;
    s["mode"] = to_string(*mode);
    s["arena"] = {{"width", cfg_.trial.arena.width}, {"height", cfg_.trial.arena.height}};
    s["completion_radius"] = cfg_.trial.completion_radius;
    s["max_duration"] = cfg_.trial.max_duration;
    std::vector<std::string> out{s.dump()};
    if (cfg_.reveal) {
      ordered r;
      r["type"] = "reveal";
      r["trial_id"] = trial_id;
      r["endpoint"] = {active_->endpoint.x, active_->endpoint.y};
      out.push_back(r.dump());
    }
    return out;
  }

  if (type == "abort") {
    if (!active_) return {error_msg(wire_error::kNoActiveTrial, "no trial to abort")};
    return finalize(now - active_->t0, false, end_reason::kAborted);
  }

  // cursor
  const auto x = number_field(msg, "x");
  const auto y = number_field(msg, "y");
  const auto tc = number_field(msg, "t_client");
  if (!x || !y || !tc) return {error_msg(wire_error::kBadMessage, "cursor needs numeric x, y and t_client")};
  if (!active_) {
    ++discarded_cursors_;
    return {};
  }

  Active& a = *active_;
  const double t = now - a.t0;
  if (t >= a.cfg.max_duration) return finalize(a.cfg.max_duration, false, end_reason::kTimeout);

  const Vec2 pos = a.cfg.arena.clamp({*x, *y});
  a.position = pos;
  const DisplacementUCS disp{a.endpoint.x - pos.x, a.endpoint.y - pos.y};
  if (disp.d() < a.cfg.completion_radius) {
    a.t_client.push_back(*tc);
    return finalize(t, true, end_reason::kReached);
  }

  const EncoderConfig enc = a.cfg.effective_encoder();
  TraceSample sample{t, pos, std::monostate{}, std::nullopt};
  std::vector<std::string> out;
  switch (a.cfg.mode) {
    case FeedbackMode::VB:
    case FeedbackMode::VBStaged: {
      MotorCommand cmd;
      if (a.cfg.mode == FeedbackMode::VB) {
        cmd = encode_vibro(disp, enc);
      } else {
        const StagedCommand sc = encode_vibro_staged(disp, a.stage, enc);
        a.stage = sc.stage;
        cmd = sc.command;
        sample.stage = a.stage;
      }
      if ((t - a.last_feedback_t) * cfg_.feedback_rate_hz >= 1.0) {
        a.last_feedback_t = t;
        sample.feedback = cmd;
        ordered f;
        f["type"] = "feedback";
        f["t"] = t;
        f["m1"] = cmd.m1;
        f["m2"] = cmd.m2;
        f["m3"] = cmd.m3;
        f["m4"] = cmd.m4;
        f["stage"] = sample.stage ? ordered(to_string(*sample.stage)) : ordered(nullptr);
        out.push_back(f.dump());
      }
      break;
    }
    case FeedbackMode::VP:
      if (auto cue = encode_voice(disp, t - a.last_cue_t, enc)) {
        a.last_cue_t = t;
        sample.feedback = *cue;
        ordered v;
        v["type"] = "voice";
        v["t"] = t;
        v["word"] = to_string(cue->word);
        v["freq_hz"] = cue->alert_freq_hz;
        out.push_back(v.dump());
      }
      break;
  }
  a.trace.samples.push_back(sample);
  a.t_client.push_back(*tc);
  return out;
}

std::vector<std::string> Session::poll(double now) {
  if (!active_ || now - active_->t0 < active_->cfg.max_duration) return {};
  return finalize(active_->cfg.max_duration, false, end_reason::kTimeout);
}

std::vector<std::string> Session::close(double now, std::string_view reason) {
  if (!active_) return {};
  const double t = std::min(now - active_->t0, active_->cfg.max_duration);
  return finalize(t, false, reason);
}

// Mirrors the termination step of run_trial: a final feedback-free sample at
// the last known position, and the outcome measured from it.
std::vector<std::string> Session::finalize(double t, bool success, std::string_view reason) {
  Active a = std::move(*active_);
  active_.reset();

  const Vec2 pos = a.position.value_or(a.cfg.start);
  TraceSample last{t, pos, std::monostate{}, std::nullopt};
  if (a.cfg.mode == FeedbackMode::VBStaged) last.stage = a.stage;
  a.trace.samples.push_back(last);
  // Every trace sample carries a client timestamp; the synthetic final
  // sample repeats the latest one unless it came from a cursor message.
  if (a.t_client.size() < a.trace.samples.size()) {
    a.t_client.push_back(a.t_client.empty() ? 0.0 : a.t_client.back());
  }

  TrialRecord rec;
  rec.session = id_;
  rec.trial_index = a.index;
  rec.mode = a.cfg.mode;
  rec.cohort = cohort_;
  rec.seed = a.cfg.seed;
  rec.arena = a.cfg.arena;
  rec.start = a.trace.samples.front().position;
  rec.endpoint = a.endpoint;
  rec.completion_radius = a.cfg.completion_radius;
  rec.max_duration = a.cfg.max_duration;
  rec.outcome = {success, t, pos.x - a.endpoint.x, pos.y - a.endpoint.y};
  rec.trace = std::move(a.trace);
  rec.participant = participant_;
  rec.live = true;
  rec.note = a.note;
  rec.end_reason = std::string(reason);
  rec.t_client = std::move(a.t_client);

  if (sink_) sink_->write(rec);
  if (on_trial_end) on_trial_end(rec);

  ordered e;
  e["type"] = "trial_ended";
  e["trial_id"] = id_ + "/" + std::to_string(a.index);
  e["outcome"] = {{"success", success},
                  {"completion_time", t},
                  {"final_error_x", rec.outcome.final_error_x},
                  {"final_error_y", rec.outcome.final_error_y},
                  {"end_reason", reason}};
  e["endpoint"] = {a.endpoint.x, a.endpoint.y};
  return {e.dump()};
}

SessionService::SessionService(ServiceConfig cfg, std::filesystem::path log_dir, std::string id_prefix)
    : cfg_(std::move(cfg)), log_dir_(std::move(log_dir)), id_prefix_(std::move(id_prefix)) {
  cfg_.validate();
  if (cfg_.reveal && !log_dir_.empty()) {
    throw Error(ErrorCode::InvalidConfig, "reveal is only allowed when trials are not logged");
  }
}

std::shared_ptr<Session> SessionService::open() {
  std::lock_guard lock(mu_);
  const std::uint64_t n = ++counter_;
  const std::string id = id_prefix_ + "-" + std::to_string(n);
  std::unique_ptr<RecordSink> sink;
  if (!log_dir_.empty()) sink = std::make_unique<JsonlFileSink>(log_dir_, id);
  auto s = std::make_shared<Session>(cfg_, id, session_seed(cfg_.seed, n), std::move(sink));
  s->on_trial_end = [this](const TrialRecord& r) {
    if (on_trial_end) on_trial_end(r);
  };
  std::erase_if(sessions_, [](const auto& w) { return w.expired(); });
  sessions_.push_back(s);
  return s;
}

void SessionService::release(const std::shared_ptr<Session>& s) {
  std::lock_guard lock(mu_);
  std::erase_if(sessions_, [&](const auto& w) {
    const auto p = w.lock();
    return !p || p == s;
  });
}

void SessionService::shutdown(double now) {
  std::vector<std::shared_ptr<Session>> live;
  {
    std::lock_guard lock(mu_);
    for (const auto& w : sessions_) {
      if (auto p = w.lock()) live.push_back(std::move(p));
    }
  }
  for (const auto& s : live) s->close(now, end_reason::kInterrupted);
}

}  // namespace hguide
