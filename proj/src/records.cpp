#include "hguide/records.hpp"

#include <fstream>
#include <istream>

#include "json.hpp"

#include "hguide/error.hpp"

namespace hguide {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

TrialRecord make_record(const TrialResult& result, const TrialConfig& cfg, const AgentModel& agent,
                        std::string session, std::size_t trial_index, std::string cohort) {
  TrialRecord r;
  r.session = std::move(session);
  r.trial_index = trial_index;
  r.mode = cfg.mode;
  r.cohort = std::move(cohort);
  r.seed = result.seed;
  r.agent = agent;
  r.arena = cfg.arena;
  r.start = result.start;
  r.endpoint = result.endpoint;
  r.completion_radius = cfg.completion_radius;
  r.max_duration = cfg.max_duration;
  r.tick_rate = cfg.tick_rate;
  r.outcome = result.outcome;
  r.trace = result.trace;
  return r;
}

namespace {

ordered vec_json(Vec2 v) { return ordered::array({v.x, v.y}); }

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::MalformedRecord, what); }

Vec2 vec_from(const json& j, const char* field) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    bad(std::string(field) + " must be [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

double number(const json& obj, const char* field) {
  const auto it = obj.find(field);
  if (it == obj.end() || !it->is_number()) bad(std::string("missing numeric field '") + field + "'");
  return it->get<double>();
}

std::string text(const json& obj, const char* field) {
  const auto it = obj.find(field);
  if (it == obj.end() || !it->is_string()) bad(std::string("missing string field '") + field + "'");
  return it->get<std::string>();
}

std::vector<double> numbers(const json& obj, const char* field) {
  const auto it = obj.find(field);
  if (it == obj.end() || !it->is_array()) bad(std::string("missing array '") + field + "'");
  std::vector<double> out;
  out.reserve(it->size());
  for (const auto& v : *it) {
    if (!v.is_number()) bad(std::string("non-numeric entry in '") + field + "'");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

std::string to_json_line(const TrialRecord& rec) {
  ordered j;
  j["schema"] = kTrialSchema;
  j["session"] = rec.session;
  j["trial_index"] = rec.trial_index;
  j["mode"] = to_string(rec.mode);
  j["cohort"] = rec.cohort;
  j["seed"] = rec.seed;
  if (rec.participant) j["participant"] = *rec.participant;
  if (rec.live) j["live"] = true;
  if (rec.note) j["note"] = *rec.note;
  if (rec.agent) {
    const auto& a = *rec.agent;
    j["agent"] = {{"kind", to_string(a.kind)},
                  {"speed", a.speed},
                  {"reaction_latency", a.reaction_latency},
                  {"motor_noise_sigma", a.motor_noise_sigma},
                  {"bout_duration", a.bout_duration}};
  }
  j["arena"] = {{"width", rec.arena.width}, {"height", rec.arena.height}};
  j["start"] = vec_json(rec.start);
  j["endpoint"] = vec_json(rec.endpoint);
  j["completion_radius"] = rec.completion_radius;
  j["max_duration"] = rec.max_duration;
  j["tick_rate"] = rec.tick_rate ? ordered(*rec.tick_rate) : ordered(nullptr);
  if (rec.end_reason) j["end_reason"] = *rec.end_reason;
  j["outcome"] = {{"success", rec.outcome.success},
                  {"completion_time", rec.outcome.completion_time},
                  {"final_error_x", rec.outcome.final_error_x},
                  {"final_error_y", rec.outcome.final_error_y}};

  ordered t = ordered::array(), x = ordered::array(), y = ordered::array();
  ordered motors = ordered::array(), stages = ordered::array(), cues = ordered::array();
  bool has_motors = rec.mode != FeedbackMode::VP;
  bool has_stage = rec.mode == FeedbackMode::VBStaged;
  for (std::size_t i = 0; i < rec.trace.samples.size(); ++i) {
    const auto& s = rec.trace.samples[i];
    t.push_back(s.t);
    x.push_back(s.position.x);
    y.push_back(s.position.y);
    if (const auto* m = std::get_if<MotorCommand>(&s.feedback)) {
      motors.push_back({m->m1, m->m2, m->m3, m->m4});
    } else {
      motors.push_back(nullptr);
    }
    stages.push_back(s.stage ? ordered(to_string(*s.stage)) : ordered(nullptr));
    if (const auto* c = std::get_if<VoiceCue>(&s.feedback)) {
      cues.push_back({{"i", i}, {"word", to_string(c->word)}, {"freq_hz", c->alert_freq_hz}});
    }
  }
  ordered trace;
  trace["t"] = std::move(t);
  trace["x"] = std::move(x);
  trace["y"] = std::move(y);
  if (has_motors) trace["motors"] = std::move(motors);
  if (has_stage) trace["stage"] = std::move(stages);
  if (rec.mode == FeedbackMode::VP) trace["cues"] = std::move(cues);
  if (rec.live) trace["t_client"] = rec.t_client;
  j["trace"] = std::move(trace);

  return j.dump();
}

TrialRecord parse_record(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    bad(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) bad("record is not a JSON object");

  try {
    TrialRecord r;
    if (text(j, "schema") != kTrialSchema) bad("unsupported schema '" + text(j, "schema") + "'");
    r.session = text(j, "session");
    if (!j.contains("trial_index") || !j["trial_index"].is_number_unsigned()) bad("missing 'trial_index'");
    r.trial_index = j["trial_index"].get<std::size_t>();
    const auto mode = parse_feedback_mode(text(j, "mode"));
    if (!mode) bad("unknown mode '" + text(j, "mode") + "'");
    r.mode = *mode;
    r.cohort = text(j, "cohort");
    if (!j.contains("seed") || !j["seed"].is_number_unsigned()) bad("missing 'seed'");
    r.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("participant")) r.participant = text(j, "participant");
    r.live = j.value("live", false);
    if (j.contains("note")) r.note = text(j, "note");
    if (j.contains("end_reason")) r.end_reason = text(j, "end_reason");

    if (j.contains("agent") && !j["agent"].is_null()) {
      const json& a = j["agent"];
      AgentModel m;
      const auto kind = parse_agent_kind(text(a, "kind"));
      if (!kind) bad("unknown agent kind");
      m.kind = *kind;
      m.speed = number(a, "speed");
      m.reaction_latency = number(a, "reaction_latency");
      m.motor_noise_sigma = number(a, "motor_noise_sigma");
      m.bout_duration = number(a, "bout_duration");
      r.agent = m;
    }
    if (!j.contains("arena") || !j["arena"].is_object()) bad("missing 'arena'");
    r.arena = {number(j["arena"], "width"), number(j["arena"], "height")};
    if (!j.contains("start") || !j.contains("endpoint")) bad("missing start/endpoint");
    r.start = vec_from(j["start"], "start");
    r.endpoint = vec_from(j["endpoint"], "endpoint");
    r.completion_radius = number(j, "completion_radius");
    r.max_duration = number(j, "max_duration");
    if (j.contains("tick_rate") && !j["tick_rate"].is_null()) r.tick_rate = number(j, "tick_rate");

    if (!j.contains("outcome") || !j["outcome"].is_object()) bad("missing 'outcome'");
    const json& o = j["outcome"];
    if (!o.contains("success") || !o["success"].is_boolean()) bad("missing 'outcome.success'");
    r.outcome.success = o["success"].get<bool>();
    r.outcome.completion_time = number(o, "completion_time");
    r.outcome.final_error_x = number(o, "final_error_x");
    r.outcome.final_error_y = number(o, "final_error_y");

    if (!j.contains("trace") || !j["trace"].is_object()) bad("missing 'trace'");
    const json& tr = j["trace"];
    const auto t = numbers(tr, "t");
    const auto x = numbers(tr, "x");
    const auto y = numbers(tr, "y");
    if (t.size() != x.size() || t.size() != y.size()) bad("trace columns differ in length");
    r.trace.samples.resize(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) r.trace.samples[i] = {t[i], {x[i], y[i]}, std::monostate{}, std::nullopt};

    if (tr.contains("motors")) {
      const json& m = tr["motors"];
      if (!m.is_array() || m.size() != t.size()) bad("trace.motors length mismatch");
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (m[i].is_null()) continue;
        if (!m[i].is_array() || m[i].size() != 4) bad("trace.motors entries must be [m1, m2, m3, m4]");
        r.trace.samples[i].feedback =
            MotorCommand{m[i][0].get<double>(), m[i][1].get<double>(), m[i][2].get<double>(), m[i][3].get<double>()};
      }
    }
    if (tr.contains("stage")) {
      const json& s = tr["stage"];
      if (!s.is_array() || s.size() != t.size()) bad("trace.stage length mismatch");
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (s[i].is_null()) continue;
        const auto st = parse_stage(s[i].get<std::string>());
        if (!st) bad("unknown stage");
        r.trace.samples[i].stage = st;
      }
    }
    if (tr.contains("cues")) {
      for (const auto& c : tr["cues"]) {
        if (!c.contains("i") || !c["i"].is_number_unsigned()) bad("cue without sample index");
        const auto i = c["i"].get<std::size_t>();
        if (i >= t.size()) bad("cue index out of range");
        const auto word = parse_voice_word(text(c, "word"));
        if (!word) bad("unknown cue word");
        r.trace.samples[i].feedback = VoiceCue{*word, number(c, "freq_hz")};
      }
    }
    if (tr.contains("t_client")) r.t_client = numbers(tr, "t_client");
    return r;
  } catch (const json::exception& e) {
    bad(e.what());
  }
}

MalformedRecordError::MalformedRecordError(MalformedLine info)
    : std::runtime_error(info.file.string() + ":" + std::to_string(info.line) + ": " + info.message),
      info_(std::move(info)) {}

std::vector<TrialRecord> read_jsonl(std::istream& in, const std::filesystem::path& name) {
  std::vector<TrialRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_record(line));
    } catch (const Error& e) {
      throw MalformedRecordError({name, n, e.what()});
    }
  }
  return out;
}

std::vector<TrialRecord> read_jsonl_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_jsonl(in, path);
}

}  // namespace hguide
