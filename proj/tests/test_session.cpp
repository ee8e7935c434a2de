#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "hguide/analysis.hpp"
#include "hguide/error.hpp"
#include "hguide/session.hpp"
#include "json.hpp"

using namespace hguide;
using nlohmann::json;

namespace {

ServiceConfig service_config(bool reveal = false) {
  ServiceConfig c;
  c.reveal = reveal;
  c.trial.encoder = c.trial.effective_encoder();
  return c;
}

struct Harness {
  explicit Harness(std::uint64_t seed = 5, bool reveal = false)
      : seed(seed), sink(new MemorySink), session(service_config(reveal), "t", seed, std::unique_ptr<RecordSink>(sink)) {}

  std::vector<json> send(const json& msg, double now) {
    std::vector<json> out;
    for (const auto& s : session.handle_text(msg.dump(), now)) {
      raw.push_back(s);
      out.push_back(json::parse(s));
    }
    return out;
  }
  std::vector<json> cursor(double x, double y, double now) {
    return send({{"type", "cursor"}, {"x", x}, {"y", y}, {"t_client", now * 1000.0}}, now);
  }
  void hello() { send({{"type", "hello"}, {"participant", "p1"}}, 0.0); }
  Vec2 start(const std::string& mode, double now) {
    const auto replies = send({{"type", "start_trial"}, {"mode", mode}}, now);
    REQUIRE(!replies.empty());
    CHECK(replies[0]["type"] == "trial_started");
    // Endpoint of the trial just started, recomputed the way the service does.
    TrialConfig c = service_config().trial;
    c.seed = trial_seed(seed, replies[0]["trial_index"].get<std::size_t>());
    return sample_endpoint(c);
  }

  std::uint64_t seed;
  MemorySink* sink;
  Session session;
  std::vector<std::string> raw;
};

bool has_type(const std::vector<json>& msgs, std::string_view t) {
  for (const auto& m : msgs)
    if (m["type"] == t) return true;
  return false;
}

}  // namespace

TEST_SUITE("session") {
  TEST_CASE("messages before hello are refused") {
    Harness h;
    for (const char* type : {"start_trial", "cursor", "abort"}) {
      auto r = h.send({{"type", type}, {"mode", "vb"}, {"x", 0}, {"y", 0}, {"t_client", 0}}, 0.0);
      REQUIRE(r.size() == 1);
      CHECK(r[0]["type"] == "error");
      CHECK(r[0]["code"] == "unknown_session");
    }
    auto r = h.send({{"type", "dance"}}, 0.0);
    CHECK(r[0]["code"] == "unknown_type");
    CHECK(json::parse(h.session.handle_text("{oops", 0.0)[0])["code"] == "bad_message");
    h.hello();
    CHECK(h.send({{"type", "hello"}, {"participant", "p1"}}, 0.0)[0]["code"] == "already_greeted");
  }

  TEST_CASE("trial_started carries the arena and never the endpoint") {
    Harness h;
    h.hello();
    auto r = h.send({{"type", "start_trial"}, {"mode", "vb"}}, 1.0);
    REQUIRE(r.size() == 1);
    CHECK(r[0]["arena"]["width"] == 1.0);
    CHECK(r[0]["arena"]["height"] == 1.0);
    CHECK_FALSE(r[0].contains("endpoint"));
    r = h.send({{"type", "start_trial"}, {"mode", "vb"}}, 1.5);
    CHECK(r[0]["code"] == "trial_already_active");
    CHECK(h.send({{"type", "start_trial"}, {"mode", "walk"}}, 1.5)[0]["code"] == "trial_already_active");
  }

  TEST_CASE("unknown mode") {
    Harness h;
    h.hello();
    CHECK(h.send({{"type", "start_trial"}, {"mode", "walk"}}, 0)[0]["code"] == "invalid_mode");
    CHECK(h.send({{"type", "start_trial"}}, 0)[0]["code"] == "invalid_mode");
  }

  TEST_CASE("same seed, same endpoint sequence, matching the simulator") {
    auto endpoints = [](std::uint64_t seed) {
      Harness h(seed);
      h.hello();
      for (int i = 0; i < 5; ++i) {
        h.send({{"type", "start_trial"}, {"mode", "vp"}}, i);
        h.send({{"type", "abort"}}, i + 0.5);
      }
      std::vector<Vec2> out;
      for (const auto& r : h.sink->records) out.push_back(r.endpoint);
      return out;
    };
    const auto a = endpoints(5), b = endpoints(5), c = endpoints(6);
    CHECK(a.size() == 5);
    CHECK(a == b);
    CHECK(a != c);
    TrialConfig tc;
    for (std::size_t i = 0; i < a.size(); ++i) {
      tc.seed = trial_seed(5, i);
      CHECK(sample_endpoint(tc) == a[i]);
    }
  }

  TEST_CASE("cursor due left of the endpoint drives only the right motor") {
    Harness h;
    h.hello();
    const Vec2 e = h.start("vb", 0.0);
    const auto r = h.cursor(e.x - 0.2, e.y, 0.1);
    REQUIRE(r.size() == 1);
    CHECK(r[0]["type"] == "feedback");
    CHECK(r[0]["m1"].get<double>() > 0.0);
    CHECK(r[0]["m2"] == 0.0);
    CHECK(r[0]["m3"] == 0.0);
    CHECK(r[0]["m4"] == 0.0);
    CHECK(r[0]["stage"].is_null());
  }

  TEST_CASE("reaching the endpoint ends the trial and silences feedback") {
    Harness h;
    h.hello();
    const Vec2 e = h.start("vb", 10.0);
    h.cursor(e.x - 0.2, e.y, 10.5);
    const auto r = h.cursor(e.x, e.y, 12.0);
    REQUIRE(r.size() == 1);
    CHECK(r[0]["type"] == "trial_ended");
    CHECK(r[0]["outcome"]["success"] == true);
    CHECK(r[0]["outcome"]["completion_time"] == doctest::Approx(2.0));
    CHECK(h.cursor(e.x, e.y, 12.1).empty());
    CHECK(h.session.discarded_cursors() == 1);

    REQUIRE(h.sink->records.size() == 1);
    const auto& rec = h.sink->records[0];
    CHECK(rec.live);
    CHECK(rec.participant == "p1");
    CHECK(rec.end_reason == "reached");
    CHECK(rec.outcome.success);
    CHECK(rec.t_client.size() == rec.trace.samples.size());
    CHECK(rec.cohort == "live");
    CHECK_FALSE(rec.tick_rate);
  }

  TEST_CASE("voice cadence: at most one cue per six seconds") {
    Harness h;
    h.hello();
    const Vec2 e = h.start("vp", 0.0);
    std::size_t voices = 0;
    std::vector<double> times;
    for (int k = 0; k < 200; ++k) {  // 20 s of cursor messages every 0.1 s
      const double t = 0.1 * k;
      for (const auto& m : h.cursor(e.x - 0.3, e.y + 0.1, t)) {
        if (m["type"] == "voice") {
          ++voices;
          times.push_back(m["t"].get<double>());
          CHECK(m["word"] == "right");
        }
      }
    }
    CHECK(voices == 4);  // 0, 6, 12, 18
    for (std::size_t i = 1; i < times.size(); ++i) CHECK(times[i] - times[i - 1] >= 6.0);

    Harness g;
    g.hello();
    const Vec2 f = g.start("vp", 0.0);
    std::size_t n = 0;
    for (double t : {0.5, 1.5})
      for (const auto& m : g.cursor(f.x + 0.2, f.y, t)) n += m["type"] == "voice";
    CHECK(n <= 1);
  }

  TEST_CASE("vibrotactile feedback is rate-limited and monotone in time") {
    Harness h;
    h.hello();
    const Vec2 e = h.start("vb-staged", 0.0);
    std::vector<double> times;
    for (int k = 0; k < 300; ++k) {  // 100 Hz for 3 s
      const double t = 0.01 * k;
      for (const auto& m : h.cursor(e.x - 0.3, e.y - 0.3, t)) {
        if (m["type"] != "feedback") continue;
        times.push_back(m["t"].get<double>());
        CHECK(m["stage"] == "horizontal");
        CHECK(m["m2"] == 0.0);
        CHECK(m["m4"] == 0.0);
      }
    }
    CHECK(times.size() >= 45);
    for (std::size_t i = 1; i < times.size(); ++i) CHECK(times[i] > times[i - 1]);
    for (std::size_t i = 0; i < times.size(); ++i) {
      std::size_t in_window = 0;
      for (std::size_t j = i; j < times.size() && times[j] < times[i] + 1.0; ++j) ++in_window;
      CHECK(in_window <= 20);
    }
  }

  TEST_CASE("abort and no-active-trial errors") {
    Harness h;
    h.hello();
    CHECK(h.send({{"type", "abort"}}, 0)[0]["code"] == "no_active_trial");
    CHECK(h.cursor(0.5, 0.5, 0).empty());
    CHECK(h.session.discarded_cursors() == 1);
    h.start("vb", 1.0);
    const auto r = h.send({{"type", "abort"}}, 3.0);
    CHECK(r[0]["type"] == "trial_ended");
    CHECK(r[0]["outcome"]["success"] == false);
    CHECK(r[0]["outcome"]["end_reason"] == "aborted");
    CHECK(h.sink->records.at(0).end_reason == "aborted");
    CHECK(h.sink->records.at(0).outcome.completion_time == doctest::Approx(2.0));
  }

  TEST_CASE("timeout at max_duration") {
    Harness h;
    h.hello();
    const Vec2 e = h.start("vb", 100.0);
    h.cursor(e.x - 0.3, e.y, 101.0);
    CHECK(h.session.poll(159.9).empty());
    const auto r = h.session.poll(160.0);
    REQUIRE(r.size() == 1);
    const auto m = json::parse(r[0]);
    CHECK(m["outcome"]["success"] == false);
    CHECK(m["outcome"]["end_reason"] == "timeout");
    const auto& rec = h.sink->records.at(0);
    CHECK(rec.outcome.completion_time == 60.0);
    CHECK(rec.outcome.final_error_x == doctest::Approx(-0.3));

    // A cursor arriving late also ends the trial as a timeout.
    h.start("vb", 200.0);
    const auto late = h.cursor(0.5, 0.5, 261.0);
    CHECK(late[0]["outcome"]["end_reason"] == "timeout");
  }

  TEST_CASE("endpoint coordinates never leave before trial_ended") {
    Harness h;
    h.hello();
    const Vec2 e = h.start("vb", 0.0);
    for (int k = 0; k < 100; ++k) h.cursor(0.1 + 0.008 * k, 0.9 - 0.008 * k, 0.05 * k);
    h.cursor(e.x, e.y, 6.0);
    const std::string ex = json(e.x).dump(), ey = json(e.y).dump();
    for (std::size_t i = 0; i + 1 < h.raw.size(); ++i) {
      CHECK(h.raw[i].find("endpoint") == std::string::npos);
      CHECK(h.raw[i].find(ex) == std::string::npos);
      CHECK(h.raw[i].find(ey) == std::string::npos);
    }
    CHECK(json::parse(h.raw.back())["type"] == "trial_ended");
    CHECK(json::parse(h.raw.back())["endpoint"][0] == e.x);
  }

  TEST_CASE("reveal mode announces the endpoint and is refused with logging") {
    Harness h(5, true);
    h.hello();
    const auto r = h.send({{"type", "start_trial"}, {"mode", "vb"}}, 0);
    REQUIRE(r.size() == 2);
    CHECK(r[1]["type"] == "reveal");
    CHECK(r[1]["endpoint"].size() == 2);
    CHECK_THROWS_AS(SessionService(service_config(true), std::filesystem::temp_directory_path()), Error);
    CHECK_NOTHROW(SessionService(service_config(true), {}));
  }

  TEST_CASE("replaying a simulated reactive trace gives the same outcome") {
    for (std::uint64_t i = 0; i < 10; ++i) {
      Harness h(40 + i);
      h.hello();
      h.send({{"type", "start_trial"}, {"mode", "vb"}}, 0.0);

      TrialConfig c = service_config().trial;
      c.mode = FeedbackMode::VB;
      c.seed = trial_seed(40 + i, 0);
      const auto sim = run_trial(c, AgentModel::default_for(FeedbackMode::VB));
      for (const auto& s : sim.trace.samples) {
        h.cursor(s.position.x, s.position.y, s.t);
        if (!h.session.trial_active()) break;
      }
      if (h.session.trial_active()) h.session.poll(c.max_duration);
      REQUIRE(h.sink->records.size() == 1);
      const auto& rec = h.sink->records[0];
      CHECK(rec.endpoint == sim.endpoint);
      CHECK(rec.outcome.success == sim.outcome.success);
      CHECK(std::abs(rec.outcome.completion_time - sim.outcome.completion_time) <= 1.0 / c.tick_rate + 1e-9);
    }
  }

  TEST_CASE("live records are analyzable next to simulated ones") {
    Harness h;
    h.hello();
    const Vec2 e = h.start("vb", 0.0);
    h.cursor(e.x - 0.1, e.y, 0.5);
    h.cursor(e.x - 0.05, e.y, 1.0);
    h.cursor(e.x, e.y, 1.5);
    h.start("vp", 2.0);
    h.send({{"type", "abort"}}, 2.1);  // no cursor at all: one-sample trace

    std::vector<TrialRecord> recs;
    for (const auto& r : h.sink->records) recs.push_back(parse_record(to_json_line(r)));
    TrialConfig c;
    c.seed = 3;
    const auto agent = AgentModel{};
    recs.push_back(make_record(run_trial(c, agent), c, agent, "sim", 0, "simulated"));
    const auto rows = build_report(recs);
    CHECK(rows.size() == 3);
    CHECK_NOTHROW(path_metrics_csv(recs));
  }

  TEST_CASE("service: shutdown interrupts open trials and flushes them to disk") {
    const auto dir = std::filesystem::temp_directory_path() / "hguide_session_test";
    std::filesystem::remove_all(dir);
    {
      SessionService svc(service_config(), dir, "unit");
      std::vector<std::string> ended;
      svc.on_trial_end = [&](const TrialRecord& r) { ended.push_back(*r.end_reason); };
      auto a = svc.open();
      auto b = svc.open();
      CHECK(a->id() == "unit-1");
      CHECK(b->id() == "unit-2");
      a->handle_text(R"({"type":"hello","participant":"x"})", 0);
      a->handle_text(R"({"type":"start_trial","mode":"vb"})", 0);
      a->handle_text(R"({"type":"cursor","x":0.4,"y":0.4,"t_client":1})", 0.5);
      svc.shutdown(2.0);
      CHECK(ended == std::vector<std::string>{"interrupted"});
      CHECK_FALSE(a->trial_active());
      // b never finished a trial, so it leaves no file.
      CHECK_FALSE(std::filesystem::exists(dir / "live_unit-2.jsonl"));
    }
    const auto recs = read_jsonl_file(dir / "live_unit-1.jsonl");
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].end_reason == "interrupted");
    CHECK(recs[0].live);
    std::filesystem::remove_all(dir);
  }
}
