#include <sstream>

#include "doctest.h"
#include "hguide/error.hpp"
#include "hguide/records.hpp"

using namespace hguide;

namespace {

TrialRecord simulated(FeedbackMode mode, std::uint64_t seed) {
  TrialConfig c;
  c.mode = mode;
  c.seed = seed;
  const auto agent = AgentModel::default_for(mode);
  return make_record(run_trial(c, agent), c, agent, "s", 0, "simulated");
}

}  // namespace

TEST_SUITE("records") {
  TEST_CASE("json lines round trip byte for byte") {
    for (auto mode : {FeedbackMode::VB, FeedbackMode::VBStaged, FeedbackMode::VP}) {
      const auto rec = simulated(mode, 4);
      const std::string line = to_json_line(rec);
      CHECK(line.find('\n') == std::string::npos);
      const auto back = parse_record(line);
      CHECK(to_json_line(back) == line);
      CHECK(back.trace.samples.size() == rec.trace.samples.size());
      CHECK(back.outcome.completion_time == rec.outcome.completion_time);
    }
  }

  TEST_CASE("mode-specific trace columns") {
    const auto vb = to_json_line(simulated(FeedbackMode::VB, 1));
    CHECK(vb.find("\"motors\"") != std::string::npos);
    CHECK(vb.find("\"cues\"") == std::string::npos);
    CHECK(vb.find("\"stage\"") == std::string::npos);
    const auto st = to_json_line(simulated(FeedbackMode::VBStaged, 1));
    CHECK(st.find("\"stage\"") != std::string::npos);
    const auto vp = to_json_line(simulated(FeedbackMode::VP, 1));
    CHECK(vp.find("\"cues\"") != std::string::npos);
    CHECK(vp.find("\"motors\"") == std::string::npos);
  }

  TEST_CASE("live fields survive a round trip") {
    auto rec = simulated(FeedbackMode::VB, 2);
    rec.live = true;
    rec.participant = "p01";
    rec.end_reason = "reached";
    rec.note = "practice";
    rec.tick_rate.reset();
    rec.agent.reset();
    rec.t_client.assign(rec.trace.samples.size(), 12.5);
    const auto line = to_json_line(rec);
    const auto back = parse_record(line);
    CHECK(back.live);
    CHECK(back.participant == "p01");
    CHECK(back.end_reason == "reached");
    CHECK(back.note == "practice");
    CHECK_FALSE(back.tick_rate);
    CHECK_FALSE(back.agent);
    CHECK(back.t_client.size() == rec.trace.samples.size());
    CHECK(to_json_line(back) == line);
  }

  TEST_CASE("malformed lines report their line number") {
    const auto good = to_json_line(simulated(FeedbackMode::VB, 3));
    std::istringstream in(good + "\n\n" + good + "\n{\"schema\":\"other\"}\n");
    try {
      read_jsonl(in, "x.jsonl");
      FAIL("expected MalformedRecordError");
    } catch (const MalformedRecordError& e) {
      CHECK(e.info().line == 4);
      CHECK(e.info().file == "x.jsonl");
    }
    std::istringstream ok(good + "\n   \n" + good + "\n");
    CHECK(read_jsonl(ok).size() == 2);
    CHECK_THROWS_AS(parse_record("not json"), Error);
    CHECK_THROWS_AS(parse_record("[1,2]"), Error);
  }
}
