#include <fstream>
#include <sstream>

#include "doctest.h"
#include "hguide/config.hpp"
#include "hguide/error.hpp"

using namespace hguide;

namespace {

ErrorCode code_of(const std::string& ini) {
  try {
    parse_config(ini);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error for: " << ini);
  return ErrorCode::EmptyInput;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("shipped default.ini equals the built-in defaults") {
    const AppConfig file = load_config(std::filesystem::path(HGUIDE_SOURCE_DIR) / "config" / "default.ini");
    CHECK(to_ini(file) == to_ini(AppConfig{}));
  }

  TEST_CASE("empty text keeps every default") { CHECK(to_ini(parse_config("")) == to_ini(AppConfig{})); }

  TEST_CASE("values override defaults and the snapshot reloads exactly") {
    const auto cfg = parse_config(
        "[encoder]\nd_max = 2.5\n[trial]\nmax_duration = 30\ncompletion_radius=0.04\n"
        "[agent_vp]\nbout_duration = 3.25\n[serve]\nport = 9000\nseed = 18446744073709551615\n"
        "[session]\ncohort = pilot\n");
    CHECK(cfg.encoder.d_max == 2.5);
    CHECK(cfg.trial.encoder.d_max == 2.5);
    CHECK(cfg.trial.max_duration == 30.0);
    CHECK(cfg.vp_agent.bout_duration == 3.25);
    CHECK(cfg.vp_agent.kind == AgentKind::VpFollower);
    CHECK(cfg.serve.port == 9000);
    CHECK(cfg.serve.seed == 18446744073709551615ULL);
    CHECK(cfg.cohort == "pilot");
    CHECK(to_ini(parse_config(to_ini(cfg))) == to_ini(cfg));
  }

  TEST_CASE("odd doubles survive the snapshot") {
    AppConfig c;
    c.vb_agent.speed = 0.1 + 0.2;
    c.encoder.vp_near_fraction = 1.0 / 7.0;
    const auto back = parse_config(to_ini(c));
    CHECK(back.vb_agent.speed == c.vb_agent.speed);
    CHECK(back.encoder.vp_near_fraction == c.encoder.vp_near_fraction);
  }

  TEST_CASE("errors") {
    CHECK(code_of("[nope]\na=1\n") == ErrorCode::InvalidConfig);
    CHECK(code_of("[encoder]\nd_maks = 1\n") == ErrorCode::InvalidConfig);
    CHECK(code_of("[encoder]\nd_max = fast\n") == ErrorCode::InvalidConfig);
    CHECK(code_of("[encoder]\nd_max = 1.0x\n") == ErrorCode::InvalidConfig);
    CHECK(code_of("[encoder]\nd_max = -1\n") == ErrorCode::InvalidConfig);
    CHECK(code_of("[serve]\nport = 70000\n") == ErrorCode::InvalidConfig);
    CHECK(code_of("[serve]\nseed = -3\n") == ErrorCode::InvalidConfig);
    CHECK(code_of("[trial]\ntick_rate = 0\n") == ErrorCode::InvalidConfig);
    CHECK(code_of("[agent_vb]\nspeed = 0\n") == ErrorCode::InvalidConfig);
    CHECK(code_of("[session]\ncohort =\n") == ErrorCode::InvalidConfig);
    CHECK(code_of("no section here\n") == ErrorCode::InvalidConfig);
    try {
      parse_config("d_max = 2\n[encoder]\n");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("outside of a section") != std::string::npos);
    }
    CHECK_THROWS_AS(load_config("/nonexistent/hguide.ini"), Error);
  }

  TEST_CASE("agent files") {
    const auto a = parse_agent("[agent]\nkind = vp-follower\nspeed = 0.05\nbout_duration = 2\n");
    CHECK(a.kind == AgentKind::VpFollower);
    CHECK(a.speed == 0.05);
    CHECK(a.bout_duration == 2.0);
    CHECK(a.reaction_latency == AgentModel{}.reaction_latency);
    CHECK_THROWS_AS(parse_agent("[agent]\nkind = robot\n"), Error);
    CHECK_THROWS_AS(parse_agent("[agent]\nwings = 2\n"), Error);
    CHECK_THROWS_AS(parse_agent("[other]\nspeed = 1\n"), Error);
  }
}
