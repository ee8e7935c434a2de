#include "hguide/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "hguide/error.hpp"

namespace hguide {

namespace pt = boost::property_tree;

namespace {

using Setter = std::function<void(const std::string&)>;
using Section = std::map<std::string, Setter, std::less<>>;

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidConfig, "'" + key + "' expects a number, got '" + v + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const auto n = std::stoull(v, &used);
    if (used != v.size() || v.starts_with('-')) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidConfig, "'" + key + "' expects a non-negative integer, got '" + v + "'");
  }
}

template <class T>
Setter num(const std::string& key, T& field) {
  return [&field, key](const std::string& v) { field = static_cast<T>(to_double(key, v)); };
}

Section agent_section(const std::string& prefix, AgentModel& a) {
  return {
      {"speed", num(prefix + ".speed", a.speed)},
      {"reaction_latency", num(prefix + ".reaction_latency", a.reaction_latency)},
      {"motor_noise_sigma", num(prefix + ".motor_noise_sigma", a.motor_noise_sigma)},
      {"bout_duration", num(prefix + ".bout_duration", a.bout_duration)},
  };
}

std::map<std::string, Section, std::less<>> schema(AppConfig& c) {
  auto& e = c.encoder;
  auto& t = c.trial;
  return {
      {"encoder",
       {
           {"d_max", num("encoder.d_max", e.d_max)},
           {"dead_band_eps", num("encoder.dead_band_eps", e.dead_band_eps)},
           {"align_tol", num("encoder.align_tol", e.align_tol)},
           {"hysteresis_factor", num("encoder.hysteresis_factor", e.hysteresis_factor)},
           {"vp_near_fraction", num("encoder.vp_near_fraction", e.vp_near_fraction)},
           {"vp_far_fraction", num("encoder.vp_far_fraction", e.vp_far_fraction)},
       }},
      {"trial",
       {
           {"arena_width", num("trial.arena_width", t.arena.width)},
           {"arena_height", num("trial.arena_height", t.arena.height)},
           {"start_x", num("trial.start_x", t.start.x)},
           {"start_y", num("trial.start_y", t.start.y)},
           {"endpoint_margin", num("trial.endpoint_margin", t.endpoint_margin)},
           {"min_spawn_distance", num("trial.min_spawn_distance", t.min_spawn_distance)},
           {"completion_radius", num("trial.completion_radius", t.completion_radius)},
           {"max_duration", num("trial.max_duration", t.max_duration)},
           {"tick_rate", num("trial.tick_rate", t.tick_rate)},
       }},
      {"agent_vb", agent_section("agent_vb", c.vb_agent)},
      {"agent_vp", agent_section("agent_vp", c.vp_agent)},
      {"analysis",
       {
           {"resample_interval", num("analysis.resample_interval", c.analysis.resample_interval)},
           {"turn_threshold_deg", num("analysis.turn_threshold_deg", c.analysis.turn_threshold_deg)},
       }},
      {"serve",
       {
           {"port",
            [&c](const std::string& v) {
              const auto p = to_u64("serve.port", v);
              if (p > 65535) throw Error(ErrorCode::InvalidConfig, "serve.port out of range");
              c.serve.port = static_cast<int>(p);
            }},
           {"feedback_rate_hz", num("serve.feedback_rate_hz", c.serve.feedback_rate_hz)},
           {"seed", [&c](const std::string& v) { c.serve.seed = to_u64("serve.seed", v); }},
       }},
      {"session", {{"cohort", [&c](const std::string& v) { c.cohort = v; }}}},
  };
}

pt::ptree read_ini(std::string_view text) {
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("line ") + std::to_string(e.line()) + ": " + e.message());
  }
  return tree;
}

// Shortest text that parses back to the same double.
std::string num_text(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

void AppConfig::validate() const {
  encoder.validate();
  TrialConfig t = trial;
  t.encoder = encoder;
  t.validate();
  vb_agent.validate();
  vp_agent.validate();
  if (vb_agent.kind != AgentKind::VbReactive || vp_agent.kind != AgentKind::VpFollower) {
    throw Error(ErrorCode::InvalidConfig, "agent sections hold the wrong agent kind");
  }
  if (!(analysis.resample_interval > 0.0)) throw Error(ErrorCode::InvalidConfig, "resample_interval must be > 0");
  if (!(serve.feedback_rate_hz > 0.0)) throw Error(ErrorCode::InvalidConfig, "feedback_rate_hz must be > 0");
  if (cohort.empty()) throw Error(ErrorCode::InvalidConfig, "cohort must not be empty");
}

AppConfig parse_config(std::string_view ini_text) {
  AppConfig cfg;
  auto sections = schema(cfg);
  const pt::ptree tree = read_ini(ini_text);
  for (const auto& [name, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw Error(ErrorCode::InvalidConfig, "key '" + name + "' outside of a section");
    }
    const auto sec = sections.find(name);
    if (sec == sections.end()) throw Error(ErrorCode::InvalidConfig, "unknown section [" + name + "]");
    for (const auto& [key, value] : body) {
      const auto setter = sec->second.find(key);
      if (setter == sec->second.end()) throw Error(ErrorCode::InvalidConfig, "unknown key " + name + "." + key);
      setter->second(value.data());
    }
  }
  cfg.trial.encoder = cfg.encoder;
  cfg.validate();
  return cfg;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_ini(const AppConfig& c) {
  std::ostringstream o;
  auto agent = [&](const char* name, const AgentModel& a) {
    o << "\n[" << name << "]\n"
      << "speed = " << num_text(a.speed) << "\n"
      << "reaction_latency = " << num_text(a.reaction_latency) << "\n"
      << "motor_noise_sigma = " << num_text(a.motor_noise_sigma) << "\n"
      << "bout_duration = " << num_text(a.bout_duration) << "\n";
  };
  const auto& e = c.encoder;
  const auto& t = c.trial;
  o << "[encoder]\n"
    << "d_max = " << num_text(e.d_max) << "\n"
    << "dead_band_eps = " << num_text(e.dead_band_eps) << "\n"
    << "align_tol = " << num_text(e.align_tol) << "\n"
    << "hysteresis_factor = " << num_text(e.hysteresis_factor) << "\n"
    << "vp_near_fraction = " << num_text(e.vp_near_fraction) << "\n"
    << "vp_far_fraction = " << num_text(e.vp_far_fraction) << "\n"
    << "\n[trial]\n"
    << "arena_width = " << num_text(t.arena.width) << "\n"
    << "arena_height = " << num_text(t.arena.height) << "\n"
    << "start_x = " << num_text(t.start.x) << "\n"
    << "start_y = " << num_text(t.start.y) << "\n"
    << "endpoint_margin = " << num_text(t.endpoint_margin) << "\n"
    << "min_spawn_distance = " << num_text(t.min_spawn_distance) << "\n"
    << "completion_radius = " << num_text(t.completion_radius) << "\n"
    << "max_duration = " << num_text(t.max_duration) << "\n"
    << "tick_rate = " << num_text(t.tick_rate) << "\n";
  agent("agent_vb", c.vb_agent);
  agent("agent_vp", c.vp_agent);
  o << "\n[analysis]\n"
    << "resample_interval = " << num_text(c.analysis.resample_interval) << "\n"
    << "turn_threshold_deg = " << num_text(c.analysis.turn_threshold_deg) << "\n"
    << "\n[serve]\n"
    << "port = " << c.serve.port << "\n"
    << "feedback_rate_hz = " << num_text(c.serve.feedback_rate_hz) << "\n"
    << "seed = " << c.serve.seed << "\n"
    << "\n[session]\n"
    << "cohort = " << c.cohort << "\n";
  return o.str();
}

AgentModel parse_agent(std::string_view ini_text) {
  const pt::ptree tree = read_ini(ini_text);
  const auto sec = tree.get_child_optional("agent");
  if (!sec) throw Error(ErrorCode::InvalidConfig, "agent file needs an [agent] section");
  AgentModel a;
  auto setters = agent_section("agent", a);
  for (const auto& [key, value] : *sec) {
    if (key == "kind") {
      const auto kind = parse_agent_kind(value.data());
      if (!kind) throw Error(ErrorCode::InvalidConfig, "unknown agent kind '" + value.data() + "'");
      a.kind = *kind;
      continue;
    }
    const auto setter = setters.find(key);
    if (setter == setters.end()) throw Error(ErrorCode::InvalidConfig, "unknown key agent." + key);
    setter->second(value.data());
  }
  a.validate();
  return a;
}

AgentModel load_agent_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open agent file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_agent(ss.str());
}

}  // namespace hguide
