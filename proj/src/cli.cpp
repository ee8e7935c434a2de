#include "hguide/cli.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "hguide/analysis.hpp"
#include "hguide/config.hpp"
#include "hguide/error.hpp"
#include "hguide/records.hpp"
#include "hguide/server.hpp"
#include "hguide/session.hpp"

namespace hguide {

namespace fs = std::filesystem;

namespace {

struct SimulateArgs {
  std::string mode;
  std::size_t trials = 30;
  std::optional<std::uint64_t> seed;
  std::string agent;
  std::string config;
  std::string out = ".";
  std::optional<std::string> cohort;
  unsigned threads = 0;
};

struct AnalyzeArgs {
  std::vector<std::string> in;
  std::string out = ".";
  std::string config;
};

struct ServeArgs {
  std::optional<int> port;
  std::string host = "127.0.0.1";
  std::string config;
  std::string out = ".";
  std::string static_dir;
  std::optional<std::uint64_t> seed;
  bool reveal = false;
  bool no_log = false;
};

// Thrown for problems that are the caller's fault rather than I/O.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

AppConfig resolve_config(const std::string& flag) {
  std::string path = flag;
  if (path.empty()) {
    if (const char* env = std::getenv(kConfigEnvVar); env && *env) path = env;
  }
  if (path.empty()) return AppConfig{};
  if (!fs::is_regular_file(path)) throw Error(ErrorCode::InvalidConfig, "config file not found: " + path);
  return load_config(path);
}

AgentModel resolve_agent(const std::string& choice, FeedbackMode mode, const AppConfig& cfg) {
  if (choice.empty() || choice == "default") return cfg.agent_for(mode);
  if (choice == "vb-reactive") return cfg.vb_agent;
  if (choice == "vp-follower") return cfg.vp_agent;
  if (!fs::is_regular_file(choice)) {
    throw UsageError("--agent must be default, vb-reactive, vp-follower or an agent file; got '" + choice + "'");
  }
  return load_agent_file(choice);
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << content;
  f.close();
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

std::uint64_t fresh_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  const FeedbackMode mode = *parse_feedback_mode(a.mode);
  AppConfig cfg = resolve_config(a.config);
  if (a.cohort) cfg.cohort = *a.cohort;
  if (cfg.cohort.empty()) throw UsageError("--cohort must not be empty");
  const AgentModel agent = resolve_agent(a.agent, mode, cfg);
  const std::uint64_t seed = a.seed.value_or(fresh_seed());

  TrialConfig tc = cfg.trial;
  tc.encoder = cfg.encoder;
  tc.mode = mode;
  tc.seed = seed;
  const unsigned threads = a.threads ? a.threads : std::max(1u, std::thread::hardware_concurrency());
  const auto results = run_session(tc, agent, a.trials, threads);

  const std::string stem = "session_" + std::string(to_string(mode)) + "_" + std::to_string(seed);
  const fs::path dir = a.out;
  fs::create_directories(dir);

  std::string jsonl;
  std::vector<TrialRecord> records;
  records.reserve(results.size());
  for (std::size_t i = 0; i < results.size(); ++i) {
    records.push_back(make_record(results[i], tc, agent, stem, i, cfg.cohort));
    jsonl += to_json_line(records.back());
    jsonl += '\n';
  }
  write_file(dir / (stem + ".jsonl"), jsonl);

  AppConfig snap = cfg;
  if (agent.kind == AgentKind::VbReactive) snap.vb_agent = agent;
  else snap.vp_agent = agent;
  std::ostringstream ini;
  ini << "; hguide simulate --mode " << to_string(mode) << " --trials " << a.trials << " --seed " << seed
      << " --agent " << to_string(agent.kind) << "\n"
      << to_ini(snap);
  write_file(dir / (stem + ".ini"), ini.str());

  const SummaryStats s = summarize(std::vector<TrialOutcome>([&] {
    std::vector<TrialOutcome> o;
    for (const auto& r : results) o.push_back(r.outcome);
    return o;
  }()));
  out << stem << ".jsonl mode=" << to_string(mode) << " trials=" << s.n << " seed=" << seed
      << " success=" << s.n_success << "/" << s.n
      << " mean_s=" << (s.mean ? fmt("%.3f", *s.mean) : std::string("nan")) << "\n";
  return kExitOk;
}

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out, std::ostream& err) {
  const AppConfig cfg = resolve_config(a.config);
  std::vector<TrialRecord> records;
  for (const auto& f : a.in) {
    auto part = read_jsonl_file(f);
    records.insert(records.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  if (records.empty()) {
    err << "error: no trial records\n";
    return kExitFailure;
  }
  const auto rows = build_report(records);
  const fs::path dir = a.out;
  fs::create_directories(dir);
  write_file(dir / "report.csv", report_csv(rows));
  write_file(dir / "report.json", report_json(rows));
  write_file(dir / "paths.csv", path_metrics_csv(records, cfg.analysis));
  out << "analyzed " << records.size() << " records into " << rows.size() << " rows -> "
      << (dir / "report.csv").string() << "\n";
  return kExitOk;
}

std::string utc_stamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

int cmd_serve(const ServeArgs& a, std::ostream& out, std::ostream& err) {
  if (a.reveal && !a.no_log) throw UsageError("--reveal requires --no-log; logged sessions never reveal the endpoint");
  const AppConfig cfg = resolve_config(a.config);

  ServiceConfig sc;
  sc.trial = cfg.trial;
  sc.trial.encoder = cfg.encoder;
  sc.feedback_rate_hz = cfg.serve.feedback_rate_hz;
  sc.seed = a.seed.value_or(cfg.serve.seed);
  sc.reveal = a.reveal;

  const fs::path log_dir = a.no_log ? fs::path{} : fs::path(a.out);
  SessionService service(sc, log_dir, "live-" + utc_stamp());
  std::mutex log_mu;
  service.on_trial_end = [&](const TrialRecord& r) {
    std::lock_guard lock(log_mu);
    out << "trial " << r.session << "/" << r.trial_index << " participant=" << r.participant.value_or("?")
        << " mode=" << to_string(r.mode) << " success=" << (r.outcome.success ? 1 : 0)
        << " time_s=" << fmt("%.3f", r.outcome.completion_time) << " reason=" << r.end_reason.value_or("?")
        << std::endl;
  };

  ServerOptions so;
  so.address = a.host;
  so.port = static_cast<unsigned short>(a.port.value_or(cfg.serve.port));
  so.static_dir = a.static_dir;
  so.handle_signals = true;
  std::unique_ptr<Server> server;
  try {
    server = std::make_unique<Server>(service, so);
  } catch (const std::exception& e) {
    err << "error: cannot listen on " << a.host << ":" << so.port << ": " << e.what() << "\n";
    return kExitFailure;
  }
  out << "serving on http://" << a.host << ":" << server->port() << " seed=" << sc.seed
      << (a.no_log ? " logging=off" : " logging=" + log_dir.string()) << (a.reveal ? " reveal=on" : "")
      << std::endl;
  server->run();
  out << "stopped" << std::endl;
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Haptic and voice guidance toolkit: simulate trials, analyze logs, serve live trials", "hguide"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run a batch of simulated trials");
  simulate->add_option("--mode", sim.mode, "Feedback mode")->required()->check(CLI::IsMember({"vb", "vb-staged", "vp"}));
  simulate->add_option("--trials", sim.trials, "Number of trials")->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sim.seed, "Session seed (random when omitted)");
  simulate->add_option("--agent", sim.agent, "default, vb-reactive, vp-follower, or an agent INI file");
  simulate->add_option("--config", sim.config, "Config INI file (falls back to $HAPTIC_GUIDE_CONFIG)");
  simulate->add_option("--out", sim.out, "Output directory");
  simulate->add_option("--cohort", sim.cohort, "Cohort label written into records");
  simulate->add_option("--threads", sim.threads, "Worker threads (0 = all cores)");

  AnalyzeArgs ana;
  auto* analyze = app.add_subcommand("analyze", "Summarize trial logs");
  analyze->add_option("--in", ana.in, "Session JSONL files")->required()->expected(1, -1);
  analyze->add_option("--out", ana.out, "Output directory");
  analyze->add_option("--config", ana.config, "Config INI file (falls back to $HAPTIC_GUIDE_CONFIG)");

  ServeArgs srv;
  auto* serve = app.add_subcommand("serve", "Host live trials over WebSocket");
  serve->add_option("--port", srv.port, "TCP port (default from config)")->check(CLI::Range(0, 65535));
  serve->add_option("--host", srv.host, "Bind address");
  serve->add_option("--config", srv.config, "Config INI file (falls back to $HAPTIC_GUIDE_CONFIG)");
  serve->add_option("--out", srv.out, "Directory for live session logs");
  serve->add_option("--static", srv.static_dir, "Directory of static web assets")->check(CLI::ExistingDirectory);
  serve->add_option("--seed", srv.seed, "Service seed (default from config)");
  serve->add_flag("--reveal", srv.reveal, "Send endpoints to clients for debugging (needs --no-log)");
  serve->add_flag("--no-log", srv.no_log, "Do not persist trial records");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*simulate) return cmd_simulate(sim, out);
    if (*analyze) return cmd_analyze(ana, out, err);
    return cmd_serve(srv, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const MalformedRecordError& e) {
    const auto& i = e.info();
    err << "error: " << i.file.string() << ":" << i.line << ": malformed record: " << i.message << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace hguide
