// fnf: command-line driver.
//
//   fnf parse-applets --registry R FILE...
//   fnf replay   --config C [--mode M] [--seed S] [--out DIR]
//   fnf evaluate --config C [--seed S] [--out DIR]
//   fnf generate --config C [--seed S] --out DIR
//   fnf ta-serve --registry R --applets A [--port P] [--connections N]
//
// Exit codes: 0 ok, 1 usage, 2 data error, 3 acceptance failure.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fnf/fnf.hpp"
#include "fnf/ta_socket.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kDataError = 2;
constexpr int kAcceptanceFailure = 3;

json actions_json(const fnf::ActionSet& s) {
  json out = json::array();
  for (const auto& a : s.device_actions) out.push_back({{"actuator", a.actuator.str()}, {"csv", a.csv}});
  for (const auto& e : s.external_actions) out.push_back({{"external_action", e}});
  return out;
}

json applet_json(const fnf::Applet& a) {
  json j = {{"id", a.id}, {"trigger_device", a.trigger_device.str()}, {"attribute", a.attribute}};
  if (const auto* d = std::get_if<fnf::DiscreteTrigger>(&a.trigger)) {
    j["trigger"] = {{"value", d->value}};
  } else {
    const auto& n = std::get<fnf::NumericTrigger>(a.trigger);
    j["trigger"] = {{"comparator", n.comparator == fnf::Comparator::Above ? "above" : "below"},
                    {"threshold", n.threshold}};
  }
  if (a.actuator) {
    j["actuator"] = a.actuator->str();
    j["csv"] = *a.csv;
  }
  if (a.external_action) j["external_action"] = *a.external_action;
  j["description"] = fnf::render_description(a);
  return j;
}

json tables_json(const fnf::TriggerTables& t) {
  json discrete = json::object();
  for (const auto& [id, table] : t.discrete) {
    json rows = json::object();
    for (const auto& s : table.states) rows[s] = actions_json(table.rows.at(s));
    discrete[id.str()] = rows;
  }
  json numeric = json::object();
  for (const auto& [id, table] : t.numeric) {
    json ranges = json::array();
    for (const auto& r : table.ranges) ranges.push_back({{"lo", r.lo}, {"hi", r.hi}, {"actions", actions_json(r.actions)}});
    numeric[id.str()] = {{"min", table.min}, {"max", table.max}, {"ranges", ranges}};
  }
  json roles = json::object();
  for (const auto& [id, role] : t.roles) roles[id.str()] = fnf::to_string(role);
  return {{"discrete", discrete}, {"numeric", numeric}, {"roles", roles}};
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw fnf::ConfigError("cannot write " + p.string());
  out << text;
}

void write_commands(const fs::path& p, std::span<const fnf::Command> cmds) {
  std::ofstream out(p);
  if (!out) throw fnf::ConfigError("cannot write " + p.string());
  for (const auto& c : cmds) out << fnf::wire::encode_command(c).dump() << '\n';
}

void write_events(const fs::path& p, std::span<const fnf::Event> events) {
  std::ofstream out(p);
  if (!out) throw fnf::ConfigError("cannot write " + p.string());
  fnf::write_ndjson(out, events);
}

fnf::ExperimentConfig load_config(const std::string& file, std::optional<std::uint64_t> seed) {
  auto cfg = fnf::ExperimentConfig::load(file);
  if (seed) cfg.seed = *seed;
  return cfg;
}

int cmd_parse_applets(const std::string& registry, const std::vector<std::string>& files) {
  const auto devices = fnf::load_registry(registry);
  std::vector<fnf::Applet> applets;
  for (const auto& f : files) {
    std::ifstream in(f);
    if (!in) throw fnf::ConfigError("cannot open " + f);
    try {
      auto more = fnf::parse_applet_file(in, devices);
      applets.insert(applets.end(), more.begin(), more.end());
    } catch (const fnf::ParseError& e) {
      throw fnf::ParseError(f + ": " + e.message(), e.offset(), e.line());
    }
  }
  const auto tables = fnf::merge_applets(applets, devices);
  json list = json::array();
  for (const auto& a : applets) list.push_back(applet_json(a));
  std::cout << json{{"applets", list}, {"tables", tables_json(tables)}}.dump(2) << '\n';
  return kOk;
}

// Chi-square statistic of a histogram against its own mean.
double flatness_chi2(const fnf::PatternVector& v) {
  const double mean = v.sum() / static_cast<double>(v.size());
  if (mean <= 0.0) return 0.0;
  double chi = 0.0;
  for (double x : v.values()) chi += (x - mean) * (x - mean) / mean;
  return chi;
}

int cmd_replay(const std::string& config, std::optional<std::string> mode, std::optional<std::uint64_t> seed,
               const fs::path& out_dir) {
  auto cfg = load_config(config, seed);
  const auto data = fnf::load_data(cfg, cfg.seed);
  fnf::GatewayConfig gc;
  gc.mode = mode ? fnf::parse_mode(*mode) : cfg.modes.front();
  gc.n = cfg.n;
  gc.p_days = cfg.p_days;
  gc.ticks_per_bucket = cfg.ticks_per_bucket;
  gc.sigma = cfg.sigma;
  gc.naive_rate = cfg.naive_rate;
  gc.seed = cfg.seed;
  gc.users = data.users;
  if (cfg.eval_days) gc.end_day = cfg.warmup_days + *cfg.eval_days;

  fnf::TaPlatform ta(data.applets);
  const auto t0 = std::chrono::steady_clock::now();
  const auto result = fnf::replay(std::span<const fnf::Event>(data.trace), data.tables, data.devices, ta, gc);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  fs::create_directories(out_dir);
  write_events(out_dir / "forwarded.ndjson", result.forwarded);
  write_events(out_dir / "adversary.ndjson", ta.log().events);
  write_commands(out_dir / "commands.ndjson", result.delivered);

  json hist = json::object();
  const std::int64_t first = cfg.warmup_days;
  for (const auto& [user, v] : fnf::adversary_snapshot(ta.log(), cfg.n, std::nullopt, std::nullopt)) {
    std::vector<fnf::Event> mine;
    for (const auto& e : ta.log().events)
      if (e.user == user && fnf::day_of(e.ts) >= first) mine.push_back(e);
    const auto p = fnf::estimate_pattern(mine, std::nullopt, cfg.n);
    hist[user.str()] = {{"pattern", p.values()}, {"chi2_flatness", flatness_chi2(p)}, {"whole_log", v.values()}};
  }
  json stats = result.to_json();
  stats["mode"] = fnf::to_string(gc.mode);
  stats["trace_events"] = data.trace.size();
  stats["adversary_events"] = ta.log().size();
  stats["adversary_patterns"] = hist;
  write_file(out_dir / "stats.json", stats.dump(2) + "\n");
  write_file(out_dir / "run_metadata.json",
             json{{"command", "replay"},
                  {"config", cfg.raw},
                  {"mode", fnf::to_string(gc.mode)},
                  {"seed", cfg.seed},
                  {"filter_rng", "mt19937_64(seed)"},
                  {"fuzz_rng", "mt19937_64(seed ^ 0x9e3779b97f4a7c15)"},
                  {"trace_seed", cfg.seed},
                  {"runtime_s", secs}}
                     .dump(2) +
                 "\n");
  std::cout << stats["filter"].dump() << '\n';
  return kOk;
}

int cmd_evaluate(const std::string& config, std::optional<std::uint64_t> seed, const fs::path& out_dir) {
  auto cfg = load_config(config, seed);
  const auto t0 = std::chrono::steady_clock::now();
  auto report = fnf::run_experiment(cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (cfg.acceptance.contains("runtime_max_s")) {
    const double limit = cfg.acceptance.at("runtime_max_s").get<double>();
    report.acceptance.push_back({"runtime_s", secs, "<= " + std::to_string(limit), secs <= limit});
  }
  fs::create_directories(out_dir);
  write_file(out_dir / "report.json", report.to_json().dump(2) + "\n");
  write_file(out_dir / "series.csv", report.csv());
  auto meta = report.metadata;
  meta["command"] = "evaluate";
  meta["runtime_s"] = secs;
  write_file(out_dir / "run_metadata.json", meta.dump(2) + "\n");
  for (const auto& c : report.acceptance)
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " = " << c.value << " (expected " << c.expected << ")\n";
  return report.accepted() ? kOk : kAcceptanceFailure;
}

int cmd_generate(const std::string& config, std::optional<std::uint64_t> seed, const fs::path& out_dir) {
  auto cfg = load_config(config, seed);
  const auto data = fnf::load_data(cfg, cfg.seed);
  fs::create_directories(out_dir);
  std::map<fnf::UserId, std::vector<fnf::Event>> per_user;
  for (const auto& e : data.trace) per_user[e.user].push_back(e);
  for (const auto& [user, events] : per_user) {
    std::ofstream casas(out_dir / (user.str() + ".casas.txt"));
    fnf::write_casas(casas, events, fnf::CasasDate{2011, 6, 15});
    write_events(out_dir / (user.str() + ".ndjson"), events);
    std::cout << user.str() << ": " << events.size() << " events\n";
  }
  std::ofstream applets(out_dir / "applets.txt");
  for (const auto& a : data.applets) applets << fnf::render_description(a) << '\n';
  write_file(out_dir / "run_metadata.json",
             json{{"command", "generate"}, {"config", cfg.raw}, {"seed", cfg.seed}}.dump(2) + "\n");
  return kOk;
}

int cmd_ta_serve(const std::string& registry, const std::string& applet_file, int port, std::size_t connections) {
  const auto devices = fnf::load_registry(registry);
  fnf::TaPlatform platform(fnf::load_applets(applet_file, devices));
  fnf::TaServer server(platform, static_cast<std::uint16_t>(port));
  std::cout << "listening on 127.0.0.1:" << server.port() << std::endl;
  server.serve(connections);
  std::cout << "served " << platform.batches() << " batches, " << platform.log().size() << " events\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Filter-and-Fuzz gateway, TA platform simulator and evaluation harness"};
  app.require_subcommand(1);

  std::string config, registry, applets, mode;
  std::vector<std::string> files;
  std::uint64_t seed = 0;
  std::string out = "out";
  int port = 0;
  std::size_t connections = SIZE_MAX;

  auto* parse = app.add_subcommand("parse-applets", "Parse applet descriptions and print merged trigger tables");
  parse->add_option("--registry", registry, "Device registry file")->required();
  parse->add_option("files", files, "Applet description files")->required();

  auto* rep = app.add_subcommand("replay", "Replay a trace through the gateway and the TA platform");
  auto* evaluate = app.add_subcommand("evaluate", "Run an experiment and check its acceptance thresholds");
  auto* generate = app.add_subcommand("generate", "Write the synthetic traces of a config");
  for (auto* sub : {rep, evaluate, generate}) {
    sub->add_option("--config", config, "Experiment config (JSON)")->required();
    sub->add_option("--seed", seed, "Override the config seed");
    sub->add_option("--out", out, "Output directory");
  }
  rep->add_option("--mode", mode, "baseline | filter | fuzz-ideal | fuzz-gaussian | fuzz-naive");

  auto* serve = app.add_subcommand("ta-serve", "Serve the TA platform on a loopback socket");
  serve->add_option("--registry", registry, "Device registry file")->required();
  serve->add_option("--applets", applets, "Applet description file")->required();
  serve->add_option("--port", port, "TCP port (0 picks one)");
  serve->add_option("--connections", connections, "Exit after this many connections");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  auto opt_seed = [&](CLI::App* sub) -> std::optional<std::uint64_t> {
    return sub->count("--seed") ? std::optional<std::uint64_t>(seed) : std::nullopt;
  };

  try {
    if (*parse) return cmd_parse_applets(registry, files);
    if (*rep) return cmd_replay(config, rep->count("--mode") ? std::optional<std::string>(mode) : std::nullopt,
                                opt_seed(rep), out);
    if (*evaluate) return cmd_evaluate(config, opt_seed(evaluate), out);
    if (*generate) return cmd_generate(config, opt_seed(generate), out);
    if (*serve) return cmd_ta_serve(registry, applets, port, connections);
  } catch (const fnf::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kDataError;
  } catch (const fnf::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}
