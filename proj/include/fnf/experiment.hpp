#pragma once

// Experiment runner: loads a trace source and applets, replays the trace
// through each configured pipeline mode, and reports record-count ratios,
// adversary-vs-F correlation, user-identification accuracy, overhead, leak
// budget and the interception vector.
//
// Config (JSON, paths relative to the config file):
//   {"name": "...",
//    "source": {"type": "synthetic", "registry": "...", "profiles": ["..."],
//               "perturbation": "...", "days": 107, "casas_roundtrip": false}
//            | {"type": "casas", "path": "...", "user": "...", "registry": "..."}
//            | {"type": "ndjson", "path": "...", "registry": "..."},
//    "applets": {"file": "..."} | {"assign_seed": 104},
//    "modes": ["baseline", "filter", "fuzz-ideal", "fuzz-gaussian", "fuzz-naive"],
//    "n": 24, "p_days": 7, "ticks_per_bucket": 3600, "sigma": 4, "naive_rate": 5,
//    "seed": 1, "repetitions": 10, "warmup_days": 7, "eval_days": 100,
//    "knn_k": 5, "svm": {"lambda": 0.001, "epochs": 200},
//    "acceptance": {...}}

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fnf/analysis.hpp"
#include "fnf/applet_catalog.hpp"
#include "fnf/gateway.hpp"
#include "fnf/ta_platform.hpp"
#include "fnf/trace_io.hpp"

namespace fnf {

using nlohmann::json;

struct SourceConfig {
  std::string type = "synthetic";
  std::filesystem::path registry;
  std::vector<std::filesystem::path> profiles;
  std::optional<std::filesystem::path> perturbation;
  std::int64_t days = 107;
  bool casas_roundtrip = false;
  std::filesystem::path path;
  std::string user = "user";
};

struct ExperimentConfig {
  std::string name = "experiment";
  SourceConfig source;
  std::optional<std::filesystem::path> applet_file;
  std::optional<std::uint64_t> assign_seed;
  std::vector<Mode> modes{Mode::Filter};
  std::size_t n = 24;
  std::optional<std::int64_t> p_days = 7;
  double ticks_per_bucket = 3600.0;
  double sigma = 4.0;
  double naive_rate = 5.0;
  std::uint64_t seed = 1;
  int repetitions = 1;
  std::int64_t warmup_days = 0;
  std::optional<std::int64_t> eval_days;
  std::size_t knn_k = 5;
  SvmParams svm;
  json acceptance = json::object();
  json raw;

  static ExperimentConfig from_json(const json& j, const std::filesystem::path& base_dir = ".") {
    ExperimentConfig c;
    c.raw = j;
    auto rel = [&](const std::string& p) { return (base_dir / p).lexically_normal(); };
    try {
      c.name = j.value("name", c.name);
      const auto& s = j.at("source");
      c.source.type = s.value("type", c.source.type);
      if (s.contains("registry")) c.source.registry = rel(s.at("registry").get<std::string>());
      if (s.contains("profiles"))
        for (const auto& p : s.at("profiles")) c.source.profiles.push_back(rel(p.get<std::string>()));
      if (s.contains("perturbation")) c.source.perturbation = rel(s.at("perturbation").get<std::string>());
      c.source.days = s.value("days", c.source.days);
      c.source.casas_roundtrip = s.value("casas_roundtrip", false);
      if (s.contains("path")) c.source.path = rel(s.at("path").get<std::string>());
      c.source.user = s.value("user", c.source.user);
      const auto& a = j.at("applets");
      if (a.contains("file")) c.applet_file = rel(a.at("file").get<std::string>());
      if (a.contains("assign_seed")) c.assign_seed = a.at("assign_seed").get<std::uint64_t>();
      if (!c.applet_file && !c.assign_seed) throw ConfigError("applets needs 'file' or 'assign_seed'");
      if (j.contains("modes")) {
        c.modes.clear();
        for (const auto& m : j.at("modes")) c.modes.push_back(parse_mode(m.get<std::string>()));
      }
      c.n = j.value("n", c.n);
      if (j.contains("p_days")) {
        if (j.at("p_days").is_null())
          c.p_days.reset();
        else
          c.p_days = j.at("p_days").get<std::int64_t>();
      }
      c.ticks_per_bucket = j.value("ticks_per_bucket", c.ticks_per_bucket);
      c.sigma = j.value("sigma", c.sigma);
      c.naive_rate = j.value("naive_rate", c.naive_rate);
      c.seed = j.value("seed", c.seed);
      c.repetitions = j.value("repetitions", c.repetitions);
      c.warmup_days = j.value("warmup_days", c.warmup_days);
      if (j.contains("eval_days")) c.eval_days = j.at("eval_days").get<std::int64_t>();
      c.knn_k = j.value("knn_k", c.knn_k);
      if (j.contains("svm")) {
        c.svm.lambda = j.at("svm").value("lambda", c.svm.lambda);
        c.svm.epochs = j.at("svm").value("epochs", c.svm.epochs);
      }
      c.acceptance = j.value("acceptance", json::object());
    } catch (const json::exception& e) {
      throw ConfigError(std::string("bad experiment config: ") + e.what());
    }
    if (c.repetitions < 1) throw ConfigError("repetitions must be >= 1");
    if (c.warmup_days < 0) throw ConfigError("warmup_days must be >= 0");
    return c;
  }

  static ExperimentConfig load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config " + file.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config " + file.string() + " is not valid JSON");
    return from_json(j, file.parent_path());
  }
};

inline json read_json_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open " + file.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError(file.string() + " is not valid JSON");
  return j;
}

inline DeviceRegistry load_registry(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open registry " + file.string());
  return parse_registry_file(in);
}

inline std::vector<Applet> load_applets(const std::filesystem::path& file, const DeviceRegistry& devices) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open applets " + file.string());
  return parse_applet_file(in, devices);
}

struct Perturbation {
  std::map<DeviceId, std::vector<double>> delta;
  double target_correlation = 0.93;
};

inline Perturbation load_perturbation(const std::filesystem::path& file) {
  const auto j = read_json_file(file);
  Perturbation p;
  p.target_correlation = j.value("target_correlation", p.target_correlation);
  for (const auto& [dev, v] : j.at("perturbation").items()) p.delta[DeviceId(dev)] = v.get<std::vector<double>>();
  return p;
}

// Expected filtered pattern of a profile: the rates of its trigger devices.
inline std::vector<double> expected_trigger_rates(const UserProfile& p, const TriggerTables& tables) {
  std::vector<double> out(p.buckets, 0.0);
  for (const auto& d : p.devices)
    if (tables.is_trigger_device(d.device))
      for (std::size_t i = 0; i < p.buckets; ++i) out[i] += d.rates[i];
  return out;
}

// Bisection for the perturbation scale whose expected filtered pattern
// correlates with the base's at `target`.
inline double calibrate_scale(const UserProfile& base, const Perturbation& pert, const TriggerTables& tables,
                              double target, double hi = 4.0, int iterations = 60) {
  const auto a = expected_trigger_rates(base, tables);
  auto corr = [&](double s) {
    const auto b = expected_trigger_rates(perturbed_profile(base, pert.delta, s, UserId("calibration")), tables);
    return pearson_or_zero(a, b).value;
  };
  double lo = 0.0;
  if (corr(hi) > target) throw ConfigError("perturbation too weak to reach the target correlation");
  for (int i = 0; i < iterations; ++i) {
    const double mid = 0.5 * (lo + hi);
    (corr(mid) > target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

struct LoadedData {
  DeviceRegistry devices;
  std::vector<Applet> applets;
  TriggerTables tables;
  std::vector<Event> trace;
  std::vector<UserId> users;
  std::optional<double> perturbation_scale;
  std::size_t casas_malformed = 0;
};

inline void check_trace_devices(const std::vector<Event>& trace, const DeviceRegistry& devices) {
  for (const auto& e : trace) {
    if (!devices.contains(e.device))
      throw ConfigError("trace device '" + e.device.str() + "' is not in the registry");
    devices.validate(e.device, e.value);
  }
}

// Source data for one repetition; synthetic sources are regenerated from
// `trace_seed`, files are read as-is.
inline LoadedData load_data(const ExperimentConfig& cfg, std::uint64_t trace_seed) {
  LoadedData out;
  const auto& src = cfg.source;
  if (src.type == "synthetic") {
    out.devices = load_registry(src.registry);
    if (src.profiles.empty()) throw ConfigError("synthetic source needs at least one profile");
    std::vector<UserProfile> profiles;
    for (const auto& p : src.profiles) profiles.push_back(profile_from_json(read_json_file(p)));
    if (cfg.applet_file) out.applets = load_applets(*cfg.applet_file, out.devices);
    out.tables = merge_applets(out.applets, out.devices);
    if (src.perturbation) {
      if (profiles.size() != 1) throw ConfigError("a perturbation needs exactly one base profile");
      const auto pert = load_perturbation(*src.perturbation);
      const double s = calibrate_scale(profiles.front(), pert, out.tables, pert.target_correlation);
      out.perturbation_scale = s;
      const auto& base = profiles.front();
      profiles.push_back(perturbed_profile(base, pert.delta, s, UserId(base.user.str() + "-2")));
    }
    auto traces = generate_synthetic(profiles, out.devices, src.days, trace_seed);
    if (src.casas_roundtrip) {
      for (std::size_t u = 0; u < traces.size(); ++u) {
        std::stringstream text;
        write_casas(text, traces[u], CasasDate{2011, 6, 15});
        auto parsed = parse_casas(text, profiles[u].user);
        out.casas_malformed += parsed.malformed;
        traces[u] = std::move(parsed.events);
      }
    }
    for (const auto& p : profiles) out.users.push_back(p.user);
    out.trace = merge_traces(traces);
  } else if (src.type == "casas" || src.type == "ndjson") {
    std::ifstream in(src.path);
    if (!in) throw ConfigError("cannot open trace " + src.path.string());
    if (src.type == "casas") {
      auto parsed = parse_casas(in, UserId(src.user));
      out.casas_malformed = parsed.malformed;
      out.trace = std::move(parsed.events);
    } else {
      out.trace = read_ndjson(in);
    }
    out.devices = src.registry.empty() ? casas_registry(out.trace) : load_registry(src.registry);
    if (cfg.applet_file) out.applets = load_applets(*cfg.applet_file, out.devices);
    std::set<UserId> users;
    for (const auto& e : out.trace) users.insert(e.user);
    out.users.assign(users.begin(), users.end());
  } else {
    throw ConfigError("unknown source type '" + src.type + "'");
  }
  check_trace_devices(out.trace, out.devices);
  if (cfg.assign_seed) {
    out.applets.clear();
    std::size_t line = 0;
    for (const auto& s : assign_casas_applets(out.devices, out.trace, *cfg.assign_seed))
      out.applets.push_back(parse_description(s, out.devices, "assigned-" + std::to_string(++line)));
  }
  out.tables = merge_applets(out.applets, out.devices);
  return out;
}

struct ModeRun {
  Mode mode;
  ReplayResult replay;
  std::map<UserId, PatternVector> adversary;  // mean over the evaluation window
  std::map<UserId, PatternVector> filtered;   // F over the same window
  std::map<UserId, PatternVector> raw;        // U over the same window
  std::map<UserId, double> pearson;
  std::map<UserId, bool> pearson_undefined;
  double mean_pearson = 0.0;
  double mean_abs_pearson = 0.0;
  double overhead = 0.0;  // adversary records / real forwarded records
  std::optional<ClassifierScores> scores;
};

struct RepetitionResult {
  int index = 0;
  std::uint64_t seed = 0;
  std::vector<ModeRun> runs;
  const ModeRun* find(Mode m) const {
    for (const auto& r : runs)
      if (r.mode == m) return &r;
    return nullptr;
  }
};

struct Summary {
  double mean = 0.0, min = 0.0, max = 0.0;
  std::size_t count = 0;
  void add(double v) {
    if (count == 0) {
      min = max = v;
    } else {
      min = std::min(min, v);
      max = std::max(max, v);
    }
    mean += (v - mean) / static_cast<double>(++count);
  }
  json to_json() const { return {{"mean", mean}, {"min", min}, {"max", max}, {"count", count}}; }
};

struct CriterionOutcome {
  std::string name;
  double value = 0.0;
  std::string expected;
  bool pass = false;
};

struct ExperimentReport {
  std::string name;
  std::vector<RepetitionResult> repetitions;
  std::map<std::string, Summary> summary;  // "<mode>.<metric>"
  std::size_t hierarchy_holds = 0;          // repetitions with baseline >= filter >= gaussian >= ideal
  std::size_t hierarchy_checked = 0;
  std::size_t overhead_ideal_gt_gaussian = 0;
  std::optional<double> perturbation_scale;
  std::optional<double> inter_user_correlation;  // filtered mean vectors, first repetition
  std::size_t trace_events = 0;
  std::size_t devices = 0;
  std::size_t trigger_devices = 0;
  std::vector<std::string> applets;
  std::vector<CriterionOutcome> acceptance;
  json metadata;
  std::vector<std::tuple<std::string, double, double>> series;

  double metric(const std::string& key) const {
    auto it = summary.find(key);
    if (it == summary.end()) throw ConfigError("metric '" + key + "' not produced by this experiment");
    return it->second.mean;
  }
  bool accepted() const {
    return std::all_of(acceptance.begin(), acceptance.end(), [](const auto& c) { return c.pass; });
  }

  json to_json() const {
    json summ = json::object();
    for (const auto& [k, s] : summary) summ[k] = s.to_json();
    json reps = json::array();
    for (const auto& r : repetitions) {
      json modes = json::object();
      for (const auto& m : r.runs) {
        json pr = json::object();
        for (const auto& [u, v] : m.pearson) pr[u.str()] = {{"value", v}, {"undefined", m.pearson_undefined.at(u)}};
        json jm = {{"replay", m.replay.to_json()}, {"pearson", pr}, {"mean_pearson", m.mean_pearson},
                   {"overhead", m.overhead}};
        if (m.scores) jm["accuracy"] = {{"knn", m.scores->knn}, {"svm", m.scores->svm}};
        json vecs = json::object();
        for (const auto& [u, v] : m.adversary) vecs[u.str()] = v.values();
        jm["adversary_vectors"] = vecs;
        modes[to_string(m.mode)] = jm;
      }
      reps.push_back({{"index", r.index}, {"seed", r.seed}, {"modes", modes}});
    }
    json acc = json::array();
    for (const auto& c : acceptance)
      acc.push_back({{"criterion", c.name}, {"value", c.value}, {"expected", c.expected}, {"pass", c.pass}});
    json out = {{"name", name},
                {"trace_events", trace_events},
                {"devices", devices},
                {"trigger_devices", trigger_devices},
                {"applets", applets},
                {"summary", summ},
                {"hierarchy", {{"holds", hierarchy_holds}, {"checked", hierarchy_checked}}},
                {"overhead_ideal_gt_gaussian", overhead_ideal_gt_gaussian},
                {"repetitions", reps},
                {"acceptance", acc},
                {"accepted", accepted()}};
    if (perturbation_scale) out["perturbation_scale"] = *perturbation_scale;
    if (inter_user_correlation) out["inter_user_correlation"] = *inter_user_correlation;
    return out;
  }

  std::string csv() const {
    std::ostringstream out;
    out << "series,x,y\n";
    out.precision(10);
    for (const auto& [s, x, y] : series) out << s << ',' << x << ',' << y << '\n';
    return out.str();
  }
};

namespace detail {

inline std::map<UserId, std::vector<Event>> by_user(std::span<const Event> events) {
  std::map<UserId, std::vector<Event>> out;
  for (const auto& e : events) out[e.user].push_back(e);
  return out;
}

inline PatternVector mean_of(const std::vector<std::vector<double>>& days, std::size_t n) {
  PatternVector out(n);
  if (days.empty()) return out;
  for (const auto& d : days)
    for (std::size_t i = 0; i < n; ++i) out[i] += d[i];
  for (std::size_t i = 0; i < n; ++i) out[i] /= static_cast<double>(days.size());
  return out;
}

inline double total(const std::vector<std::vector<double>>& days) {
  double s = 0.0;
  for (const auto& d : days)
    for (double x : d) s += x;
  return s;
}

inline bool check_range(const json& spec, double v) {
  return v >= spec.at(0).get<double>() && v <= spec.at(1).get<double>();
}

}  // namespace detail

// Evaluates the config's "acceptance" block against a finished report.
inline std::vector<CriterionOutcome> evaluate_acceptance(const ExperimentReport& r, const json& spec) {
  std::vector<CriterionOutcome> out;
  auto add = [&](std::string name, double v, std::string expected, bool pass) {
    out.push_back(CriterionOutcome{std::move(name), v, std::move(expected), pass});
  };
  for (const auto& [key, val] : spec.items()) {
    if (key == "runtime_max_s") continue;  // checked by the caller, runtime is not part of the report
    if (key.ends_with("_max")) {
      const auto metric = key.substr(0, key.size() - 4);
      const double v = r.metric(metric);
      add(metric, v, "<= " + val.dump(), v <= val.get<double>());
    } else if (key.ends_with("_min")) {
      const auto metric = key.substr(0, key.size() - 4);
      const double v = r.metric(metric);
      add(metric, v, ">= " + val.dump(), v >= val.get<double>());
    } else if (key.ends_with("_range")) {
      const auto metric = key.substr(0, key.size() - 6);
      const double v = r.metric(metric);
      add(metric, v, "in " + val.dump(), detail::check_range(val, v));
    } else if (key == "hierarchy_min_reps") {
      add("hierarchy", static_cast<double>(r.hierarchy_holds), ">= " + val.dump(),
          r.hierarchy_checked > 0 && r.hierarchy_holds >= val.get<std::size_t>());
    } else if (key == "overhead_ideal_gt_gaussian_all") {
      add("overhead_ideal_gt_gaussian", static_cast<double>(r.overhead_ideal_gt_gaussian),
          "== " + std::to_string(r.repetitions.size()),
          !r.repetitions.empty() && r.overhead_ideal_gt_gaussian == r.repetitions.size());
    } else {
      throw ConfigError("unknown acceptance key '" + key + "'");
    }
  }
  return out;
}

inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  ExperimentReport report;
  report.name = cfg.name;
  json rep_seeds = json::array();
  const auto n = cfg.n;

  for (int rep = 0; rep < cfg.repetitions; ++rep) {
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(rep);
    rep_seeds.push_back(seed);
    auto data = load_data(cfg, seed);
    if (rep == 0) {
      report.trace_events = data.trace.size();
      report.devices = data.devices.size();
      report.trigger_devices = data.tables.trigger_device_count();
      for (const auto& a : data.applets) report.applets.push_back(render_description(a));
      report.perturbation_scale = data.perturbation_scale;
    }

    std::int64_t last_day = 0;
    for (const auto& e : data.trace) last_day = std::max(last_day, day_of(e.ts));
    const std::int64_t first_eval = cfg.warmup_days;
    const std::int64_t eval_days = cfg.eval_days.value_or(last_day + 1 - first_eval);
    if (eval_days < 1) throw ConfigError("evaluation window is empty");
    const std::int64_t end_day = first_eval + eval_days;

    RepetitionResult rr;
    rr.index = rep;
    rr.seed = seed;
    const auto raw_by_user = detail::by_user(data.trace);

    for (const auto mode : cfg.modes) {
      GatewayConfig gc;
      gc.mode = mode;
      gc.n = n;
      gc.p_days = cfg.p_days;
      gc.ticks_per_bucket = cfg.ticks_per_bucket;
      gc.sigma = cfg.sigma;
      gc.naive_rate = cfg.naive_rate;
      gc.seed = seed;
      gc.end_day = end_day;
      gc.users = data.users;
      TaPlatform ta(data.applets);
      ta.quiet();

      ModeRun run;
      run.mode = mode;
      run.replay = replay(std::span<const Event>(data.trace), data.tables, data.devices, ta, gc);

      const auto adv_by_user = detail::by_user(ta.log().events);
      const auto fwd_by_user = detail::by_user(run.replay.forwarded);
      LabeledVectorSet labeled;
      double adv_total = 0.0, fwd_total = 0.0;
      std::size_t defined = 0;
      for (std::size_t u = 0; u < data.users.size(); ++u) {
        const auto& user = data.users[u];
        auto get = [&](const std::map<UserId, std::vector<Event>>& m) {
          auto it = m.find(user);
          static const std::vector<Event> none;
          return daily_vectors(it == m.end() ? none : it->second, n, first_eval, eval_days);
        };
        const auto adv_days = get(adv_by_user);
        const auto fwd_days = get(fwd_by_user);
        const auto raw_days = get(raw_by_user);
        run.adversary[user] = detail::mean_of(adv_days, n);
        run.filtered[user] = detail::mean_of(fwd_days, n);
        run.raw[user] = detail::mean_of(raw_days, n);
        adv_total += detail::total(adv_days);
        fwd_total += detail::total(fwd_days);
        const auto c = pearson_or_zero(run.adversary[user].span(), run.filtered[user].span());
        run.pearson[user] = c.value;
        run.pearson_undefined[user] = c.undefined;
        run.mean_pearson += c.value;
        run.mean_abs_pearson += std::abs(c.value);
        ++defined;
        for (const auto& d : adv_days) labeled.push_back(LabeledVector{d, static_cast<int>(u)});
      }
      if (defined) {
        run.mean_pearson /= static_cast<double>(defined);
        run.mean_abs_pearson /= static_cast<double>(defined);
      }
      run.overhead = fwd_total > 0.0 ? adv_total / fwd_total : 0.0;
      if (data.users.size() == 2) run.scores = identify_users(labeled, seed, cfg.knn_k, cfg.svm);

      const std::string m = to_string(mode);
      report.summary[m + ".forward_ratio"].add(run.replay.stats.forward_ratio());
      report.summary[m + ".pearson"].add(run.mean_pearson);
      report.summary[m + ".abs_pearson"].add(run.mean_abs_pearson);
      report.summary[m + ".overhead"].add(run.overhead);
      double leak = 0.0;
      for (const auto& [u, v] : run.replay.leak_budget) leak += v;
      if (!run.replay.leak_budget.empty()) report.summary[m + ".leak_budget"].add(leak / run.replay.leak_budget.size());
      if (run.scores) {
        report.summary[m + ".knn"].add(run.scores->knn);
        report.summary[m + ".svm"].add(run.scores->svm);
        report.summary[m + ".accuracy"].add(run.scores->mean());
        report.series.emplace_back("accuracy_knn_" + m, rep, run.scores->knn);
        report.series.emplace_back("accuracy_svm_" + m, rep, run.scores->svm);
      }
      report.series.emplace_back("pearson_" + m, rep, run.mean_pearson);
      report.series.emplace_back("overhead_" + m, rep, run.overhead);
      if (rep == 0) {
        for (const auto& [user, v] : run.adversary)
          for (std::size_t i = 0; i < n; ++i) report.series.emplace_back("adversary_" + m + "_" + user.str(), i, v[i]);
        if (mode == Mode::Filter) {
          for (const auto& [user, f] : run.filtered) {
            const auto p = interception_vector(f, run.raw.at(user));
            for (std::size_t i = 0; i < n; ++i) {
              report.series.emplace_back("filtered_" + user.str(), i, f[i]);
              report.series.emplace_back("raw_" + user.str(), i, run.raw.at(user)[i]);
              report.series.emplace_back("interception_" + user.str(), i, p[i]);
            }
          }
          if (run.filtered.size() == 2) {
            auto it = run.filtered.begin();
            const auto& a = it->second;
            const auto& b = (++it)->second;
            report.inter_user_correlation = pearson_or_zero(a.span(), b.span()).value;
          }
        }
      }
      rr.runs.push_back(std::move(run));
    }

    const auto* base = rr.find(Mode::Baseline);
    const auto* filt = rr.find(Mode::Filter);
    const auto* gauss = rr.find(Mode::FuzzGaussian);
    const auto* ideal = rr.find(Mode::FuzzIdeal);
    if (base && filt && gauss && ideal && base->scores && filt->scores && gauss->scores && ideal->scores) {
      ++report.hierarchy_checked;
      if (base->scores->mean() >= filt->scores->mean() && filt->scores->mean() >= gauss->scores->mean() &&
          gauss->scores->mean() >= ideal->scores->mean())
        ++report.hierarchy_holds;
    }
    if (gauss && ideal && ideal->overhead > gauss->overhead) ++report.overhead_ideal_gt_gaussian;
    report.repetitions.push_back(std::move(rr));
  }

  report.acceptance = evaluate_acceptance(report, cfg.acceptance);
  report.metadata = {{"config", cfg.raw},
                     {"seed", cfg.seed},
                     {"repetition_seeds", rep_seeds},
                     {"seed_derivation",
                      "repetition r uses seed+r for trace generation, filter randomization (mt19937_64(seed)), "
                      "pseudo-event draws (mt19937_64(seed ^ 0x9e3779b97f4a7c15)) and the 70/30 split"}};
  if (cfg.assign_seed) report.metadata["applet_assign_seed"] = *cfg.assign_seed;
  return report;
}

}  // namespace fnf
