#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "lunasim/scenario/scenario.hpp"
#include "lunasim/sim/trace.hpp"

namespace fs = std::filesystem;
using namespace lunasim;

namespace {

enum class LogLevel { QUIET = 0, INFO = 1, DEBUG = 2 };
LogLevel g_log = LogLevel::INFO;

void info(const std::string& msg) {
  if (g_log >= LogLevel::INFO) std::cerr << "lunasim: " << msg << "\n";
}

void debug(const std::string& msg) {
  if (g_log >= LogLevel::DEBUG) std::cerr << "lunasim: " << msg << "\n";
}

scenario::ScenarioSpec resolve_scenario(const std::string& ref) {
  for (const auto& name : scenario::bundled_scenario_names())
    if (ref == name) {
      debug("using bundled scenario '" + ref + "'");
      return scenario::bundled_scenario(ref);
    }
  debug("loading scenario file " + ref);
  return scenario::load_scenario(ref);
}

// All outputs land complete or not at all: write a sibling temp file, then
// rename over the destination.
void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
  debug("wrote " + path.string() + " (" + std::to_string(content.size()) +
        " bytes)");
}

std::string metrics_payload(const scenario::MetricsReport& report,
                            const fs::path& path) {
  if (path.extension() == ".csv") return report.to_csv();
  return report.to_json().dump(2) + "\n";
}

std::string fmt_ratio(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (part.empty()) continue;
    std::size_t used = 0;
    std::uint64_t v = std::stoull(part, &used);
    if (used != part.size())
      throw CLI::ValidationError("--seeds", "bad seed '" + part + "'");
    seeds.push_back(v);
  }
  if (seeds.empty())
    throw CLI::ValidationError("--seeds", "expected a comma-separated list");
  return seeds;
}

std::string sweep_table(const std::vector<std::uint64_t>& seeds,
                        const std::vector<scenario::MetricsReport>& reports) {
  static const char* kClasses[] = {"EMERGENCY", "OPERATIONAL", "BULK"};
  std::ostringstream out;
  out << "seed,alert_raised_us,alert_e2e_latency_us,decision_count,"
         "autonomous_decision_fraction";
  for (const char* cls : kClasses)
    out << ",created_" << cls << ",delivered_" << cls << ",ratio_" << cls;
  out << "\n";
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const auto& r = reports[i];
    out << seeds[i] << ",";
    if (r.alert_raised_us) out << *r.alert_raised_us;
    out << ",";
    if (r.alert_e2e_latency_us) out << *r.alert_e2e_latency_us;
    out << "," << r.decision_count << ","
        << fmt_ratio(r.autonomous_decision_fraction);
    for (const char* cls : kClasses) {
      auto it = r.bundle_counts.find(cls);
      if (it == r.bundle_counts.end()) {
        out << ",0,0,";
        continue;
      }
      out << "," << it->second.created << "," << it->second.delivered << ","
          << fmt_ratio(r.delivery_ratio.at(cls));
    }
    out << "\n";
  }
  return out.str();
}

struct CliConfig {
  std::string scenario;
  std::uint64_t seed{0};
  bool seed_given{false};
  double until_s{0.0};
  bool until_given{false};
  std::string trace_out;
  std::string metrics_out;
  std::string trace_in;
  std::string seeds_text;
  unsigned jobs{0};
};

scenario::ScenarioSpec configured_spec(const CliConfig& cfg) {
  scenario::ScenarioSpec spec = resolve_scenario(cfg.scenario);
  if (cfg.seed_given) spec.seed = cfg.seed;
  if (cfg.until_given) {
    if (cfg.until_s <= 0)
      throw scenario::ValidationError("cli", "until", "must be positive");
    spec.duration =
        sim::Duration{static_cast<std::uint64_t>(cfg.until_s * 1e6)};
  }
  return spec;
}

int cmd_run(const CliConfig& cfg) {
  scenario::ScenarioSpec spec = configured_spec(cfg);
  info("running '" + spec.name + "' seed " + std::to_string(spec.seed) +
       " for " + std::to_string(spec.duration.us / 1'000'000) + " s");
  auto rr = scenario::run_scenario(spec);
  debug(std::to_string(rr.trace.size()) + " trace records");

  std::string stem = spec.name + "-seed" + std::to_string(spec.seed);
  fs::path trace_path = cfg.trace_out.empty()
                            ? fs::path("out") / (stem + ".trace.jsonl")
                            : fs::path(cfg.trace_out);
  fs::path metrics_path = cfg.metrics_out.empty()
                              ? fs::path("out") / (stem + ".metrics.json")
                              : fs::path(cfg.metrics_out);
  write_atomic(trace_path, rr.trace_jsonl);
  write_atomic(metrics_path, metrics_payload(rr.report, metrics_path));
  std::cout << "trace: " << trace_path.string() << "\n";
  std::cout << "metrics: " << metrics_path.string() << "\n";
  return 0;
}

int cmd_sweep(const CliConfig& cfg) {
  scenario::ScenarioSpec base = configured_spec(cfg);
  std::vector<std::uint64_t> seeds = parse_seed_list(cfg.seeds_text);
  unsigned jobs = cfg.jobs == 0 ? std::thread::hardware_concurrency()
                                : cfg.jobs;
  if (jobs == 0) jobs = 1;
  jobs = std::min<unsigned>(jobs, seeds.size());
  info("sweeping '" + base.name + "' over " + std::to_string(seeds.size()) +
       " seeds with " + std::to_string(jobs) + " jobs");

  std::vector<scenario::MetricsReport> reports(seeds.size());
  std::vector<std::string> failures(seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < seeds.size();) {
      scenario::ScenarioSpec spec = base;
      spec.seed = seeds[i];
      try {
        reports[i] = scenario::run_scenario(spec).report;
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned i = 0; i < jobs; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < seeds.size(); ++i)
    if (!failures[i].empty())
      throw std::runtime_error("seed " + std::to_string(seeds[i]) +
                               " failed: " + failures[i]);

  fs::path table_path =
      cfg.metrics_out.empty()
          ? fs::path("out") / (base.name + "-sweep.csv")
          : fs::path(cfg.metrics_out);
  write_atomic(table_path, sweep_table(seeds, reports));
  std::cout << "sweep: " << table_path.string() << "\n";
  return 0;
}

int cmd_validate(const CliConfig& cfg) {
  scenario::ScenarioSpec spec = resolve_scenario(cfg.scenario);
  std::cout << "valid: " << spec.name << " (" << spec.nodes.size()
            << " nodes, " << spec.links.size() << " links, "
            << spec.duration.us / 1'000'000 << " s)\n";
  return 0;
}

int cmd_metrics(const CliConfig& cfg) {
  std::ifstream in(cfg.trace_in, std::ios::binary);
  if (!in)
    throw scenario::ParseError("cannot read trace file: " + cfg.trace_in);
  std::ostringstream buf;
  buf << in.rdbuf();
  auto records = sim::Trace::parse_jsonl(buf.str());
  debug(std::to_string(records.size()) + " trace records parsed");

  sim::Duration duration{};
  if (!cfg.scenario.empty()) {
    duration = configured_spec(cfg).duration;
  } else {
    for (const auto& r : records)
      duration.us = std::max(duration.us, r.value("t", std::uint64_t{0}));
  }
  auto report = scenario::MetricsReport::from_trace(records, duration);

  fs::path metrics_path =
      cfg.metrics_out.empty()
          ? fs::path("out") /
                (fs::path(cfg.trace_in).stem().string() + ".metrics.json")
          : fs::path(cfg.metrics_out);
  write_atomic(metrics_path, metrics_payload(report, metrics_path));
  std::cout << "metrics: " << metrics_path.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic lunar-surface network simulator"};
  app.require_subcommand(1);
  CliConfig cfg;

  std::string log_level = "info";
  app.add_option("--log-level", log_level, "quiet, info, or debug")
      ->check(CLI::IsMember({"quiet", "info", "debug"}))
      ->capture_default_str();

  auto add_scenario = [&](CLI::App* cmd, bool required) {
    cmd->fallthrough();  // lets --log-level appear after the subcommand
    auto* opt = cmd->add_option("--scenario", cfg.scenario,
                                "Bundled scenario name or spec file path");
    if (required) opt->required();
    return opt;
  };
  auto add_overrides = [&](CLI::App* cmd) {
    cmd->add_option("--seed", cfg.seed, "Override the spec seed")
        ->each([&](const std::string&) { cfg.seed_given = true; });
    cmd->add_option("--until", cfg.until_s,
                    "Override the duration (seconds)")
        ->each([&](const std::string&) { cfg.until_given = true; });
  };

  CLI::App* run = app.add_subcommand("run", "Run one scenario");
  add_scenario(run, true);
  add_overrides(run);
  run->add_option("--trace-out", cfg.trace_out, "Trace output path (.jsonl)");
  run->add_option("--metrics-out", cfg.metrics_out,
                  "Metrics output path (.json or .csv)");

  CLI::App* sweep = app.add_subcommand("sweep", "Run a list of seeds");
  add_scenario(sweep, true);
  add_overrides(sweep);
  sweep->add_option("--seeds", cfg.seeds_text, "Comma-separated seed list")
      ->required();
  sweep->add_option("--jobs", cfg.jobs, "Parallel runs (0 = all cores)");
  sweep->add_option("--metrics-out", cfg.metrics_out,
                    "Summary table path (.csv)");

  CLI::App* validate = app.add_subcommand("validate", "Check a spec");
  add_scenario(validate, true);

  CLI::App* metrics =
      app.add_subcommand("metrics", "Recompute a report from a trace");
  metrics->add_option("--trace", cfg.trace_in, "Trace file (.jsonl)")
      ->required();
  add_scenario(metrics, false);
  metrics->add_option("--until", cfg.until_s, "Duration override (seconds)")
      ->each([&](const std::string&) { cfg.until_given = true; });
  metrics->add_option("--metrics-out", cfg.metrics_out,
                      "Metrics output path (.json or .csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (log_level == "quiet") g_log = LogLevel::QUIET;
  else if (log_level == "debug") g_log = LogLevel::DEBUG;

  try {
    if (run->parsed()) return cmd_run(cfg);
    if (sweep->parsed()) return cmd_sweep(cfg);
    if (validate->parsed()) return cmd_validate(cfg);
    if (metrics->parsed()) return cmd_metrics(cfg);
    return 1;
  } catch (const scenario::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const scenario::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
