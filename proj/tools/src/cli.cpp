#include "adversim/cli.hpp"

#include <glob.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "adversim/ui_bridge.hpp"

namespace adversim::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + p.string());
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for " + p.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

bool is_index(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

void configure_logging() {
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("ADVERSIM_LOG_LEVEL")) {
    const std::string v = env;
    if (v == "error") {
      spdlog::set_level(spdlog::level::err);
    } else if (v == "warn") {
      spdlog::set_level(spdlog::level::warn);
    } else if (v == "info") {
      spdlog::set_level(spdlog::level::info);
    } else if (v == "debug") {
      spdlog::set_level(spdlog::level::debug);
    } else {
      spdlog::warn("ignoring ADVERSIM_LOG_LEVEL={}", v);
    }
  }
}

}  // namespace

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' must look like key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;
  }

  std::vector<std::string> path = split(key, '.');
  if (path.size() == 1) {
    bool found = false;
    for (const char* section : {"sim", "road"}) {
      if (doc.contains(section) && doc.at(section).is_object() && doc.at(section).contains(key)) {
        path.insert(path.begin(), section);
        found = true;
        break;
      }
    }
    if (!found && !doc.contains(key)) throw ConfigError("unknown override key '" + key + "'");
  }

  json* node = &doc;
  for (std::size_t i = 0; i < path.size(); ++i) {
    const std::string& part = path[i];
    const bool last = i + 1 == path.size();
    if (node->is_array()) {
      if (!is_index(part) || std::stoul(part) >= node->size()) {
        throw ConfigError("override path '" + key + "': no element '" + part + "'");
      }
      node = &(*node)[std::stoul(part)];
    } else if (node->is_object()) {
      if (!node->contains(part) && !last) (*node)[part] = json::object();
      node = &(*node)[part];
    } else {
      throw ConfigError("override path '" + key + "' descends into a scalar");
    }
  }
  *node = value;
}

EngineConfig load_config(const fs::path& path, const std::vector<std::string>& overrides) {
  const std::string text = read_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return config_from_json(doc);
}

json summary_document(const EngineConfig& c, const RunSummary& s, const std::string& digest) {
  json j = s.to_json();
  j["scenario"] = c.name;
  j["config_digest"] = digest;
  return j;
}

RunOutputs write_outputs(const Engine& engine, const fs::path& out_dir, const std::string& stem) {
  ensure_dir(out_dir);
  RunOutputs o{out_dir / (stem + ".jsonl"), out_dir / (stem + ".csv"),
               out_dir / (stem + ".summary.json")};
  const RunLog& log = engine.log();
  write_file(o.jsonl, log.to_jsonl());
  write_file(o.csv, log.to_csv());
  write_file(o.summary,
             summary_document(engine.config(), engine.summary(), log.config_digest).dump(2) + "\n");
  return o;
}

RunSummary run_scenario(const EngineConfig& c, const fs::path& out_dir, const std::string& stem) {
  ensure_dir(out_dir);
  Engine engine(c);
  const TerminationReason term = engine.run();
  spdlog::info("{}: {} at t={}", c.name, term.name(), term.t);
  write_outputs(engine, out_dir, stem);
  return engine.summary();
}

int cmd_run(const fs::path& config, const fs::path& out_dir,
            const std::vector<std::string>& overrides) {
  try {
    const EngineConfig c = load_config(config, overrides);
    const RunSummary s = run_scenario(c, out_dir, c.name);
    std::printf("%s: %s at t=%g, min distance %.3f m\n", c.name.c_str(), s.termination.c_str(),
                s.termination_t, s.min_distance);
    return kOk;
  } catch (const ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return kConfigError;
  } catch (const IoError& e) {
    spdlog::error("I/O error: {}", e.what());
    return kIoError;
  }
}

std::vector<fs::path> expand_glob(const std::string& pattern) {
  glob_t g{};
  std::vector<fs::path> out;
  if (::glob(pattern.c_str(), 0, nullptr, &g) == 0) {
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  }
  globfree(&g);
  std::sort(out.begin(), out.end());
  return out;
}

int cmd_batch(const std::string& config_glob, const fs::path& out_dir, int repeats,
              std::uint64_t seed_base) {
  const auto configs = expand_glob(config_glob);
  if (configs.empty()) {
    spdlog::error("no config matches '{}'", config_glob);
    return kConfigError;
  }
  if (repeats < 1) {
    spdlog::error("repeats must be at least 1");
    return kUsage;
  }
  int first_error = kOk;
  std::vector<BatchRun> runs;
  for (const auto& path : configs) {
    for (int r = 0; r < repeats; ++r) {
      BatchRun run;
      run.scenario = path.stem().string();
      run.seed = seed_base + static_cast<std::uint64_t>(r);
      try {
        EngineConfig c = load_config(path);
        run.scenario = c.name;
        c.sim.seed = run.seed;
        run.summary = run_scenario(c, out_dir / c.name / ("seed_" + std::to_string(run.seed)), c.name);
      } catch (const ConfigError& e) {
        run.error = e.what();
        if (first_error == kOk) first_error = kConfigError;
      } catch (const IoError& e) {
        run.error = e.what();
        if (first_error == kOk) first_error = kIoError;
      }
      if (!run.error.empty()) spdlog::error("{} seed {}: {}", path.string(), run.seed, run.error);
      runs.push_back(std::move(run));
    }
  }
  const BatchSummary b = aggregate(std::move(runs));
  try {
    ensure_dir(out_dir);
    write_file(out_dir / "batch_summary.json", b.to_json().dump(2) + "\n");
  } catch (const IoError& e) {
    spdlog::error("I/O error: {}", e.what());
    return kIoError;
  }
  std::printf("%d runs, %d failures, collision rate %.3f\n", b.runs, b.failures, b.collision_rate);
  return first_error;
}

int cmd_serve(const fs::path& config, const ServeOptions& options) {
  EngineConfig c;
  try {
    c = load_config(config, options.overrides);
    ensure_dir(options.out_dir);
  } catch (const ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return kConfigError;
  } catch (const IoError& e) {
    spdlog::error("I/O error: {}", e.what());
    return kIoError;
  }
  c.sv.policy = "external";
  auto external = std::make_shared<ExternalPolicy>(c.anchor.bicycle, c.sv.params.box);

  std::unique_ptr<UiBridge> bridge;
  try {
    BridgeOptions bo;
    bo.address = options.address;
    bo.port = options.port;
    bo.static_dir = options.static_dir;
    bridge = std::make_unique<UiBridge>(bo);
  } catch (const BindError& e) {
    spdlog::error("{}", e.what());
    return kBindError;
  }
  std::printf("serving %s on ws://%s:%u/ws\n", c.name.c_str(), options.address.c_str(),
              static_cast<unsigned>(bridge->port()));
  std::fflush(stdout);

  Engine engine(c, external);
  const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double>(c.sim.delta / std::max(options.speed, 1e-6)));
  auto next = std::chrono::steady_clock::now();
  int session = 0;
  auto stem = [&] { return session == 0 ? c.name : c.name + ".run" + std::to_string(session); };

  try {
    while (true) {
      bool reset = false;
      for (const WireCommand& cmd : bridge->drain_commands()) {
        if (const auto* ctl = std::get_if<ControlCommand>(&cmd)) {
          const ControlCommand u = clamp_command(*ctl, c.sv.params.box, c.anchor.bicycle);
          external->set_command(u.a, u.steer, engine.snapshot().t);
        } else if (std::holds_alternative<StopCommand>(cmd)) {
          engine.request_stop();
        } else {
          reset = true;
          engine.request_stop();
        }
      }
      const auto term = engine.step();
      bridge->broadcast(wire_snapshot(engine).dump());
      if (term) {
        write_outputs(engine, options.out_dir, stem());
        spdlog::info("{}: {} at t={}", stem(), term->name(), term->t);
        if (!reset) break;
        ++session;
        engine.reset();
      }
      next += period;
      std::this_thread::sleep_until(next);
    }
  } catch (const IoError& e) {
    spdlog::error("I/O error: {}", e.what());
    return kIoError;
  }
  // Let the final snapshot reach the clients.
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  bridge->shutdown();
  return kOk;
}

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"adversim: adversarial multi-vehicle testing simulator"};
  app.require_subcommand(1);

  std::string run_config;
  std::string run_out;
  std::vector<std::string> run_sets;
  auto* run = app.add_subcommand("run", "Run one scenario and write its logs");
  run->add_option("config", run_config, "Scenario JSON file")->required();
  run->add_option("--out", run_out, "Output directory")->required();
  run->add_option("--set", run_sets, "Config override key=value (repeatable)");

  std::string batch_glob;
  std::string batch_out;
  int repeats = 1;
  std::uint64_t seed = 0;
  auto* batch = app.add_subcommand("batch", "Run every matching scenario several times");
  batch->add_option("glob", batch_glob, "Scenario glob, e.g. 'scenarios/*.json'")->required();
  batch->add_option("--out", batch_out, "Output directory")->required();
  batch->add_option("--repeats", repeats, "Runs per scenario")->check(CLI::PositiveNumber);
  batch->add_option("--seed", seed, "First seed");

  std::string serve_config;
  ServeOptions serve_opts;
  std::string web_dir;
#ifdef ADVERSIM_WEB_DIR
  web_dir = ADVERSIM_WEB_DIR;
#endif
  std::string serve_out = ".";
  auto* serve = app.add_subcommand("serve", "Drive the SV from a browser over a websocket");
  serve->add_option("config", serve_config, "Scenario JSON file")->required();
  serve->add_option("--port", serve_opts.port, "Listen port");
  serve->add_option("--address", serve_opts.address, "Listen address");
  serve->add_option("--out", serve_out, "Output directory for run logs");
  serve->add_option("--web", web_dir, "Directory served under /");
  serve->add_option("--speed", serve_opts.speed, "Simulation speed relative to real time")
      ->check(CLI::PositiveNumber);
  serve->add_option("--set", serve_opts.overrides, "Config override key=value (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  if (*run) return cmd_run(run_config, run_out, run_sets);
  if (*batch) return cmd_batch(batch_glob, batch_out, repeats, seed);
  serve_opts.out_dir = serve_out;
  serve_opts.static_dir = web_dir;
  return cmd_serve(serve_config, serve_opts);
}

}  // namespace adversim::cli
