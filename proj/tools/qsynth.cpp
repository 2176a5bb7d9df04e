// qsynth: simulate measurement traces, render them to WAV, or run live.
//
// Exit codes: 0 ok, 2 bad arguments, 3 I/O failure (unreadable, malformed or
// unwritable files; port in use), 4 parameter or patch validation failure.
// stdout carries one machine-readable status line per result; diagnostics go
// to stderr. QSYNTH_LOG=error|info|debug sets the diagnostic level.

#include <csignal>
#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <boost/asio/signal_set.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "qsynth/live/control.hpp"
#include "qsynth/live/engine.hpp"
#include "qsynth/live/server.hpp"
#include "qsynth/qsynth.hpp"

namespace {

enum Exit : int { kOk = 0, kUsage = 2, kIo = 3, kValidation = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("qsynth");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("QSYNTH_LOG");
  const std::string level = env ? env : "error";
  if (level == "debug")
    spdlog::set_level(spdlog::level::debug);
  else if (level == "info")
    spdlog::set_level(spdlog::level::info);
  else
    spdlog::set_level(spdlog::level::err);
}

std::string read_text(const std::string& path) { return qsynth::io::detail::read_file(path); }

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string engine;
  std::optional<std::string> params;
  double duration_s = 10.0;
  std::uint64_t seed = 0;
  std::string out;
};

qsynth::MeasurementTrace simulate_trace(const std::string& engine, const std::optional<std::string>& params,
                                        double duration_s, std::uint64_t seed) {
  using namespace qsynth;
  const std::string text = params ? read_text(*params) : std::string("{}");
  if (engine == "two-state") return sim::simulate_two_state(io::parse_two_state_params(text), duration_s, seed);
  if (engine == "four-state") return sim::simulate_four_state(io::parse_four_state_params(text), duration_s, seed);
  if (engine == "follower") return sim::simulate_follower(io::parse_follower_params(text), duration_s, seed);
  throw UsageError("engine '" + engine + "' does not produce a measurement trace");
}

int cmd_simulate(const SimulateArgs& a) {
  using namespace qsynth;
  if (a.engine == "drift") {
    const std::string text = a.params ? read_text(*a.params) : std::string("{}");
    const auto drift = sim::simulate_drift(io::parse_drift_params(text), a.duration_s, a.seed);
    io::write_drift(drift, a.seed, a.out);
    std::cout << "WROTE " << a.out << " samples=" << drift.values.size() << '\n';
    return kOk;
  }
  const auto trace = simulate_trace(a.engine, a.params, a.duration_s, a.seed);
  io::write_trace(trace, a.out);
  std::cout << "WROTE " << a.out << " samples=" << trace.length() << " channels=" << trace.channels() << '\n';
  return kOk;
}

// ------------------------------------------------------------------ render

struct RenderArgs {
  std::string trace;
  std::optional<std::string> drift;
  std::string patch;
  double rate_hz = 48'000.0;
  std::string out;
  std::string format = "pcm16";
  std::uint64_t seed = 0;
};

int cmd_render(const RenderArgs& a) {
  using namespace qsynth;
  const auto patch = io::parse_patch(read_text(a.patch));
  const auto trace = io::read_trace(a.trace);
  std::optional<DriftTrace> drift;
  if (a.drift) drift = io::read_drift(*a.drift);
  spdlog::info("rendering {} frames of {} channel(s) at {} Hz", trace.length(), trace.channels(), a.rate_hz);
  const auto source = condition(trace, patch, a.rate_hz, drift);
  const auto audio = render_offline(source, patch, a.seed);
  io::write_wav(audio, a.out, a.format == "float32" ? io::WavFormat::float32 : io::WavFormat::pcm16);
  std::cout << "WROTE " << a.out << " frames=" << audio.frames() << " channels=" << audio.channels()
            << " clips=" << audio.clip_count << '\n';
  return kOk;
}

// -------------------------------------------------------------------- live

struct LiveArgs {
  std::string listen;
  std::string patch;
  std::optional<std::string> trace;
  std::optional<std::string> engine;
  std::optional<std::string> params;
  std::optional<std::string> drift;
  double rate_hz = 48'000.0;
  std::optional<std::string> out_wav;
  std::uint64_t seed = 0;
  double loop_seconds = 30.0;
};

std::pair<std::string, std::uint16_t> split_listen(const std::string& listen) {
  const auto colon = listen.rfind(':');
  if (colon == std::string::npos) throw UsageError("--listen expects <addr:port>");
  std::string host = listen.substr(0, colon);
  unsigned port = 0;
  if (!qsynth::io::detail::parse_int(std::string_view(listen).substr(colon + 1), port) || port > 65535)
    throw UsageError("invalid port in --listen");
  if (host.empty() || host == "localhost") host = "127.0.0.1";
  if (host.size() > 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
  return {host, static_cast<std::uint16_t>(port)};
}

int cmd_live(const LiveArgs& a) {
  using namespace qsynth;
  const auto [host, port] = split_listen(a.listen);
  const auto patch = io::parse_patch(read_text(a.patch));

  const auto trace = a.trace ? io::read_trace(*a.trace) : simulate_trace(*a.engine, a.params, a.loop_seconds, a.seed);
  std::optional<DriftTrace> drift;
  if (a.drift) drift = io::read_drift(*a.drift);
  auto source = std::make_shared<const ConditionedSource>(condition(trace, patch, a.rate_hz, drift));

  live::EngineConfig config;
  config.rate_hz = a.rate_hz;
  config.seed = a.seed;
  if (a.out_wav) config.tap_path = *a.out_wav;
  live::LiveEngine engine(config, patch, source);
  live::ControlPlane control(engine, trace, drift);
  live::LiveServer server(control, host, port);

  boost::asio::signal_set signals(server.context(), SIGINT, SIGTERM);
  signals.async_wait([&](const boost::system::error_code& ec, int) {
    if (!ec) server.stop();
  });

  engine.start();
  std::cout << "LIVE " << server.endpoint() << std::endl;
  spdlog::info("rendering {}-frame blocks at {} Hz; auth {}", config.block_frames, a.rate_hz,
               control.requires_auth() ? "required" : "disabled");
  server.run();
  engine.shutdown();
  const auto s = engine.status();
  std::cout << "STOPPED blocks=" << s.block_index << " clips=" << s.clip_count
            << " tap_drops=" << engine.dropped_tap_blocks() << std::endl;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Simulate qubit measurement records and sonify them."};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate a measurement or drift trace");
  simulate->add_option("--engine", sim.engine, "two-state | four-state | follower | drift")
      ->required()
      ->check(CLI::IsMember({"two-state", "four-state", "follower", "drift"}));
  simulate->add_option("--params", sim.params, "JSON parameter file (defaults to the engine preset)");
  simulate->add_option("--duration", sim.duration_s, "Duration in seconds")->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sim.seed, "Random seed");
  simulate->add_option("--out", sim.out, "Output trace file")->required();

  RenderArgs ren;
  auto* render = app.add_subcommand("render", "Render a trace to WAV through a patch");
  render->add_option("--trace", ren.trace, "Input trace file")->required();
  render->add_option("--drift", ren.drift, "Optional drift trace driving the drift drone");
  render->add_option("--patch", ren.patch, "Patch JSON file")->required();
  render->add_option("--rate", ren.rate_hz, "Output sample rate in Hz");
  render->add_option("--out", ren.out, "Output WAV file")->required();
  render->add_option("--format", ren.format, "pcm16 | float32")->check(CLI::IsMember({"pcm16", "float32"}));
  render->add_option("--seed", ren.seed, "Seed for noise oscillators");

  LiveArgs lv;
  auto* live = app.add_subcommand("live", "Render continuously under network control");
  live->add_option("--listen", lv.listen, "Control endpoint <addr:port>")->required();
  live->add_option("--patch", lv.patch, "Initial patch JSON file")->required();
  auto* trace_opt = live->add_option("--trace", lv.trace, "Trace file to loop");
  auto* engine_opt = live->add_option("--engine", lv.engine, "Simulate a looped segment: two-state | four-state | follower")
                         ->check(CLI::IsMember({"two-state", "four-state", "follower"}));
  trace_opt->excludes(engine_opt);
  live->add_option("--params", lv.params, "Simulator parameter file for --engine")->needs(engine_opt);
  live->add_option("--drift", lv.drift, "Optional drift trace");
  live->add_option("--rate", lv.rate_hz, "Output sample rate in Hz");
  live->add_option("--out-wav", lv.out_wav, "Write every rendered block to this WAV file");
  live->add_option("--seed", lv.seed, "Seed for simulation and noise oscillators");
  live->add_option("--loop-seconds", lv.loop_seconds, "Length of the simulated loop for --engine")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
    if (live->parsed() && !lv.trace && !lv.engine) throw UsageError("live needs --trace or --engine");
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << live->help();
    return kUsage;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim);
    if (render->parsed()) return cmd_render(ren);
    return cmd_live(lv);
  } catch (const UsageError& e) {
    spdlog::error("{}", e.what());
    return kUsage;
  } catch (const qsynth::IoError& e) {
    spdlog::error("{}", e.what());
    return kIo;
  } catch (const qsynth::ParseError& e) {
    spdlog::error("{}", e.what());
    return kIo;
  } catch (const qsynth::FormatError& e) {
    spdlog::error("{}", e.what());
    return kIo;
  } catch (const qsynth::Error& e) {
    spdlog::error("{}", e.what());
    return kValidation;
  } catch (const std::exception& e) {
    spdlog::error("unexpected failure: {}", e.what());
    return kIo;
  }
}
