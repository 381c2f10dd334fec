// replaykit command-line front end.

#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "cli_config.hpp"
#include "replaykit/live_source.hpp"
#include "replaykit/model_io.hpp"
#include "replaykit/pipeline.hpp"
#include "replaykit/sim/companion.hpp"
#include "replaykit/sim/device.hpp"

namespace rk = replaykit;
using namespace replaykit::cli;
using std::chrono::milliseconds;

namespace {

struct Flags {
  std::optional<std::string> config;
  std::optional<std::string> app, device, transport;
  std::optional<std::string> training_capture, attack_capture, model, attack, report;
  std::optional<std::int64_t> flow_timeout_ms, request_delay_ms, flow_delay_ms, connect_timeout_ms;
  std::optional<std::string> model_kind;
  std::optional<std::size_t> k, trees, subsample, j, repetitions;
  std::optional<double> threshold, anomaly_cutoff;
  std::optional<std::uint64_t> model_seed;
  std::optional<std::string> scenario, profile, profile_transport, bind;
  std::optional<std::uint16_t> port;
  std::optional<std::uint64_t> device_seed;
  std::optional<std::int64_t> post_restart_delay_ms;
  bool no_rekey = false;
  std::optional<std::string> interface;
  double duration_s = 0;
  bool own_device = false;
  std::optional<std::string> training_out, attack_out;
  std::string report_file;
};

void add_session(CLI::App* c, Flags& f) {
  c->add_option("--app", f.app, "companion app endpoint ip:port (port 0 = any)");
  c->add_option("--device", f.device, "device endpoint ip:port");
  c->add_option("--transport", f.transport, "tcp, udp or both");
}

void add_live(CLI::App* c, Flags& f) {
  c->add_option("--interface", f.interface, "sniff this interface instead of reading a capture file");
  c->add_option("--duration", f.duration_s, "sniffing time in seconds (with --interface)");
  c->add_flag("--i-own-this-device", f.own_device, "required for live traffic: you own the target device");
}

void add_replay(CLI::App* c, Flags& f) {
  c->add_option("--flow-timeout-ms", f.flow_timeout_ms, "per-flow response timeout");
  c->add_option("--request-delay-ms", f.request_delay_ms, "delay between requests of a flow");
  c->add_option("--flow-delay-ms", f.flow_delay_ms, "delay between flows");
  c->add_option("--connect-timeout-ms", f.connect_timeout_ms, "TCP connect timeout");
}

void add_model(CLI::App* c, Flags& f) {
  c->add_option("--model-kind", f.model_kind, "lof or isolation_forest");
  c->add_option("--k", f.k, "LOF neighbourhood size");
  c->add_option("--threshold", f.threshold, "LOF score above which a response is irregular");
  c->add_option("--trees", f.trees, "isolation forest size");
  c->add_option("--subsample", f.subsample, "isolation forest subsample size");
  c->add_option("--model-seed", f.model_seed, "isolation forest seed");
  c->add_option("--anomaly-cutoff", f.anomaly_cutoff, "isolation forest score cutoff");
}

void add_profile(CLI::App* c, Flags& f) {
  c->add_option("--profile", f.profile,
                "CleartextEcho, SignedCleartext, EncodedFixed, SessionKey, TlsLike or Silent");
  c->add_option("--profile-transport", f.profile_transport, "override the profile's transport (tcp/udp)");
  c->add_option("--port", f.port, "device port (0 = any free port)");
  c->add_option("--bind", f.bind, "device bind address");
  c->add_option("--device-seed", f.device_seed, "seed for device-side randomness");
  c->add_flag("--no-rekey", f.no_rekey, "SessionKey: keep the key across restarts");
}

PipelineConfig resolve(const Flags& f) {
  PipelineConfig c = f.config ? load_config(*f.config) : PipelineConfig{};
  try {
    if (f.app) c.app = rk::Endpoint::parse(*f.app);
    if (f.device) c.device = rk::Endpoint::parse(*f.device);
  } catch (const rk::ParameterError& e) {
    throw UsageError(e.what());
  }
  if (f.transport) c.transport = transport_filter_from_string(*f.transport);
  if (f.training_capture) c.paths.training_capture = *f.training_capture;
  if (f.attack_capture) c.paths.attack_capture = *f.attack_capture;
  if (f.model) c.paths.model = *f.model;
  if (f.attack) c.paths.attack = *f.attack;
  if (f.report) c.paths.report = *f.report;
  if (f.flow_timeout_ms) c.replay.per_flow_response_timeout = milliseconds(*f.flow_timeout_ms);
  if (f.request_delay_ms) c.replay.inter_request_delay = milliseconds(*f.request_delay_ms);
  if (f.flow_delay_ms) c.replay.inter_flow_delay = milliseconds(*f.flow_delay_ms);
  if (f.connect_timeout_ms) c.replay.connect_timeout = milliseconds(*f.connect_timeout_ms);
  try {
    if (f.model_kind) c.model.kind = rk::detector::model_kind_from_string(*f.model_kind);
    if (f.scenario) c.scenario = rk::sim::scenario_from_string(*f.scenario);
    if (f.profile) {
      c.profile.behavior = rk::sim::behavior_from_string(*f.profile);
      c.profile.transport = rk::sim::default_transport(c.profile.behavior);
      c.profile_set = true;
    }
    if (f.profile_transport) c.profile.transport = rk::capture::transport_from_string(*f.profile_transport);
  } catch (const rk::ParameterError& e) {
    throw UsageError(e.what());
  }
  if (f.k) c.model.k = *f.k;
  if (f.threshold) c.model.threshold = *f.threshold;
  if (f.trees) c.model.trees = *f.trees;
  if (f.subsample) c.model.subsample = *f.subsample;
  if (f.model_seed) c.model.seed = *f.model_seed;
  if (f.anomaly_cutoff) c.model.anomaly_cutoff = *f.anomaly_cutoff;
  if (f.j) c.detection.j = *f.j;
  if (f.repetitions) c.repetitions = *f.repetitions;
  if (f.post_restart_delay_ms) c.post_restart_delay = milliseconds(*f.post_restart_delay_ms);
  if (f.port) c.profile.port = *f.port;
  if (f.bind) c.profile.bind_address = *f.bind;
  if (f.device_seed) c.profile.seed = *f.device_seed;
  if (f.no_rekey) c.profile.rekey_on_restart = false;

  try {
    c.replay.validate();
    c.detection.validate();
  } catch (const rk::ParameterError& e) {
    throw UsageError(e.what());
  }
  return c;
}

rk::Bytes read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw UsageError("cannot read " + p.string());
  return rk::Bytes(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& p, const rk::Bytes& b) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  if (!out) throw rk::Error("cannot write " + p.string());
}

std::vector<rk::capture::PacketRecord> load_records(const Flags& f,
                                                    const std::optional<std::filesystem::path>& file,
                                                    const rk::capture::SessionConfig& session,
                                                    const char* what) {
  if (f.interface) {
    if (!f.own_device) {
      throw UsageError("live capture needs --i-own-this-device: only test devices you own");
    }
    if (f.duration_s <= 0) throw UsageError("--duration must be positive with --interface");
    std::cerr << "sniffing " << *f.interface << " for " << f.duration_s << " s; operate the device now\n";
    rk::capture::LiveFrameSource source(*f.interface,
                                        milliseconds(static_cast<std::int64_t>(f.duration_s * 1000)));
    return rk::capture::parse_frames(source, session).records;
  }
  if (!file) throw UsageError(std::string("no ") + what + " given");
  auto result = rk::capture::parse_capture_detailed(read_file(*file), session);
  if (result.interleaved_connections) {
    std::cerr << "warning: interleaved TCP connections in " << file->string() << "; payloads were merged by time\n";
  }
  return result.records;
}

int cmd_train(const Flags& f) {
  auto c = resolve(f);
  auto session = c.session();
  if (!c.paths.model) throw UsageError("no model output path (--model)");
  auto records = load_records(f, c.paths.training_capture, session, "training capture (--training-capture)");
  rk::pipeline::TrainingResult t;
  try {
    t = rk::pipeline::train(records, session, c.model);
  } catch (const rk::pipeline::NoLocalConnectivityError& e) {
    std::cout << "NO-LOCAL-CONNECTIVITY: " << e.what() << "\n";
    return exit_code::kNoLocalConnectivity;
  }
  std::cout << "requests: " << t.request_count << "\n"
            << "training size: " << t.responses.size() << "\n"
            << "response type: "
            << (t.response_type ? rk::detector::to_string(*t.response_type) : std::string_view("none")) << "\n";
  if (t.response_type == rk::detector::ResponseClass::StandardEncrypted) {
    std::cout << "warning: the device uses a standard security protocol; replays will be judged FAILED\n";
  }
  if (!t.model) {
    std::cerr << "error: fewer than 2 responses in the training capture; no model written\n";
    return exit_code::kError;
  }
  rk::detector::save_model(*t.model, *c.paths.model);
  std::cout << "model: " << rk::detector::to_string(t.model->kind());
  if (t.model->kind() == rk::detector::ModelKind::Lof) std::cout << " (k_eff " << t.model->lof().k_eff() << ")";
  std::cout << "\nwrote " << c.paths.model->string() << "\n";
  return exit_code::kOk;
}

int cmd_attack(const Flags& f) {
  auto c = resolve(f);
  auto session = c.session();
  if (!c.paths.attack) throw UsageError("no attack output path (--attack)");
  auto records = load_records(f, c.paths.attack_capture, session, "attack capture (--attack-capture)");
  auto file = rk::pipeline::attack(records, session, c.replay);
  rk::report::write_json(*c.paths.attack, rk::report::to_json(file));
  std::cout << rk::report::render(rk::report::to_json(file)) << "wrote " << c.paths.attack->string() << "\n";
  return exit_code::kOk;
}

int cmd_detect(const Flags& f) {
  auto c = resolve(f);
  if (!c.paths.attack) throw UsageError("no attack file (--attack)");
  if (!std::filesystem::exists(*c.paths.attack)) throw UsageError("missing " + c.paths.attack->string());
  auto attack = rk::report::attack_from_json(rk::report::read_json(*c.paths.attack));

  std::optional<rk::detector::NoveltyModel> model;
  if (c.paths.model) {
    if (!std::filesystem::exists(*c.paths.model)) throw UsageError("missing " + c.paths.model->string());
    model = rk::detector::load_model(*c.paths.model);
  }
  rk::report::VerdictReport r;
  try {
    r = rk::pipeline::detect(attack, model ? &*model : nullptr, c.detection,
                             std::string(rk::sim::to_string(c.scenario)));
  } catch (const rk::ParameterError& e) {
    throw UsageError(std::string(e.what()) + " (--model)");
  }
  auto doc = rk::report::to_json(r);
  if (c.paths.report) rk::report::write_json(*c.paths.report, doc);
  std::cout << rk::report::render(doc);
  return r.verdict.outcome == rk::verdict::Outcome::Successful ? exit_code::kVulnerable
                                                               : exit_code::kNotVulnerable;
}

int cmd_assess(const Flags& f) {
  auto c = resolve(f);
  if (!c.profile_set) {
    throw UsageError("assess drives a simulated device (--profile); live targets have no ground-truth oracle");
  }
  rk::pipeline::AssessConfig a;
  a.profile = c.profile;
  a.scenario = c.scenario;
  a.repetitions = c.repetitions;
  a.replay = c.replay;
  a.detection = c.detection;
  a.model = c.model;
  a.post_restart_delay = c.post_restart_delay;
  if (c.app) a.app = *c.app;
  a.progress = [](std::size_t run, const rk::report::VerdictReport& v) {
    std::cerr << "run " << run + 1 << ": " << rk::verdict::to_string(v.verdict.outcome) << " ("
              << rk::verdict::to_string(v.verdict.reason) << ")\n";
  };
  try {
    a.validate();
  } catch (const rk::ParameterError& e) {
    throw UsageError(e.what());
  }
  auto r = rk::pipeline::assess(a);
  auto doc = rk::report::to_json(r);
  if (c.paths.report) rk::report::write_json(*c.paths.report, doc);
  std::cout << rk::report::render(doc);
  if (r.ground_truth_mismatches > 0) {
    std::cout << "warning: " << r.ground_truth_mismatches << " runs disagreed with the expected device behaviour\n";
  }
  return exit_code::kOk;
}

int cmd_simulate(const Flags& f) {
  auto c = resolve(f);
  if (!c.profile_set) throw UsageError("no --profile given");
  auto device = rk::sim::spawn_device(c.profile);
  rk::Endpoint app = c.app.value_or(rk::Endpoint("127.0.0.1", 0));
  std::cout << "listening on " << device->endpoint().to_string() << " ("
            << rk::sim::to_string(c.profile.behavior) << ", " << rk::capture::to_string(c.profile.transport)
            << ")\n"
            << "session: --app " << rk::Endpoint(app.address(), 0).to_string() << " --device "
            << device->endpoint().to_string() << "\n";
  if (f.training_out) {
    write_file(*f.training_out, rk::sim::companion_session(*device, app));
    std::cout << "wrote training capture " << *f.training_out << "\n";
  }
  if (f.attack_out) {
    write_file(*f.attack_out, rk::sim::companion_session(*device, app, {rk::sim::DeviceState::Obverse}));
    rk::sim::trigger_state(*device, rk::sim::DeviceState::Reverse, app);
    std::cout << "wrote attack capture " << *f.attack_out << " (device set back to REVERSE)\n";
  }
  std::cout << std::flush;

  if (f.duration_s > 0) {
    std::this_thread::sleep_for(milliseconds(static_cast<std::int64_t>(f.duration_s * 1000)));
  } else {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    int sig = 0;
    sigwait(&set, &sig);
  }
  std::cout << "final state: " << rk::sim::to_string(device->query_state()) << "\n";
  return exit_code::kOk;
}

int cmd_report(const Flags& f) {
  if (!std::filesystem::exists(f.report_file)) throw UsageError("missing " + f.report_file);
  std::cout << rk::report::render(rk::report::read_json(f.report_file));
  return exit_code::kOk;
}

}  // namespace

int main(int argc, char** argv) {
  // Blocked before any thread starts so sigwait in `simulate` receives them.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);

  CLI::App app{"replaykit: replay-attack assessment for local IoT device protocols"};
  app.require_subcommand(1);
  Flags f;
  app.add_option("--config", f.config, "JSON config file; flags override its values");

  auto* train = app.add_subcommand("train", "train the response model from a training capture");
  add_session(train, f);
  add_live(train, f);
  add_model(train, f);
  train->add_option("--training-capture", f.training_capture, "pcap of legitimate app<->device traffic");
  train->add_option("--model", f.model, "model file to write");

  auto* attack = app.add_subcommand("attack", "replay a captured exchange against the device");
  add_session(attack, f);
  add_live(attack, f);
  add_replay(attack, f);
  attack->add_option("--attack-capture", f.attack_capture, "pcap holding the command to replay");
  attack->add_option("--attack", f.attack, "attack file to write (transcript and response queue)");

  auto* detect = app.add_subcommand("detect", "judge an attack file; exit 10 vulnerable, 11 not");
  detect->add_option("--model", f.model, "model file from train");
  detect->add_option("--attack", f.attack, "attack file from attack");
  detect->add_option("--j", f.j, "responses examined by the model");
  detect->add_option("--scenario", f.scenario, "non_restart or restart (recorded in the report)");
  detect->add_option("--report", f.report, "verdict report to write");

  auto* assess = app.add_subcommand("assess", "repeat train/attack/detect against a simulated device");
  add_profile(assess, f);
  add_replay(assess, f);
  add_model(assess, f);
  assess->add_option("--app", f.app, "companion app source address (port 0 = ephemeral)");
  assess->add_option("--scenario", f.scenario, "non_restart or restart");
  assess->add_option("--repetitions", f.repetitions, "attack repetitions");
  assess->add_option("--j", f.j, "responses examined by the model");
  assess->add_option("--post-restart-delay-ms", f.post_restart_delay_ms, "wait after a restart before attacking");
  assess->add_option("--report", f.report, "evaluation report to write");

  auto* simulate = app.add_subcommand("simulate", "run a simulated device until interrupted");
  add_profile(simulate, f);
  simulate->add_option("--app", f.app, "companion app source address for generated captures");
  simulate->add_option("--training-capture-out", f.training_out, "write a training capture first");
  simulate->add_option("--attack-capture-out", f.attack_out, "write an attack capture (one OBVERSE command)");
  simulate->add_option("--duration", f.duration_s, "seconds to run (default: until SIGINT/SIGTERM)");

  auto* report = app.add_subcommand("report", "pretty-print a verdict, evaluation or attack file");
  report->add_option("file", f.report_file, "JSON document")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_code::kUsage;
  }

  try {
    if (train->parsed()) return cmd_train(f);
    if (attack->parsed()) return cmd_attack(f);
    if (detect->parsed()) return cmd_detect(f);
    if (assess->parsed()) return cmd_assess(f);
    if (simulate->parsed()) {
      pthread_sigmask(SIG_BLOCK, &set, nullptr);
      return cmd_simulate(f);
    }
    if (report->parsed()) return cmd_report(f);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return exit_code::kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code::kError;
  }
  return exit_code::kUsage;
}
