#include <gtest/gtest.h>
#include <sys/wait.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "replaykit/model_io.hpp"
#include "replaykit/pcap_writer.hpp"
#include "replaykit/pipeline.hpp"
#include "replaykit/report.hpp"
#include "replaykit/sim/companion.hpp"
#include "replaykit/sim/device.hpp"

using namespace replaykit;
namespace fs = std::filesystem;

namespace {

const Endpoint kApp{"127.0.0.1", 0};

struct CliRun {
  int code = -1;
  std::string out;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("replaykit-cli-" + std::to_string(::getpid()) + "-" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  CliRun run(const std::vector<std::string>& args) const {
    std::string cmd = std::string("'") + REPLAYKIT_CLI_PATH + "'";
    for (const auto& a : args) cmd += " '" + a + "'";
    cmd += " > '" + path("stdout").string() + "' 2> '" + path("stderr").string() + "'";
    int status = std::system(cmd.c_str());
    std::ifstream in(path("stdout"));
    std::stringstream ss;
    ss << in.rdbuf();
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
  }

  void write(const fs::path& p, const Bytes& b) const {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  }

  void write_text(const fs::path& p, const std::string& s) const { std::ofstream(p) << s; }

  std::vector<std::string> session_flags(const sim::SimDevice& d) const {
    return {"--app", "127.0.0.1:0", "--device", d.endpoint().to_string()};
  }

  std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) const {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  }

  // Training capture, then an OBVERSE attack capture, then the device is set back to REVERSE.
  void prepare(sim::SimDevice& d) const {
    write(path("train.pcap"), sim::companion_session(d, kApp));
    write(path("attack.pcap"), sim::companion_session(d, kApp, {sim::DeviceState::Obverse}));
    sim::trigger_state(d, sim::DeviceState::Reverse, kApp);
  }

  const std::vector<std::string> fast_{"--flow-timeout-ms", "150", "--flow-delay-ms", "10",
                                       "--request-delay-ms", "10"};
  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"bogus"}).code, 2);
  EXPECT_EQ(run({"--help"}).code, 0);
  EXPECT_EQ(run({"detect", "--attack", path("missing.json").string()}).code, 2);
  EXPECT_EQ(run({"assess", "--repetitions", "1"}).code, 2);
  EXPECT_EQ(run({"train", "--app", "127.0.0.1:0"}).code, 2);
}

TEST_F(CliTest, SeparatePhasesMatchTheInProcessPath) {
  auto d = sim::spawn_device(sim::DeviceProfile::for_behavior(sim::Behavior::CleartextEcho));
  prepare(*d);
  auto session = session_flags(*d);

  auto t = run(with(with({"train"}, session), {"--training-capture", path("train.pcap").string(), "--model",
                                                path("model.json").string()}));
  ASSERT_EQ(t.code, 0) << t.out;
  EXPECT_NE(t.out.find("training size: 10"), std::string::npos);
  EXPECT_NE(t.out.find("response type: cleartext"), std::string::npos);

  auto a = run(with(with({"attack"}, session), with({"--attack-capture", path("attack.pcap").string(),
                                                      "--attack", path("attack.json").string()},
                                                     fast_)));
  ASSERT_EQ(a.code, 0) << a.out;
  EXPECT_EQ(d->query_state(), sim::DeviceState::Obverse);

  auto v = run({"detect", "--model", path("model.json").string(), "--attack", path("attack.json").string(),
                "--report", path("verdict.json").string()});
  EXPECT_EQ(v.code, 10) << v.out;

  // In-process: train on the same capture, judge the same attack file.
  capture::SessionConfig s{Endpoint("127.0.0.1", 0), d->endpoint()};
  Bytes pcap;
  {
    std::ifstream in(path("train.pcap"), std::ios::binary);
    pcap.assign(std::istreambuf_iterator<char>(in), {});
  }
  auto trained = pipeline::train(capture::parse_capture(pcap, s), s, pipeline::ModelSettings{});
  EXPECT_EQ(detector::serialize_model(*trained.model),
            detector::serialize_model(detector::load_model(path("model.json"))));
  auto attack = report::attack_from_json(report::read_json(path("attack.json")));
  auto in_process = pipeline::detect(attack, &*trained.model, verdict::DetectionConfig{}, "non_restart");
  auto from_cli = report::verdict_from_json(report::read_json(path("verdict.json")));
  EXPECT_EQ(from_cli.verdict, in_process.verdict);

  auto r = run({"report", path("verdict.json").string()});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("SUCCESSFUL"), std::string::npos);
}

TEST_F(CliTest, SessionKeyAfterRestartIsNotVulnerable) {
  auto d = sim::spawn_device(sim::DeviceProfile::for_behavior(sim::Behavior::SessionKey));
  write(path("train.pcap"), sim::companion_session(*d, kApp));
  write(path("attack.pcap"), sim::companion_session(*d, kApp, {sim::DeviceState::Obverse}));
  d->restart();
  sim::trigger_state(*d, sim::DeviceState::Reverse, kApp);
  auto session = session_flags(*d);

  ASSERT_EQ(run(with(with({"train"}, session), {"--training-capture", path("train.pcap").string(), "--model",
                                                 path("model.json").string()})).code, 0);
  ASSERT_EQ(run(with(with({"attack"}, session), with({"--attack-capture", path("attack.pcap").string(),
                                                       "--attack", path("attack.json").string()}, fast_))).code, 0);
  auto v = run({"detect", "--model", path("model.json").string(), "--attack", path("attack.json").string(),
                "--scenario", "restart", "--report", path("verdict.json").string()});
  EXPECT_EQ(v.code, 11) << v.out;
  auto report = report::verdict_from_json(report::read_json(path("verdict.json")));
  EXPECT_EQ(report.verdict.reason, verdict::Reason::AllIrregular);
  EXPECT_EQ(report.scenario, "restart");
  EXPECT_EQ(d->query_state(), sim::DeviceState::Reverse);
}

TEST_F(CliTest, SilentDeviceHasNoModelAndNoResponses) {
  auto d = sim::spawn_device(sim::DeviceProfile::for_behavior(sim::Behavior::Silent));
  prepare(*d);
  auto session = session_flags(*d);
  auto t = run(with(with({"train"}, session), {"--training-capture", path("train.pcap").string(), "--model",
                                                path("model.json").string()}));
  EXPECT_EQ(t.code, 1);
  EXPECT_NE(t.out.find("training size: 0"), std::string::npos);

  ASSERT_EQ(run(with(with({"attack"}, session), with({"--attack-capture", path("attack.pcap").string(),
                                                       "--attack", path("attack.json").string()}, fast_))).code, 0);
  auto v = run({"detect", "--attack", path("attack.json").string()});
  EXPECT_EQ(v.code, 11);
  EXPECT_NE(v.out.find("NoResponse"), std::string::npos);
}

TEST_F(CliTest, DetectNeedsAModelWhenResponsesArrived) {
  auto d = sim::spawn_device(sim::DeviceProfile::for_behavior(sim::Behavior::CleartextEcho));
  prepare(*d);
  ASSERT_EQ(run(with(with({"attack"}, session_flags(*d)), with({"--attack-capture", path("attack.pcap").string(),
                                                                 "--attack", path("attack.json").string()}, fast_))).code, 0);
  EXPECT_EQ(run({"detect", "--attack", path("attack.json").string()}).code, 2);
}

TEST_F(CliTest, NoLocalConnectivity) {
  PcapWriter w;
  w.add_udp(0, fixtures::kApp, fixtures::kCloud, to_bytes("via the cloud"));
  write(path("cloud.pcap"), w.bytes());
  auto r = run({"train", "--app", fixtures::kApp.to_string(), "--device", fixtures::kDevice.to_string(),
                "--training-capture", path("cloud.pcap").string(), "--model", path("model.json").string()});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.out.find("NO-LOCAL-CONNECTIVITY"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("model.json")));
}

TEST_F(CliTest, TlsLikeTrainingWarns) {
  auto d = sim::spawn_device(sim::DeviceProfile::for_behavior(sim::Behavior::TlsLike));
  write(path("train.pcap"), sim::companion_session(*d, kApp));
  auto t = run(with(with({"train"}, session_flags(*d)), {"--training-capture", path("train.pcap").string(),
                                                          "--model", path("model.json").string()}));
  EXPECT_EQ(t.code, 0);
  EXPECT_NE(t.out.find("standard_encrypted"), std::string::npos);
  EXPECT_NE(t.out.find("warning"), std::string::npos);
}

TEST_F(CliTest, ConfigFileWithFlagOverrides) {
  auto d = sim::spawn_device(sim::DeviceProfile::for_behavior(sim::Behavior::CleartextEcho));
  prepare(*d);
  write_text(path("config.json"),
             R"({"session": {"app": "127.0.0.1:0", "device": ")" + d->endpoint().to_string() +
                 R"("}, "model": {"kind": "lof", "k": 3}, "paths": {"training_capture": ")" +
                 path("train.pcap").string() + R"(", "model": ")" + path("nowhere/model.json").string() + R"("}})");
  auto r = run({"--config", path("config.json").string(), "train", "--model", path("model.json").string()});
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(detector::load_model(path("model.json")).lof().k(), 3u);

  write_text(path("bad.json"), R"({"sesion": {}})");
  EXPECT_EQ(run({"--config", path("bad.json").string(), "train"}).code, 2);
}

TEST_F(CliTest, LiveCaptureRequiresOwnership) {
  auto r = run({"train", "--app", "127.0.0.1:0", "--device", "127.0.0.1:9", "--interface", "lo", "--duration", "1",
                "--model", path("model.json").string()});
  EXPECT_EQ(r.code, 2);
}

TEST_F(CliTest, AssessWritesAnEvaluationReport) {
  auto r = run(with({"assess", "--profile", "CleartextEcho", "--repetitions", "2", "--report",
                     path("eval.json").string()}, fast_));
  ASSERT_EQ(r.code, 0) << r.out;
  auto e = report::evaluation_from_json(report::read_json(path("eval.json")));
  EXPECT_EQ(e.runs.size(), 2u);
  EXPECT_DOUBLE_EQ(e.accuracy, 1.0);
  EXPECT_EQ(run({"report", path("eval.json").string()}).code, 0);
}

TEST_F(CliTest, SimulateWritesCaptures) {
  auto r = run({"simulate", "--profile", "EncodedFixed", "--training-capture-out", path("t.pcap").string(),
                "--attack-capture-out", path("a.pcap").string(), "--duration", "0.1"});
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("listening on 127.0.0.1:"), std::string::npos);
  EXPECT_NE(r.out.find("final state: REVERSE"), std::string::npos);
  EXPECT_GT(fs::file_size(path("t.pcap")), fs::file_size(path("a.pcap")));
}
