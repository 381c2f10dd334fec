#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "replaykit/errors.hpp"
#include "replaykit/pcap_writer.hpp"
#include "replaykit/pipeline.hpp"
#include "replaykit/sim/companion.hpp"
#include "replaykit/sim/device.hpp"

using namespace replaykit;
using namespace replaykit::pipeline;
using std::chrono::milliseconds;

namespace {

const Endpoint kApp{"127.0.0.1", 0};

replay::ReplayConfig fast() {
  replay::ReplayConfig c;
  c.per_flow_response_timeout = milliseconds(150);
  c.inter_request_delay = milliseconds(10);
  c.inter_flow_delay = milliseconds(10);
  return c;
}

capture::SessionConfig session_for(const sim::SimDevice& d) {
  return {Endpoint("127.0.0.1", 0), d.endpoint(), capture::TransportFilter::Both};
}

std::vector<capture::PacketRecord> training_records(sim::SimDevice& d) {
  return capture::parse_capture(sim::companion_session(d, kApp), session_for(d));
}

AssessConfig quick(sim::Behavior b, sim::Scenario s, std::size_t reps) {
  AssessConfig c;
  c.profile = sim::DeviceProfile::for_behavior(b);
  c.scenario = s;
  c.repetitions = reps;
  c.replay = fast();
  c.post_restart_delay = milliseconds(20);
  return c;
}

}  // namespace

TEST(Train, TenResponsesFromTheDefaultScript) {
  auto d = sim::spawn_device(sim::DeviceProfile::for_behavior(sim::Behavior::CleartextEcho));
  auto t = train(training_records(*d), session_for(*d), ModelSettings{});
  EXPECT_EQ(t.request_count, 10u);
  EXPECT_EQ(t.responses.size(), 10u);
  ASSERT_TRUE(t.model.has_value());
  EXPECT_EQ(t.model->lof().k_eff(), 5u);
  EXPECT_EQ(t.response_type, detector::ResponseClass::Cleartext);
}

TEST(Train, TlsLikeTrainsButReportsStandardEncryption) {
  auto d = sim::spawn_device(sim::DeviceProfile::for_behavior(sim::Behavior::TlsLike));
  auto t = train(training_records(*d), session_for(*d), ModelSettings{});
  EXPECT_TRUE(t.model.has_value());
  EXPECT_EQ(t.response_type, detector::ResponseClass::StandardEncrypted);
}

TEST(Train, NoAppDeviceTrafficMeansNoLocalConnectivity) {
  PcapWriter w;
  w.add_udp(0, fixtures::kApp, fixtures::kCloud, to_bytes("cloud relay"));
  auto records = capture::parse_capture(w.bytes(), {fixtures::kApp, fixtures::kCloud});
  EXPECT_THROW(train(records, fixtures::session(), ModelSettings{}), NoLocalConnectivityError);
  EXPECT_THROW(train({}, fixtures::session(), ModelSettings{}), NoLocalConnectivityError);
}

TEST(Train, SilentDeviceYieldsNoModel) {
  auto d = sim::spawn_device(sim::DeviceProfile::for_behavior(sim::Behavior::Silent));
  auto t = train(training_records(*d), session_for(*d), ModelSettings{});
  EXPECT_EQ(t.request_count, 10u);
  EXPECT_TRUE(t.responses.empty());
  EXPECT_FALSE(t.model.has_value());
  EXPECT_FALSE(t.response_type.has_value());
}

TEST(Train, IsolationForestOnRequest) {
  auto d = sim::spawn_device(sim::DeviceProfile::for_behavior(sim::Behavior::SignedCleartext));
  ModelSettings s;
  s.kind = detector::ModelKind::IsolationForest;
  auto t = train(training_records(*d), session_for(*d), s);
  ASSERT_TRUE(t.model.has_value());
  EXPECT_EQ(t.model->kind(), detector::ModelKind::IsolationForest);
}

TEST(Attack, CleartextEchoEndToEnd) {
  auto d = sim::spawn_device(sim::DeviceProfile::for_behavior(sim::Behavior::CleartextEcho));
  auto t = train(training_records(*d), session_for(*d), ModelSettings{});
  auto captured = capture::parse_capture(sim::companion_session(*d, kApp, {sim::DeviceState::Obverse}), session_for(*d));
  sim::trigger_state(*d, sim::DeviceState::Reverse, kApp);

  auto file = attack(captured, session_for(*d), fast());
  EXPECT_EQ(d->query_state(), sim::DeviceState::Obverse);
  ASSERT_EQ(file.result.queue.size(), 1u);
  EXPECT_EQ(file.wire.size(), captured.size() + 1);

  auto v = detect(file, &*t.model, verdict::DetectionConfig{}, "non_restart");
  EXPECT_EQ(v.verdict.outcome, verdict::Outcome::Successful);
  EXPECT_EQ(v.model_kind, detector::ModelKind::Lof);
  EXPECT_EQ(v.device_id, d->endpoint().to_string());

  // Same inputs, same verdict.
  auto again = detect(report::attack_from_json(report::to_json(file)), &*t.model, verdict::DetectionConfig{}, "non_restart");
  EXPECT_EQ(again.verdict, v.verdict);
}

TEST(Attack, NothingToReplay) {
  auto d = sim::spawn_device(sim::DeviceProfile::for_behavior(sim::Behavior::CleartextEcho));
  auto file = attack({}, session_for(*d), fast());
  EXPECT_TRUE(file.result.queue.empty());
  auto v = detect(file, nullptr, verdict::DetectionConfig{}, "non_restart");
  EXPECT_EQ(v.verdict.reason, verdict::Reason::NoResponse);
  EXPECT_FALSE(v.model_kind.has_value());
}

TEST(Attack, SilentDeviceGivesEmptyQueue) {
  auto d = sim::spawn_device(sim::DeviceProfile::for_behavior(sim::Behavior::Silent));
  auto captured = capture::parse_capture(sim::companion_session(*d, kApp, {sim::DeviceState::Obverse}), session_for(*d));
  auto file = attack(captured, session_for(*d), fast());
  EXPECT_TRUE(file.result.queue.empty());
  ASSERT_EQ(file.result.transcript.size(), 1u);
  EXPECT_EQ(file.result.transcript[0].response_count, 0u);
}

TEST(Assess, CleartextEchoNonRestart) {
  auto r = assess(quick(sim::Behavior::CleartextEcho, sim::Scenario::NonRestart, 5));
  EXPECT_DOUBLE_EQ(r.accuracy, 1.0);
  EXPECT_EQ(r.training_size, 10u);
  EXPECT_EQ(r.breakdown.at("RegularFound"), 5u);
  EXPECT_EQ(r.ground_truth_mismatches, 0u);
  EXPECT_EQ(r.runs.size(), 5u);
}

TEST(Assess, SessionKeyRestartIsNeverSuccessful) {
  auto r = assess(quick(sim::Behavior::SessionKey, sim::Scenario::Restart, 4));
  EXPECT_EQ(r.ground_truth, verdict::GroundTruth::NotVulnerable);
  EXPECT_DOUBLE_EQ(r.accuracy, 1.0);
  for (const auto& run : r.runs) {
    EXPECT_EQ(run.verdict.outcome, verdict::Outcome::Failed);
    EXPECT_EQ(run.verdict.reason, verdict::Reason::AllIrregular);
    EXPECT_EQ(run.scenario, "restart");
  }
  EXPECT_EQ(r.ground_truth_mismatches, 0u);
}

TEST(Assess, SingleRepetition) {
  auto r = assess(quick(sim::Behavior::Silent, sim::Scenario::NonRestart, 1));
  ASSERT_EQ(r.runs.size(), 1u);
  EXPECT_EQ(r.runs[0].verdict.reason, verdict::Reason::NoResponse);
  EXPECT_EQ(r.response_type, "none");
}

TEST(Assess, RejectsZeroRepetitions) {
  EXPECT_THROW(assess(quick(sim::Behavior::Silent, sim::Scenario::NonRestart, 0)), ParameterError);
}
