#include <gtest/gtest.h>

#include <fstream>

#include "fixtures.hpp"
#include "replaykit/errors.hpp"
#include "replaykit/report.hpp"
#include "schema_check.hpp"

using namespace replaykit;
using namespace replaykit::report;
using namespace fixtures;

namespace {

schema_check::Checker load_schema() {
  std::ifstream in(std::string(REPLAYKIT_SOURCE_DIR) + "/docs/report.schema.json");
  return schema_check::Checker(json::parse(in));
}

VerdictReport sample_verdict() {
  VerdictReport r;
  r.device_id = "127.0.0.1:40000";
  r.scenario = "restart";
  r.verdict = {verdict::Outcome::Successful,
               verdict::Reason::RegularFound,
               {detector::Label::Irregular, detector::Label::Regular},
               {4.25, 1.0}};
  r.j = 3;
  r.model_kind = detector::ModelKind::Lof;
  r.started = "2026-10-18T10:00:00.000Z";
  r.finished = "2026-10-18T10:00:00.012Z";
  return r;
}

AttackFile sample_attack() {
  AttackFile a;
  a.device = kDevice;
  a.result.transcript = {{0, 1, capture::Transport::Tcp, {12, 7}, 1, {}},
                         {1, 0, capture::Transport::Udp, {3}, 0, {"connect: refused"}}};
  a.result.queue.entries = {{100, 1, to_bytes("ok")}, {250, 1, Bytes{0x00, 0xff}}};
  a.wire = {request(0, "turn on"), response(5, "ok")};
  return a;
}

}  // namespace

TEST(VerdictReportDoc, RoundTripsAndMatchesSchema) {
  auto r = sample_verdict();
  auto j = to_json(r);
  EXPECT_EQ(verdict_from_json(j), r);
  EXPECT_EQ(verdict_from_json(json::parse(j.dump())), r);
  EXPECT_TRUE(load_schema().check(j).empty()) << j.dump(2);

  r.model_kind.reset();
  r.verdict = {verdict::Outcome::Failed, verdict::Reason::NoResponse, {}, {}};
  EXPECT_EQ(verdict_from_json(to_json(r)), r);
  EXPECT_TRUE(load_schema().check(to_json(r)).empty());
}

TEST(VerdictReportDoc, StrictParsing) {
  auto j = to_json(sample_verdict());
  auto bad = j;
  bad["outcome"] = "FAILED";  // disagrees with RegularFound
  EXPECT_THROW(verdict_from_json(bad), FormatError);
  bad = j;
  bad.erase("labels");
  EXPECT_THROW(verdict_from_json(bad), FormatError);
  bad = j;
  bad["schema_version"] = 2;
  EXPECT_THROW(verdict_from_json(bad), FormatError);
  bad = j;
  bad["j"] = 1;  // two labels in a window of one
  EXPECT_THROW(verdict_from_json(bad), FormatError);
  EXPECT_THROW(verdict_from_json(json::array()), FormatError);
  bad = j;
  bad.erase("scenario");
  EXPECT_FALSE(load_schema().check(bad).empty());
}

TEST(AttackDoc, RoundTripsAndMatchesSchema) {
  auto a = sample_attack();
  auto j = to_json(a);
  EXPECT_EQ(attack_from_json(json::parse(j.dump())), a);
  EXPECT_TRUE(load_schema().check(j).empty()) << j.dump(2);

  auto bad = j;
  bad["queue"][1]["arrival_us"] = 1;
  EXPECT_THROW(attack_from_json(bad), FormatError);
}

TEST(AttackDoc, WireAddsReplayedResponses) {
  auto a = sample_attack();
  auto wire = attack_wire(a.wire, a.result, kDevice);
  ASSERT_EQ(wire.size(), 4u);
  EXPECT_EQ(wire[2].src, kDevice);
  EXPECT_EQ(wire[2].transport, capture::Transport::Tcp);
  EXPECT_EQ(wire[3].payload, (Bytes{0x00, 0xff}));
}

TEST(EvaluationDoc, RoundTripsAndMatchesSchema) {
  EvaluationReport e;
  e.device_id = "127.0.0.1:40000";
  e.behavior = "SessionKey";
  e.scenario = "restart";
  e.repetitions = 2;
  e.ground_truth = verdict::GroundTruth::NotVulnerable;
  e.accuracy = 0.5;
  e.breakdown = {{"AllIrregular", 1}, {"RegularFound", 1}};
  e.response_type = "cleartext";
  e.training_size = 10;
  e.runs = {sample_verdict(), sample_verdict()};
  auto j = to_json(e);
  EXPECT_EQ(evaluation_from_json(json::parse(j.dump())), e);
  EXPECT_TRUE(load_schema().check(j).empty()) << j.dump(2);

  auto bad = j;
  bad["repetitions"] = 3;
  EXPECT_THROW(evaluation_from_json(bad), FormatError);
  bad = j;
  bad["breakdown"]["Luck"] = 1;
  EXPECT_THROW(evaluation_from_json(bad), FormatError);
  EXPECT_FALSE(load_schema().check(bad).empty());
}

TEST(Render, EveryKind) {
  EXPECT_NE(render(to_json(sample_verdict())).find("SUCCESSFUL (RegularFound)"), std::string::npos);
  EXPECT_NE(render(to_json(sample_attack())).find("2 flows"), std::string::npos);
  EXPECT_THROW(render(json{{"kind", "other"}}), FormatError);
}

TEST(Timestamps, Iso8601Utc) {
  auto t = now_iso8601();
  EXPECT_EQ(t.size(), 24u);
  EXPECT_EQ(t.back(), 'Z');
  EXPECT_EQ(t[10], 'T');
}
