#include "replaykit/report.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "replaykit/errors.hpp"

namespace replaykit::report {

namespace {

template <class F>
auto strict(std::string_view what, F&& f) {
  try {
    return f();
  } catch (const FormatError&) {
    throw;
  } catch (const std::exception& e) {
    throw FormatError("malformed " + std::string(what) + ": " + e.what());
  }
}

void expect_header(const json& j, std::string_view kind) {
  if (!j.is_object()) throw FormatError("document is not a JSON object");
  if (j.at("kind").get<std::string>() != kind) {
    throw FormatError("expected a '" + std::string(kind) + "' document");
  }
  if (j.at("schema_version").get<int>() != kSchemaVersion) {
    throw FormatError("unsupported schema_version");
  }
}

json record_to_json(const capture::PacketRecord& r) {
  return {{"timestamp_us", r.timestamp_us},
          {"src", r.src.to_string()},
          {"dst", r.dst.to_string()},
          {"transport", capture::to_string(r.transport)},
          {"payload_hex", to_hex(r.payload)}};
}

capture::PacketRecord record_from_json(const json& j) {
  capture::PacketRecord r;
  r.timestamp_us = j.at("timestamp_us").get<std::int64_t>();
  r.src = Endpoint::parse(j.at("src").get<std::string>());
  r.dst = Endpoint::parse(j.at("dst").get<std::string>());
  r.transport = capture::transport_from_string(j.at("transport").get<std::string>());
  r.payload = from_hex(j.at("payload_hex").get<std::string>());
  return r;
}

std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

std::vector<capture::PacketRecord> attack_wire(const std::vector<capture::PacketRecord>& captured,
                                               const replay::AttackResult& result,
                                               const Endpoint& device) {
  std::vector<capture::PacketRecord> wire = captured;
  std::map<std::size_t, capture::Transport> transport_of;
  for (const auto& t : result.transcript) transport_of[t.flow_index] = t.transport;
  Endpoint local(device.family() == IpFamily::V4 ? "0.0.0.0" : "::", 0);
  for (const auto& e : result.queue.entries) {
    auto it = transport_of.find(e.flow_index);
    wire.push_back({e.arrival_us, device, local,
                    it == transport_of.end() ? capture::Transport::Tcp : it->second, e.payload});
  }
  return wire;
}

json to_json(const AttackFile& a) {
  json transcript = json::array();
  for (const auto& t : a.result.transcript) {
    transcript.push_back({{"scheduled_position", t.scheduled_position},
                          {"flow_index", t.flow_index},
                          {"transport", capture::to_string(t.transport)},
                          {"request_lengths", t.request_lengths},
                          {"response_count", t.response_count},
                          {"notes", t.notes}});
  }
  json queue = json::array();
  for (const auto& e : a.result.queue.entries) {
    queue.push_back({{"arrival_us", e.arrival_us},
                     {"flow_index", e.flow_index},
                     {"payload_hex", to_hex(e.payload)}});
  }
  json wire = json::array();
  for (const auto& r : a.wire) wire.push_back(record_to_json(r));
  return {{"kind", "attack"},       {"schema_version", kSchemaVersion},
          {"device", a.device.to_string()}, {"transcript", transcript},
          {"queue", queue},         {"wire", wire}};
}

AttackFile attack_from_json(const json& j) {
  return strict("attack file", [&] {
    expect_header(j, "attack");
    AttackFile a;
    a.device = Endpoint::parse(j.at("device").get<std::string>());
    for (const auto& t : j.at("transcript")) {
      replay::TranscriptEntry e;
      e.scheduled_position = t.at("scheduled_position").get<std::size_t>();
      e.flow_index = t.at("flow_index").get<std::size_t>();
      e.transport = capture::transport_from_string(t.at("transport").get<std::string>());
      e.request_lengths = t.at("request_lengths").get<std::vector<std::size_t>>();
      e.response_count = t.at("response_count").get<std::size_t>();
      e.notes = t.at("notes").get<std::vector<std::string>>();
      a.result.transcript.push_back(std::move(e));
    }
    std::int64_t last = std::numeric_limits<std::int64_t>::min();
    for (const auto& q : j.at("queue")) {
      replay::QueueEntry e;
      e.arrival_us = q.at("arrival_us").get<std::int64_t>();
      e.flow_index = q.at("flow_index").get<std::size_t>();
      e.payload = from_hex(q.at("payload_hex").get<std::string>());
      if (e.arrival_us < last) throw FormatError("queue arrival times must be non-decreasing");
      last = e.arrival_us;
      a.result.queue.entries.push_back(std::move(e));
    }
    for (const auto& r : j.at("wire")) a.wire.push_back(record_from_json(r));
    return a;
  });
}

json to_json(const VerdictReport& r) {
  json labels = json::array();
  for (auto l : r.verdict.labels) labels.push_back(detector::to_string(l));
  return {{"kind", "verdict"},
          {"schema_version", kSchemaVersion},
          {"device_id", r.device_id},
          {"scenario", r.scenario},
          {"outcome", verdict::to_string(r.verdict.outcome)},
          {"reason", verdict::to_string(r.verdict.reason)},
          {"labels", labels},
          {"scores", r.verdict.scores},
          {"j", r.j},
          {"model_kind", r.model_kind ? json(detector::to_string(*r.model_kind)) : json(nullptr)},
          {"timestamps", {{"started", r.started}, {"finished", r.finished}}}};
}

VerdictReport verdict_from_json(const json& j) {
  return strict("verdict report", [&] {
    expect_header(j, "verdict");
    VerdictReport r;
    r.device_id = j.at("device_id").get<std::string>();
    r.scenario = j.at("scenario").get<std::string>();
    if (r.scenario != "non_restart" && r.scenario != "restart") throw FormatError("unknown scenario");
    r.verdict.outcome = verdict::outcome_from_string(j.at("outcome").get<std::string>());
    r.verdict.reason = verdict::reason_from_string(j.at("reason").get<std::string>());
    for (const auto& l : j.at("labels")) {
      r.verdict.labels.push_back(detector::label_from_string(l.get<std::string>()));
    }
    r.verdict.scores = j.at("scores").get<std::vector<double>>();
    r.j = j.at("j").get<std::size_t>();
    if (!j.at("model_kind").is_null()) {
      r.model_kind = detector::model_kind_from_string(j.at("model_kind").get<std::string>());
    }
    r.started = j.at("timestamps").at("started").get<std::string>();
    r.finished = j.at("timestamps").at("finished").get<std::string>();

    bool successful = r.verdict.outcome == verdict::Outcome::Successful;
    if (successful != (r.verdict.reason == verdict::Reason::RegularFound)) {
      throw FormatError("outcome and reason disagree");
    }
    if (r.verdict.labels.size() > r.j || r.verdict.scores.size() != r.verdict.labels.size()) {
      throw FormatError("labels exceed the j window or do not match scores");
    }
    return r;
  });
}

json to_json(const EvaluationReport& r) {
  json runs = json::array();
  for (const auto& v : r.runs) runs.push_back(to_json(v));
  return {{"kind", "evaluation"},
          {"schema_version", kSchemaVersion},
          {"device_id", r.device_id},
          {"behavior", r.behavior},
          {"scenario", r.scenario},
          {"repetitions", r.repetitions},
          {"ground_truth", verdict::to_string(r.ground_truth)},
          {"accuracy", r.accuracy},
          {"breakdown", r.breakdown},
          {"response_type", r.response_type},
          {"training_size", r.training_size},
          {"ground_truth_mismatches", r.ground_truth_mismatches},
          {"runs", runs}};
}

EvaluationReport evaluation_from_json(const json& j) {
  return strict("evaluation report", [&] {
    expect_header(j, "evaluation");
    EvaluationReport r;
    r.device_id = j.at("device_id").get<std::string>();
    r.behavior = j.at("behavior").get<std::string>();
    r.scenario = j.at("scenario").get<std::string>();
    r.repetitions = j.at("repetitions").get<std::size_t>();
    r.ground_truth = verdict::ground_truth_from_string(j.at("ground_truth").get<std::string>());
    r.accuracy = j.at("accuracy").get<double>();
    r.breakdown = j.at("breakdown").get<std::map<std::string, std::size_t>>();
    for (const auto& [reason, n] : r.breakdown) verdict::reason_from_string(reason);
    r.response_type = j.at("response_type").get<std::string>();
    r.training_size = j.at("training_size").get<std::size_t>();
    r.ground_truth_mismatches = j.at("ground_truth_mismatches").get<std::size_t>();
    for (const auto& v : j.at("runs")) r.runs.push_back(verdict_from_json(v));
    if (r.runs.size() != r.repetitions) throw FormatError("run count does not match repetitions");
    if (r.accuracy < 0.0 || r.accuracy > 1.0) throw FormatError("accuracy outside [0, 1]");
    return r;
  });
}

std::string now_iso8601() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof(out), "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error("write failed for " + path.string());
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string render(const json& j) {
  std::ostringstream out;
  std::string kind = j.value("kind", "");
  if (kind == "verdict") {
    auto r = verdict_from_json(j);
    out << "device     " << r.device_id << "\n"
        << "scenario   " << r.scenario << "\n"
        << "outcome    " << verdict::to_string(r.verdict.outcome) << " ("
        << verdict::to_string(r.verdict.reason) << ")\n"
        << "model      " << (r.model_kind ? detector::to_string(*r.model_kind) : "none") << ", j=" << r.j << "\n";
    for (std::size_t i = 0; i < r.verdict.labels.size(); ++i) {
      out << "  response " << i + 1 << ": " << detector::to_string(r.verdict.labels[i])
          << " (score " << fixed4(r.verdict.scores[i]) << ")\n";
    }
    out << "time       " << r.started << " .. " << r.finished << "\n";
  } else if (kind == "evaluation") {
    auto r = evaluation_from_json(j);
    out << "device        " << r.device_id << " (" << r.behavior << ")\n"
        << "scenario      " << r.scenario << "\n"
        << "ground truth  " << verdict::to_string(r.ground_truth) << "\n"
        << "response type " << r.response_type << ", training size " << r.training_size << "\n"
        << "accuracy      " << fixed4(r.accuracy) << " over " << r.repetitions << " runs\n";
    for (const auto& [reason, n] : r.breakdown) out << "  " << reason << ": " << n << "\n";
  } else if (kind == "attack") {
    auto a = attack_from_json(j);
    out << "device " << a.device.to_string() << ", " << a.result.transcript.size() << " flows, "
        << a.result.queue.size() << " responses queued\n";
    for (const auto& t : a.result.transcript) {
      out << "  #" << t.scheduled_position << " flow " << t.flow_index << " ("
          << capture::to_string(t.transport) << "): " << t.request_lengths.size() << " requests, "
          << t.response_count << " responses";
      for (const auto& n : t.notes) out << "; " << n;
      out << "\n";
    }
  } else {
    throw FormatError("unknown document kind '" + kind + "'");
  }
  return out.str();
}

}  // namespace replaykit::report
