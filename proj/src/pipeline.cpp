#include "replaykit/pipeline.hpp"

#include <thread>

#include "replaykit/features.hpp"
#include "replaykit/sim/companion.hpp"
#include "replaykit/sim/device.hpp"

namespace replaykit::pipeline {

using capture::Direction;

TrainingResult train(const std::vector<capture::PacketRecord>& records,
                     const capture::SessionConfig& session, const ModelSettings& settings) {
  session.validate();
  std::vector<capture::PacketRecord> related;
  for (const auto& r : records) {
    if (capture::classify_direction(r, session) != Direction::Unrelated) related.push_back(r);
  }
  if (!capture::check_local_connectivity(related)) {
    throw NoLocalConnectivityError("no packets between " + session.app.to_string() + " and " +
                                   session.device.to_string());
  }

  TrainingResult out;
  std::vector<detector::FeatureVector> features;
  for (const auto& r : related) {
    if (capture::classify_direction(r, session) == Direction::Response) {
      out.responses.push_back(r.payload);
      features.push_back(detector::featurize(r.payload));
    } else {
      ++out.request_count;
    }
  }
  if (!out.responses.empty()) out.response_type = detector::classify_response_type(out.responses);
  if (features.size() >= 2) {
    out.model = settings.kind == detector::ModelKind::Lof
                    ? detector::train_lof(features, settings.k, settings.threshold)
                    : detector::train_isolation_forest(features, settings.trees,
                                                       std::min(settings.subsample, features.size()),
                                                       settings.seed, settings.anomaly_cutoff);
  }
  return out;
}

report::AttackFile attack(const std::vector<capture::PacketRecord>& captured,
                          const capture::SessionConfig& session, const replay::ReplayConfig& config) {
  session.validate();
  config.validate();
  report::AttackFile file;
  file.device = session.device;
  auto flows = capture::segment_flows(captured, session);
  file.result = replay::run_attack(flows, session.device, config);

  std::vector<capture::PacketRecord> related;
  for (const auto& r : captured) {
    if (capture::classify_direction(r, session) != Direction::Unrelated) related.push_back(r);
  }
  file.wire = report::attack_wire(related, file.result, session.device);
  return file;
}

report::VerdictReport detect(const report::AttackFile& attack, const detector::NoveltyModel* model,
                             const verdict::DetectionConfig& config, const std::string& scenario) {
  report::VerdictReport r;
  r.started = report::now_iso8601();
  r.device_id = attack.device.to_string();
  r.scenario = scenario;
  r.j = config.j;
  r.verdict = verdict::decide(attack.result.queue, attack.wire, model, config);
  if (!r.verdict.labels.empty() && model != nullptr) r.model_kind = model->kind();
  r.finished = report::now_iso8601();
  return r;
}

void AssessConfig::validate() const {
  if (repetitions < 1) throw ParameterError("repetitions must be at least 1");
  if (post_restart_delay.count() < 0) throw ParameterError("post-restart delay must not be negative");
  replay.validate();
  detection.validate();
}

report::EvaluationReport assess(const AssessConfig& config) {
  config.validate();
  auto device = sim::spawn_device(config.profile);
  capture::SessionConfig session{Endpoint(config.app.address(), 0), device->endpoint(),
                                 capture::TransportFilter::Both};

  auto training_capture = sim::companion_session(*device, config.app, sim::default_training_script());
  auto training = train(capture::parse_capture(training_capture, session), session, config.model);
  const detector::NoveltyModel* model = training.model ? &*training.model : nullptr;

  bool vulnerable = sim::is_vulnerable(config.profile.behavior, config.scenario,
                                       config.profile.rekey_on_restart);
  report::EvaluationReport out;
  out.device_id = device->endpoint().to_string();
  out.behavior = std::string(sim::to_string(config.profile.behavior));
  out.scenario = std::string(sim::to_string(config.scenario));
  out.repetitions = config.repetitions;
  out.ground_truth = vulnerable ? verdict::GroundTruth::Vulnerable : verdict::GroundTruth::NotVulnerable;
  out.response_type = training.response_type ? std::string(detector::to_string(*training.response_type)) : "none";
  out.training_size = training.responses.size();

  std::vector<verdict::Verdict> verdicts;
  for (std::size_t run = 0; run < config.repetitions; ++run) {
    auto attack_capture = sim::companion_session(*device, config.app, {sim::DeviceState::Obverse});
    if (config.scenario == sim::Scenario::Restart) {
      device->restart();
      std::this_thread::sleep_for(config.post_restart_delay);
    }
    sim::trigger_state(*device, sim::DeviceState::Reverse, config.app);

    auto file = attack(capture::parse_capture(attack_capture, session), session, config.replay);
    auto v = detect(file, model, config.detection, out.scenario);
    bool took_effect = device->query_state() == sim::DeviceState::Obverse;
    if (took_effect != vulnerable) ++out.ground_truth_mismatches;

    ++out.breakdown[std::string(verdict::to_string(v.verdict.reason))];
    verdicts.push_back(v.verdict);
    if (config.progress) config.progress(run, v);
    out.runs.push_back(std::move(v));
  }
  out.accuracy = verdict::evaluate_accuracy(verdicts, out.ground_truth);
  return out;
}

}  // namespace replaykit::pipeline
