#include "replaykit/verdict.hpp"

#include <algorithm>

#include "replaykit/errors.hpp"
#include "replaykit/features.hpp"
#include "replaykit/protocol.hpp"

namespace replaykit::verdict {

void DetectionConfig::validate() const {
  if (j < 1) throw ParameterError("j must be at least 1");
}

std::string_view to_string(Outcome o) { return o == Outcome::Successful ? "SUCCESSFUL" : "FAILED"; }

std::string_view to_string(Reason r) {
  switch (r) {
    case Reason::NoResponse: return "NoResponse";
    case Reason::StandardProtocol: return "StandardProtocol";
    case Reason::AllIrregular: return "AllIrregular";
    case Reason::RegularFound: return "RegularFound";
  }
  return "NoResponse";
}

std::string_view to_string(GroundTruth g) {
  return g == GroundTruth::Vulnerable ? "vulnerable" : "not_vulnerable";
}

Outcome outcome_from_string(std::string_view s) {
  if (s == "SUCCESSFUL") return Outcome::Successful;
  if (s == "FAILED") return Outcome::Failed;
  throw ParameterError("unknown outcome '" + std::string(s) + "'");
}

Reason reason_from_string(std::string_view s) {
  for (auto r : {Reason::NoResponse, Reason::StandardProtocol, Reason::AllIrregular,
                 Reason::RegularFound}) {
    if (to_string(r) == s) return r;
  }
  throw ParameterError("unknown verdict reason '" + std::string(s) + "'");
}

GroundTruth ground_truth_from_string(std::string_view s) {
  if (s == "vulnerable") return GroundTruth::Vulnerable;
  if (s == "not_vulnerable" || s == "not-vulnerable") return GroundTruth::NotVulnerable;
  throw ParameterError("unknown ground truth '" + std::string(s) + "'");
}

CheckResult response_check(const replay::ResponseQueue& queue) {
  return queue.empty() ? CheckResult::Fail : CheckResult::Pass;
}

CheckResult protocol_check(const std::vector<capture::PacketRecord>& records) {
  return detector::detect_standard_security_protocol(records) ? CheckResult::Fail
                                                              : CheckResult::Pass;
}

Verdict decide(const replay::ResponseQueue& queue,
               const std::vector<capture::PacketRecord>& attack_records,
               const detector::NoveltyModel& model, const DetectionConfig& config) {
  return decide(queue, attack_records, &model, config);
}

Verdict decide(const replay::ResponseQueue& queue,
               const std::vector<capture::PacketRecord>& attack_records,
               const detector::NoveltyModel* model, const DetectionConfig& config) {
  config.validate();
  Verdict v;
  if (response_check(queue) == CheckResult::Fail) {
    v.reason = Reason::NoResponse;
    return v;
  }
  if (protocol_check(attack_records) == CheckResult::Fail) {
    v.reason = Reason::StandardProtocol;
    return v;
  }

  if (model == nullptr) throw ParameterError("responses need a trained model to be classified");
  std::size_t window = std::min(config.j, queue.size());
  for (std::size_t i = 0; i < window; ++i) {
    auto features = detector::featurize(queue.entries[i].payload);
    v.scores.push_back(model->score(features));
    v.labels.push_back(detector::classify(*model, features));
  }
  bool any_regular = std::find(v.labels.begin(), v.labels.end(), detector::Label::Regular) !=
                     v.labels.end();
  v.outcome = any_regular ? Outcome::Successful : Outcome::Failed;
  v.reason = any_regular ? Reason::RegularFound : Reason::AllIrregular;
  return v;
}

double evaluate_accuracy(const std::vector<Verdict>& verdicts, GroundTruth truth) {
  if (verdicts.empty()) throw ParameterError("accuracy needs at least one verdict");
  Outcome expected = truth == GroundTruth::Vulnerable ? Outcome::Successful : Outcome::Failed;
  auto correct = std::count_if(verdicts.begin(), verdicts.end(),
                               [&](const Verdict& v) { return v.outcome == expected; });
  return static_cast<double>(correct) / static_cast<double>(verdicts.size());
}

}  // namespace replaykit::verdict
