#include "cli_config.hpp"

#include <set>

#include "replaykit/report.hpp"

namespace replaykit::cli {

using nlohmann::json;

namespace {

void only_keys(const json& j, std::string_view where, std::set<std::string> allowed) {
  if (!j.is_object()) throw UsageError(std::string(where) + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.contains(key)) throw UsageError("unknown config key '" + std::string(where) + "." + key + "'");
  }
}

std::chrono::milliseconds ms(const json& j, const char* key, std::chrono::milliseconds fallback) {
  return j.contains(key) ? std::chrono::milliseconds(j.at(key).get<std::int64_t>()) : fallback;
}

}  // namespace

capture::TransportFilter transport_filter_from_string(std::string_view s) {
  if (s == "tcp") return capture::TransportFilter::Tcp;
  if (s == "udp") return capture::TransportFilter::Udp;
  if (s == "both") return capture::TransportFilter::Both;
  throw UsageError("transport must be tcp, udp or both");
}

capture::SessionConfig PipelineConfig::session() const {
  if (!app || !device) throw UsageError("both --app and --device are required");
  capture::SessionConfig s{*app, *device, transport};
  s.validate();
  return s;
}

PipelineConfig config_from_json(const json& j) {
  PipelineConfig c;
  try {
    only_keys(j, "config", {"session", "replay", "detection", "model", "scenario", "repetitions",
                            "post_restart_delay_ms", "profile", "paths"});
    if (j.contains("session")) {
      const auto& s = j.at("session");
      only_keys(s, "session", {"app", "device", "transport"});
      if (s.contains("app")) c.app = Endpoint::parse(s.at("app").get<std::string>());
      if (s.contains("device")) c.device = Endpoint::parse(s.at("device").get<std::string>());
      if (s.contains("transport")) c.transport = transport_filter_from_string(s.at("transport").get<std::string>());
    }
    if (j.contains("replay")) {
      const auto& r = j.at("replay");
      only_keys(r, "replay", {"per_flow_response_timeout_ms", "inter_request_delay_ms",
                              "inter_flow_delay_ms", "connect_timeout_ms"});
      c.replay.per_flow_response_timeout = ms(r, "per_flow_response_timeout_ms", c.replay.per_flow_response_timeout);
      c.replay.inter_request_delay = ms(r, "inter_request_delay_ms", c.replay.inter_request_delay);
      c.replay.inter_flow_delay = ms(r, "inter_flow_delay_ms", c.replay.inter_flow_delay);
      c.replay.connect_timeout = ms(r, "connect_timeout_ms", c.replay.connect_timeout);
    }
    if (j.contains("detection")) {
      only_keys(j.at("detection"), "detection", {"j"});
      c.detection.j = j.at("detection").value("j", c.detection.j);
    }
    if (j.contains("model")) {
      const auto& m = j.at("model");
      only_keys(m, "model", {"kind", "k", "threshold", "trees", "subsample", "seed", "anomaly_cutoff"});
      if (m.contains("kind")) c.model.kind = detector::model_kind_from_string(m.at("kind").get<std::string>());
      c.model.k = m.value("k", c.model.k);
      c.model.threshold = m.value("threshold", c.model.threshold);
      c.model.trees = m.value("trees", c.model.trees);
      c.model.subsample = m.value("subsample", c.model.subsample);
      c.model.seed = m.value("seed", c.model.seed);
      c.model.anomaly_cutoff = m.value("anomaly_cutoff", c.model.anomaly_cutoff);
    }
    if (j.contains("scenario")) c.scenario = sim::scenario_from_string(j.at("scenario").get<std::string>());
    c.repetitions = j.value("repetitions", c.repetitions);
    c.post_restart_delay = ms(j, "post_restart_delay_ms", c.post_restart_delay);
    if (j.contains("profile")) {
      const auto& p = j.at("profile");
      only_keys(p, "profile", {"behavior", "transport", "port", "rekey_on_restart", "seed", "bind_address"});
      c.profile = sim::DeviceProfile::for_behavior(sim::behavior_from_string(p.at("behavior").get<std::string>()));
      if (p.contains("transport")) c.profile.transport = capture::transport_from_string(p.at("transport").get<std::string>());
      c.profile.port = p.value("port", c.profile.port);
      c.profile.rekey_on_restart = p.value("rekey_on_restart", c.profile.rekey_on_restart);
      c.profile.bind_address = p.value("bind_address", c.profile.bind_address);
      if (p.contains("seed") && !p.at("seed").is_null()) c.profile.seed = p.at("seed").get<std::uint64_t>();
      c.profile_set = true;
    }
    if (j.contains("paths")) {
      const auto& p = j.at("paths");
      only_keys(p, "paths", {"training_capture", "attack_capture", "model", "attack", "report"});
      auto path = [&](const char* key, std::optional<std::filesystem::path>& out) {
        if (p.contains(key)) out = p.at(key).get<std::string>();
      };
      path("training_capture", c.paths.training_capture);
      path("attack_capture", c.paths.attack_capture);
      path("model", c.paths.model);
      path("attack", c.paths.attack);
      path("report", c.paths.report);
    }
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& e) {
    throw UsageError(std::string("bad config: ") + e.what());
  }
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  try {
    return config_from_json(report::read_json(path));
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

}  // namespace replaykit::cli
