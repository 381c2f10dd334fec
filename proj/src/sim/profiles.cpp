#include <cstdio>
#include <json.hpp>

#include "profile_logic.hpp"
#include "replaykit/sim/keyed.hpp"

namespace replaykit::sim {

using nlohmann::json;

std::string_view to_string(Behavior b) {
  switch (b) {
    case Behavior::CleartextEcho: return "CleartextEcho";
    case Behavior::SignedCleartext: return "SignedCleartext";
    case Behavior::EncodedFixed: return "EncodedFixed";
    case Behavior::SessionKey: return "SessionKey";
    case Behavior::TlsLike: return "TlsLike";
    case Behavior::Silent: return "Silent";
  }
  return "CleartextEcho";
}

std::string_view to_string(DeviceState s) { return s == DeviceState::Obverse ? "OBVERSE" : "REVERSE"; }

std::string_view to_string(Scenario s) { return s == Scenario::NonRestart ? "non_restart" : "restart"; }

Behavior behavior_from_string(std::string_view s) {
  for (auto b : kAllBehaviors) {
    if (to_string(b) == s) return b;
  }
  throw ParameterError("unknown device behaviour '" + std::string(s) + "'");
}

DeviceState device_state_from_string(std::string_view s) {
  if (s == "OBVERSE") return DeviceState::Obverse;
  if (s == "REVERSE") return DeviceState::Reverse;
  throw ParameterError("unknown device state '" + std::string(s) + "'");
}

Scenario scenario_from_string(std::string_view s) {
  if (s == "non_restart" || s == "non-restart") return Scenario::NonRestart;
  if (s == "restart") return Scenario::Restart;
  throw ParameterError("unknown scenario '" + std::string(s) + "'");
}

capture::Transport default_transport(Behavior b) {
  return b == Behavior::EncodedFixed || b == Behavior::Silent ? capture::Transport::Udp
                                                              : capture::Transport::Tcp;
}

bool is_vulnerable(Behavior b, Scenario s, bool rekey_on_restart) {
  switch (b) {
    case Behavior::CleartextEcho:
    case Behavior::SignedCleartext:
    case Behavior::EncodedFixed: return true;
    case Behavior::SessionKey: return s == Scenario::NonRestart || !rekey_on_restart;
    case Behavior::TlsLike:
    case Behavior::Silent: return false;
  }
  return false;
}

std::string cleartext_ack(DeviceState s) {
  return s == DeviceState::Obverse ? R"({"ack":"OBVERSE","status":"ok","power":"on"})"
                                   : R"({"ack":"REVERSE","status":"ok","power":"off"})";
}

namespace {

std::vector<Bytes> one(std::string_view s) { return {to_bytes(s)}; }

std::string digits(std::uint64_t v, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%0*llu", width, static_cast<unsigned long long>(v));
  return buf;
}

std::optional<json> parse_json(const Bytes& m) {
  auto j = json::parse(m.begin(), m.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  return j;
}

// Plain JSON in, fixed acknowledgment out.
class CleartextEcho final : public ProfileLogic {
 public:
  std::vector<Bytes> on_message(const Bytes& m, DeviceCore::Connection&, DeviceCore& core) const override {
    auto j = parse_json(m);
    try {
      if (j && j->value("cmd", "") == "set_state") {
        core.state = device_state_from_string(j->at("state").get<std::string>());
        return one(cleartext_ack(core.state));
      }
    } catch (const std::exception&) {
    }
    return one(R"({"status":"error","reason":"bad request"})");
  }

  void run_command(DeviceState target, AppChannel& ch, AppContext& ctx) const override {
    std::string msg = R"({"cmd":"set_state","state":")" + std::string(to_string(target)) +
                      R"(","seq":")" + digits(++ctx.app.message_counter, 6) + R"("})";
    auto r = ch.exchange(to_bytes(msg), 1);
    if (replaykit::to_string(r.at(0)) != cleartext_ack(target)) throw TriggerError("unexpected acknowledgment");
  }
};

// JSON with a signature over a static secret. Nothing in the signed content
// is checked for freshness, so a byte-identical replay verifies.
class SignedCleartext final : public ProfileLogic {
 public:
  static std::string signature(ByteView secret, const std::string& id, const std::string& ts, int onoff) {
    return to_hex(keyed_tag(secret, to_bytes(id + "|" + ts + "|" + std::to_string(onoff)), 16));
  }

  std::vector<Bytes> on_message(const Bytes& m, DeviceCore::Connection&, DeviceCore& core) const override {
    auto j = parse_json(m);
    try {
      if (j) {
        const auto& h = j->at("header");
        std::string id = h.at("messageId").get<std::string>();
        std::string ts = std::to_string(h.at("timestamp").get<std::uint64_t>());
        int onoff = j->at("payload").at("togglex").at("onoff").get<int>();
        if ((onoff == 0 || onoff == 1) && h.at("sign").get<std::string>() == signature(core.secret, id, ts, onoff)) {
          core.state = onoff ? DeviceState::Obverse : DeviceState::Reverse;
          std::string reply = R"({"header":{"messageId":")" + id +
                              R"(","method":"SETACK","namespace":"Appliance.Control.ToggleX","timestamp":)" +
                              std::to_string(core.clock_s) + R"(},"payload":{"togglex":{"channel":0,"onoff":)" +
                              std::to_string(onoff) + R"(,"state":")" + (onoff ? "on" : "off") + R"("}}})";
          return one(reply);
        }
      }
    } catch (const std::exception&) {
    }
    return one(R"({"header":{"method":"ERROR"},"payload":{"error":{"code":5001,"detail":"sign error"}}})");
  }

  void run_command(DeviceState target, AppChannel& ch, AppContext& ctx) const override {
    std::uint64_t r = splitmix64(ctx.app.rng_state) % 10'000'000'000'000'000ULL;
    std::string id = digits(r, 16);
    std::string ts = std::to_string(ctx.clock_s);
    int onoff = target == DeviceState::Obverse ? 1 : 0;
    std::string msg = R"({"header":{"messageId":")" + id +
                      R"(","method":"SET","namespace":"Appliance.Control.ToggleX","timestamp":)" + ts +
                      R"(,"sign":")" + signature(ctx.secret, id, ts, onoff) +
                      R"("},"payload":{"togglex":{"channel":0,"onoff":)" + std::to_string(onoff) + "}}}";
    auto reply = parse_json(ch.exchange(to_bytes(msg), 1).at(0));
    if (!reply || reply->at("header").value("method", "") != "SETACK") throw TriggerError("command rejected");
  }
};

// Fixed opaque bytes per state; one fixed reply whatever the state.
class EncodedFixed final : public ProfileLogic {
 public:
  static Bytes command(DeviceState s) {
    Bytes b = {0xA5, 0x5A, 0x21, 0x0C, 0x10, 0x00, 0x00, 0x01, static_cast<std::uint8_t>(s == DeviceState::Obverse)};
    unsigned sum = 0;
    for (auto x : b) sum += x;
    b.push_back(static_cast<std::uint8_t>(sum >> 8));
    b.push_back(static_cast<std::uint8_t>(sum));
    b.push_back(0x0D);
    return b;
  }
  static Bytes reply() {
    return {0xA5, 0x5A, 0x22, 0x18, 0x10, 0x00, 0x00, 0x01, 0x9C, 0x3E, 0x71, 0x04,
            0xE2, 0x58, 0x0B, 0xC7, 0x36, 0xAF, 0x12, 0x80, 0x5D, 0x00, 0x03, 0x0D};
  }

  std::vector<Bytes> on_message(const Bytes& m, DeviceCore::Connection&, DeviceCore& core) const override {
    for (auto s : {DeviceState::Obverse, DeviceState::Reverse}) {
      if (m == command(s)) {
        core.state = s;
        return {reply()};
      }
    }
    return {Bytes{0xA5, 0x5A, 0xEE, 0x00}};
  }

  void run_command(DeviceState target, AppChannel& ch, AppContext&) const override {
    if (ch.exchange(command(target), 1).at(0) != reply()) throw TriggerError("command rejected");
  }
};

// Inner JSON command under a session key, wrapped in a passthrough envelope.
// The key only changes on power-up.
class SessionKey final : public ProfileLogic {
 public:
  static std::string seal(ByteView key, const std::string& plain) {
    Bytes blob = keyed_tag(key, to_bytes(plain), 4);
    Bytes ct = xor_keystream(key, to_bytes(plain));
    blob.insert(blob.end(), ct.begin(), ct.end());
    return base64_encode(blob);
  }
  static std::optional<std::string> open(ByteView key, const std::string& b64) {
    Bytes blob = base64_decode(b64);
    if (blob.size() < 5) return std::nullopt;
    Bytes plain = xor_keystream(key, ByteView(blob).subspan(4));
    if (keyed_tag(key, plain, 4) != Bytes(blob.begin(), blob.begin() + 4)) return std::nullopt;
    return replaykit::to_string(plain);
  }

  void on_boot(DeviceCore& core, bool rekey) const override {
    if (rekey || core.session_key.empty()) core.session_key = core.random_bytes(16);
  }

  std::vector<Bytes> on_message(const Bytes& m, DeviceCore::Connection&, DeviceCore& core) const override {
    try {
      auto j = parse_json(m);
      if (j && j->value("method", "") == "securePassthrough") {
        auto inner = open(core.session_key, j->at("params").at("request").get<std::string>());
        auto cmd = inner ? json::parse(*inner, nullptr, false) : json();
        if (cmd.is_object() && cmd.value("method", "") == "set_device_info") {
          bool on = cmd.at("params").at("device_on").get<bool>();
          core.state = on ? DeviceState::Obverse : DeviceState::Reverse;
          std::string reply = std::string(R"({"error_code":0,"result":{"device_on":)") + (on ? "true" : "false") + "}}";
          return one(R"({"error_code":0,"result":{"response":")" + seal(core.session_key, reply) + R"("}})");
        }
      }
    } catch (const std::exception&) {
    }
    return one(R"({"error_code":-1012})");
  }

  void run_command(DeviceState target, AppChannel& ch, AppContext& ctx) const override {
    std::string inner = std::string(R"({"method":"set_device_info","params":{"device_on":)") +
                        (target == DeviceState::Obverse ? "true" : "false") +
                        R"(},"request_time_milis":)" + std::to_string(ctx.clock_s * 1000) +
                        R"(,"terminal_uuid":"6F1C0B2E9D7A4E55A1B3C8D0E4F61728"})";
    std::string msg = R"({"method":"securePassthrough","params":{"request":")" +
                      seal(ctx.session_key, inner) + R"("}})";
    auto reply = parse_json(ch.exchange(to_bytes(msg), 1).at(0));
    if (!reply || reply->value("error_code", -1) != 0) throw TriggerError("command rejected");
  }
};

// TLS/DTLS-shaped records: a hello exchange binds each connection to a fresh
// server random; application records are authenticated against it.
class TlsLike final : public ProfileLogic {
 public:
  explicit TlsLike(capture::Transport t) : dtls_(t == capture::Transport::Udp) {}

  Bytes record(std::uint8_t type, ByteView body, std::uint64_t seq = 0) const {
    Bytes r{type};
    if (dtls_) {
      r.insert(r.end(), {0xFE, 0xFD, 0x00, 0x00});
      for (int i = 5; i >= 0; --i) r.push_back(static_cast<std::uint8_t>(seq >> (8 * i)));
    } else {
      r.insert(r.end(), {0x03, 0x03});
    }
    r.push_back(static_cast<std::uint8_t>(body.size() >> 8));
    r.push_back(static_cast<std::uint8_t>(body.size()));
    r.insert(r.end(), body.begin(), body.end());
    return r;
  }
  std::size_t header_size() const { return dtls_ ? 13 : 5; }

  static Bytes hello(std::uint8_t type, ByteView random) {
    Bytes body{0x03, 0x03};
    body.insert(body.end(), random.begin(), random.end());
    body.push_back(0x00);  // empty session id
    if (type == 0x01) body.insert(body.end(), {0x00, 0x02, 0x13, 0x01, 0x01, 0x00});
    else body.insert(body.end(), {0x13, 0x01, 0x00});
    body.insert(body.end(), {0x00, 0x00});  // no extensions
    Bytes h{type, 0x00, static_cast<std::uint8_t>(body.size() >> 8), static_cast<std::uint8_t>(body.size())};
    h.insert(h.end(), body.begin(), body.end());
    return h;
  }

  static Bytes traffic_key(ByteView secret, ByteView client_random, ByteView server_random) {
    Bytes seed(client_random.begin(), client_random.end());
    seed.insert(seed.end(), server_random.begin(), server_random.end());
    return keyed_tag(secret, seed, 16);
  }
  static Bytes protect(ByteView key, std::string_view plain) {
    Bytes ct = xor_keystream(key, to_bytes(plain));
    Bytes tag = keyed_tag(key, ct, 16);
    ct.insert(ct.end(), tag.begin(), tag.end());
    return ct;
  }
  static std::optional<std::string> unprotect(ByteView key, ByteView body) {
    if (body.size() < 17) return std::nullopt;
    auto ct = body.first(body.size() - 16);
    if (keyed_tag(key, ct, 16) != Bytes(body.end() - 16, body.end())) return std::nullopt;
    return replaykit::to_string(xor_keystream(key, ct));
  }

  std::vector<Bytes> on_message(const Bytes& m, DeviceCore::Connection& conn, DeviceCore& core) const override {
    std::size_t hs = header_size();
    if (m.size() > hs) {
      ByteView body = ByteView(m).subspan(hs);
      if (m[0] == 0x16 && body[0] == 0x01 && body.size() >= 38) {
        conn.client_random.assign(body.begin() + 6, body.begin() + 38);
        conn.server_random = core.random_bytes(32);
        return {record(0x16, hello(0x02, conn.server_random), 0)};
      }
      if (m[0] == 0x17 && !conn.server_random.empty()) {
        Bytes key = traffic_key(core.secret, conn.client_random, conn.server_random);
        auto plain = unprotect(key, body);
        if (plain && plain->starts_with("state=")) {
          try {
            core.state = device_state_from_string(plain->substr(6));
            return {record(0x17, protect(key, "ok " + *plain), 1)};
          } catch (const ParameterError&) {
          }
        }
      }
    }
    return {tls_alert(dtls_ ? capture::Transport::Udp : capture::Transport::Tcp)};
  }

  void run_command(DeviceState target, AppChannel& ch, AppContext& ctx) const override {
    Bytes client_random = ctx.app.random_bytes(32);
    Bytes sh = ch.exchange(record(0x16, hello(0x01, client_random), 0), 1).at(0);
    std::size_t hs = header_size();
    if (sh.size() < hs + 38 || sh[0] != 0x16 || sh[hs] != 0x02) throw TriggerError("no server hello");
    Bytes server_random(sh.begin() + hs + 6, sh.begin() + hs + 38);
    Bytes key = traffic_key(ctx.secret, client_random, server_random);
    std::string cmd = "state=" + std::string(to_string(target));
    Bytes reply = ch.exchange(record(0x17, protect(key, cmd), 1), 1).at(0);
    if (reply.size() <= hs || reply[0] != 0x17) throw TriggerError("command rejected");
    auto plain = unprotect(key, ByteView(reply).subspan(hs));
    if (!plain || *plain != "ok " + cmd) throw TriggerError("bad application record");
  }

 private:
  bool dtls_;
};

// Rolling-code command, never answered.
class Silent final : public ProfileLogic {
 public:
  static Bytes command(ByteView secret, std::uint32_t counter, DeviceState s) {
    Bytes b{'R', 'C'};
    for (int i = 3; i >= 0; --i) b.push_back(static_cast<std::uint8_t>(counter >> (8 * i)));
    b.push_back(s == DeviceState::Obverse ? 0x01 : 0x00);
    b.push_back(0x00);
    Bytes mac = keyed_tag(secret, b, 8);
    b.insert(b.end(), mac.begin(), mac.end());
    return b;
  }

  std::vector<Bytes> on_message(const Bytes& m, DeviceCore::Connection&, DeviceCore& core) const override {
    if (m.size() != 16 || m[0] != 'R' || m[1] != 'C' || m[6] > 1) return {};
    std::uint32_t counter = (std::uint32_t{m[2]} << 24) | (std::uint32_t{m[3]} << 16) |
                            (std::uint32_t{m[4]} << 8) | m[5];
    DeviceState s = m[6] ? DeviceState::Obverse : DeviceState::Reverse;
    if (counter > core.last_counter && m == command(core.secret, counter, s)) {
      core.last_counter = counter;
      core.state = s;
    }
    return {};
  }

  void run_command(DeviceState target, AppChannel& ch, AppContext& ctx) const override {
    auto counter = static_cast<std::uint32_t>(++ctx.app.rolling_counter);
    ch.exchange(command(ctx.secret, counter, target), 0);
  }
};

}  // namespace

Bytes tls_alert(capture::Transport t) {
  if (t == capture::Transport::Udp) return {0x15, 0xFE, 0xFD, 0, 0, 0, 0, 0, 0, 0, 0, 0x00, 0x02, 0x02, 0x14};
  return {0x15, 0x03, 0x03, 0x00, 0x02, 0x02, 0x14};
}

std::unique_ptr<ProfileLogic> make_logic(const DeviceProfile& profile) {
  switch (profile.behavior) {
    case Behavior::CleartextEcho: return std::make_unique<CleartextEcho>();
    case Behavior::SignedCleartext: return std::make_unique<SignedCleartext>();
    case Behavior::EncodedFixed: return std::make_unique<EncodedFixed>();
    case Behavior::SessionKey: return std::make_unique<SessionKey>();
    case Behavior::TlsLike: return std::make_unique<TlsLike>(profile.transport);
    case Behavior::Silent: return std::make_unique<Silent>();
  }
  throw ParameterError("unknown device behaviour");
}

}  // namespace replaykit::sim
