#include "replaykit/endpoint.hpp"

#include <arpa/inet.h>

#include <charconv>

#include "replaykit/errors.hpp"

namespace replaykit {

Endpoint::Endpoint(std::string_view address, std::uint16_t port) : port_(port) {
  std::string addr(address);
  char buf[INET6_ADDRSTRLEN] = {};
  unsigned char raw[16] = {};
  if (inet_pton(AF_INET, addr.c_str(), raw) == 1) {
    family_ = IpFamily::V4;
    inet_ntop(AF_INET, raw, buf, sizeof(buf));
  } else if (inet_pton(AF_INET6, addr.c_str(), raw) == 1) {
    family_ = IpFamily::V6;
    inet_ntop(AF_INET6, raw, buf, sizeof(buf));
  } else {
    throw ParameterError("invalid IP address '" + addr + "'");
  }
  address_ = buf;
}

Endpoint Endpoint::parse(std::string_view text) {
  std::string_view host;
  std::string_view port_text;
  if (!text.empty() && text.front() == '[') {
    auto close = text.find(']');
    if (close == std::string_view::npos || close + 1 >= text.size() || text[close + 1] != ':') {
      throw ParameterError("invalid endpoint '" + std::string(text) + "'");
    }
    host = text.substr(1, close - 1);
    port_text = text.substr(close + 2);
  } else {
    auto colon = text.rfind(':');
    if (colon == std::string_view::npos) {
      throw ParameterError("endpoint '" + std::string(text) + "' has no port");
    }
    host = text.substr(0, colon);
    port_text = text.substr(colon + 1);
  }
  unsigned value = 0;
  auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), value);
  if (ec != std::errc() || ptr != port_text.data() + port_text.size() || value > 65535) {
    throw ParameterError("invalid port in endpoint '" + std::string(text) + "'");
  }
  return Endpoint(host, static_cast<std::uint16_t>(value));
}

std::string Endpoint::to_string() const {
  if (family_ == IpFamily::V6) return "[" + address_ + "]:" + std::to_string(port_);
  return address_ + ":" + std::to_string(port_);
}

}  // namespace replaykit
