#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace replaykit {

enum class IpFamily { V4, V6 };

/// An IP address plus transport port. The address is kept in canonical
/// textual form (inet_ntop output), so equality is plain string equality.
class Endpoint {
 public:
  Endpoint() = default;

  /// Throws ParameterError when `address` is not a valid IPv4/IPv6 literal.
  Endpoint(std::string_view address, std::uint16_t port);

  /// Parses "a.b.c.d:port" or "[v6]:port".
  static Endpoint parse(std::string_view text);

  const std::string& address() const noexcept { return address_; }
  std::uint16_t port() const noexcept { return port_; }
  IpFamily family() const noexcept { return family_; }

  std::string to_string() const;

  auto operator<=>(const Endpoint&) const = default;

 private:
  std::string address_ = "0.0.0.0";
  std::uint16_t port_ = 0;
  IpFamily family_ = IpFamily::V4;
};

}  // namespace replaykit
