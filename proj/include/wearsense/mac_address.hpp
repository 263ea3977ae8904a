#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace wearsense {

// 48-bit IEEE MAC address. Text form is lowercase `aa:bb:cc:dd:ee:ff`.
struct MacAddress {
  std::array<std::uint8_t, 6> octets{};

  static constexpr MacAddress broadcast() {
    return MacAddress{{0xff, 0xff, 0xff, 0xff, 0xff, 0xff}};
  }

  std::string to_string() const {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out(17, ':');
    for (std::size_t i = 0; i < 6; ++i) {
      out[i * 3] = kHex[octets[i] >> 4];
      out[i * 3 + 1] = kHex[octets[i] & 0x0f];
    }
    return out;
  }

  // Accepts upper or lower case hex; anything else is rejected.
  static std::optional<MacAddress> parse(std::string_view text) {
    if (text.size() != 17) return std::nullopt;
    auto nibble = [](char c) -> int {
      if (c >= '0' && c <= '9') return c - '0';
      if (c >= 'a' && c <= 'f') return c - 'a' + 10;
      if (c >= 'A' && c <= 'F') return c - 'A' + 10;
      return -1;
    };
    MacAddress mac;
    for (std::size_t i = 0; i < 6; ++i) {
      if (i > 0 && text[i * 3 - 1] != ':') return std::nullopt;
      const int hi = nibble(text[i * 3]);
      const int lo = nibble(text[i * 3 + 1]);
      if (hi < 0 || lo < 0) return std::nullopt;
      mac.octets[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return mac;
  }

  friend constexpr auto operator<=>(const MacAddress&, const MacAddress&) = default;
};

}  // namespace wearsense
