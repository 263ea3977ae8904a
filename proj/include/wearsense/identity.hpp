#pragma once

#include <openssl/evp.h>

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace wearsense {

// Device identity as seen by the tracker: a MAC address in text form, an
// iBeacon `uuid:major:minor`, or a 32-hex-char salted token in privacy mode.
struct DeviceId {
  std::string value;

  DeviceId() = default;
  explicit DeviceId(std::string v) : value(std::move(v)) {}

  const std::string& str() const { return value; }
  friend auto operator<=>(const DeviceId&, const DeviceId&) = default;
};

inline std::optional<std::vector<std::uint8_t>> decode_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) return std::nullopt;
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  std::vector<std::uint8_t> out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    const int hi = nibble(hex[i]);
    const int lo = nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
  }
  return out;
}

struct IdentityPolicy {
  bool hash_ids = false;
  std::vector<std::uint8_t> salt;

  static IdentityPolicy raw() { return {}; }
  static IdentityPolicy hashed(std::vector<std::uint8_t> salt) { return {true, std::move(salt)}; }
};

// First 128 bits of SHA-256(salt || identity), lowercase hex.
inline std::string salted_token(std::string_view identity, const std::vector<std::uint8_t>& salt) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int digest_len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr) throw std::runtime_error("EVP_MD_CTX_new failed");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, salt.data(), salt.size()) == 1 &&
                  EVP_DigestUpdate(ctx, identity.data(), identity.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &digest_len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok || digest_len < 16) throw std::runtime_error("SHA-256 digest failed");

  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(32, '0');
  for (std::size_t i = 0; i < 16; ++i) {
    out[2 * i] = kHex[digest[i] >> 4];
    out[2 * i + 1] = kHex[digest[i] & 0x0f];
  }
  return out;
}

inline DeviceId make_device_id(std::string_view identity, const IdentityPolicy& policy) {
  if (!policy.hash_ids) return DeviceId{std::string(identity)};
  return DeviceId{salted_token(identity, policy.salt)};
}

}  // namespace wearsense

template <>
struct std::hash<wearsense::DeviceId> {
  std::size_t operator()(const wearsense::DeviceId& id) const noexcept {
    return std::hash<std::string>{}(id.value);
  }
};
