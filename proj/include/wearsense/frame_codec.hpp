#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "wearsense/mac_address.hpp"

namespace wearsense {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

enum class CodecErrc {
  BadMagic,
  Truncated,
  UnsupportedLinkType,
  OversizedRecord,
  BadVersion,
  LenOverrun,
  FrameTypeMismatch,
  SsidTooLong,
  Empty,
};

inline const char* to_string(CodecErrc e) {
  switch (e) {
    case CodecErrc::BadMagic: return "BadMagic";
    case CodecErrc::Truncated: return "Truncated";
    case CodecErrc::UnsupportedLinkType: return "UnsupportedLinkType";
    case CodecErrc::OversizedRecord: return "OversizedRecord";
    case CodecErrc::BadVersion: return "BadVersion";
    case CodecErrc::LenOverrun: return "LenOverrun";
    case CodecErrc::FrameTypeMismatch: return "FrameTypeMismatch";
    case CodecErrc::SsidTooLong: return "SsidTooLong";
    case CodecErrc::Empty: return "Empty";
  }
  return "Unknown";
}

class CodecError : public std::runtime_error {
 public:
  CodecError(CodecErrc code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}
  CodecErrc code() const noexcept { return code_; }

 private:
  CodecErrc code_;
};

namespace detail {

inline std::uint16_t load_le16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline std::uint16_t load_be16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
}
inline std::uint32_t load_le32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline std::uint32_t load_be32(const std::uint8_t* p) {
  return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
         (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}
inline void store_le16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}
inline void store_be16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
}
inline void store_le32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// pcap
// ---------------------------------------------------------------------------

enum class LinkType { Ieee80211Bare, Ieee80211Radiotap, BleAdv };

inline std::uint32_t link_type_code(LinkType t) {
  switch (t) {
    case LinkType::Ieee80211Bare: return 105;
    case LinkType::Ieee80211Radiotap: return 127;
    case LinkType::BleAdv: return 251;
  }
  return 0;
}

inline std::optional<LinkType> link_type_from_code(std::uint32_t code) {
  switch (code) {
    case 105: return LinkType::Ieee80211Bare;
    case 127: return LinkType::Ieee80211Radiotap;
    case 251: return LinkType::BleAdv;
    default: return std::nullopt;
  }
}

inline constexpr std::size_t kMaxRecordPayload = 65535;
inline constexpr std::size_t kPcapGlobalHeaderLen = 24;
inline constexpr std::size_t kPcapRecordHeaderLen = 16;

struct CaptureRecord {
  std::int64_t ts_micro = 0;
  LinkType link_type = LinkType::Ieee80211Bare;
  Bytes payload;

  friend bool operator==(const CaptureRecord&, const CaptureRecord&) = default;
};

// Records decoded before a failure are kept; `error` is set when decoding
// stopped early.
struct PcapReadResult {
  std::vector<CaptureRecord> records;
  std::optional<CodecErrc> error;
  std::size_t bytes_consumed = 0;

  bool ok() const { return !error.has_value(); }
};

inline PcapReadResult parse_pcap(ByteView data) {
  PcapReadResult result;
  if (data.size() < 4) {
    result.error = CodecErrc::BadMagic;
    return result;
  }
  const std::uint32_t magic = detail::load_le32(data.data());
  bool little_endian;
  if (magic == 0xa1b2c3d4u) {
    little_endian = true;
  } else if (magic == 0xd4c3b2a1u) {
    little_endian = false;
  } else {
    result.error = CodecErrc::BadMagic;
    return result;
  }
  if (data.size() < kPcapGlobalHeaderLen) {
    result.error = CodecErrc::Truncated;
    return result;
  }
  auto u32 = [little_endian](const std::uint8_t* p) {
    return little_endian ? detail::load_le32(p) : detail::load_be32(p);
  };
  const auto link = link_type_from_code(u32(data.data() + 20));
  if (!link) {
    result.error = CodecErrc::UnsupportedLinkType;
    return result;
  }

  std::size_t off = kPcapGlobalHeaderLen;
  result.bytes_consumed = off;
  while (off < data.size()) {
    if (data.size() - off < kPcapRecordHeaderLen) {
      result.error = CodecErrc::Truncated;
      return result;
    }
    const std::uint8_t* hdr = data.data() + off;
    const std::uint32_t ts_sec = u32(hdr);
    const std::uint32_t ts_usec = u32(hdr + 4);
    const std::uint32_t incl_len = u32(hdr + 8);
    if (incl_len > kMaxRecordPayload) {
      result.error = CodecErrc::OversizedRecord;
      return result;
    }
    off += kPcapRecordHeaderLen;
    if (data.size() - off < incl_len) {
      result.error = CodecErrc::Truncated;
      return result;
    }
    CaptureRecord rec;
    rec.ts_micro = static_cast<std::int64_t>(ts_sec) * 1'000'000 + ts_usec;
    rec.link_type = *link;
    rec.payload.assign(data.begin() + static_cast<std::ptrdiff_t>(off),
                       data.begin() + static_cast<std::ptrdiff_t>(off + incl_len));
    result.records.push_back(std::move(rec));
    off += incl_len;
    result.bytes_consumed = off;
  }
  return result;
}

// Little-endian pcap writer (magic 0xa1b2c3d4, version 2.4, microsecond
// timestamps).
class PcapWriter {
 public:
  explicit PcapWriter(LinkType link, std::uint32_t snaplen = kMaxRecordPayload) : link_(link) {
    detail::store_le32(buf_, 0xa1b2c3d4u);
    detail::store_le16(buf_, 2);
    detail::store_le16(buf_, 4);
    detail::store_le32(buf_, 0);
    detail::store_le32(buf_, 0);
    detail::store_le32(buf_, snaplen);
    detail::store_le32(buf_, link_type_code(link));
  }

  void append(std::int64_t ts_micro, ByteView payload) {
    if (ts_micro < 0) throw std::invalid_argument("pcap timestamp must be non-negative");
    if (payload.size() > kMaxRecordPayload) throw std::invalid_argument("pcap record too large");
    const auto len = static_cast<std::uint32_t>(payload.size());
    detail::store_le32(buf_, static_cast<std::uint32_t>(ts_micro / 1'000'000));
    detail::store_le32(buf_, static_cast<std::uint32_t>(ts_micro % 1'000'000));
    detail::store_le32(buf_, len);
    detail::store_le32(buf_, len);
    buf_.insert(buf_.end(), payload.begin(), payload.end());
    ++count_;
  }

  LinkType link_type() const { return link_; }
  std::size_t record_count() const { return count_; }
  const Bytes& bytes() const& { return buf_; }
  Bytes bytes() && { return std::move(buf_); }

 private:
  LinkType link_;
  Bytes buf_;
  std::size_t count_ = 0;
};

// ---------------------------------------------------------------------------
// Radiotap
// ---------------------------------------------------------------------------

struct RadiotapInfo {
  std::optional<int> rssi_dbm;
  std::size_t body_offset = 0;
};

// Walks the standard fields up to dBm antenna signal (bit 5). Anything past
// that is skipped through the declared header length.
inline RadiotapInfo parse_radiotap(ByteView data) {
  if (data.size() < 8) throw CodecError(CodecErrc::Truncated, "radiotap header shorter than 8 bytes");
  if (data[0] != 0) throw CodecError(CodecErrc::BadVersion, "radiotap version " + std::to_string(data[0]));
  const std::size_t len = detail::load_le16(data.data() + 2);
  if (len > data.size()) throw CodecError(CodecErrc::LenOverrun, "declared length exceeds buffer");
  if (len < 8) throw CodecError(CodecErrc::LenOverrun, "declared length below fixed header");

  std::size_t off = 4;
  const std::uint32_t present = detail::load_le32(data.data() + off);
  std::uint32_t word = present;
  off += 4;
  while (word & 0x80000000u) {
    if (off + 4 > len) throw CodecError(CodecErrc::LenOverrun, "present bitmap chain overruns header");
    word = detail::load_le32(data.data() + off);
    off += 4;
  }

  struct Field {
    std::size_t align;
    std::size_t size;
  };
  static constexpr Field kFields[] = {
      {8, 8},  // TSFT
      {1, 1},  // Flags
      {1, 1},  // Rate
      {2, 4},  // Channel
      {1, 2},  // FHSS
      {1, 1},  // dBm antenna signal
  };

  RadiotapInfo info;
  info.body_offset = len;
  for (std::uint32_t bit = 0; bit < 6; ++bit) {
    if (!(present & (1u << bit))) continue;
    const Field f = kFields[bit];
    off = (off + f.align - 1) & ~(f.align - 1);
    if (off + f.size > len) throw CodecError(CodecErrc::LenOverrun, "radiotap field overruns header");
    if (bit == 5) info.rssi_dbm = static_cast<std::int8_t>(data[off]);
    off += f.size;
  }
  return info;
}

inline Bytes make_radiotap_header(std::optional<int> rssi_dbm) {
  if (!rssi_dbm) return Bytes{0x00, 0x00, 0x08, 0x00, 0x00, 0x00, 0x00, 0x00};
  return Bytes{0x00, 0x00, 0x09, 0x00, 0x20, 0x00, 0x00, 0x00,
               static_cast<std::uint8_t>(static_cast<std::int8_t>(*rssi_dbm))};
}

// ---------------------------------------------------------------------------
// 802.11 probe request
// ---------------------------------------------------------------------------

inline constexpr std::size_t kProbeHeaderLen = 24;
inline constexpr std::size_t kMaxSsidLen = 32;

struct ProbeRequestFrame {
  MacAddress sa;
  MacAddress da = MacAddress::broadcast();
  MacAddress bssid = MacAddress::broadcast();
  std::uint16_t seq = 0;
  std::uint8_t frag = 0;
  // Empty means the wildcard SSID.
  std::string ssid;
  Bytes supported_rates;
  // Carried by radiotap, never by the frame itself.
  std::optional<int> rssi_dbm;

  bool wildcard_ssid() const { return ssid.empty(); }

  friend bool operator==(const ProbeRequestFrame&, const ProbeRequestFrame&) = default;
};

inline bool same_frame_fields(const ProbeRequestFrame& a, const ProbeRequestFrame& b) {
  return a.sa == b.sa && a.da == b.da && a.bssid == b.bssid && a.seq == b.seq && a.frag == b.frag &&
         a.ssid == b.ssid && a.supported_rates == b.supported_rates;
}

inline ProbeRequestFrame parse_probe_request(ByteView data) {
  if (data.empty()) throw CodecError(CodecErrc::Truncated, "empty frame");
  if (data[0] != 0x40) throw CodecError(CodecErrc::FrameTypeMismatch, "frame control is not a probe request");
  if (data.size() < kProbeHeaderLen) throw CodecError(CodecErrc::Truncated, "management header shorter than 24 bytes");

  ProbeRequestFrame f;
  std::memcpy(f.da.octets.data(), data.data() + 4, 6);
  std::memcpy(f.sa.octets.data(), data.data() + 10, 6);
  std::memcpy(f.bssid.octets.data(), data.data() + 16, 6);
  const std::uint16_t seq_ctrl = detail::load_le16(data.data() + 22);
  f.frag = static_cast<std::uint8_t>(seq_ctrl & 0x0f);
  f.seq = static_cast<std::uint16_t>(seq_ctrl >> 4);

  bool have_ssid = false;
  bool have_rates = false;
  std::size_t off = kProbeHeaderLen;
  while (off < data.size()) {
    if (data.size() - off < 2) throw CodecError(CodecErrc::Truncated, "element header overruns frame");
    const std::uint8_t id = data[off];
    const std::size_t len = data[off + 1];
    off += 2;
    if (data.size() - off < len) throw CodecError(CodecErrc::Truncated, "element body overruns frame");
    const auto* body = data.data() + off;
    if (id == 0 && !have_ssid) {
      if (len > kMaxSsidLen) throw CodecError(CodecErrc::SsidTooLong, std::to_string(len) + " byte SSID");
      f.ssid.assign(reinterpret_cast<const char*>(body), len);
      have_ssid = true;
    } else if (id == 1 && !have_rates) {
      f.supported_rates.assign(body, body + len);
      have_rates = true;
    }
    off += len;
  }
  return f;
}

inline Bytes serialize_probe_request(const ProbeRequestFrame& f) {
  if (f.seq >= 4096 || f.frag >= 16) throw std::invalid_argument("sequence control out of range");
  if (f.ssid.size() > kMaxSsidLen) throw std::invalid_argument("SSID longer than 32 bytes");
  if (f.supported_rates.size() > 255) throw std::invalid_argument("supported rates element too long");

  Bytes out;
  out.reserve(kProbeHeaderLen + 4 + f.ssid.size() + f.supported_rates.size());
  out.push_back(0x40);
  out.push_back(0x00);
  out.push_back(0x00);
  out.push_back(0x00);
  out.insert(out.end(), f.da.octets.begin(), f.da.octets.end());
  out.insert(out.end(), f.sa.octets.begin(), f.sa.octets.end());
  out.insert(out.end(), f.bssid.octets.begin(), f.bssid.octets.end());
  detail::store_le16(out, static_cast<std::uint16_t>((f.seq << 4) | f.frag));
  out.push_back(0x00);
  out.push_back(static_cast<std::uint8_t>(f.ssid.size()));
  out.insert(out.end(), f.ssid.begin(), f.ssid.end());
  if (!f.supported_rates.empty()) {
    out.push_back(0x01);
    out.push_back(static_cast<std::uint8_t>(f.supported_rates.size()));
    out.insert(out.end(), f.supported_rates.begin(), f.supported_rates.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// BLE advertising
// ---------------------------------------------------------------------------

inline constexpr std::uint8_t kAdTypeManufacturer = 0xff;
inline constexpr std::size_t kIBeaconDataLen = 25;

struct IBeaconPayload {
  std::array<std::uint8_t, 16> uuid{};
  std::uint16_t major = 0;
  std::uint16_t minor = 0;
  std::int8_t tx_power_dbm = 0;

  // 8-4-4-4-12 lowercase form.
  std::string uuid_string() const {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(36);
    for (std::size_t i = 0; i < 16; ++i) {
      if (i == 4 || i == 6 || i == 8 || i == 10) out.push_back('-');
      out.push_back(kHex[uuid[i] >> 4]);
      out.push_back(kHex[uuid[i] & 0x0f]);
    }
    return out;
  }

  // Identity used for re-identification: `uuid:major:minor`.
  std::string identity() const {
    return uuid_string() + ":" + std::to_string(major) + ":" + std::to_string(minor);
  }

  friend bool operator==(const IBeaconPayload&, const IBeaconPayload&) = default;
};

struct AdStructure {
  std::uint8_t type = 0;
  Bytes data;

  friend bool operator==(const AdStructure&, const AdStructure&) = default;
};

struct BleAdvertisement {
  MacAddress adv_addr;
  std::vector<AdStructure> ad_structures;
  std::optional<IBeaconPayload> ibeacon;

  friend bool operator==(const BleAdvertisement&, const BleAdvertisement&) = default;
};

inline std::optional<IBeaconPayload> decode_ibeacon(const AdStructure& ad) {
  static constexpr std::uint8_t kPrefix[] = {0x4c, 0x00, 0x02, 0x15};
  if (ad.type != kAdTypeManufacturer || ad.data.size() != kIBeaconDataLen) return std::nullopt;
  if (!std::equal(std::begin(kPrefix), std::end(kPrefix), ad.data.begin())) return std::nullopt;
  IBeaconPayload b;
  std::memcpy(b.uuid.data(), ad.data.data() + 4, 16);
  b.major = detail::load_be16(ad.data.data() + 20);
  b.minor = detail::load_be16(ad.data.data() + 22);
  b.tx_power_dbm = static_cast<std::int8_t>(ad.data[24]);
  return b;
}

inline AdStructure encode_ibeacon(const IBeaconPayload& b) {
  AdStructure ad;
  ad.type = kAdTypeManufacturer;
  ad.data = {0x4c, 0x00, 0x02, 0x15};
  ad.data.insert(ad.data.end(), b.uuid.begin(), b.uuid.end());
  detail::store_be16(ad.data, b.major);
  detail::store_be16(ad.data, b.minor);
  ad.data.push_back(static_cast<std::uint8_t>(b.tx_power_dbm));
  return ad;
}

// Input is the ADV_IND payload: AdvA in on-air (reversed) order followed by
// length-prefixed AD structures. A zero length byte ends the significant
// part; the remainder is padding.
inline BleAdvertisement parse_ble_advertisement(ByteView data) {
  if (data.size() < 6) throw CodecError(CodecErrc::Empty, "advertisement shorter than AdvA");
  BleAdvertisement adv;
  for (std::size_t i = 0; i < 6; ++i) adv.adv_addr.octets[i] = data[5 - i];

  std::size_t off = 6;
  while (off < data.size()) {
    const std::size_t len = data[off];
    if (len == 0) break;
    if (data.size() - off - 1 < len) throw CodecError(CodecErrc::Truncated, "AD structure overruns payload");
    AdStructure ad;
    ad.type = data[off + 1];
    ad.data.assign(data.begin() + static_cast<std::ptrdiff_t>(off + 2),
                   data.begin() + static_cast<std::ptrdiff_t>(off + 1 + len));
    if (!adv.ibeacon) adv.ibeacon = decode_ibeacon(ad);
    adv.ad_structures.push_back(std::move(ad));
    off += 1 + len;
  }
  return adv;
}

inline Bytes serialize_ble_advertisement(const BleAdvertisement& adv) {
  Bytes out(adv.adv_addr.octets.rbegin(), adv.adv_addr.octets.rend());
  for (const auto& ad : adv.ad_structures) {
    if (ad.data.size() > 254) throw std::invalid_argument("AD structure too long");
    out.push_back(static_cast<std::uint8_t>(ad.data.size() + 1));
    out.push_back(ad.type);
    out.insert(out.end(), ad.data.begin(), ad.data.end());
  }
  return out;
}

}  // namespace wearsense
