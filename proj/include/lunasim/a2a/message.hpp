#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace lunasim::a2a {

using json = nlohmann::json;

struct InvalidMessage : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MalformedPayload : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnknownKind : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class MessageKind {
  ALERT,
  STATE_UPDATE,
  POLICY_UPDATE,
  COORDINATION,
  RELAY_OFFER,
  SITUATION_REPORT,
};

// Ordered FULL < SUMMARY < CRITICAL by how much they strip.
enum class CompressionTier { FULL = 0, SUMMARY = 1, CRITICAL = 2 };

enum class AnomalyClass { BIOMETRIC_DEGRADED, UNRESPONSIVE, EQUIPMENT_FAULT };

const char* to_string(MessageKind k);
const char* to_string(CompressionTier t);
const char* to_string(AnomalyClass a);

inline constexpr std::size_t kVectorLength = 64;
inline constexpr std::size_t kMaxTags = 16;
// SUMMARY keeps min/max/mean plus these vector samples.
inline constexpr std::array<std::size_t, 5> kSummarySampleIndices{0, 16, 32,
                                                                  48, 63};

struct VectorSummary {
  double min{0};
  double max{0};
  double mean{0};
  std::array<double, 5> samples{};

  bool operator==(const VectorSummary&) const = default;
};

struct AlertBody {
  AnomalyClass anomaly_class{AnomalyClass::BIOMETRIC_DEGRADED};
  double x_m{0};
  double y_m{0};
  double uncertainty_radius_m{0};
  int assistance_level{1};  // 1..5

  bool operator==(const AlertBody&) const = default;
};

struct SemanticMessage {
  MessageKind kind{MessageKind::STATE_UPDATE};
  std::string sender;
  std::uint64_t seq{0};
  double confidence{1.0};
  // Tier of the encoding this message was decoded from; FULL for locally
  // built messages.
  CompressionTier tier{CompressionTier::FULL};
  std::vector<std::string> tags;  // survive every tier
  std::optional<std::array<double, kVectorLength>> values;
  std::optional<VectorSummary> summary;  // present after a SUMMARY decode
  std::optional<AlertBody> alert;        // required for kind ALERT
  // Free-form payload; kept at FULL and SUMMARY, dropped at CRITICAL for
  // every kind except ALERT (whose body is the alert itself).
  json body;

  bool operator==(const SemanticMessage&) const = default;
};

VectorSummary summarize(const std::array<double, kVectorLength>& values);

}  // namespace lunasim::a2a
