#include "lunasim/a2a/codec.hpp"

#include <algorithm>
#include <cmath>

namespace lunasim::a2a {

const char* to_string(MessageKind k) {
  switch (k) {
    case MessageKind::ALERT: return "ALERT";
    case MessageKind::STATE_UPDATE: return "STATE_UPDATE";
    case MessageKind::POLICY_UPDATE: return "POLICY_UPDATE";
    case MessageKind::COORDINATION: return "COORDINATION";
    case MessageKind::RELAY_OFFER: return "RELAY_OFFER";
    case MessageKind::SITUATION_REPORT: return "SITUATION_REPORT";
  }
  return "?";
}

const char* to_string(CompressionTier t) {
  switch (t) {
    case CompressionTier::FULL: return "FULL";
    case CompressionTier::SUMMARY: return "SUMMARY";
    case CompressionTier::CRITICAL: return "CRITICAL";
  }
  return "?";
}

const char* to_string(AnomalyClass a) {
  switch (a) {
    case AnomalyClass::BIOMETRIC_DEGRADED: return "BIOMETRIC_DEGRADED";
    case AnomalyClass::UNRESPONSIVE: return "UNRESPONSIVE";
    case AnomalyClass::EQUIPMENT_FAULT: return "EQUIPMENT_FAULT";
  }
  return "?";
}

namespace {

MessageKind kind_from_string(const std::string& s) {
  if (s == "ALERT") return MessageKind::ALERT;
  if (s == "STATE_UPDATE") return MessageKind::STATE_UPDATE;
  if (s == "POLICY_UPDATE") return MessageKind::POLICY_UPDATE;
  if (s == "COORDINATION") return MessageKind::COORDINATION;
  if (s == "RELAY_OFFER") return MessageKind::RELAY_OFFER;
  if (s == "SITUATION_REPORT") return MessageKind::SITUATION_REPORT;
  throw UnknownKind("unknown message kind: " + s);
}

AnomalyClass anomaly_from_string(const std::string& s) {
  if (s == "BIOMETRIC_DEGRADED") return AnomalyClass::BIOMETRIC_DEGRADED;
  if (s == "UNRESPONSIVE") return AnomalyClass::UNRESPONSIVE;
  if (s == "EQUIPMENT_FAULT") return AnomalyClass::EQUIPMENT_FAULT;
  throw MalformedPayload("unknown anomaly class: " + s);
}

void validate(const SemanticMessage& m) {
  if (m.sender.empty()) throw InvalidMessage("sender must be non-empty");
  if (!(m.confidence >= 0.0 && m.confidence <= 1.0))
    throw InvalidMessage("confidence outside [0,1]");
  if (m.tags.size() > kMaxTags)
    throw InvalidMessage("more than 16 tags");
  if (m.values) {
    for (double v : *m.values)
      if (!std::isfinite(v)) throw InvalidMessage("non-finite vector value");
  }
  if (m.kind == MessageKind::ALERT) {
    if (!m.alert) throw InvalidMessage("ALERT without alert body");
    if (m.alert->uncertainty_radius_m < 0)
      throw InvalidMessage("negative uncertainty radius");
    if (m.alert->assistance_level < 1 || m.alert->assistance_level > 5)
      throw InvalidMessage("assistance level outside 1..5");
  }
}

json alert_to_json(const AlertBody& a) {
  return json{{"anomaly_class", to_string(a.anomaly_class)},
              {"assistance_level", a.assistance_level},
              {"location", json::array({a.x_m, a.y_m})},
              {"uncertainty_radius_m", a.uncertainty_radius_m}};
}

double require_number(const json& j, const char* ctx) {
  if (!j.is_number()) throw MalformedPayload(std::string(ctx) + " not a number");
  return j.get<double>();
}

}  // namespace

VectorSummary summarize(const std::array<double, kVectorLength>& values) {
  VectorSummary s;
  s.min = *std::min_element(values.begin(), values.end());
  s.max = *std::max_element(values.begin(), values.end());
  double sum = 0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(kVectorLength);
  for (std::size_t i = 0; i < kSummarySampleIndices.size(); ++i)
    s.samples[i] = values[kSummarySampleIndices[i]];
  return s;
}

std::string encode(const SemanticMessage& msg, CompressionTier tier) {
  validate(msg);
  json j;
  j["kind"] = to_string(msg.kind);
  j["sender"] = msg.sender;
  j["seq"] = msg.seq;
  j["confidence"] = msg.confidence;
  j["tier"] = static_cast<int>(tier);
  if (!msg.tags.empty()) j["tags"] = msg.tags;

  if (tier == CompressionTier::FULL) {
    if (msg.values) j["values"] = *msg.values;
  } else if (tier == CompressionTier::SUMMARY) {
    if (msg.values) {
      VectorSummary s = summarize(*msg.values);
      j["summary"] = json{{"max", s.max},
                          {"mean", s.mean},
                          {"min", s.min},
                          {"samples", s.samples}};
    } else if (msg.summary) {
      j["summary"] = json{{"max", msg.summary->max},
                          {"mean", msg.summary->mean},
                          {"min", msg.summary->min},
                          {"samples", msg.summary->samples}};
    }
  }

  if (msg.kind == MessageKind::ALERT) {
    j["alert"] = alert_to_json(*msg.alert);
  } else if (!msg.body.is_null() && tier != CompressionTier::CRITICAL) {
    j["body"] = msg.body;
  }
  return j.dump();
}

SemanticMessage decode(const std::string& bytes) {
  json j = json::parse(bytes, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object())
    throw MalformedPayload("not a JSON object");

  static const char* known[] = {"kind", "sender",  "seq",    "confidence",
                                "tier", "tags",    "values", "summary",
                                "alert", "body"};
  for (auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw MalformedPayload("unexpected field: " + key);
  }
  for (const char* req : {"kind", "sender", "seq", "confidence", "tier"})
    if (!j.contains(req))
      throw MalformedPayload(std::string("missing field: ") + req);

  SemanticMessage m;
  if (!j["kind"].is_string()) throw MalformedPayload("kind not a string");
  m.kind = kind_from_string(j["kind"].get<std::string>());
  if (!j["sender"].is_string()) throw MalformedPayload("sender not a string");
  m.sender = j["sender"].get<std::string>();
  if (!j["seq"].is_number_unsigned())
    throw MalformedPayload("seq not a non-negative integer");
  m.seq = j["seq"].get<std::uint64_t>();
  m.confidence = require_number(j["confidence"], "confidence");
  if (!(m.confidence >= 0.0 && m.confidence <= 1.0))
    throw MalformedPayload("confidence outside [0,1]");
  if (!j["tier"].is_number_integer())
    throw MalformedPayload("tier not an integer");
  int tier = j["tier"].get<int>();
  if (tier < 0 || tier > 2) throw MalformedPayload("tier outside 0..2");
  m.tier = static_cast<CompressionTier>(tier);

  if (j.contains("tags")) {
    if (!j["tags"].is_array() || j["tags"].size() > kMaxTags)
      throw MalformedPayload("bad tags");
    for (const auto& t : j["tags"]) {
      if (!t.is_string()) throw MalformedPayload("tag not a string");
      m.tags.push_back(t.get<std::string>());
    }
  }

  if (j.contains("values")) {
    if (m.tier != CompressionTier::FULL)
      throw MalformedPayload("values present at non-FULL tier");
    if (!j["values"].is_array() || j["values"].size() != kVectorLength)
      throw MalformedPayload("values must hold exactly 64 numbers");
    std::array<double, kVectorLength> vals{};
    for (std::size_t i = 0; i < kVectorLength; ++i)
      vals[i] = require_number(j["values"][i], "vector value");
    m.values = vals;
  }

  if (j.contains("summary")) {
    if (m.tier != CompressionTier::SUMMARY)
      throw MalformedPayload("summary present at non-SUMMARY tier");
    const json& s = j["summary"];
    if (!s.is_object() || !s.contains("min") || !s.contains("max") ||
        !s.contains("mean") || !s.contains("samples") ||
        !s["samples"].is_array() || s["samples"].size() != 5)
      throw MalformedPayload("bad summary shape");
    VectorSummary vs;
    vs.min = require_number(s["min"], "summary.min");
    vs.max = require_number(s["max"], "summary.max");
    vs.mean = require_number(s["mean"], "summary.mean");
    for (int i = 0; i < 5; ++i)
      vs.samples[i] = require_number(s["samples"][i], "summary sample");
    m.summary = vs;
  }

  if (m.kind == MessageKind::ALERT) {
    if (!j.contains("alert")) throw MalformedPayload("ALERT without body");
    const json& a = j["alert"];
    if (!a.is_object() || !a.contains("anomaly_class") ||
        !a.contains("assistance_level") || !a.contains("location") ||
        !a.contains("uncertainty_radius_m") || !a["location"].is_array() ||
        a["location"].size() != 2)
      throw MalformedPayload("bad alert shape");
    AlertBody body;
    if (!a["anomaly_class"].is_string())
      throw MalformedPayload("anomaly_class not a string");
    body.anomaly_class =
        anomaly_from_string(a["anomaly_class"].get<std::string>());
    if (!a["assistance_level"].is_number_integer())
      throw MalformedPayload("assistance_level not an integer");
    body.assistance_level = a["assistance_level"].get<int>();
    if (body.assistance_level < 1 || body.assistance_level > 5)
      throw MalformedPayload("assistance level outside 1..5");
    body.x_m = require_number(a["location"][0], "location x");
    body.y_m = require_number(a["location"][1], "location y");
    body.uncertainty_radius_m =
        require_number(a["uncertainty_radius_m"], "uncertainty radius");
    if (body.uncertainty_radius_m < 0)
      throw MalformedPayload("negative uncertainty radius");
    m.alert = body;
  } else if (j.contains("alert")) {
    throw MalformedPayload("alert body on non-ALERT message");
  }

  if (j.contains("body")) m.body = j["body"];
  return m;
}

CompressionTier select_tier(std::uint64_t, radio::Regime regime) {
  switch (regime) {
    case radio::Regime::HIGH: return CompressionTier::FULL;
    case radio::Regime::MODERATE: return CompressionTier::SUMMARY;
    case radio::Regime::POOR: return CompressionTier::CRITICAL;
  }
  return CompressionTier::CRITICAL;
}

}  // namespace lunasim::a2a
