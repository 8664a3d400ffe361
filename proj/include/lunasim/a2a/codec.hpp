#pragma once

#include <string>

#include "lunasim/a2a/message.hpp"
#include "lunasim/radio/types.hpp"

namespace lunasim::a2a {

// Canonical encoding: key-sorted, no-whitespace JSON, tier recorded as an
// integer. Equal messages encode to identical bytes at equal tiers.
std::string encode(const SemanticMessage& msg, CompressionTier tier);

SemanticMessage decode(const std::string& bytes);

// Regime decides the tier; bandwidth is already folded into the regime.
CompressionTier select_tier(std::uint64_t available_bandwidth_bps,
                            radio::Regime regime);

}  // namespace lunasim::a2a
