#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace lunasim::a2a {

struct MtuTooSmall : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ChecksumMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FramingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// 16-byte header, little-endian: msg_id u64 | index u16 | count u16 |
// crc32 u32 (IEEE, over this frame's payload only).
inline constexpr std::size_t kFrameHeaderSize = 16;

struct Frame {
  std::uint64_t msg_id{0};
  std::uint16_t index{0};
  std::uint16_t count{1};
  std::uint32_t checksum{0};
  std::string payload;

  std::string to_bytes() const;
  static Frame from_bytes(const std::string& bytes);
};

std::uint32_t crc32(const std::string& data);

// Splits the encoded message into <= (mtu - 16)-byte payload frames; an
// empty message still produces one frame. The msg id is the fnv1a64 hash of
// the whole payload, so all frames of one message share it.
std::vector<Frame> frame_for_control_channel(const std::string& bytes,
                                             std::size_t mtu);

// Order-insensitive; throws ChecksumMismatch on any corrupted frame and
// FramingError on missing/duplicate/mixed frames.
std::string reassemble(std::vector<Frame> frames);

}  // namespace lunasim::a2a
