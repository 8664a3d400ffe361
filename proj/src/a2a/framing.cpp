#include "lunasim/a2a/framing.hpp"

#include <algorithm>
#include <array>

#include "lunasim/sim/hash.hpp"

namespace lunasim::a2a {

namespace {

std::array<std::uint32_t, 256> make_crc_table() {
  std::array<std::uint32_t, 256> table{};
  for (std::uint32_t n = 0; n < 256; ++n) {
    std::uint32_t c = n;
    for (int k = 0; k < 8; ++k)
      c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
    table[n] = c;
  }
  return table;
}

void put_le(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i)
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_le(const std::string& in, std::size_t off, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[off + i]))
         << (8 * i);
  return v;
}

}  // namespace

std::uint32_t crc32(const std::string& data) {
  static const auto table = make_crc_table();
  std::uint32_t c = 0xffffffffu;
  for (unsigned char ch : data) c = table[(c ^ ch) & 0xff] ^ (c >> 8);
  return c ^ 0xffffffffu;
}

std::string Frame::to_bytes() const {
  std::string out;
  out.reserve(kFrameHeaderSize + payload.size());
  put_le(out, msg_id, 8);
  put_le(out, index, 2);
  put_le(out, count, 2);
  put_le(out, checksum, 4);
  out += payload;
  return out;
}

Frame Frame::from_bytes(const std::string& bytes) {
  if (bytes.size() < kFrameHeaderSize)
    throw FramingError("frame shorter than its header");
  Frame f;
  f.msg_id = get_le(bytes, 0, 8);
  f.index = static_cast<std::uint16_t>(get_le(bytes, 8, 2));
  f.count = static_cast<std::uint16_t>(get_le(bytes, 10, 2));
  f.checksum = static_cast<std::uint32_t>(get_le(bytes, 12, 4));
  f.payload = bytes.substr(kFrameHeaderSize);
  return f;
}

std::vector<Frame> frame_for_control_channel(const std::string& bytes,
                                             std::size_t mtu) {
  if (mtu <= kFrameHeaderSize)
    throw MtuTooSmall("mtu " + std::to_string(mtu) +
                      " leaves no room past the 16-byte header");
  std::size_t cap = mtu - kFrameHeaderSize;
  std::size_t count = std::max<std::size_t>(1, (bytes.size() + cap - 1) / cap);
  if (count > 0xffff)
    throw MtuTooSmall("payload would need more than 65535 frames");

  std::uint64_t id = sim::fnv1a64(bytes);
  std::vector<Frame> frames;
  frames.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Frame f;
    f.msg_id = id;
    f.index = static_cast<std::uint16_t>(i);
    f.count = static_cast<std::uint16_t>(count);
    f.payload = bytes.substr(i * cap, cap);
    f.checksum = crc32(f.payload);
    frames.push_back(std::move(f));
  }
  return frames;
}

std::string reassemble(std::vector<Frame> frames) {
  if (frames.empty()) throw FramingError("no frames");
  std::uint64_t id = frames[0].msg_id;
  std::size_t count = frames[0].count;
  if (frames.size() != count)
    throw FramingError("expected " + std::to_string(count) + " frames, got " +
                       std::to_string(frames.size()));
  std::sort(frames.begin(), frames.end(),
            [](const Frame& a, const Frame& b) { return a.index < b.index; });
  std::string out;
  for (std::size_t i = 0; i < count; ++i) {
    const Frame& f = frames[i];
    if (f.msg_id != id) throw FramingError("mixed message ids");
    if (f.count != count) throw FramingError("inconsistent frame count");
    if (f.index != i) throw FramingError("missing or duplicate frame index");
    if (crc32(f.payload) != f.checksum)
      throw ChecksumMismatch("frame " + std::to_string(i) +
                             " failed its checksum");
    out += f.payload;
  }
  return out;
}

}  // namespace lunasim::a2a
