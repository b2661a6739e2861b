// Internal binary container used by checkpoint and forest files.
// Layout: 8-byte magic | u32 little-endian header length | JSON header
// (UTF-8) | raw payload. Payload scalars are packed little-endian
// regardless of host byte order.
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#if defined(PDFSCAN_SYSTEM_JSON)
#include <nlohmann/json.hpp>
#else
#include "json.hpp"
#endif

namespace pdfscan::container {

using json = nlohmann::json;

struct Blob {
  json header;
  std::vector<std::uint8_t> payload;
};

// magic must be exactly 8 bytes. read_container throws IoError when the
// file cannot be opened and CorruptCheckpointError for anything wrong with
// the bytes themselves (short file, bad magic, unparsable header).
void write_container(const std::string& path, std::string_view magic,
                     const json& header,
                     const std::vector<std::uint8_t>& payload);
Blob read_container(const std::string& path, std::string_view magic);

void append_u32(std::vector<std::uint8_t>& out, std::uint32_t v);
void append_f32(std::vector<std::uint8_t>& out, float v);
void append_f64(std::vector<std::uint8_t>& out, double v);
void append_i32(std::vector<std::uint8_t>& out, std::int32_t v);
void append_str(std::vector<std::uint8_t>& out, std::string_view s);

// Bounds-checked little-endian reads; throws CorruptCheckpointError past
// the end of the payload.
class PayloadReader {
 public:
  explicit PayloadReader(const std::vector<std::uint8_t>& buf) : buf_(buf) {}
  void seek(std::size_t offset);
  std::size_t offset() const { return pos_; }
  std::size_t size() const { return buf_.size(); }
  float f32();
  double f64();
  std::int32_t i32();
  std::uint32_t u32();
  std::string str();  // u32 length prefix + raw bytes

 private:
  std::uint64_t raw(std::size_t n);
  const std::vector<std::uint8_t>& buf_;
  std::size_t pos_ = 0;
};

}  // namespace pdfscan::container
