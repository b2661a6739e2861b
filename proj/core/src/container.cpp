#include "container.hpp"

#include <cstdio>
#include <cstring>

#include "pdfscan/errors.hpp"

namespace pdfscan::container {

namespace {

void append_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
  }
}

}  // namespace

void append_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

void append_str(std::vector<std::uint8_t>& out, std::string_view s) {
  append_u32(out, static_cast<std::uint32_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

void append_f32(std::vector<std::uint8_t>& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  append_u32(out, bits);
}

void append_f64(std::vector<std::uint8_t>& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  append_u64(out, bits);
}

void append_i32(std::vector<std::uint8_t>& out, std::int32_t v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  append_u32(out, bits);
}

std::uint64_t PayloadReader::raw(std::size_t n) {
  if (pos_ + n > buf_.size()) {
    throw CorruptCheckpointError("payload read past end of file");
  }
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < n; ++i) {
    v |= static_cast<std::uint64_t>(buf_[pos_ + i]) << (8 * i);
  }
  pos_ += n;
  return v;
}

void PayloadReader::seek(std::size_t offset) {
  if (offset > buf_.size()) {
    throw CorruptCheckpointError("payload offset past end of file");
  }
  pos_ = offset;
}

float PayloadReader::f32() {
  const auto bits = static_cast<std::uint32_t>(raw(4));
  float v;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

double PayloadReader::f64() {
  const std::uint64_t bits = raw(8);
  double v;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

std::int32_t PayloadReader::i32() {
  const auto bits = static_cast<std::uint32_t>(raw(4));
  std::int32_t v;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

std::uint32_t PayloadReader::u32() {
  return static_cast<std::uint32_t>(raw(4));
}

std::string PayloadReader::str() {
  const std::uint32_t len = u32();
  if (pos_ + len > buf_.size()) {
    throw CorruptCheckpointError("string read past end of file");
  }
  std::string s(reinterpret_cast<const char*>(buf_.data()) + pos_, len);
  pos_ += len;
  return s;
}

void write_container(const std::string& path, std::string_view magic,
                     const json& header,
                     const std::vector<std::uint8_t>& payload) {
  if (magic.size() != 8) throw ContractError("container magic must be 8 bytes");
  const std::string head = header.dump();
  std::vector<std::uint8_t> out;
  out.reserve(12 + head.size() + payload.size());
  out.insert(out.end(), magic.begin(), magic.end());
  append_u32(out, static_cast<std::uint32_t>(head.size()));
  out.insert(out.end(), head.begin(), head.end());
  out.insert(out.end(), payload.begin(), payload.end());

  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot open for writing: " + path);
  const std::size_t written = std::fwrite(out.data(), 1, out.size(), f);
  const int rc = std::fclose(f);
  if (written != out.size() || rc != 0) {
    throw IoError("short write: " + path);
  }
}

Blob read_container(const std::string& path, std::string_view magic) {
  if (magic.size() != 8) throw ContractError("container magic must be 8 bytes");
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw IoError("cannot open: " + path);
  std::vector<std::uint8_t> bytes;
  std::uint8_t chunk[65536];
  std::size_t n;
  while ((n = std::fread(chunk, 1, sizeof chunk, f)) > 0) {
    bytes.insert(bytes.end(), chunk, chunk + n);
  }
  const bool read_error = std::ferror(f) != 0;
  std::fclose(f);
  if (read_error) throw IoError("read failed: " + path);

  if (bytes.size() < 12) {
    throw CorruptCheckpointError("file too short for container header: " +
                                 path);
  }
  if (std::memcmp(bytes.data(), magic.data(), 8) != 0) {
    throw CorruptCheckpointError(
        "bad magic in " + path + " (expected " + std::string(magic) + ")");
  }
  std::uint32_t head_len = 0;
  for (int i = 0; i < 4; ++i) {
    head_len |= static_cast<std::uint32_t>(bytes[8 + i]) << (8 * i);
  }
  if (12 + static_cast<std::uint64_t>(head_len) > bytes.size()) {
    throw CorruptCheckpointError("header length overruns file: " + path);
  }
  Blob blob;
  const char* head_begin = reinterpret_cast<const char*>(bytes.data()) + 12;
  blob.header = json::parse(head_begin, head_begin + head_len,
                            /*cb=*/nullptr, /*allow_exceptions=*/false);
  if (blob.header.is_discarded()) {
    throw CorruptCheckpointError("unparsable container header: " + path);
  }
  blob.payload.assign(bytes.begin() + 12 + head_len, bytes.end());
  return blob;
}

}  // namespace pdfscan::container
