#include "pdfscan/bytes.hpp"

#include <algorithm>
#include <fstream>

#include "pdfscan/errors.hpp"

namespace pdfscan {

ByteSequence ByteSequence::from_bytes(std::span<const std::uint8_t> bytes) {
  ByteSequence seq;
  seq.data.assign(kSequenceLength, 0);
  const std::size_t n = std::min(bytes.size(), kSequenceLength);
  std::copy_n(bytes.data(), n, seq.data.begin());
  seq.original_length = n;
  seq.file_size = bytes.size();
  return seq;
}

ByteSequence load_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path.string());
  ByteSequence seq;
  seq.data.assign(kSequenceLength, 0);
  in.read(reinterpret_cast<char*>(seq.data.data()),
          static_cast<std::streamsize>(kSequenceLength));
  const std::streamsize got = in.gcount();
  if (in.bad()) throw IoError("read failed: " + path.string());
  seq.original_length = static_cast<std::uint64_t>(got);
  if (in.eof()) {
    seq.file_size = seq.original_length;
  } else {
    std::error_code ec;
    const auto size = std::filesystem::file_size(path, ec);
    seq.file_size = ec ? seq.original_length : size;
  }
  return seq;
}

std::vector<std::uint8_t> read_file_prefix(const std::filesystem::path& path,
                                           std::size_t limit) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path.string());
  std::vector<std::uint8_t> out(limit);
  in.read(reinterpret_cast<char*>(out.data()),
          static_cast<std::streamsize>(limit));
  if (in.bad()) throw IoError("read failed: " + path.string());
  out.resize(static_cast<std::size_t>(in.gcount()));
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open file: " + path.string());
  const auto size = in.tellg();
  in.seekg(0);
  std::vector<std::uint8_t> out(static_cast<std::size_t>(size));
  in.read(reinterpret_cast<char*>(out.data()), size);
  if (!in && size != 0) throw IoError("read failed: " + path.string());
  return out;
}

void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace pdfscan
