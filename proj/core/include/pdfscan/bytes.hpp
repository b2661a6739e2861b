#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace pdfscan {

// Every file is represented to the models by its first 200,000 bytes,
// zero-padded at the end when shorter.
inline constexpr std::size_t kSequenceLength = 200'000;

struct ByteSequence {
  std::vector<std::uint8_t> data;     // always kSequenceLength bytes
  std::uint64_t original_length = 0;  // min(file size, kSequenceLength)
  std::uint64_t file_size = 0;        // true on-disk size

  static ByteSequence from_bytes(std::span<const std::uint8_t> bytes);
  std::span<const std::uint8_t> view() const { return data; }
};

// Reads a file into the fixed-length representation. Unreadable paths throw
// IoError; an empty file yields an all-zero sequence with original_length 0.
ByteSequence load_bytes(const std::filesystem::path& path);

// Reads at most `limit` bytes of a file without padding (corpus loading
// keeps raw prefixes in memory; models treat bytes past the end as zero).
std::vector<std::uint8_t> read_file_prefix(const std::filesystem::path& path,
                                           std::size_t limit = kSequenceLength);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::uint8_t> bytes);

}  // namespace pdfscan
