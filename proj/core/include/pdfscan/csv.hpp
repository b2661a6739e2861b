#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace pdfscan::csv {

// Minimal RFC-4180-ish CSV: comma separator, double-quote escaping for
// fields containing commas or quotes. Embedded newlines are not supported;
// every artifact this project writes is one record per line.

std::string escape(std::string_view field);
std::string join(const std::vector<std::string>& fields);
std::vector<std::string> parse_line(std::string_view line);

std::vector<std::vector<std::string>> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path,
                const std::vector<std::vector<std::string>>& rows);

}  // namespace pdfscan::csv
