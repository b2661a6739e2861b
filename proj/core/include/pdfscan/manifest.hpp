#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pdfscan/date.hpp"

namespace pdfscan {

enum class Label { benign, malicious };
enum class Split { train, val, test };

std::string to_string(Label l);
std::string to_string(Split s);
Label label_from_string(const std::string& s);
Split split_from_string(const std::string& s);

struct ManifestEntry {
  std::string path;  // relative to the manifest's directory
  Label label = Label::benign;
  std::optional<Date> first_seen;            // required for malicious entries
  std::map<std::string, std::string> families;  // vendor -> family name
  std::optional<Split> split;

  bool operator==(const ManifestEntry&) const = default;
};

// Flat CSV-backed dataset index. Columns: path,label,first_seen,split and one
// family_<vendor> column per vendor; empty cells mean "absent".
struct DatasetManifest {
  std::vector<ManifestEntry> entries;

  // Sorted union of vendor names across entries.
  std::vector<std::string> vendors() const;
  bool has_splits() const;
  std::size_t count(Label l) const;
  std::size_t count(Label l, Split s) const;

  // Contract checks: unique paths, dated malicious entries, split
  // all-or-none. Throws ValidationError.
  void validate() const;
};

DatasetManifest read_manifest(const std::filesystem::path& csv_path);
void write_manifest(const DatasetManifest& manifest,
                    const std::filesystem::path& csv_path);

// Assigns splits by date: malicious entries with first_seen <= val_cutoff go
// to train, <= test_cutoff to val, later ones to test. Benign entries (which
// may be undated) are assigned in the same proportions by largest remainder,
// ordered by a seeded shuffle. Returns a copy with every entry's split set.
DatasetManifest chronological_split(const DatasetManifest& manifest,
                                    Date val_cutoff, Date test_cutoff,
                                    std::uint64_t seed);

}  // namespace pdfscan
