#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pdfscan/date.hpp"
#include "pdfscan/manifest.hpp"

namespace pdfscan::data {

// One loaded file. `bytes` holds the whole file; consumers that only want
// the leading window (the byte-level models) read a prefix of the span.
struct Sample {
  std::string id;    // path column from the manifest, unique per corpus
  std::string path;  // resolved on-disk location
  bool malicious = false;
  std::optional<Date> first_seen;
  std::map<std::string, std::string> families;  // vendor -> family label
  std::vector<std::uint8_t> bytes;

  std::span<const std::uint8_t> view() const { return bytes; }
};

struct Dataset {
  std::vector<Sample> samples;
  std::size_t count(Label label) const;
  bool empty() const { return samples.empty(); }
  std::size_t size() const { return samples.size(); }
};

// Directory of the manifest file; sample paths resolve relative to it.
std::string manifest_dir(const std::string& manifest_path);

// Load the rows `keep` accepts (all rows when empty), in manifest order.
// Files must be readable (IoError otherwise).
Dataset load_entries(const DatasetManifest& manifest, const std::string& base_dir,
                     const std::function<bool(const ManifestEntry&)>& keep);

// Load the rows assigned to `split`, in manifest order. The manifest must
// carry split assignments; files must be readable (IoError otherwise).
Dataset load_split(const DatasetManifest& manifest,
                   const std::string& base_dir, Split split);

// Convenience views for the trainers/scorers.
std::vector<std::span<const std::uint8_t>> sample_views(const Dataset& ds);
std::vector<double> sample_labels(const Dataset& ds);

}  // namespace pdfscan::data
