#include "pdfscan/dataset.hpp"

#include <filesystem>

#include "pdfscan/bytes.hpp"
#include "pdfscan/errors.hpp"

namespace pdfscan::data {

std::size_t Dataset::count(Label label) const {
  std::size_t n = 0;
  for (const auto& s : samples) {
    if (s.malicious == (label == Label::malicious)) ++n;
  }
  return n;
}

std::string manifest_dir(const std::string& manifest_path) {
  const auto parent = std::filesystem::path(manifest_path).parent_path();
  return parent.empty() ? std::string(".") : parent.string();
}

Dataset load_entries(const DatasetManifest& manifest, const std::string& base_dir,
                     const std::function<bool(const ManifestEntry&)>& keep) {
  Dataset ds;
  for (const auto& entry : manifest.entries) {
    if (keep && !keep(entry)) continue;
    Sample s;
    s.id = entry.path;
    const std::filesystem::path p(entry.path);
    s.path = p.is_absolute() ? entry.path
                             : (std::filesystem::path(base_dir) / p).string();
    s.malicious = entry.label == Label::malicious;
    s.first_seen = entry.first_seen;
    s.families = entry.families;
    s.bytes = read_file_bytes(s.path);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

Dataset load_split(const DatasetManifest& manifest,
                   const std::string& base_dir, Split split) {
  if (!manifest.has_splits()) {
    throw ValidationError("manifest has no split assignments");
  }
  return load_entries(manifest, base_dir,
                      [split](const ManifestEntry& e) { return e.split == split; });
}

std::vector<std::span<const std::uint8_t>> sample_views(const Dataset& ds) {
  std::vector<std::span<const std::uint8_t>> views;
  views.reserve(ds.samples.size());
  for (const auto& s : ds.samples) views.push_back(s.view());
  return views;
}

std::vector<double> sample_labels(const Dataset& ds) {
  std::vector<double> labels;
  labels.reserve(ds.samples.size());
  for (const auto& s : ds.samples) labels.push_back(s.malicious ? 1.0 : 0.0);
  return labels;
}

}  // namespace pdfscan::data
