#include "pdfscan/manifest.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <string_view>

#include "pdfscan/csv.hpp"
#include "pdfscan/errors.hpp"
#include "pdfscan/rng.hpp"

namespace pdfscan {

std::string to_string(Label l) {
  return l == Label::benign ? "benign" : "malicious";
}

std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    default: return "test";
  }
}

Label label_from_string(const std::string& s) {
  if (s == "benign") return Label::benign;
  if (s == "malicious") return Label::malicious;
  throw ValidationError("unknown label: '" + s + "'");
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw ValidationError("unknown split: '" + s + "'");
}

std::vector<std::string> DatasetManifest::vendors() const {
  std::set<std::string> names;
  for (const auto& e : entries) {
    for (const auto& [vendor, family] : e.families) names.insert(vendor);
  }
  return {names.begin(), names.end()};
}

bool DatasetManifest::has_splits() const {
  return !entries.empty() && entries.front().split.has_value();
}

std::size_t DatasetManifest::count(Label l) const {
  return static_cast<std::size_t>(std::count_if(
      entries.begin(), entries.end(),
      [&](const ManifestEntry& e) { return e.label == l; }));
}

std::size_t DatasetManifest::count(Label l, Split s) const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [&](const ManifestEntry& e) {
        return e.label == l && e.split == s;
      }));
}

void DatasetManifest::validate() const {
  std::set<std::string> seen;
  std::size_t with_split = 0;
  for (const auto& e : entries) {
    if (e.path.empty()) throw ValidationError("manifest entry with empty path");
    if (!seen.insert(e.path).second) {
      throw ValidationError("duplicate manifest path: " + e.path);
    }
    if (e.label == Label::malicious && !e.first_seen) {
      throw ValidationError("malicious entry without first_seen date: " +
                            e.path);
    }
    if (e.split) ++with_split;
  }
  if (with_split != 0 && with_split != entries.size()) {
    throw ValidationError("split column must be set on all entries or none");
  }
}

DatasetManifest read_manifest(const std::filesystem::path& csv_path) {
  const auto rows = csv::read_file(csv_path);
  if (rows.empty()) throw ValidationError("empty manifest: " + csv_path.string());
  const auto& header = rows.front();
  const std::vector<std::string> fixed = {"path", "label", "first_seen",
                                          "split"};
  if (header.size() < fixed.size() ||
      !std::equal(fixed.begin(), fixed.end(), header.begin())) {
    throw ValidationError(
        "manifest header must start with path,label,first_seen,split: " +
        csv_path.string());
  }
  std::vector<std::string> vendor_cols;
  for (std::size_t i = fixed.size(); i < header.size(); ++i) {
    constexpr std::string_view prefix = "family_";
    if (header[i].rfind(prefix, 0) != 0 || header[i].size() == prefix.size()) {
      throw ValidationError("bad manifest column (want family_<vendor>): " +
                            header[i]);
    }
    vendor_cols.push_back(header[i].substr(prefix.size()));
  }

  DatasetManifest manifest;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size()) {
      throw ValidationError("manifest row " + std::to_string(r) +
                            " has wrong field count");
    }
    ManifestEntry e;
    e.path = row[0];
    e.label = label_from_string(row[1]);
    if (!row[2].empty()) e.first_seen = Date::parse(row[2]);
    if (!row[3].empty()) e.split = split_from_string(row[3]);
    for (std::size_t i = 0; i < vendor_cols.size(); ++i) {
      const auto& family = row[fixed.size() + i];
      if (!family.empty()) e.families[vendor_cols[i]] = family;
    }
    manifest.entries.push_back(std::move(e));
  }
  manifest.validate();
  return manifest;
}

void write_manifest(const DatasetManifest& manifest,
                    const std::filesystem::path& csv_path) {
  manifest.validate();
  const auto vendor_names = manifest.vendors();
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header = {"path", "label", "first_seen", "split"};
  for (const auto& v : vendor_names) header.push_back("family_" + v);
  rows.push_back(header);
  for (const auto& e : manifest.entries) {
    std::vector<std::string> row = {
        e.path, to_string(e.label),
        e.first_seen ? e.first_seen->to_string() : std::string(),
        e.split ? to_string(*e.split) : std::string()};
    for (const auto& v : vendor_names) {
      const auto it = e.families.find(v);
      row.push_back(it == e.families.end() ? std::string() : it->second);
    }
    rows.push_back(std::move(row));
  }
  csv::write_file(csv_path, rows);
}

namespace {

// Largest-remainder apportionment of n into parts proportional to weights.
std::vector<std::size_t> apportion(std::size_t n,
                                   const std::vector<std::size_t>& weights) {
  const std::size_t total =
      std::accumulate(weights.begin(), weights.end(), std::size_t{0});
  std::vector<std::size_t> out(weights.size(), 0);
  if (total == 0) {
    if (!out.empty()) out[0] = n;  // degenerate: no signal, keep everything
    return out;
  }
  std::vector<double> remainders(weights.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact =
        static_cast<double>(n) * static_cast<double>(weights[i]) /
        static_cast<double>(total);
    out[i] = static_cast<std::size_t>(exact);
    remainders[i] = exact - static_cast<double>(out[i]);
    assigned += out[i];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return remainders[a] > remainders[b];
  });
  for (std::size_t i = 0; assigned < n; ++i) {
    ++out[order[i % order.size()]];
    ++assigned;
  }
  return out;
}

}  // namespace

DatasetManifest chronological_split(const DatasetManifest& manifest,
                                    Date val_cutoff, Date test_cutoff,
                                    std::uint64_t seed) {
  if (test_cutoff < val_cutoff) {
    throw ValidationError("test_cutoff precedes val_cutoff");
  }
  manifest.validate();
  DatasetManifest out = manifest;

  std::vector<std::size_t> malicious_counts(3, 0);
  std::vector<std::size_t> benign_idx;
  for (std::size_t i = 0; i < out.entries.size(); ++i) {
    auto& e = out.entries[i];
    if (e.label == Label::malicious) {
      if (!e.first_seen) {
        throw ValidationError("malicious entry without first_seen date: " +
                              e.path);
      }
      if (*e.first_seen <= val_cutoff) {
        e.split = Split::train;
      } else if (*e.first_seen <= test_cutoff) {
        e.split = Split::val;
      } else {
        e.split = Split::test;
      }
      ++malicious_counts[static_cast<std::size_t>(*e.split)];
    } else {
      benign_idx.push_back(i);
    }
  }

  const auto benign_counts = apportion(benign_idx.size(), malicious_counts);
  Rng rng(derive_seed(seed, /*stream=*/2));  // stream 2: benign split shuffle
  shuffle(benign_idx, rng);
  std::size_t pos = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    for (std::size_t k = 0; k < benign_counts[s]; ++k) {
      out.entries[benign_idx[pos++]].split = static_cast<Split>(s);
    }
  }
  out.validate();
  return out;
}

}  // namespace pdfscan
