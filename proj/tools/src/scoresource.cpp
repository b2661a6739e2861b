#include "scoresource.hpp"

#include <cstdio>
#include <filesystem>
#include <vector>

#include "pdfscan/bytes.hpp"
#include "pdfscan/checkpoint.hpp"
#include "pdfscan/errors.hpp"
#include "pdfscan/model.hpp"

#if defined(PDFSCAN_SYSTEM_JSON)
#include <nlohmann/json.hpp>
#else
#include "json.hpp"
#endif

#include "pdfscan/parallel.hpp"

namespace pdfscan::tools {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string sniff_magic(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw IoError("cannot open model file: " + path);
  char buf[8] = {};
  const std::size_t got = std::fread(buf, 1, sizeof buf, f);
  std::fclose(f);
  return std::string(buf, got);
}

ScoreSource from_members(std::vector<models::ModelCheckpoint> members,
                         std::string origin) {
  if (members.empty()) {
    throw ValidationError("ensemble descriptor lists no members: " + origin);
  }
  const char arch = models::arch_letter(members.front().config.arch);
  ScoreSource src;
  src.ensemble.emplace(members);
  char text[64];
  std::snprintf(text, sizeof text, "ensemble of %zu (architecture %c)",
                members.size(), arch);
  src.description = text;
  return src;
}

ScoreSource load_descriptor(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  const json doc = json::parse(bytes.begin(), bytes.end(), nullptr,
                               /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("members")) {
    throw ValidationError("not a recognized model file: " + path);
  }
  try {
    const fs::path dir = fs::path(path).parent_path();
    std::vector<models::ModelCheckpoint> members;
    for (const auto& rel : doc.at("members")) {
      const fs::path member_path = rel.get<std::string>();
      const fs::path resolved =
          member_path.is_absolute() ? member_path : dir / member_path;
      members.push_back(models::load_checkpoint(resolved.string()));
    }
    return from_members(std::move(members), path);
  } catch (const json::exception& e) {
    throw ValidationError("malformed ensemble descriptor " + path + ": " +
                          e.what());
  }
}

}  // namespace

double ScoreSource::score(std::span<const std::uint8_t> bytes) const {
  if (ensemble) return ensemble->score(bytes);
  return forest->score_file(bytes);
}

ScoreSource load_score_source(const std::string& path) {
  const std::string magic = sniff_magic(path);
  if (magic == "PDFSCK01") {
    std::vector<models::ModelCheckpoint> one;
    one.push_back(models::load_checkpoint(path));
    ScoreSource src = from_members(std::move(one), path);
    src.description = "single model (architecture " +
                      std::string(1, models::arch_letter(
                                         src.ensemble->member(0).config().arch)) +
                      ")";
    return src;
  }
  if (magic == "PDFSRF01") {
    ScoreSource src;
    src.forest.emplace(baseline::load_baseline(path));
    char text[96];
    std::snprintf(text, sizeof text, "tag forest (%zu tags, %zu trees)",
                  src.forest->vocab.tags.size(), src.forest->forest.trees.size());
    src.description = text;
    return src;
  }
  return load_descriptor(path);
}

std::vector<metrics::ScoredSample> score_all(const ScoreSource& src,
                                             const data::Dataset& ds,
                                             int threads) {
  std::vector<metrics::ScoredSample> out(ds.size());
  const int n_threads = threads > 0 ? threads : default_thread_count();
  parallel_for(ds.size(), n_threads, [&](std::size_t i) {
    out[i].score = src.score(ds.samples[i].view());
    out[i].malicious = ds.samples[i].malicious;
  });
  return out;
}

}  // namespace pdfscan::tools
