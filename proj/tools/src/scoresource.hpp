// Uniform scoring interface over the three model artifact kinds: an
// ensemble descriptor (JSON listing member checkpoints), a single network
// checkpoint, or a tag-forest file. The kind is sniffed from the file's
// magic bytes.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "pdfscan/baseline.hpp"
#include "pdfscan/dataset.hpp"
#include "pdfscan/metrics.hpp"
#include "pdfscan/training.hpp"

namespace pdfscan::tools {

struct ScoreSource {
  std::optional<training::ScoringEnsemble> ensemble;
  std::optional<baseline::BaselineModel> forest;
  std::string description;  // e.g. "ensemble of 3 (architecture A)"

  double score(std::span<const std::uint8_t> bytes) const;
};

// Throws ValidationError when the file is none of the recognized formats,
// IoError / CorruptCheckpointError on unreadable or malformed content.
ScoreSource load_score_source(const std::string& path);

// Scores every sample (parallel over samples).
std::vector<metrics::ScoredSample> score_all(const ScoreSource& src,
                                             const data::Dataset& ds,
                                             int threads);

}  // namespace pdfscan::tools
