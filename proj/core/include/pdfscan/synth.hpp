#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pdfscan/manifest.hpp"

namespace pdfscan {

// A planted malware family: files of this family embed `motif` (raw bytes of
// a PDF dictionary body) in one extra object. `window_*` restrict where the
// family's first_seen dates land inside the corpus date range, as fractions
// in [0, 1]; overlapping, offset windows make the family mix drift over time,
// and a window pinned late keeps a family out of the training period
// entirely.
struct SynthFamily {
  std::string name;
  std::vector<std::uint8_t> motif;
  double prevalence = 0.0;
  double window_start = 0.0;
  double window_end = 1.0;
};

struct SynthCorpusSpec {
  std::size_t n_benign = 0;
  std::size_t n_malicious = 0;
  std::vector<SynthFamily> families;
  Date date_start;
  Date date_end;
  std::uint64_t seed = 0;
  // Size of the main text stream, in words; bounds the generated file sizes.
  int min_words = 20;
  int max_words = 60;

  void validate() const;  // throws ValidationError
};

// Built-in family presets (motif bytes included); `name:prevalence` specs in
// the CLI resolve against these.
const std::vector<SynthFamily>& family_presets();
SynthFamily family_preset(const std::string& name);

// Writes n_benign + n_malicious small, well-formed PDFs plus manifest.csv
// into out_dir and returns the manifest. Malicious files embed their
// family's motif in one extra object at a seeded position; benign files
// contain no motif. Deterministic: the same spec yields byte-identical
// output. Family sample counts follow largest-remainder allocation of the
// prevalences; first_seen dates run monotonically across date_range under
// vendor column "truth".
DatasetManifest generate_synth_corpus(const SynthCorpusSpec& spec,
                                      const std::filesystem::path& out_dir);

// Independent well-formedness check used to validate generated corpora:
// %PDF- header, %%EOF trailer, and an xref table whose in-use entries point
// at matching "N G obj" headers. Returns an empty string when the bytes
// pass, else a description of the first problem.
std::string pdf_problems(std::span<const std::uint8_t> bytes);

}  // namespace pdfscan
