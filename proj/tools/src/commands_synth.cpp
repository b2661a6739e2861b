#include <cstdio>
#include <string>
#include <vector>

#include "commands.hpp"
#include "pdfscan/errors.hpp"
#include "pdfscan/synth.hpp"

namespace pdfscan::tools {
namespace {

std::vector<std::string> split_colon(const std::string& text) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(':', start);
    if (pos == std::string::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

double parse_fraction(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw ValidationError("bad " + what + " in family spec: '" + text + "'");
}

SynthFamily parse_family_spec(const std::string& spec) {
  const auto parts = split_colon(spec);
  if (parts.size() != 2 && parts.size() != 4) {
    throw ValidationError(
        "family spec must be name:prevalence or "
        "name:prevalence:window_start:window_end, got: '" +
        spec + "'");
  }
  SynthFamily f = family_preset(parts[0]);
  f.prevalence = parse_fraction(parts[1], "prevalence");
  if (parts.size() == 4) {
    f.window_start = parse_fraction(parts[2], "window start");
    f.window_end = parse_fraction(parts[3], "window end");
  }
  return f;
}

// Three-family mix with staggered date windows, so the family composition
// shifts over the corpus timeline (later splits see different proportions
// than training).
std::vector<SynthFamily> default_family_mix() {
  return {parse_family_spec("jsheap:0.4:0:0.75"),
          parse_family_spec("cmdlaunch:0.35:0.15:0.85"),
          parse_family_spec("urifetch:0.25:0.35:1")};
}

}  // namespace

int run_synth(const SynthArgs& args) {
  try {
    if (args.out.empty()) throw ValidationError("--out is required");
    if (args.n_benign < 0 || args.n_malicious < 0) {
      throw ValidationError("file counts must be non-negative");
    }
    SynthCorpusSpec spec;
    spec.n_benign = static_cast<std::size_t>(args.n_benign);
    spec.n_malicious = static_cast<std::size_t>(args.n_malicious);
    spec.date_start = Date::parse(args.date_start);
    spec.date_end = Date::parse(args.date_end);
    spec.seed = args.seed;
    spec.min_words = args.min_words;
    spec.max_words = args.max_words;
    if (args.families.empty()) {
      spec.families = default_family_mix();
    } else {
      for (const auto& text : args.families) {
        spec.families.push_back(parse_family_spec(text));
      }
    }
    const DatasetManifest manifest = generate_synth_corpus(spec, args.out);
    std::fprintf(stderr,
                 "wrote %zu files (%zu benign, %zu malicious) and manifest.csv "
                 "under %s\n",
                 manifest.entries.size(), manifest.count(Label::benign),
                 manifest.count(Label::malicious), args.out.c_str());
    return 0;
  } catch (const Error& e) {
    std::fprintf(stderr, "pdfscan synth: %s\n", e.what());
    return 2;
  }
}

}  // namespace pdfscan::tools
