#include "pdfscan/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "pdfscan/bytes.hpp"
#include "pdfscan/errors.hpp"
#include "pdfscan/rng.hpp"

namespace pdfscan {

namespace {

std::vector<std::uint8_t> motif_bytes(const char* text) {
  const std::string s(text);
  return {s.begin(), s.end()};
}

// Content words for benign text streams; plain alnum so PDF string literals
// need no escaping.
constexpr const char* kWords[] = {
    "report",  "quarter", "summary", "invoice", "total",    "balance",
    "account", "client",  "project", "status",  "review",   "draft",
    "final",   "notes",   "meeting", "agenda",  "budget",   "revenue",
    "margin",  "growth",  "market",  "region",  "office",   "team",
    "update",  "plan",    "target",  "result",  "metric",   "index",
    "annual",  "monthly", "weekly",  "daily",   "pending",  "approved",
    "signed",  "copy",    "archive", "record",  "entry",    "ledger",
    "payment", "receipt", "order",   "shipment", "delivery", "contract",
    "terms",   "policy",  "section", "chapter", "appendix", "figure",
    "table",   "source",  "detail",  "overview", "analysis", "forecast",
};
constexpr std::size_t kWordCount = sizeof(kWords) / sizeof(kWords[0]);

std::string random_words(Rng& rng, int count) {
  std::string out;
  for (int i = 0; i < count; ++i) {
    if (i) out.push_back(' ');
    out += kWords[rng.below(kWordCount)];
  }
  return out;
}

// Accumulates a PDF file: body objects in any emission order, then an xref
// table whose entries are sorted by object number, then the trailer.
struct PdfBuilder {
  std::string buf;
  std::vector<std::pair<int, std::size_t>> offsets;  // object number, offset

  PdfBuilder() { buf = "%PDF-1.4\n%\xc7\xec\x8f\xa2\n"; }

  void object(int num, const std::string& body) {
    offsets.emplace_back(num, buf.size());
    buf += std::to_string(num);
    buf += " 0 obj\n";
    buf += body;
    buf += "\nendobj\n";
  }

  std::vector<std::uint8_t> finish() {
    std::sort(offsets.begin(), offsets.end());
    const int size = offsets.back().first + 1;
    const std::size_t xref_off = buf.size();
    buf += "xref\n0 " + std::to_string(size) + "\n";
    buf += "0000000000 65535 f \n";
    char line[32];
    for (const auto& [num, off] : offsets) {
      std::snprintf(line, sizeof line, "%010zu 00000 n \n", off);
      buf += line;
    }
    buf += "trailer\n<< /Size " + std::to_string(size) + " /Root 1 0 R >>\n";
    buf += "startxref\n" + std::to_string(xref_off) + "\n%%EOF\n";
    return {buf.begin(), buf.end()};
  }
};

std::string extra_object_body(Rng& rng) {
  switch (rng.below(3)) {
    case 0:
      return "<< /Title (" + random_words(rng, 2) +
             ") /Producer (wordproc 3.1) >>";
    case 1: {
      const int y = 640 + static_cast<int>(rng.below(80));
      return "<< /Type /Annot /Subtype /Link /Rect [72 " + std::to_string(y) +
             " 210 " + std::to_string(y + 14) + "] /Border [0 0 0] >>";
    }
    default:
      return "<< /Creator (notepad 5.2) /Keywords (" + random_words(rng, 3) +
             ") >>";
  }
}

// One file. A malicious file is the benign scaffold plus exactly one extra
// object carrying the family motif, emitted at a seeded position so byte
// offset carries no label signal.
std::vector<std::uint8_t> build_pdf(Rng& rng, int min_words, int max_words,
                                    const std::vector<std::uint8_t>* motif) {
  const int words =
      min_words + static_cast<int>(rng.below(
                      static_cast<std::uint64_t>(max_words - min_words + 1)));
  const std::string text = random_words(rng, words);
  const std::string stream_body = "BT /F1 11 Tf 72 720 Td (" + text + ") Tj ET";

  std::vector<std::pair<int, std::string>> objects;
  objects.emplace_back(1, "<< /Type /Catalog /Pages 2 0 R >>");
  objects.emplace_back(2, "<< /Type /Pages /Kids [3 0 R] /Count 1 >>");
  objects.emplace_back(
      3,
      "<< /Type /Page /Parent 2 0 R /MediaBox [0 0 612 792] /Resources << "
      "/Font << /F1 5 0 R >> >> /Contents 4 0 R >>");
  objects.emplace_back(4, "<< /Length " + std::to_string(stream_body.size()) +
                              " >>\nstream\n" + stream_body + "\nendstream");
  objects.emplace_back(5,
                       "<< /Type /Font /Subtype /Type1 /BaseFont /Helvetica >>");

  // Benign files carry 0-3 filler objects and malicious ones 0-2 plus the
  // motif object, so total object counts overlap across labels and the
  // xref/trailer wrapper stays label-neutral.
  const std::uint64_t n_extras = rng.below(motif ? 3 : 4);
  int next_num = 6;
  for (std::uint64_t i = 0; i < n_extras; ++i) {
    objects.emplace_back(next_num++, extra_object_body(rng));
  }
  if (motif) {
    const std::string body = "<< " + std::string(motif->begin(), motif->end()) +
                             " >>";
    const std::size_t slot = rng.below(objects.size() + 1);
    objects.insert(objects.begin() + static_cast<std::ptrdiff_t>(slot),
                   {next_num++, body});
  }

  PdfBuilder pdf;
  for (const auto& [num, body] : objects) pdf.object(num, body);
  return pdf.finish();
}

std::vector<std::size_t> family_counts(const SynthCorpusSpec& spec) {
  const std::size_t n = spec.n_malicious;
  std::vector<std::size_t> counts(spec.families.size(), 0);
  std::vector<double> remainders(spec.families.size(), 0.0);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < spec.families.size(); ++i) {
    const double exact = spec.families[i].prevalence * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(exact);
    remainders[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::vector<std::size_t> order(counts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return remainders[a] > remainders[b];
                   });
  for (std::size_t i = 0; assigned < n; ++i) {
    ++counts[order[i % order.size()]];
    ++assigned;
  }
  return counts;
}

}  // namespace

void SynthCorpusSpec::validate() const {
  if (n_malicious > 0 && families.empty()) {
    throw ValidationError("malicious samples requested but no families given");
  }
  double total = 0.0;
  std::set<std::string> names;
  for (const auto& f : families) {
    if (f.name.empty()) throw ValidationError("family with empty name");
    if (!names.insert(f.name).second) {
      throw ValidationError("duplicate family name: " + f.name);
    }
    if (f.motif.empty()) {
      throw ValidationError("family with empty motif: " + f.name);
    }
    if (f.prevalence < 0.0) {
      throw ValidationError("negative prevalence for family: " + f.name);
    }
    if (!(0.0 <= f.window_start && f.window_start < f.window_end &&
          f.window_end <= 1.0)) {
      throw ValidationError("bad date window for family: " + f.name);
    }
    total += f.prevalence;
  }
  if (!families.empty() && std::abs(total - 1.0) > 1e-9) {
    throw ValidationError("family prevalences must sum to 1");
  }
  if (date_end < date_start) {
    throw ValidationError("date_end precedes date_start");
  }
  if (min_words < 1 || max_words < min_words) {
    throw ValidationError("bad word-count range");
  }
}

const std::vector<SynthFamily>& family_presets() {
  static const std::vector<SynthFamily> presets = {
      {"jsheap",
       motif_bytes("/Type /Action /S /JavaScript /JS (var hp=unescape('"
                   "%u0c0c%u0c0c');while(hp.length<65536){hp+=hp;}ldr(hp);)"),
       0.0, 0.0, 1.0},
      {"cmdlaunch",
       motif_bytes("/Type /Action /S /Launch /Win << /F (cmd.exe) /P "
                   "(/c start updsvc32.scr) >>"),
       0.0, 0.0, 1.0},
      {"urifetch",
       motif_bytes("/Type /Action /S /URI /URI (http://cdn-upd.example.net/"
                   "fetch?sid=77412&mode=pdf)"),
       0.0, 0.0, 1.0},
      {"filedrop",
       motif_bytes("/Type /Filespec /Subtype /application#2Foctet-stream "
                   "/UF (invc_0332.bin) /Desc (bundled payload pkg)"),
       0.0, 0.0, 1.0},
  };
  return presets;
}

SynthFamily family_preset(const std::string& name) {
  for (const auto& f : family_presets()) {
    if (f.name == name) return f;
  }
  throw ValidationError("unknown family preset: " + name);
}

DatasetManifest generate_synth_corpus(const SynthCorpusSpec& spec,
                                      const std::filesystem::path& out_dir) {
  spec.validate();
  std::filesystem::create_directories(out_dir);

  DatasetManifest manifest;
  char name[32];

  for (std::size_t i = 0; i < spec.n_benign; ++i) {
    Rng rng(derive_seed(spec.seed, 10, i));  // stream 10: benign files
    const auto bytes = build_pdf(rng, spec.min_words, spec.max_words, nullptr);
    std::snprintf(name, sizeof name, "ben_%05zu.pdf", i);
    write_file_bytes(out_dir / name, bytes);
    ManifestEntry e;
    e.path = name;
    e.label = Label::benign;
    manifest.entries.push_back(std::move(e));
  }

  // Each family's samples get dates evenly spread over its window; sorting
  // by date makes first_seen monotone down the manifest while the family
  // mix shifts across the range.
  struct Job {
    std::int64_t date_serial;
    std::size_t family;
  };
  std::vector<Job> jobs;
  const auto counts = family_counts(spec);
  const double span =
      static_cast<double>(spec.date_end.serial() - spec.date_start.serial());
  for (std::size_t f = 0; f < spec.families.size(); ++f) {
    const auto& fam = spec.families[f];
    for (std::size_t k = 0; k < counts[f]; ++k) {
      const double tau = fam.window_start +
                         (static_cast<double>(k) + 0.5) *
                             (fam.window_end - fam.window_start) /
                             static_cast<double>(counts[f]);
      jobs.push_back({spec.date_start.serial() +
                          static_cast<std::int64_t>(std::llround(tau * span)),
                      f});
    }
  }
  std::stable_sort(jobs.begin(), jobs.end(), [](const Job& a, const Job& b) {
    return a.date_serial < b.date_serial;
  });

  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& fam = spec.families[jobs[i].family];
    Rng rng(derive_seed(spec.seed, 11, i));  // stream 11: malicious files
    const auto bytes =
        build_pdf(rng, spec.min_words, spec.max_words, &fam.motif);
    std::snprintf(name, sizeof name, "mal_%05zu.pdf", i);
    write_file_bytes(out_dir / name, bytes);
    ManifestEntry e;
    e.path = name;
    e.label = Label::malicious;
    e.first_seen = Date::from_serial(jobs[i].date_serial);
    e.families["truth"] = fam.name;
    manifest.entries.push_back(std::move(e));
  }

  write_manifest(manifest, out_dir / "manifest.csv");
  return manifest;
}

namespace {

bool is_pdf_ws(std::uint8_t c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' ||
         c == 0;
}

std::size_t skip_ws(std::span<const std::uint8_t> b, std::size_t i) {
  while (i < b.size() && is_pdf_ws(b[i])) ++i;
  return i;
}

// Parses a non-negative decimal integer; returns npos-style failure via ok.
std::size_t parse_uint(std::span<const std::uint8_t> b, std::size_t i,
                       std::uint64_t& value, bool& ok) {
  ok = false;
  value = 0;
  std::size_t start = i;
  while (i < b.size() && b[i] >= '0' && b[i] <= '9') {
    value = value * 10 + (b[i] - '0');
    ++i;
  }
  ok = i > start;
  return i;
}

bool match_at(std::span<const std::uint8_t> b, std::size_t i,
              std::string_view token) {
  if (i + token.size() > b.size()) return false;
  return std::equal(token.begin(), token.end(), b.begin() + i);
}

}  // namespace

std::string pdf_problems(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 5 || !match_at(bytes, 0, "%PDF-")) {
    return "missing %PDF- header";
  }
  std::size_t end = bytes.size();
  while (end > 0 && is_pdf_ws(bytes[end - 1])) --end;
  if (end < 5 || !match_at(bytes, end - 5, "%%EOF")) {
    return "missing %%EOF trailer";
  }

  // Locate the last startxref and the offset it announces.
  const std::string_view key = "startxref";
  std::size_t sx = std::string::npos;
  if (bytes.size() >= key.size()) {
    for (std::size_t i = bytes.size() - key.size() + 1; i-- > 0;) {
      if (match_at(bytes, i, key)) {
        sx = i;
        break;
      }
    }
  }
  if (sx == std::string::npos) return "missing startxref";
  bool ok = false;
  std::uint64_t xref_off = 0;
  parse_uint(bytes, skip_ws(bytes, sx + key.size()), xref_off, ok);
  if (!ok || xref_off >= bytes.size()) return "bad startxref offset";

  std::size_t i = skip_ws(bytes, static_cast<std::size_t>(xref_off));
  if (!match_at(bytes, i, "xref")) return "startxref does not point at xref";
  i = skip_ws(bytes, i + 4);
  std::uint64_t first = 0, count = 0;
  i = parse_uint(bytes, i, first, ok);
  if (!ok) return "bad xref subsection start";
  i = parse_uint(bytes, skip_ws(bytes, i), count, ok);
  if (!ok) return "bad xref subsection count";
  i = skip_ws(bytes, i);

  for (std::uint64_t k = 0; k < count; ++k) {
    std::uint64_t off = 0, gen = 0;
    i = parse_uint(bytes, i, off, ok);
    if (!ok) return "bad xref entry offset";
    i = parse_uint(bytes, skip_ws(bytes, i), gen, ok);
    if (!ok) return "bad xref entry generation";
    i = skip_ws(bytes, i);
    if (i >= bytes.size() || (bytes[i] != 'n' && bytes[i] != 'f')) {
      return "bad xref entry type";
    }
    const bool in_use = bytes[i] == 'n';
    i = skip_ws(bytes, i + 1);
    const std::uint64_t objnum = first + k;
    if (!in_use || objnum == 0) continue;
    if (off >= bytes.size()) return "xref offset out of range";
    std::size_t p = skip_ws(bytes, static_cast<std::size_t>(off));
    std::uint64_t seen_num = 0, seen_gen = 0;
    p = parse_uint(bytes, p, seen_num, ok);
    if (!ok || seen_num != objnum) {
      return "object " + std::to_string(objnum) +
             " not found at its xref offset";
    }
    p = parse_uint(bytes, skip_ws(bytes, p), seen_gen, ok);
    if (!ok || seen_gen != gen) {
      return "object " + std::to_string(objnum) + " generation mismatch";
    }
    p = skip_ws(bytes, p);
    if (!match_at(bytes, p, "obj")) {
      return "object " + std::to_string(objnum) + " missing obj keyword";
    }
  }
  return "";
}

}  // namespace pdfscan
