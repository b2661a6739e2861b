#include <array>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "commands.hpp"
#include "pdfscan/bytes.hpp"
#include "pdfscan/csv.hpp"
#include "pdfscan/dataset.hpp"
#include "pdfscan/errors.hpp"
#include "pdfscan/manifest.hpp"
#include "pdfscan/metrics.hpp"
#include "pdfscan/synth.hpp"
#include "scoresource.hpp"
#include "svg.hpp"
#include "textfmt.hpp"

namespace pdfscan::tools {
namespace {

namespace fs = std::filesystem;

int validate_corpus(const RunConfig& cfg) {
  const DatasetManifest manifest = read_manifest(cfg.manifest);
  const std::string base = data::manifest_dir(cfg.manifest);
  std::size_t bad = 0;
  for (const auto& entry : manifest.entries) {
    const fs::path p(entry.path);
    const fs::path resolved = p.is_absolute() ? p : fs::path(base) / p;
    const auto bytes = read_file_bytes(resolved);
    const std::string problem = pdf_problems(bytes);
    if (!problem.empty()) {
      ++bad;
      std::printf("%s: %s\n", entry.path.c_str(), problem.c_str());
    }
  }
  std::fprintf(stderr, "checked %zu files: %zu malformed\n",
               manifest.entries.size(), bad);
  return bad == 0 ? 0 : 4;
}

bool has_both_classes(const std::vector<metrics::ScoredSample>& samples) {
  bool mal = false, ben = false;
  for (const auto& s : samples) (s.malicious ? mal : ben) = true;
  return mal && ben;
}

void write_scores_csv(const fs::path& path, const data::Dataset& ds,
                      const std::vector<metrics::ScoredSample>& scored) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"sample_id", "score", "label"});
  for (std::size_t i = 0; i < ds.size(); ++i) {
    rows.push_back({ds.samples[i].id, fmt_g(scored[i].score),
                    to_string(ds.samples[i].malicious ? Label::malicious
                                                      : Label::benign)});
  }
  csv::write_file(path, rows);
}

void write_roc_csv(const fs::path& path, const metrics::RocCurve& curve) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"threshold", "fpr", "detection"});
  for (const auto& p : curve.points) {
    rows.push_back({fmt_g(p.threshold), fmt_g(p.fpr), fmt_g(p.tpr)});
  }
  csv::write_file(path, rows);
}

}  // namespace

int run_eval(const EvalArgs& args) {
  try {
    args.cfg.validate();
    if (args.cfg.manifest.empty()) {
      throw ValidationError("a manifest is required (--manifest or config)");
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "pdfscan eval: %s\n", e.what());
    return 2;
  }
  try {
    if (args.validate_corpus) return validate_corpus(args.cfg);

    const RunConfig& cfg = args.cfg;
    const DatasetManifest manifest = read_manifest(cfg.manifest);
    if (!manifest.has_splits()) {
      throw ValidationError(
          "manifest has no split column; evaluate a trained run's "
          "split_manifest.csv or add splits");
    }
    const std::string base = data::manifest_dir(cfg.manifest);
    const std::string model_path =
        args.model.empty() ? (fs::path(cfg.out) / "ensemble.json").string()
                           : args.model;
    const ScoreSource src = load_score_source(model_path);
    std::fprintf(stderr, "scoring with %s\n", src.description.c_str());
    fs::create_directories(cfg.out);

    const std::array<Split, 3> splits{Split::train, Split::val, Split::test};
    std::vector<std::vector<metrics::ScoredSample>> scored(splits.size());
    std::vector<std::vector<std::string>> report;
    report.push_back({"set", "metric", "value"});
    SvgPlot plot(640, 480, "ROC", "false positive rate", "detection rate");
    plot.set_range(0.0, 1.0, 0.0, 1.0);

    for (std::size_t i = 0; i < splits.size(); ++i) {
      const Split split = splits[i];
      const std::string name = to_string(split);
      const data::Dataset ds = data::load_split(manifest, base, split);
      scored[i] = score_all(src, ds, cfg.threads);
      write_scores_csv(fs::path(cfg.out) / ("scores_" + name + ".csv"), ds,
                       scored[i]);
      report.push_back({name, "n_benign", fmt_size(ds.count(Label::benign))});
      report.push_back(
          {name, "n_malicious", fmt_size(ds.count(Label::malicious))});
      if (has_both_classes(scored[i])) {
        const metrics::RocCurve curve = metrics::roc(scored[i]);
        write_roc_csv(fs::path(cfg.out) / ("roc_" + name + ".csv"), curve);
        report.push_back({name, "auc", fmt_g(metrics::auc(curve))});
        std::vector<std::pair<double, double>> line;
        line.reserve(curve.points.size());
        for (const auto& p : curve.points) line.push_back({p.fpr, p.tpr});
        plot.polyline(line, plot_palette()[i], name);
      }
    }

    // Budget rows follow the transfer protocol: the threshold meeting the
    // budget is chosen on the validation split and applied, frozen, to the
    // test split.
    const auto& val = scored[1];
    const auto& test = scored[2];
    for (double budget : cfg.fpr_budgets) {
      const std::string tag = fmt_g(budget);
      if (!has_both_classes(val)) continue;
      const metrics::OperatingPoint on_val =
          metrics::detection_at_fpr(val, budget);
      report.push_back(
          {"val", "threshold_at_fpr_" + tag, fmt_g(on_val.threshold)});
      report.push_back(
          {"val", "detection_at_fpr_" + tag, fmt_g(on_val.detection)});
      report.push_back({"val", "achieved_fpr_" + tag, fmt_g(on_val.fpr)});
      if (!test.empty()) {
        const metrics::OperatingPoint on_test =
            metrics::apply_threshold(test, on_val.threshold);
        report.push_back(
            {"test", "detection_at_fpr_" + tag, fmt_g(on_test.detection)});
        report.push_back(
            {"test", "achieved_fpr_" + tag, fmt_g(on_test.fpr)});
        std::fprintf(stderr, "test detection at fpr<=%s: %s (threshold %s)\n",
                     tag.c_str(), fmt_g(on_test.detection).c_str(),
                     fmt_g(on_val.threshold).c_str());
      }
    }
    csv::write_file(fs::path(cfg.out) / "report.csv", report);
    plot.write((fs::path(cfg.out) / "roc.svg").string());
    std::fprintf(stderr, "wrote report.csv, roc.svg and per-split CSVs under %s\n",
                 cfg.out.c_str());
    return 0;
  } catch (const Error& e) {
    std::fprintf(stderr, "pdfscan eval: %s\n", e.what());
    return 4;
  }
}

}  // namespace pdfscan::tools
