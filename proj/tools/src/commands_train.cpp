#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "commands.hpp"
#include "pdfscan/baseline.hpp"
#include "pdfscan/bytes.hpp"
#include "pdfscan/checkpoint.hpp"
#include "pdfscan/csv.hpp"
#include "pdfscan/dataset.hpp"
#include "pdfscan/errors.hpp"
#include "pdfscan/manifest.hpp"
#include "pdfscan/training.hpp"
#include "textfmt.hpp"

#if defined(PDFSCAN_SYSTEM_JSON)
#include <nlohmann/json.hpp>
#else
#include "json.hpp"
#endif

namespace pdfscan::tools {
namespace {

namespace fs = std::filesystem;

struct SplitData {
  DatasetManifest manifest;
  data::Dataset train;
  data::Dataset val;
};

// Reads the manifest and ensures split assignments exist: explicit cutoffs
// re-split chronologically (and the derived manifest is saved so eval and
// cluster runs see the same assignment), otherwise the manifest must
// already carry splits.
SplitData prepare_splits(const RunConfig& cfg) {
  SplitData out;
  out.manifest = read_manifest(cfg.manifest);
  const std::string base = data::manifest_dir(cfg.manifest);
  if (cfg.val_cutoff || cfg.test_cutoff) {
    if (!cfg.val_cutoff || !cfg.test_cutoff) {
      throw ValidationError("val_cutoff and test_cutoff must be set together");
    }
    out.manifest = chronological_split(out.manifest, *cfg.val_cutoff,
                                       *cfg.test_cutoff, cfg.seed);
    // The saved copy lives under the run directory, so its entries must
    // point back at the corpus from there.
    DatasetManifest saved = out.manifest;
    for (auto& entry : saved.entries) {
      const fs::path p(entry.path);
      const fs::path resolved = p.is_absolute() ? p : fs::path(base) / p;
      const fs::path rel = fs::proximate(resolved, cfg.out);
      entry.path = rel.empty() ? resolved.string() : rel.string();
    }
    write_manifest(saved, fs::path(cfg.out) / "split_manifest.csv");
  } else if (!out.manifest.has_splits()) {
    throw ValidationError(
        "manifest has no split column; set val_cutoff and test_cutoff");
  }
  for (Split s : {Split::train, Split::val, Split::test}) {
    std::fprintf(stderr, "%s: %zu benign, %zu malicious\n",
                 to_string(s).c_str(), out.manifest.count(Label::benign, s),
                 out.manifest.count(Label::malicious, s));
  }
  out.train = data::load_split(out.manifest, base, Split::train);
  out.val = data::load_split(out.manifest, base, Split::val);
  return out;
}

std::string member_stem(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "member_%02d", index);
  return buf;
}

void write_member_log(const fs::path& path,
                      const std::vector<training::EpochLog>& log) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"epoch", "train_loss", "val_detection_at_1pct", "wall_seconds"});
  for (const auto& e : log) {
    rows.push_back({std::to_string(e.epoch), fmt_g(e.train_loss),
                    fmt_g(e.val_detection), fmt_g(e.wall_seconds)});
  }
  csv::write_file(path, rows);
}

int train_ensemble_cmd(const RunConfig& cfg, const SplitData& data) {
  training::TrainConfig tc;
  tc.model = cfg.model_config();
  tc.epochs = cfg.epochs;
  tc.batch_size = cfg.batch_size;
  tc.learning_rate = cfg.learning_rate;
  tc.weight_positive_class = cfg.weight_positive_class;
  tc.validate();

  int member = 0;
  auto progress = [&](const training::EpochLog& log) {
    if (log.epoch == 1) ++member;
    std::fprintf(stderr,
                 "member %d/%d epoch %d/%d: loss %.6f, val detection@1%%fpr "
                 "%.4f (%.1fs)\n",
                 member, cfg.ensemble_size, log.epoch, tc.epochs, log.train_loss,
                 log.val_detection, log.wall_seconds);
  };
  const training::EnsembleResult result = training::train_ensemble(
      tc, data.train, data.val, cfg.seed, cfg.ensemble_size, progress);

  const fs::path out(cfg.out);
  nlohmann::json members = nlohmann::json::array();
  for (std::size_t i = 0; i < result.members.size(); ++i) {
    const std::string stem = member_stem(static_cast<int>(i));
    models::save_checkpoint(result.members[i], (out / (stem + ".ckpt")).string());
    write_member_log(out / (stem + ".train.csv"), result.logs[i]);
    members.push_back(stem + ".ckpt");
  }
  nlohmann::json descriptor = {
      {"format", "pdfscan ensemble"},
      {"version", 1},
      {"arch", std::string(1, models::arch_letter(tc.model.arch))},
      {"seed", cfg.seed},
      {"members", members},
  };
  write_file_bytes(out / "ensemble.json", [&] {
    const std::string text = descriptor.dump(2) + "\n";
    return std::vector<std::uint8_t>(text.begin(), text.end());
  }());

  for (std::size_t i = 0; i < result.members.size(); ++i) {
    const auto& meta = result.members[i].meta;
    std::fprintf(stderr,
                 "member %zu: selected epoch %d, val detection@1%%fpr %s\n", i,
                 meta.selected_epoch, fmt_g(meta.val_detection_at_1pct).c_str());
  }
  std::fprintf(stderr, "wrote %zu checkpoints and ensemble.json under %s\n",
               result.members.size(), cfg.out.c_str());
  return 0;
}

int train_baseline_cmd(const RunConfig& cfg, const SplitData& data) {
  baseline::ForestParams params;
  params.seed = cfg.seed;
  baseline::BaselineFitReport report;
  const baseline::BaselineModel model =
      baseline::fit_baseline(data.train, data.val, params, /*fpr_target=*/0.01,
                             /*k_grid=*/{}, &report);

  const fs::path out(cfg.out);
  baseline::save_baseline(model, (out / "baseline.ckpt").string());
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"k", "val_detection_at_1pct", "chosen"});
  for (std::size_t i = 0; i < report.grid.size(); ++i) {
    rows.push_back({std::to_string(report.grid[i]),
                    fmt_g(report.val_detection[i]),
                    report.grid[i] == report.chosen_k ? "1" : "0"});
  }
  csv::write_file(out / "baseline_grid.csv", rows);
  std::fprintf(stderr,
               "baseline: kept %zu tags (k=%zu), %zu trees; wrote "
               "baseline.ckpt under %s\n",
               model.vocab.tags.size(), report.chosen_k,
               model.forest.trees.size(), cfg.out.c_str());
  return 0;
}

}  // namespace

int run_train(const TrainArgs& args) {
  try {
    args.cfg.validate();
    if (args.cfg.manifest.empty()) {
      throw ValidationError("a manifest is required (--manifest or config)");
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "pdfscan train: %s\n", e.what());
    return 2;
  }
  try {
    fs::create_directories(args.cfg.out);
    const SplitData data = prepare_splits(args.cfg);
    return args.baseline ? train_baseline_cmd(args.cfg, data)
                         : train_ensemble_cmd(args.cfg, data);
  } catch (const TrainingError& e) {
    std::fprintf(stderr, "pdfscan train: %s\n", e.what());
    return 3;
  } catch (const Error& e) {
    std::fprintf(stderr, "pdfscan train: %s\n", e.what());
    return 2;
  }
}

}  // namespace pdfscan::tools
