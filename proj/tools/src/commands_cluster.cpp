#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "commands.hpp"
#include "pdfscan/checkpoint.hpp"
#include "pdfscan/cluster.hpp"
#include "pdfscan/csv.hpp"
#include "pdfscan/dataset.hpp"
#include "pdfscan/errors.hpp"
#include "pdfscan/manifest.hpp"
#include "pdfscan/model.hpp"
#include "pdfscan/parallel.hpp"
#include "svg.hpp"
#include "textfmt.hpp"

namespace pdfscan::tools {
namespace {

namespace fs = std::filesystem;

// One forward pass per sample gives both the pooled feature vector (input
// to the clustering) and the detector score (report column).
struct Features {
  cluster::FeatureMatrix X;
  std::vector<double> scores;
};

Features evaluate_all(const models::Network& net, const data::Dataset& ds,
                      int threads) {
  Features out;
  out.X.resize(ds.size());
  out.scores.resize(ds.size());
  const int n_threads = threads > 0 ? threads : default_thread_count();
  parallel_for(ds.size(), n_threads, [&](std::size_t i) {
    auto ev = net.evaluate(ds.samples[i].view());
    out.X[i] = std::move(ev.features);
    out.scores[i] = ev.score;
  });
  return out;
}

std::vector<std::string> vendor_families(const data::Dataset& ds,
                                         const std::string& vendor) {
  std::vector<std::string> families;
  families.reserve(ds.size());
  for (const auto& s : ds.samples) {
    const auto it = s.families.find(vendor);
    families.push_back(it == s.families.end() ? cluster::kUndetected
                                              : it->second);
  }
  return families;
}

std::string cluster_name(int label) {
  return label < 0 ? "noise" : std::to_string(label);
}

void write_scatter(const fs::path& path,
                   const std::vector<std::array<double, 2>>& points,
                   const std::vector<int>& labels, int n_clusters) {
  SvgPlot plot(640, 480, "clusters (2-component projection)", "component 1",
               "component 2");
  double x0 = points[0][0], x1 = x0, y0 = points[0][1], y1 = y0;
  for (const auto& p : points) {
    x0 = std::min(x0, p[0]);
    x1 = std::max(x1, p[0]);
    y0 = std::min(y0, p[1]);
    y1 = std::max(y1, p[1]);
  }
  const double pad_x = 0.05 * (x1 - x0 + 1e-12);
  const double pad_y = 0.05 * (y1 - y0 + 1e-12);
  plot.set_range(x0 - pad_x, x1 + pad_x, y0 - pad_y, y1 + pad_y);
  // One series per cluster id so the legend names them; noise drawn first
  // (gray) so clusters sit on top.
  std::vector<std::pair<double, double>> group;
  for (int c = -1; c < n_clusters; ++c) {
    group.clear();
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (labels[i] == c) group.push_back({points[i][0], points[i][1]});
    }
    if (group.empty()) continue;
    const std::string color =
        c < 0 ? "#999999"
              : plot_palette()[static_cast<std::size_t>(c) % plot_palette().size()];
    plot.scatter(group, color,
                 c < 0 ? std::string("noise") : "cluster " + cluster_name(c));
  }
  plot.write(path.string());
}

}  // namespace

int run_cluster(const ClusterArgs& args) {
  try {
    args.cfg.validate();
    if (args.cfg.manifest.empty()) {
      throw ValidationError("a manifest is required (--manifest or config)");
    }
    if (args.checkpoint.empty()) {
      throw ValidationError("--checkpoint is required");
    }
    if (args.split != "all") split_from_string(args.split);
  } catch (const Error& e) {
    std::fprintf(stderr, "pdfscan cluster: %s\n", e.what());
    return 2;
  }
  try {
    const RunConfig& cfg = args.cfg;
    const models::ModelCheckpoint ckpt = models::load_checkpoint(args.checkpoint);
    if (ckpt.config.arch != models::ArchitectureId::B) {
      throw ValidationError(
          "clustering features come from the B architecture; " +
          args.checkpoint + " holds architecture " +
          std::string(1, models::arch_letter(ckpt.config.arch)));
    }
    const models::Network net(ckpt);

    const DatasetManifest manifest = read_manifest(cfg.manifest);
    const std::string base = data::manifest_dir(cfg.manifest);
    if (args.split != "all" && !manifest.has_splits()) {
      throw ValidationError("manifest has no split column; use --split all");
    }
    const bool all = args.split == "all";
    const Split wanted = all ? Split::test : split_from_string(args.split);
    const data::Dataset ds = data::load_entries(
        manifest, base, [&](const ManifestEntry& e) {
          return e.label == Label::malicious && (all || e.split == wanted);
        });
    if (ds.empty()) {
      throw ValidationError("no malicious samples in split '" + args.split +
                            "'");
    }

    const Features feats = evaluate_all(net, ds, cfg.threads);
    const cluster::ClusterResult result =
        cluster::hdbscan(feats.X, cfg.min_cluster_size);
    std::size_t noise = 0;
    for (int l : result.labels) noise += l < 0;
    std::fprintf(stderr, "%zu samples -> %d clusters, %zu noise\n", ds.size(),
                 result.n_clusters, noise);

    fs::create_directories(cfg.out);
    const std::vector<std::string> vendors = manifest.vendors();

    std::vector<std::vector<std::string>> report;
    report.push_back({"sample_id", "cluster", "score", "vendor", "family"});
    for (std::size_t i = 0; i < ds.size(); ++i) {
      for (const auto& vendor : vendors) {
        const auto it = ds.samples[i].families.find(vendor);
        report.push_back({ds.samples[i].id, cluster_name(result.labels[i]),
                          fmt_g(feats.scores[i]), vendor,
                          it == ds.samples[i].families.end()
                              ? cluster::kUndetected
                              : it->second});
      }
    }
    csv::write_file(fs::path(cfg.out) / "report.csv", report);

    std::vector<std::vector<std::string>> metrics_rows;
    metrics_rows.push_back(
        {"cluster", "vendor", "homogeneity", "completeness", "detection", "size"});
    for (const auto& vendor : vendors) {
      const auto stats =
          cluster::cluster_stats(result.labels, vendor_families(ds, vendor));
      for (const auto& s : stats) {
        metrics_rows.push_back({std::to_string(s.cluster), vendor,
                                fmt_g(s.homogeneity), fmt_g(s.completeness),
                                fmt_g(s.detection), fmt_size(s.size)});
      }
      std::fprintf(stderr, "vendor %s: mean homogeneity %s\n", vendor.c_str(),
                   fmt_g(cluster::mean_homogeneity(stats)).c_str());
    }
    csv::write_file(fs::path(cfg.out) / "metrics.csv", metrics_rows);

    if (ds.size() >= 2) {
      const auto points = cluster::project_2d(feats.X);
      std::vector<std::vector<std::string>> proj;
      proj.push_back({"sample_id", "x", "y", "cluster"});
      for (std::size_t i = 0; i < ds.size(); ++i) {
        proj.push_back({ds.samples[i].id, fmt_g(points[i][0]),
                        fmt_g(points[i][1]), cluster_name(result.labels[i])});
      }
      csv::write_file(fs::path(cfg.out) / "projection.csv", proj);
      write_scatter(fs::path(cfg.out) / "clusters.svg", points, result.labels,
                    result.n_clusters);
    }
    std::fprintf(stderr, "wrote report.csv, metrics.csv, projection.csv, "
                         "clusters.svg under %s\n",
                 cfg.out.c_str());
    return 0;
  } catch (const Error& e) {
    std::fprintf(stderr, "pdfscan cluster: %s\n", e.what());
    return 5;
  }
}

}  // namespace pdfscan::tools
