#pragma once

#include <array>
#include <string>
#include <vector>

#include "pdfscan/dataset.hpp"
#include "pdfscan/model.hpp"

namespace pdfscan::cluster {

// Row per sample, column per pooled feature (128 for the B architecture).
using FeatureMatrix = std::vector<std::vector<double>>;

// Global-max-pool activations of one trained B-architecture network over a
// dataset. Throws ValidationError for any other architecture.
FeatureMatrix extract_features(const models::Network& net,
                               const data::Dataset& ds, int threads = 0);

// Distance to the k-th nearest other point (Euclidean); k is clamped to
// n - 1 when fewer other points exist.
std::vector<double> core_distances(const FeatureMatrix& X, int k);

struct Edge {
  int a = 0;  // a < b
  int b = 0;
  double w = 0.0;
};

// Minimum spanning tree of the complete mutual-reachability graph, where
// mr(i, j) = max(core_i, core_j, dist(i, j)) with core distances at k.
// Edges come back sorted by (weight, a, b).
std::vector<Edge> mutual_reachability_mst(const FeatureMatrix& X, int k);

struct ClusterResult {
  std::vector<int> labels;  // cluster id 0..n_clusters-1, or -1 for noise
  int n_clusters = 0;
};

// Density-based hierarchical clustering: single-linkage over the
// mutual-reachability MST, condensed at min_cluster_size, clusters chosen
// by excess-of-mass stability; points outside every chosen cluster are
// noise. min_cluster_size doubles as the core-distance k. Fewer than
// min_cluster_size points is not an error: everything is noise.
ClusterResult hdbscan(const FeatureMatrix& X, int min_cluster_size);

// Family-label sentinel for samples a vendor does not flag.
inline constexpr const char* kUndetected = "undetected";

struct ClusterStats {
  int cluster = 0;
  std::size_t size = 0;      // all members, detected or not
  std::size_t detected = 0;  // members with a family label
  double detection = 0.0;    // detected / size
  std::string dominant_family;  // empty when nothing is detected
  // Fraction of detected members carrying the most common family; NaN when
  // the cluster has no detected member.
  double homogeneity = 0.0;
  // Dominant-family occurrences here over its occurrences across all
  // clusters (noise excluded unless include_noise_in_denominator); NaN
  // when the cluster has no detected member.
  double completeness = 0.0;
};

// One row per cluster id, ascending; noise points contribute nothing
// except (optionally) to completeness denominators. families[i] is the
// vendor's family string for sample i, or kUndetected. Dominant-family
// ties break lexicographically.
std::vector<ClusterStats> cluster_stats(const std::vector<int>& labels,
                                        const std::vector<std::string>& families,
                                        bool include_noise_in_denominator = false);

// Mean homogeneity over clusters where it is defined; NaN if none.
double mean_homogeneity(const std::vector<ClusterStats>& stats);

// PCA onto the top two principal axes of the mean-centered matrix. Signs
// fixed so each component's largest-magnitude loading is positive;
// zero-variance directions give exactly-zero output columns. Requires
// n >= 2.
std::vector<std::array<double, 2>> project_2d(const FeatureMatrix& X);

}  // namespace pdfscan::cluster
