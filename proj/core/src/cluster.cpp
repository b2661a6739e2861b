#include "pdfscan/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "pdfscan/errors.hpp"
#include "pdfscan/parallel.hpp"

namespace pdfscan::cluster {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_matrix(const FeatureMatrix& X) {
  if (X.empty()) throw ContractError("empty feature matrix");
  const std::size_t d = X[0].size();
  if (d == 0) throw ContractError("feature matrix needs at least one column");
  for (const auto& row : X) {
    if (row.size() != d) throw ContractError("ragged feature matrix");
    for (double v : row) {
      if (!std::isfinite(v)) {
        throw ContractError("non-finite value in feature matrix");
      }
    }
  }
}

double euclidean(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    s += diff * diff;
  }
  return std::sqrt(s);
}

std::vector<std::vector<double>> distance_matrix(const FeatureMatrix& X) {
  const std::size_t n = X.size();
  std::vector<std::vector<double>> M(n);
  parallel_for(n, default_thread_count(), [&](std::size_t i) {
    M[i].resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      M[i][j] = j == i ? 0.0 : euclidean(X[i], X[j]);
    }
  });
  return M;
}

std::vector<double> core_from_matrix(const std::vector<std::vector<double>>& M,
                                     int k) {
  const std::size_t n = M.size();
  const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k),
                                               n - 1);
  std::vector<double> core(n);
  parallel_for(n, default_thread_count(), [&](std::size_t i) {
    std::vector<double> row = M[i];  // includes the 0 at position i (self)
    std::nth_element(row.begin(), row.begin() + kk, row.end());
    core[i] = row[kk];
  });
  return core;
}

std::vector<Edge> mst_from(const std::vector<std::vector<double>>& M,
                           const std::vector<double>& core) {
  const std::size_t n = M.size();
  std::vector<Edge> edges;
  if (n < 2) return edges;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<char> in_tree(n, 0);
  std::vector<double> best(n, inf);
  std::vector<int> parent(n, 0);
  in_tree[0] = 1;
  for (std::size_t v = 1; v < n; ++v) {
    best[v] = std::max({core[0], core[v], M[0][v]});
  }
  for (std::size_t step = 1; step < n; ++step) {
    std::size_t u = n;
    for (std::size_t v = 0; v < n; ++v) {
      if (!in_tree[v] && (u == n || best[v] < best[u])) u = v;
    }
    in_tree[u] = 1;
    const int a = std::min<int>(parent[u], static_cast<int>(u));
    const int b = std::max<int>(parent[u], static_cast<int>(u));
    edges.push_back({a, b, best[u]});
    for (std::size_t v = 0; v < n; ++v) {
      if (in_tree[v]) continue;
      const double w = std::max({core[u], core[v], M[u][v]});
      if (w < best[v]) {
        best[v] = w;
        parent[v] = static_cast<int>(u);
      }
    }
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
    if (x.w != y.w) return x.w < y.w;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });
  return edges;
}

struct DNode {
  int left = -1;  // -1 marks a leaf
  int right = -1;
  double d = 0.0;  // merge distance
  int size = 1;
};

int uf_find(std::vector<int>& up, int x) {
  while (up[x] != x) {
    up[x] = up[up[x]];
    x = up[x];
  }
  return x;
}

// Single-linkage dendrogram from weight-sorted MST edges; returns the node
// list (leaves 0..n-1 first, merges appended in edge order).
std::vector<DNode> build_dendrogram(std::size_t n,
                                    const std::vector<Edge>& edges) {
  std::vector<DNode> nodes(n);
  std::vector<int> up(n), top(n);
  for (std::size_t i = 0; i < n; ++i) {
    up[i] = static_cast<int>(i);
    top[i] = static_cast<int>(i);
  }
  for (const auto& e : edges) {
    const int ra = uf_find(up, e.a);
    const int rb = uf_find(up, e.b);
    DNode m;
    m.left = top[ra];
    m.right = top[rb];
    m.d = e.w;
    m.size = nodes[static_cast<std::size_t>(m.left)].size +
             nodes[static_cast<std::size_t>(m.right)].size;
    nodes.push_back(m);
    up[rb] = ra;
    top[ra] = static_cast<int>(nodes.size()) - 1;
  }
  return nodes;
}

void collect_leaves(const std::vector<DNode>& dn, int at,
                    std::vector<int>& out) {
  std::vector<int> stack{at};
  while (!stack.empty()) {
    const int node = stack.back();
    stack.pop_back();
    if (dn[static_cast<std::size_t>(node)].left < 0) {
      out.push_back(node);
    } else {
      stack.push_back(dn[static_cast<std::size_t>(node)].left);
      stack.push_back(dn[static_cast<std::size_t>(node)].right);
    }
  }
}

struct CondensedCluster {
  int parent = -1;
  double birth = 0.0;  // lambda at which this cluster appeared
  int birth_size = 0;
  std::vector<int> children;                     // condensed cluster ids
  std::vector<std::pair<int, double>> points;    // (point, exit lambda)
};

}  // namespace

FeatureMatrix extract_features(const models::Network& net,
                               const data::Dataset& ds, int threads) {
  if (net.config().arch != models::ArchitectureId::B) {
    throw ValidationError("feature extraction requires the B architecture");
  }
  FeatureMatrix F(ds.size());
  const int n_threads = threads > 0 ? threads : default_thread_count();
  parallel_for(ds.size(), n_threads, [&](std::size_t i) {
    F[i] = net.features(ds.samples[i].view());
  });
  for (const auto& row : F) {
    for (double v : row) {
      if (!std::isfinite(v)) {
        throw ContractError("non-finite extracted feature");
      }
    }
  }
  return F;
}

std::vector<double> core_distances(const FeatureMatrix& X, int k) {
  check_matrix(X);
  if (k < 1) throw ContractError("core-distance k must be >= 1");
  if (X.size() < 2) return std::vector<double>(X.size(), 0.0);
  return core_from_matrix(distance_matrix(X), k);
}

std::vector<Edge> mutual_reachability_mst(const FeatureMatrix& X, int k) {
  check_matrix(X);
  if (k < 1) throw ContractError("core-distance k must be >= 1");
  const auto M = distance_matrix(X);
  return mst_from(M, core_from_matrix(M, k));
}

ClusterResult hdbscan(const FeatureMatrix& X, int min_cluster_size) {
  check_matrix(X);
  if (min_cluster_size < 2) {
    throw ValidationError("min_cluster_size must be >= 2");
  }
  const std::size_t n = X.size();
  ClusterResult result;
  result.labels.assign(n, -1);
  if (n < static_cast<std::size_t>(min_cluster_size)) {
    return result;  // documented degenerate output: everything is noise
  }

  const auto edges = mutual_reachability_mst(X, min_cluster_size);
  const auto dn = build_dendrogram(n, edges);

  // lambda = 1/distance; zero-distance merges are denser than every
  // finite-distance one, so they get a cap above all other lambdas.
  double min_positive = std::numeric_limits<double>::infinity();
  for (const auto& e : edges) {
    if (e.w > 0.0) min_positive = std::min(min_positive, e.w);
  }
  const double lambda_cap =
      std::isfinite(min_positive) ? 2.0 / min_positive : 1.0;
  const auto lambda_of = [&](double d) {
    return d > 0.0 ? 1.0 / d : lambda_cap;
  };

  // Condense: walk splits top-down. A side smaller than min_cluster_size
  // "falls out" of the running cluster at the split's lambda; two big
  // sides split the cluster in two; two small sides end it.
  std::vector<CondensedCluster> cond(1);
  cond[0].birth_size = static_cast<int>(n);
  std::vector<std::pair<int, int>> stack;  // (dendrogram node, cluster id)
  stack.push_back({static_cast<int>(dn.size()) - 1, 0});
  while (!stack.empty()) {
    const auto [node, c] = stack.back();
    stack.pop_back();
    const auto& d = dn[static_cast<std::size_t>(node)];
    const double lam = lambda_of(d.d);
    const int sl = dn[static_cast<std::size_t>(d.left)].size;
    const int sr = dn[static_cast<std::size_t>(d.right)].size;
    const bool big_l = sl >= min_cluster_size;
    const bool big_r = sr >= min_cluster_size;
    if (big_l && big_r) {
      for (int side : {d.left, d.right}) {
        CondensedCluster child;
        child.parent = c;
        child.birth = lam;
        child.birth_size = dn[static_cast<std::size_t>(side)].size;
        cond.push_back(child);
        const int id = static_cast<int>(cond.size()) - 1;
        cond[static_cast<std::size_t>(c)].children.push_back(id);
        stack.push_back({side, id});
      }
    } else if (big_l || big_r) {
      const int keep = big_l ? d.left : d.right;
      const int drop = big_l ? d.right : d.left;
      std::vector<int> dropped;
      collect_leaves(dn, drop, dropped);
      for (int p : dropped) {
        cond[static_cast<std::size_t>(c)].points.push_back({p, lam});
      }
      stack.push_back({keep, c});
    } else {
      std::vector<int> rest;
      collect_leaves(dn, node, rest);
      for (int p : rest) {
        cond[static_cast<std::size_t>(c)].points.push_back({p, lam});
      }
    }
  }

  // Stability: sum over everything that left the cluster of
  // (exit lambda - birth lambda), child clusters weighted by their size.
  const std::size_t K = cond.size();
  std::vector<double> stability(K, 0.0);
  for (std::size_t c = 0; c < K; ++c) {
    for (const auto& [p, lam] : cond[c].points) {
      (void)p;
      stability[c] += lam - cond[c].birth;
    }
    for (int k : cond[c].children) {
      const auto& child = cond[static_cast<std::size_t>(k)];
      stability[c] += (child.birth - cond[c].birth) * child.birth_size;
    }
  }

  // Excess of mass, bottom-up; parent wins ties. The root is selectable
  // only when the tree never split (otherwise "everything is one cluster"
  // would always be a candidate answer).
  std::vector<char> selected(K, 0);
  std::vector<double> subtree(K, 0.0);
  for (std::size_t c = K; c-- > 1;) {
    double child_sum = 0.0;
    for (int k : cond[c].children) {
      child_sum += subtree[static_cast<std::size_t>(k)];
    }
    if (cond[c].children.empty() || stability[c] >= child_sum) {
      selected[c] = 1;
      subtree[c] = stability[c];
    } else {
      subtree[c] = child_sum;
    }
  }
  if (cond[0].children.empty()) selected[0] = 1;

  // Final set: highest selected ancestors only.
  std::vector<char> is_final(K, 0);
  std::vector<int> final_ids;
  std::vector<int> walk{0};
  while (!walk.empty()) {
    const int c = walk.back();
    walk.pop_back();
    if (selected[static_cast<std::size_t>(c)]) {
      is_final[static_cast<std::size_t>(c)] = 1;
      final_ids.push_back(c);
    } else {
      for (int k : cond[static_cast<std::size_t>(c)].children) {
        walk.push_back(k);
      }
    }
  }
  std::sort(final_ids.begin(), final_ids.end());
  std::vector<int> number(K, -1);
  for (std::size_t i = 0; i < final_ids.size(); ++i) {
    number[static_cast<std::size_t>(final_ids[i])] = static_cast<int>(i);
  }

  // Label each point by the chosen ancestor of the cluster it exited.
  std::vector<int> exit_cluster(n, 0);
  for (std::size_t c = 0; c < K; ++c) {
    for (const auto& [p, lam] : cond[c].points) {
      (void)lam;
      exit_cluster[static_cast<std::size_t>(p)] = static_cast<int>(c);
    }
  }
  for (std::size_t p = 0; p < n; ++p) {
    int at = exit_cluster[p];
    while (at != -1 && !is_final[static_cast<std::size_t>(at)]) {
      at = cond[static_cast<std::size_t>(at)].parent;
    }
    result.labels[p] = at == -1 ? -1 : number[static_cast<std::size_t>(at)];
  }
  result.n_clusters = static_cast<int>(final_ids.size());
  return result;
}

std::vector<ClusterStats> cluster_stats(
    const std::vector<int>& labels, const std::vector<std::string>& families,
    bool include_noise_in_denominator) {
  if (labels.size() != families.size()) {
    throw ContractError("labels and families must align");
  }
  int n_clusters = 0;
  for (int l : labels) {
    if (l < -1) throw ContractError("cluster labels must be >= -1");
    n_clusters = std::max(n_clusters, l + 1);
  }

  // Family occurrence totals for completeness denominators.
  std::map<std::string, std::size_t> family_total;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (families[i] == kUndetected) continue;
    const bool counted =
        labels[i] >= 0 || include_noise_in_denominator;
    if (counted) ++family_total[families[i]];
  }

  std::vector<ClusterStats> stats(static_cast<std::size_t>(n_clusters));
  std::vector<std::map<std::string, std::size_t>> counts(
      static_cast<std::size_t>(n_clusters));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    auto& row = stats[static_cast<std::size_t>(labels[i])];
    ++row.size;
    if (families[i] != kUndetected) {
      ++row.detected;
      ++counts[static_cast<std::size_t>(labels[i])][families[i]];
    }
  }
  for (int c = 0; c < n_clusters; ++c) {
    auto& row = stats[static_cast<std::size_t>(c)];
    row.cluster = c;
    row.detection = row.size == 0
                        ? 0.0
                        : static_cast<double>(row.detected) /
                              static_cast<double>(row.size);
    if (row.detected == 0) {
      row.homogeneity = kNaN;
      row.completeness = kNaN;
      continue;
    }
    // std::map iterates lexicographically, so keeping strict winners
    // leaves the smallest name on ties.
    std::size_t best = 0;
    for (const auto& [family, count] : counts[static_cast<std::size_t>(c)]) {
      if (count > best) {
        best = count;
        row.dominant_family = family;
      }
    }
    row.homogeneity =
        static_cast<double>(best) / static_cast<double>(row.detected);
    row.completeness = static_cast<double>(best) /
                       static_cast<double>(family_total.at(row.dominant_family));
  }
  return stats;
}

double mean_homogeneity(const std::vector<ClusterStats>& stats) {
  double sum = 0.0;
  std::size_t defined = 0;
  for (const auto& s : stats) {
    if (!std::isnan(s.homogeneity)) {
      sum += s.homogeneity;
      ++defined;
    }
  }
  return defined == 0 ? kNaN : sum / static_cast<double>(defined);
}

namespace {

// Cyclic Jacobi eigensolver for a symmetric matrix held row-major.
// Rotations accumulate into V, whose columns end up as eigenvectors.
void jacobi_eigen(std::vector<std::vector<double>>& A,
                  std::vector<std::vector<double>>& V) {
  const std::size_t d = A.size();
  V.assign(d, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < d; ++i) V[i][i] = 1.0;
  double norm = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) norm += A[i][j] * A[i][j];
  }
  const double tol = 1e-26 * std::max(norm, 1e-300);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) off += A[p][q] * A[p][q];
    }
    if (2.0 * off <= tol) break;
    for (std::size_t p = 0; p < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        if (A[p][q] == 0.0) continue;
        const double theta = (A[q][q] - A[p][p]) / (2.0 * A[p][q]);
        const double t =
            (theta >= 0.0 ? 1.0 : -1.0) /
            (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < d; ++k) {
          const double akp = A[k][p], akq = A[k][q];
          A[k][p] = c * akp - s * akq;
          A[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double apk = A[p][k], aqk = A[q][k];
          A[p][k] = c * apk - s * aqk;
          A[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double vkp = V[k][p], vkq = V[k][q];
          V[k][p] = c * vkp - s * vkq;
          V[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
}

}  // namespace

std::vector<std::array<double, 2>> project_2d(const FeatureMatrix& X) {
  check_matrix(X);
  const std::size_t n = X.size();
  if (n < 2) throw ContractError("project_2d needs at least two rows");
  const std::size_t d = X[0].size();

  std::vector<double> mean(d, 0.0);
  for (const auto& row : X) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += row[j];
  }
  for (auto& m : mean) m /= static_cast<double>(n);

  // Scatter matrix of the centered data.
  std::vector<std::vector<double>> S(d, std::vector<double>(d, 0.0));
  std::vector<double> xc(d);
  for (const auto& row : X) {
    for (std::size_t j = 0; j < d; ++j) xc[j] = row[j] - mean[j];
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = a; b < d; ++b) S[a][b] += xc[a] * xc[b];
    }
  }
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b < a; ++b) S[a][b] = S[b][a];
  }

  std::vector<std::vector<double>> A = S, V;
  jacobi_eigen(A, V);
  std::vector<std::size_t> order(d);
  for (std::size_t i = 0; i < d; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (A[a][a] != A[b][b]) return A[a][a] > A[b][b];
    return a < b;
  });
  const double lambda_max = d > 0 ? std::max(A[order[0]][order[0]], 0.0) : 0.0;
  const double cutoff = 1e-12 * std::max(lambda_max, 1.0);

  std::vector<std::array<double, 2>> Y(n, {0.0, 0.0});
  for (std::size_t comp = 0; comp < 2; ++comp) {
    if (comp >= d) continue;
    const std::size_t e = order[comp];
    if (A[e][e] <= cutoff) continue;  // zero-variance direction: keep zeros
    std::vector<double> v(d);
    for (std::size_t j = 0; j < d; ++j) v[j] = V[j][e];
    std::size_t arg = 0;
    for (std::size_t j = 1; j < d; ++j) {
      if (std::abs(v[j]) > std::abs(v[arg])) arg = j;
    }
    if (v[arg] < 0.0) {
      for (auto& value : v) value = -value;
    }
    for (std::size_t i = 0; i < n; ++i) {
      double y = 0.0;
      for (std::size_t j = 0; j < d; ++j) y += (X[i][j] - mean[j]) * v[j];
      Y[i][comp] = y;
    }
  }
  return Y;
}

}  // namespace pdfscan::cluster
