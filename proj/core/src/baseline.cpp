#include "pdfscan/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "container.hpp"
#include "pdfscan/errors.hpp"
#include "pdfscan/metrics.hpp"
#include "pdfscan/parallel.hpp"
#include "pdfscan/rng.hpp"

namespace pdfscan::baseline {

namespace {

bool is_delim_or_ws(std::uint8_t b) {
  switch (b) {
    case 0x00:
    case '\t':
    case '\n':
    case '\f':
    case '\r':
    case ' ':
    case '(':
    case ')':
    case '<':
    case '>':
    case '[':
    case ']':
    case '{':
    case '}':
    case '/':
    case '%':
      return true;
    default:
      return false;
  }
}

int hex_val(std::uint8_t b) {
  if (b >= '0' && b <= '9') return b - '0';
  if (b >= 'a' && b <= 'f') return b - 'a' + 10;
  if (b >= 'A' && b <= 'F') return b - 'A' + 10;
  return -1;
}

}  // namespace

std::vector<std::string> lex_tags(std::span<const std::uint8_t> bytes) {
  std::vector<std::string> tags;
  const std::size_t n = bytes.size();
  std::size_t i = 0;
  while (i < n) {
    if (bytes[i] != '/') {
      ++i;
      continue;
    }
    std::string tag = "/";
    ++i;
    while (i < n && !is_delim_or_ws(bytes[i])) {
      if (bytes[i] == '#' && i + 2 < n && hex_val(bytes[i + 1]) >= 0 &&
          hex_val(bytes[i + 2]) >= 0) {
        tag.push_back(static_cast<char>(16 * hex_val(bytes[i + 1]) +
                                        hex_val(bytes[i + 2])));
        i += 3;
      } else {
        tag.push_back(static_cast<char>(bytes[i]));
        ++i;
      }
    }
    tags.push_back(std::move(tag));
    // i rests on the delimiter; if it is another '/', the outer loop
    // starts the next tag there.
  }
  return tags;
}

TagHistogram tag_histogram(std::span<const std::uint8_t> bytes) {
  TagHistogram histo;
  for (auto& tag : lex_tags(bytes)) ++histo[tag];
  return histo;
}

FeatureVocabulary fit_vocabulary(const std::vector<TagHistogram>& docs,
                                 std::size_t k) {
  if (docs.empty()) throw ContractError("fit_vocabulary needs documents");
  if (k == 0) throw ContractError("vocabulary size must be >= 1");
  struct Agg {
    std::size_t total_tf = 0;
    std::size_t df = 0;
  };
  std::map<std::string, Agg> agg;
  for (const auto& doc : docs) {
    for (const auto& [tag, count] : doc) {
      agg[tag].total_tf += count;
      agg[tag].df += 1;
    }
  }
  const double n_docs = static_cast<double>(docs.size());
  struct Row {
    const std::string* tag;
    double mass;
    double idf;
  };
  std::vector<Row> rows;
  rows.reserve(agg.size());
  for (const auto& [tag, a] : agg) {
    const double idf = std::log(n_docs / static_cast<double>(a.df));
    rows.push_back({&tag, static_cast<double>(a.total_tf) * idf, idf});
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.mass != b.mass) return a.mass > b.mass;
    return *a.tag < *b.tag;
  });
  FeatureVocabulary vocab;
  vocab.document_count = docs.size();
  const std::size_t take = std::min(k, rows.size());
  for (std::size_t i = 0; i < take; ++i) {
    vocab.tags.push_back(*rows[i].tag);
    vocab.idf.push_back(rows[i].idf);
  }
  return vocab;
}

std::vector<double> featurize(const TagHistogram& doc,
                              const FeatureVocabulary& vocab) {
  std::vector<double> x(vocab.tags.size(), 0.0);
  for (std::size_t i = 0; i < vocab.tags.size(); ++i) {
    const auto it = doc.find(vocab.tags[i]);
    if (it != doc.end()) {
      x[i] = static_cast<double>(it->second) * vocab.idf[i];
    }
  }
  return x;
}

void ForestParams::validate() const {
  if (n_trees < 1) throw ValidationError("n_trees must be >= 1");
  if (max_depth < 0) throw ValidationError("max_depth must be >= 0");
  if (min_samples_leaf < 1) {
    throw ValidationError("min_samples_leaf must be >= 1");
  }
}

double Tree::score(std::span<const double> x) const {
  if (nodes.empty()) throw ContractError("empty tree");
  int at = 0;
  while (nodes[static_cast<std::size_t>(at)].feature >= 0) {
    const TreeNode& node = nodes[static_cast<std::size_t>(at)];
    if (static_cast<std::size_t>(node.feature) >= x.size()) {
      throw ContractError("tree feature index out of range for input");
    }
    at = x[static_cast<std::size_t>(node.feature)] <= node.threshold
             ? node.left
             : node.right;
  }
  return nodes[static_cast<std::size_t>(at)].prob;
}

double Forest::score(std::span<const double> x) const {
  if (trees.empty()) throw ContractError("empty forest");
  double sum = 0.0;
  for (const auto& t : trees) sum += t.score(x);
  return sum / static_cast<double>(trees.size());
}

namespace {

struct TreeBuilder {
  const std::vector<std::vector<double>>& X;
  const std::vector<int>& y;
  int d;
  int mtry;
  int max_depth;
  int min_leaf;
  Rng& rng;
  Tree& tree;

  int build(const std::vector<int>& idx, int depth) {
    const int me = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    const auto n = static_cast<int>(idx.size());
    int pos = 0;
    for (int i : idx) pos += y[static_cast<std::size_t>(i)];
    tree.nodes[static_cast<std::size_t>(me)].prob =
        static_cast<double>(pos) / static_cast<double>(n);

    const bool can_split = pos != 0 && pos != n && n >= 2 * min_leaf &&
                           (max_depth == 0 || depth < max_depth);
    if (!can_split) return me;

    // Candidate features: mtry distinct indices via partial Fisher-Yates.
    std::vector<int> feat(static_cast<std::size_t>(d));
    for (int f = 0; f < d; ++f) feat[static_cast<std::size_t>(f)] = f;
    for (int j = 0; j < mtry; ++j) {
      const auto pick =
          j + static_cast<int>(rng.below(static_cast<std::uint64_t>(d - j)));
      std::swap(feat[static_cast<std::size_t>(j)],
                feat[static_cast<std::size_t>(pick)]);
    }

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_child_gini = std::numeric_limits<double>::infinity();
    std::vector<std::pair<double, int>> vals(static_cast<std::size_t>(n));
    for (int j = 0; j < mtry; ++j) {
      const int f = feat[static_cast<std::size_t>(j)];
      for (int i = 0; i < n; ++i) {
        const int s = idx[static_cast<std::size_t>(i)];
        vals[static_cast<std::size_t>(i)] = {
            X[static_cast<std::size_t>(s)][static_cast<std::size_t>(f)],
            y[static_cast<std::size_t>(s)]};
      }
      std::sort(vals.begin(), vals.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      int nl = 0, pos_l = 0;
      for (int i = 0; i + 1 < n; ++i) {
        ++nl;
        pos_l += vals[static_cast<std::size_t>(i)].second;
        if (vals[static_cast<std::size_t>(i)].first ==
            vals[static_cast<std::size_t>(i + 1)].first) {
          continue;  // not a boundary between distinct values
        }
        const int nr = n - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        const int pos_r = pos - pos_l;
        const double pl = static_cast<double>(pos_l) / nl;
        const double pr = static_cast<double>(pos_r) / nr;
        const double child_gini =
            (nl * 2.0 * pl * (1.0 - pl) + nr * 2.0 * pr * (1.0 - pr)) / n;
        if (child_gini < best_child_gini) {
          best_child_gini = child_gini;
          best_feature = f;
          best_threshold = (vals[static_cast<std::size_t>(i)].first +
                            vals[static_cast<std::size_t>(i + 1)].first) /
                           2.0;
        }
      }
    }
    if (best_feature < 0) return me;  // all candidate features constant

    std::vector<int> left_idx, right_idx;
    for (int i : idx) {
      const double v =
          X[static_cast<std::size_t>(i)][static_cast<std::size_t>(best_feature)];
      (v <= best_threshold ? left_idx : right_idx).push_back(i);
    }
    tree.nodes[static_cast<std::size_t>(me)].feature = best_feature;
    tree.nodes[static_cast<std::size_t>(me)].threshold = best_threshold;
    const int l = build(left_idx, depth + 1);
    tree.nodes[static_cast<std::size_t>(me)].left = l;
    const int r = build(right_idx, depth + 1);
    tree.nodes[static_cast<std::size_t>(me)].right = r;
    return me;
  }
};

}  // namespace

Forest forest_fit(const std::vector<std::vector<double>>& X,
                  const std::vector<int>& y, const ForestParams& params) {
  params.validate();
  if (X.empty()) throw ContractError("forest_fit needs samples");
  if (X.size() != y.size()) {
    throw ContractError("forest_fit: X/y size mismatch");
  }
  const std::size_t d = X[0].size();
  if (d == 0) throw ContractError("forest_fit needs at least one feature");
  for (const auto& row : X) {
    if (row.size() != d) throw ContractError("forest_fit: ragged feature rows");
  }
  for (int label : y) {
    if (label != 0 && label != 1) {
      throw ContractError("forest_fit labels must be 0 or 1");
    }
  }

  Forest forest;
  forest.params = params;
  const bool any_pos = std::find(y.begin(), y.end(), 1) != y.end();
  const bool any_neg = std::find(y.begin(), y.end(), 0) != y.end();
  if (!any_pos || !any_neg) {
    forest.single_class = true;
    Tree leaf;
    leaf.nodes.push_back({-1, 0.0, -1, -1, any_pos ? 1.0 : 0.0});
    forest.trees.push_back(std::move(leaf));
    return forest;
  }

  const int n = static_cast<int>(X.size());
  const int mtry = static_cast<int>(
      std::ceil(std::sqrt(static_cast<double>(d))));
  forest.trees.resize(static_cast<std::size_t>(params.n_trees));
  // Each tree owns its seed stream, so fitting order does not matter.
  parallel_for(static_cast<std::size_t>(params.n_trees),
               default_thread_count(), [&](std::size_t t) {
                 Rng rng(derive_seed(params.seed, 40, t));
                 std::vector<int> idx(static_cast<std::size_t>(n));
                 for (auto& i : idx) {
                   i = static_cast<int>(
                       rng.below(static_cast<std::uint64_t>(n)));
                 }
                 TreeBuilder builder{X,
                                     y,
                                     static_cast<int>(d),
                                     mtry,
                                     params.max_depth,
                                     params.min_samples_leaf,
                                     rng,
                                     forest.trees[t]};
                 builder.build(idx, 0);
               });
  return forest;
}

double BaselineModel::score_file(std::span<const std::uint8_t> bytes) const {
  const auto x = featurize(tag_histogram(bytes), vocab);
  return forest.score(x);
}

BaselineModel fit_baseline(const data::Dataset& train,
                           const data::Dataset& val,
                           const ForestParams& params, double fpr_target,
                           std::vector<std::size_t> k_grid,
                           BaselineFitReport* report) {
  params.validate();
  if (k_grid.empty()) k_grid = {50, 100, 168, 300};
  std::sort(k_grid.begin(), k_grid.end());
  k_grid.erase(std::unique(k_grid.begin(), k_grid.end()), k_grid.end());
  for (std::size_t k : k_grid) {
    if (k == 0) throw ValidationError("vocabulary sizes must be >= 1");
  }
  if (train.count(Label::benign) == 0 || train.count(Label::malicious) == 0) {
    throw TrainingError("training split needs both benign and malicious samples");
  }
  if (val.count(Label::benign) == 0 || val.count(Label::malicious) == 0) {
    throw TrainingError("validation split needs both benign and malicious samples");
  }

  std::vector<TagHistogram> train_histos, val_histos;
  for (const auto& s : train.samples) train_histos.push_back(tag_histogram(s.view()));
  for (const auto& s : val.samples) val_histos.push_back(tag_histogram(s.view()));
  std::vector<int> y;
  for (const auto& s : train.samples) y.push_back(s.malicious ? 1 : 0);

  const auto full =
      fit_vocabulary(train_histos, std::numeric_limits<std::size_t>::max());

  BaselineModel best;
  double best_detection = -1.0;
  std::size_t best_k = 0;
  if (report) {
    report->grid = k_grid;
    report->val_detection.clear();
  }
  for (std::size_t k : k_grid) {
    FeatureVocabulary vocab;
    vocab.document_count = full.document_count;
    const std::size_t take = std::min(k, full.tags.size());
    vocab.tags.assign(full.tags.begin(), full.tags.begin() + take);
    vocab.idf.assign(full.idf.begin(), full.idf.begin() + take);

    std::vector<std::vector<double>> X;
    for (const auto& h : train_histos) X.push_back(featurize(h, vocab));
    Forest forest = forest_fit(X, y, params);

    std::vector<metrics::ScoredSample> scored(val.size());
    for (std::size_t i = 0; i < val.size(); ++i) {
      scored[i] = {forest.score(featurize(val_histos[i], vocab)),
                   val.samples[i].malicious};
    }
    const double detection =
        metrics::detection_at_fpr(scored, fpr_target).detection;
    if (report) report->val_detection.push_back(detection);
    if (detection > best_detection) {
      best_detection = detection;
      best_k = k;
      best.vocab = std::move(vocab);
      best.forest = std::move(forest);
    }
  }
  if (report) report->chosen_k = best_k;
  return best;
}

namespace {
constexpr std::string_view kForestMagic = "PDFSRF01";
}

void save_baseline(const BaselineModel& model, const std::string& path) {
  using container::json;
  std::vector<std::uint8_t> payload;
  const std::size_t vocab_offset = payload.size();
  for (const auto& tag : model.vocab.tags) container::append_str(payload, tag);
  for (double idf : model.vocab.idf) container::append_f64(payload, idf);

  json trees = json::array();
  for (const auto& tree : model.forest.trees) {
    trees.push_back(
        {{"offset", payload.size()}, {"nodes", tree.nodes.size()}});
    for (const auto& node : tree.nodes) {
      container::append_i32(payload, node.feature);
      container::append_f64(payload, node.threshold);
      container::append_i32(payload, node.left);
      container::append_i32(payload, node.right);
      container::append_f64(payload, node.prob);
    }
  }
  const json header = {
      {"format", "pdfscan tag forest"},
      {"version", 1},
      {"params",
       {{"n_trees", model.forest.params.n_trees},
        {"max_depth", model.forest.params.max_depth},
        {"min_samples_leaf", model.forest.params.min_samples_leaf},
        {"seed", model.forest.params.seed}}},
      {"single_class", model.forest.single_class},
      {"vocab",
       {{"count", model.vocab.tags.size()},
        {"document_count", model.vocab.document_count},
        {"offset", vocab_offset}}},
      {"trees", trees}};
  container::write_container(path, kForestMagic, header, payload);
}

BaselineModel load_baseline(const std::string& path) {
  using container::json;
  const auto blob = container::read_container(path, kForestMagic);
  try {
    const json& header = blob.header;
    if (header.at("version").get<int>() != 1) {
      throw CorruptCheckpointError("unsupported forest version in " + path);
    }
    BaselineModel model;
    model.forest.params.n_trees =
        header.at("params").at("n_trees").get<int>();
    model.forest.params.max_depth =
        header.at("params").at("max_depth").get<int>();
    model.forest.params.min_samples_leaf =
        header.at("params").at("min_samples_leaf").get<int>();
    model.forest.params.seed =
        header.at("params").at("seed").get<std::uint64_t>();
    model.forest.single_class = header.at("single_class").get<bool>();

    const auto vocab_count = header.at("vocab").at("count").get<std::size_t>();
    model.vocab.document_count =
        header.at("vocab").at("document_count").get<std::size_t>();
    container::PayloadReader reader(blob.payload);
    reader.seek(header.at("vocab").at("offset").get<std::size_t>());
    for (std::size_t i = 0; i < vocab_count; ++i) {
      model.vocab.tags.push_back(reader.str());
    }
    for (std::size_t i = 0; i < vocab_count; ++i) {
      model.vocab.idf.push_back(reader.f64());
    }

    for (const auto& entry : header.at("trees")) {
      Tree tree;
      const auto count = entry.at("nodes").get<std::size_t>();
      reader.seek(entry.at("offset").get<std::size_t>());
      for (std::size_t i = 0; i < count; ++i) {
        TreeNode node;
        node.feature = reader.i32();
        node.threshold = reader.f64();
        node.left = reader.i32();
        node.right = reader.i32();
        node.prob = reader.f64();
        if (node.feature >= 0) {
          const bool child_ok =
              node.left >= 0 && node.right >= 0 &&
              static_cast<std::size_t>(node.left) < count &&
              static_cast<std::size_t>(node.right) < count;
          if (!child_ok) {
            throw CorruptCheckpointError("tree child index out of range in " +
                                         path);
          }
        }
        tree.nodes.push_back(node);
      }
      model.forest.trees.push_back(std::move(tree));
    }
    if (model.forest.trees.empty()) {
      throw CorruptCheckpointError("forest has no trees in " + path);
    }
    return model;
  } catch (const json::exception& e) {
    throw CorruptCheckpointError("malformed forest header in " + path + ": " +
                                 e.what());
  }
}

}  // namespace pdfscan::baseline
