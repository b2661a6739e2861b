#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pdfscan/dataset.hpp"

namespace pdfscan::baseline {

// PDF name tokens ("/Type", "/JavaScript", ...) pulled from raw bytes with
// a total lexer: a token starts at '/', ends at the next delimiter byte
// ( ) < > [ ] { } / % or whitespace (NUL, tab, LF, FF, CR, space), and
// two-hex-digit #xx escapes decode to the named byte (a '#' that is not
// followed by two hex digits stays literal). Returned tags keep the
// leading slash; a bare '/' yields the empty-name tag "/". Never throws on
// any input.
std::vector<std::string> lex_tags(std::span<const std::uint8_t> bytes);

using TagHistogram = std::map<std::string, std::size_t>;

TagHistogram tag_histogram(std::span<const std::uint8_t> bytes);

struct FeatureVocabulary {
  std::vector<std::string> tags;  // rank order, highest mass first
  std::vector<double> idf;        // aligned with tags, ln(N / df)
  std::size_t document_count = 0;
};

// Ranks tags by total term frequency x ln(N / df), the mass they carry in
// a TF-IDF sense; ties break lexicographically. Tags present in every
// document have idf 0 and thus rank last. Takes the top k (fewer when the
// corpus has fewer distinct tags).
FeatureVocabulary fit_vocabulary(const std::vector<TagHistogram>& docs,
                                 std::size_t k);

// tf * idf per vocabulary slot.
std::vector<double> featurize(const TagHistogram& doc,
                              const FeatureVocabulary& vocab);

struct ForestParams {
  int n_trees = 100;
  int max_depth = 0;  // 0 = unlimited
  int min_samples_leaf = 1;
  std::uint64_t seed = 0;
  void validate() const;
};

// Internal nodes test feature <= threshold (midpoints between consecutive
// distinct values); leaves carry the malicious fraction of their samples.
struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double prob = 0.0;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  double score(std::span<const double> x) const;
};

struct Forest {
  ForestParams params;
  std::vector<Tree> trees;
  // Training data had a single class: the forest is one constant leaf and
  // this flag records the degeneracy.
  bool single_class = false;
  double score(std::span<const double> x) const;  // mean over trees
};

// Bagged Gini trees: each tree bootstraps n samples, each split draws
// ceil(sqrt(d)) candidate features without replacement. Deterministic for
// a fixed seed.
Forest forest_fit(const std::vector<std::vector<double>>& X,
                  const std::vector<int>& y, const ForestParams& params);

struct BaselineModel {
  FeatureVocabulary vocab;
  Forest forest;
  double score_file(std::span<const std::uint8_t> bytes) const;
};

struct BaselineFitReport {
  std::vector<std::size_t> grid;
  std::vector<double> val_detection;  // aligned with grid
  std::size_t chosen_k = 0;
};

// Fits one vocabulary ranking on the training split, then tunes the cut k
// over the grid by validation detection at fpr_target (ties prefer the
// smaller k). The grid defaults to {50, 100, 168, 300}.
BaselineModel fit_baseline(const data::Dataset& train,
                           const data::Dataset& val,
                           const ForestParams& params,
                           double fpr_target = 0.01,
                           std::vector<std::size_t> k_grid = {},
                           BaselineFitReport* report = nullptr);

// Container files with magic "PDFSRF01".
void save_baseline(const BaselineModel& model, const std::string& path);
BaselineModel load_baseline(const std::string& path);

}  // namespace pdfscan::baseline
