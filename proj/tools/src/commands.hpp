// Subcommand entry points. Each function does its own error reporting to
// stderr and returns the process exit code: 0 success, 2 bad spec/config,
// 3 training failure, 4 evaluation failure, 5 clustering failure (1, usage,
// is produced by argument parsing in main).
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "runconfig.hpp"

namespace pdfscan::tools {

struct SynthArgs {
  std::string out;
  int n_benign = 200;
  int n_malicious = 100;
  std::uint64_t seed = 1;
  std::string date_start = "2014-01-01";
  std::string date_end = "2017-12-31";
  int min_words = 20;
  int max_words = 60;
  // "name:prevalence" or "name:prevalence:window_start:window_end", where
  // name picks a built-in family preset. Empty = default mix.
  std::vector<std::string> families;
};
int run_synth(const SynthArgs& args);

struct TrainArgs {
  RunConfig cfg;
  bool baseline = false;  // fit the tag Random Forest instead of the CNN ensemble
};
int run_train(const TrainArgs& args);

struct EvalArgs {
  RunConfig cfg;
  // Ensemble descriptor, single checkpoint, or forest file; defaults to
  // <out>/ensemble.json.
  std::string model;
  bool validate_corpus = false;  // check manifest files for PDF well-formedness only
};
int run_eval(const EvalArgs& args);

struct ScanArgs {
  std::string model;
  double threshold = 0.5;
  int threads = 0;
  std::vector<std::string> paths;
};
int run_scan(const ScanArgs& args);

struct ClusterArgs {
  RunConfig cfg;
  std::string checkpoint;      // single B-architecture checkpoint
  std::string split = "test";  // train | val | test | all
};
int run_cluster(const ClusterArgs& args);

}  // namespace pdfscan::tools
