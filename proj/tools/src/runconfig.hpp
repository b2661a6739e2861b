// Flat key=value experiment configuration shared by the train/eval/cluster
// commands. Command-line flags override file values; unknown keys are
// rejected up front.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pdfscan/date.hpp"
#include "pdfscan/model.hpp"

namespace pdfscan::tools {

struct RunConfig {
  std::string manifest;
  std::string out = "out";
  char arch = 'A';
  std::uint64_t seed = 1;
  int ensemble_size = 3;
  int epochs = 10;
  int batch_size = 32;
  double learning_rate = 1e-3;
  bool weight_positive_class = false;
  int input_length = static_cast<int>(kSequenceLength);
  std::vector<double> fpr_budgets{0.01, 0.005, 0.002};
  int min_cluster_size = 10;
  std::optional<Date> val_cutoff;
  std::optional<Date> test_cutoff;
  int threads = 0;  // 0 = hardware default

  // Throws ValidationError listing the offending key/value.
  void set(const std::string& key, const std::string& value);
  void validate() const;
  models::ModelConfig model_config() const;
};

// Parses `key = value` lines ('#' comments, blank lines ignored).
RunConfig load_run_config(const std::string& path);

std::vector<double> parse_fpr_list(const std::string& text);

}  // namespace pdfscan::tools
