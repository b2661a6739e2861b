#include "runconfig.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "pdfscan/errors.hpp"

namespace pdfscan::tools {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

long long to_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("config key '" + key + "': not an integer: " + value);
  }
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size() || !std::isfinite(v)) {
      throw std::invalid_argument(value);
    }
    return v;
  } catch (const std::exception&) {
    throw ValidationError("config key '" + key + "': not a number: " + value);
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ValidationError("config key '" + key + "': not a boolean: " + value);
}

}  // namespace

std::vector<double> parse_fpr_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(to_double("fpr", item));
  }
  if (out.empty()) throw ValidationError("fpr list is empty");
  return out;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "manifest") {
    manifest = value;
  } else if (key == "out") {
    out = value;
  } else if (key == "arch") {
    if (value.size() != 1) {
      throw ValidationError("config key 'arch': expected A, B, or C");
    }
    arch = value[0];
  } else if (key == "seed") {
    seed = static_cast<std::uint64_t>(to_int(key, value));
  } else if (key == "ensemble_size") {
    ensemble_size = static_cast<int>(to_int(key, value));
  } else if (key == "epochs") {
    epochs = static_cast<int>(to_int(key, value));
  } else if (key == "batch_size") {
    batch_size = static_cast<int>(to_int(key, value));
  } else if (key == "learning_rate") {
    learning_rate = to_double(key, value);
  } else if (key == "weight_positive_class") {
    weight_positive_class = to_bool(key, value);
  } else if (key == "input_length") {
    input_length = static_cast<int>(to_int(key, value));
  } else if (key == "fpr") {
    fpr_budgets = parse_fpr_list(value);
  } else if (key == "min_cluster_size") {
    min_cluster_size = static_cast<int>(to_int(key, value));
  } else if (key == "val_cutoff") {
    val_cutoff = Date::parse(value);
  } else if (key == "test_cutoff") {
    test_cutoff = Date::parse(value);
  } else if (key == "threads") {
    threads = static_cast<int>(to_int(key, value));
  } else {
    throw ValidationError("unknown config key: " + key);
  }
}

void RunConfig::validate() const {
  models::arch_from_letter(arch);  // throws on unknown letters
  if (ensemble_size < 1) throw ValidationError("ensemble_size must be >= 1");
  for (double f : fpr_budgets) {
    if (!(f > 0.0 && f < 1.0)) {
      throw ValidationError("fpr budgets must lie in (0, 1)");
    }
  }
  if (min_cluster_size < 2) {
    throw ValidationError("min_cluster_size must be >= 2");
  }
  if (threads < 0) throw ValidationError("threads must be >= 0");
  if (val_cutoff && test_cutoff && !(*val_cutoff < *test_cutoff)) {
    throw ValidationError("val_cutoff must precede test_cutoff");
  }
}

models::ModelConfig RunConfig::model_config() const {
  auto cfg = models::ModelConfig::canonical(models::arch_from_letter(arch));
  cfg.input_length = input_length;
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  RunConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(path + ":" + std::to_string(line_no) +
                            ": expected key = value");
    }
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

}  // namespace pdfscan::tools
