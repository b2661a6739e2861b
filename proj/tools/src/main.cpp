// pdfscan: byte-level CNN scanner for PDF malware, with a tag-based
// random-forest comparison model and density-based family clustering.
//
// Exit codes: 0 success, 1 usage, 2 bad spec/config, 3 training failure,
// 4 evaluation failure, 5 clustering failure.
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"
#include "pdfscan/errors.hpp"
#include "runconfig.hpp"

namespace pdfscan::tools {
namespace {

// Shared run-configuration flags. Values are kept as raw strings and fed
// through RunConfig::set so the config file and the command line share one
// parser; flags override file values.
class ConfigFlags {
 public:
  explicit ConfigFlags(CLI::App* sub) {
    sub->add_option("--config", config_path_,
                    "run configuration file (key = value lines)");
  }

  void option(CLI::App* sub, const std::string& flag, const std::string& key,
              const std::string& help) {
    slots_.push_back(std::make_unique<std::string>());
    Bound b;
    b.key = key;
    b.slot = slots_.back().get();
    b.opt = sub->add_option(flag, *b.slot, help);
    bound_.push_back(b);
  }

  void flag(CLI::App* sub, const std::string& flag, const std::string& key,
            const std::string& help) {
    Bound b;
    b.key = key;
    b.slot = nullptr;
    b.opt = sub->add_flag(flag, help);
    bound_.push_back(b);
  }

  RunConfig build() const {
    RunConfig cfg;
    if (!config_path_.empty()) cfg = load_run_config(config_path_);
    for (const auto& b : bound_) {
      if (b.opt->count() == 0) continue;
      cfg.set(b.key, b.slot ? *b.slot : "true");
    }
    return cfg;
  }

 private:
  struct Bound {
    std::string key;
    std::string* slot = nullptr;
    CLI::Option* opt = nullptr;
  };
  std::string config_path_;
  std::vector<std::unique_ptr<std::string>> slots_;
  std::vector<Bound> bound_;
};

void add_common(ConfigFlags& cf, CLI::App* sub) {
  cf.option(sub, "--manifest", "manifest", "corpus manifest CSV");
  cf.option(sub, "--out", "out", "output directory (default: out)");
  cf.option(sub, "--seed", "seed", "global seed");
  cf.option(sub, "--threads", "threads", "worker threads (0 = hardware)");
}

int dispatch(int argc, char** argv) {
  CLI::App app{
      "byte-level PDF malware scanner: CNN ensemble, tag-forest baseline, "
      "family clustering"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "generate a synthetic PDF corpus");
  SynthArgs synth_args;
  synth->add_option("--out", synth_args.out, "corpus directory")->required();
  synth->add_option("--n-benign", synth_args.n_benign, "benign file count");
  synth->add_option("--n-malicious", synth_args.n_malicious,
                    "malicious file count");
  synth->add_option("--seed", synth_args.seed, "corpus seed");
  synth->add_option("--date-start", synth_args.date_start,
                    "first first-seen date (YYYY-MM-DD)");
  synth->add_option("--date-end", synth_args.date_end,
                    "last first-seen date (YYYY-MM-DD)");
  synth->add_option("--min-words", synth_args.min_words,
                    "minimum body words per file");
  synth->add_option("--max-words", synth_args.max_words,
                    "maximum body words per file");
  synth->add_option("--family", synth_args.families,
                    "family spec name:prevalence[:win_start:win_end]; "
                    "presets: jsheap, cmdlaunch, urifetch, filedrop");

  auto* train = app.add_subcommand("train", "train the detector ensemble");
  ConfigFlags train_cf(train);
  add_common(train_cf, train);
  train_cf.option(train, "--arch", "arch", "architecture: A, B or C");
  train_cf.option(train, "--ensemble-size", "ensemble_size", "member count");
  train_cf.option(train, "--epochs", "epochs", "training epochs");
  train_cf.option(train, "--batch-size", "batch_size", "mini-batch size");
  train_cf.option(train, "--learning-rate", "learning_rate", "Adam step size");
  train_cf.flag(train, "--weight-positive-class", "weight_positive_class",
                "weight malicious samples by the class ratio");
  train_cf.option(train, "--input-length", "input_length",
                  "bytes fed to the network per file");
  train_cf.option(train, "--val-cutoff", "val_cutoff",
                  "first-seen date closing the training period");
  train_cf.option(train, "--test-cutoff", "test_cutoff",
                  "first-seen date closing the validation period");
  bool train_baseline = false;
  train->add_flag("--baseline", train_baseline,
                  "fit the tag random-forest instead of the CNN ensemble");

  auto* eval = app.add_subcommand("eval", "score splits and report detection");
  ConfigFlags eval_cf(eval);
  add_common(eval_cf, eval);
  eval_cf.option(eval, "--fpr", "fpr",
                 "comma-separated FPR budgets (default 0.01,0.005,0.002)");
  std::string eval_model;
  eval->add_option("--model", eval_model,
                   "ensemble descriptor, checkpoint or forest file "
                   "(default <out>/ensemble.json)");
  bool eval_validate = false;
  eval->add_flag("--validate-corpus", eval_validate,
                 "only check manifest files for PDF well-formedness");

  auto* scan = app.add_subcommand("scan", "score individual files");
  ScanArgs scan_args;
  scan->add_option("--model", scan_args.model,
                   "ensemble descriptor, checkpoint or forest file")
      ->required();
  scan->add_option("--threshold", scan_args.threshold,
                   "verdict threshold (default 0.5)");
  scan->add_option("--threads", scan_args.threads, "worker threads");
  scan->add_option("paths", scan_args.paths, "files to score")->required();

  auto* clust = app.add_subcommand("cluster", "group malicious samples into "
                                               "families");
  ConfigFlags clust_cf(clust);
  add_common(clust_cf, clust);
  clust_cf.option(clust, "--min-cluster-size", "min_cluster_size",
                  "smallest allowed cluster (default 10)");
  std::string clust_checkpoint;
  clust->add_option("--checkpoint", clust_checkpoint,
                    "B-architecture checkpoint supplying features")
      ->required();
  std::string clust_split = "test";
  clust->add_option("--split", clust_split, "train, val, test or all");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) return run_synth(synth_args);
    if (train->parsed()) {
      TrainArgs args;
      args.cfg = train_cf.build();
      args.baseline = train_baseline;
      return run_train(args);
    }
    if (eval->parsed()) {
      EvalArgs args;
      args.cfg = eval_cf.build();
      args.model = eval_model;
      args.validate_corpus = eval_validate;
      return run_eval(args);
    }
    if (scan->parsed()) return run_scan(scan_args);
    if (clust->parsed()) {
      ClusterArgs args;
      args.cfg = clust_cf.build();
      args.checkpoint = clust_checkpoint;
      args.split = clust_split;
      return run_cluster(args);
    }
  } catch (const Error& e) {
    // Configuration assembly failed before the command ran.
    std::fprintf(stderr, "pdfscan: %s\n", e.what());
    return 2;
  }
  return 1;
}

}  // namespace
}  // namespace pdfscan::tools

int main(int argc, char** argv) { return pdfscan::tools::dispatch(argc, argv); }
