// Drives the pdfscan binary end to end through std::system. The binary path
// comes from the build via PDFSCAN_CLI_PATH.
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "pdfscan/bytes.hpp"
#include "pdfscan/csv.hpp"
#include "pdfscan/manifest.hpp"
#include "testutil.hpp"

namespace fs = std::filesystem;
using pdfscan::read_file_bytes;
using pdfscan::write_file_bytes;
using testutil::to_bytes;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

// Runs `pdfscan <args>`, capturing exit code, stdout and stderr.
CliResult run_cli(const std::string& args) {
  static testutil::TempDir io("cli_io");
  static int counter = 0;
  const std::string tag = std::to_string(counter++);
  const std::string out_path = io.str("out" + tag);
  const std::string err_path = io.str("err" + tag);
  const std::string cmd = std::string(PDFSCAN_CLI_PATH) + " " + args + " > \"" +
                          out_path + "\" 2> \"" + err_path + "\"";
  const int raw = std::system(cmd.c_str());
  CliResult r;
  if (raw != -1 && WIFEXITED(raw)) r.code = WEXITSTATUS(raw);
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  return r;
}

bool has(const std::string& text, const std::string& needle) {
  return text.find(needle) != std::string::npos;
}

// Small corpus with all three default families represented on both sides of
// the cutoffs used below.
void make_corpus(const std::string& dir, int n_benign, int n_malicious,
                 int seed) {
  const auto r = run_cli("synth --out \"" + dir + "\" --n-benign " +
                         std::to_string(n_benign) + " --n-malicious " +
                         std::to_string(n_malicious) + " --seed " +
                         std::to_string(seed));
  REQUIRE(r.code == 0);
}

std::string common_flags(const std::string& manifest, const std::string& out) {
  return "--manifest \"" + manifest + "\" --out \"" + out + "\"";
}

}  // namespace

TEST_CASE("help is help and bad usage exits with code 1") {
  const auto help = run_cli("--help");
  CHECK(help.code == 0);
  for (const char* sub : {"synth", "train", "eval", "scan", "cluster"}) {
    CAPTURE(sub);
    CHECK(has(help.out, sub));
  }
  CHECK(run_cli("synth --help").code == 0);

  CHECK(run_cli("").code == 1);               // a subcommand is required
  CHECK(run_cli("defrag").code == 1);         // unknown subcommand
  CHECK(run_cli("train --frobnicate").code == 1);
  CHECK(run_cli("synth").code == 1);          // --out is required
  CHECK(run_cli("scan --model x.ckpt").code == 1);  // paths are required
}

TEST_CASE("synth generates identical corpora for identical seeds") {
  testutil::TempDir tmp("cli_synth");
  make_corpus(tmp.str("a"), 10, 5, 42);
  make_corpus(tmp.str("b"), 10, 5, 42);
  make_corpus(tmp.str("c"), 10, 5, 43);

  for (const char* name : {"manifest.csv", "ben_00000.pdf", "mal_00004.pdf"}) {
    CAPTURE(name);
    CHECK(read_file_bytes(tmp.str("a") + "/" + name) ==
          read_file_bytes(tmp.str("b") + "/" + name));
  }
  CHECK(read_file_bytes(tmp.str("a") + "/ben_00000.pdf") !=
        read_file_bytes(tmp.str("c") + "/ben_00000.pdf"));

  const auto manifest = pdfscan::read_manifest(tmp.str("a") + "/manifest.csv");
  CHECK(manifest.count(pdfscan::Label::benign) == 10);
  CHECK(manifest.count(pdfscan::Label::malicious) == 5);

  // Bad requests are configuration errors.
  CHECK(run_cli("synth --out \"" + tmp.str("bad") +
                "\" --family jsheap:2.0").code == 2);
  CHECK(run_cli("synth --out \"" + tmp.str("bad") +
                "\" --family nosuchfamily:1.0").code == 2);
  CHECK(run_cli("synth --out \"" + tmp.str("bad") +
                "\" --date-start nonsense").code == 2);
}

TEST_CASE("validate-corpus accepts generated files and reports broken ones") {
  testutil::TempDir tmp("cli_validate");
  make_corpus(tmp.str("corpus"), 8, 4, 3);
  const std::string manifest = tmp.str("corpus") + "/manifest.csv";

  const auto ok = run_cli("eval --validate-corpus " +
                          common_flags(manifest, tmp.str("out")));
  CHECK(ok.code == 0);
  CHECK(has(ok.err, "checked 12 files: 0 malformed"));

  // Chop the trailer off one file: the run fails and names the file.
  const std::string victim = tmp.str("corpus") + "/ben_00002.pdf";
  auto bytes = read_file_bytes(victim);
  bytes.resize(bytes.size() / 2);
  write_file_bytes(victim, bytes);
  const auto bad = run_cli("eval --validate-corpus " +
                           common_flags(manifest, tmp.str("out")));
  CHECK(bad.code == 4);
  CHECK(has(bad.out, "ben_00002.pdf: "));
  CHECK(has(bad.err, "1 malformed"));
}

TEST_CASE("train, eval and scan produce consistent scores") {
  testutil::TempDir tmp("cli_pipeline");
  make_corpus(tmp.str("corpus"), 40, 20, 7);
  const std::string manifest = tmp.str("corpus") + "/manifest.csv";
  const std::string run = tmp.str("run");
  const std::string train_flags =
      common_flags(manifest, run) +
      " --arch A --ensemble-size 2 --epochs 2 --batch-size 16"
      " --input-length 512 --seed 5 --val-cutoff 2016-04-01"
      " --test-cutoff 2017-03-01";

  const auto trained = run_cli("train " + train_flags);
  REQUIRE(trained.code == 0);
  CHECK(has(trained.err, "wrote 2 checkpoints and ensemble.json"));
  for (const char* name : {"member_00.ckpt", "member_01.ckpt",
                           "member_00.train.csv", "member_01.train.csv",
                           "ensemble.json", "split_manifest.csv"}) {
    CAPTURE(name);
    CHECK(fs::exists(fs::path(run) / name));
  }
  const std::string descriptor = slurp(run + "/ensemble.json");
  CHECK(has(descriptor, "\"pdfscan ensemble\""));
  CHECK(has(descriptor, "\"member_00.ckpt\""));
  CHECK(has(descriptor, "\"member_01.ckpt\""));
  CHECK(has(descriptor, "\"arch\": \"A\""));

  // Same flags, fresh directory: training is reproducible byte for byte.
  const std::string rerun = tmp.str("rerun");
  REQUIRE(run_cli("train " + common_flags(manifest, rerun) +
                  " --arch A --ensemble-size 2 --epochs 2 --batch-size 16"
                  " --input-length 512 --seed 5 --val-cutoff 2016-04-01"
                  " --test-cutoff 2017-03-01").code == 0);
  CHECK(read_file_bytes(run + "/member_00.ckpt") ==
        read_file_bytes(rerun + "/member_00.ckpt"));
  CHECK(read_file_bytes(run + "/member_01.ckpt") ==
        read_file_bytes(rerun + "/member_01.ckpt"));

  // Evaluate against the split manifest saved by the training run.
  const std::string split_manifest = run + "/split_manifest.csv";
  const std::string eval_out = tmp.str("eval");
  const auto evaled = run_cli("eval " + common_flags(split_manifest, eval_out) +
                              " --model \"" + run + "/ensemble.json\"");
  REQUIRE(evaled.code == 0);
  CHECK(has(evaled.err, "ensemble of 2 (architecture A)"));
  for (const char* name :
       {"report.csv", "scores_train.csv", "scores_val.csv", "scores_test.csv",
        "roc_train.csv", "roc_val.csv", "roc_test.csv", "roc.svg"}) {
    CAPTURE(name);
    CHECK(fs::exists(fs::path(eval_out) / name));
  }
  CHECK(has(slurp(eval_out + "/roc.svg"), "<svg"));

  const auto report = pdfscan::csv::read_file(eval_out + "/report.csv");
  bool saw_threshold = false, saw_auc = false;
  for (const auto& row : report) {
    REQUIRE(row.size() == 3);
    saw_threshold = saw_threshold || (row[0] == "val" &&
                                      row[1] == "threshold_at_fpr_0.01");
    saw_auc = saw_auc || (row[0] == "test" && row[1] == "auc");
  }
  CHECK(saw_threshold);
  CHECK(saw_auc);

  // Scan the test split's files: the printed score strings must match the
  // eval CSV digit for digit, and verdicts must follow the threshold.
  const auto scores = pdfscan::csv::read_file(eval_out + "/scores_test.csv");
  REQUIRE(scores.size() > 1);
  REQUIRE(scores[0] ==
          std::vector<std::string>({"sample_id", "score", "label"}));
  std::string paths;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    paths += " \"" + (fs::path(run) / scores[i][0]).string() + "\"";
  }
  const auto scanned =
      run_cli("scan --model \"" + run + "/ensemble.json\" --threshold 0.5" +
              paths);
  REQUIRE(scanned.code == 0);
  std::vector<std::string> lines;
  for (std::size_t start = 0; start < scanned.out.size();) {
    const auto nl = scanned.out.find('\n', start);
    lines.push_back(scanned.out.substr(start, nl - start));
    start = (nl == std::string::npos) ? scanned.out.size() : nl + 1;
  }
  REQUIRE(lines.size() == scores.size() - 1);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    CAPTURE(lines[i]);
    const auto fields = pdfscan::csv::parse_line(lines[i]);
    REQUIRE(fields.size() == 3);
    CHECK(fields[1] == scores[i + 1][1]);
    const bool flagged = std::stod(fields[1]) >= 0.5;
    CHECK(fields[2] == (flagged ? "malicious@0.5" : "benign@0.5"));
  }

  // A single checkpoint also works as the model.
  const auto single = run_cli("eval " + common_flags(split_manifest,
                                                     tmp.str("eval_one")) +
                              " --model \"" + run + "/member_00.ckpt\"");
  CHECK(single.code == 0);
  CHECK(has(single.err, "single model (architecture A)"));

  CHECK(run_cli("eval " + common_flags(split_manifest, tmp.str("eval_x")) +
                " --model \"" + run + "/absent.ckpt\"").code == 4);
}

TEST_CASE("baseline forest trains, evaluates and scans") {
  testutil::TempDir tmp("cli_baseline");
  make_corpus(tmp.str("corpus"), 12, 6, 11);
  const std::string manifest = tmp.str("corpus") + "/manifest.csv";
  const std::string run = tmp.str("run");

  const auto trained = run_cli("train --baseline " + common_flags(manifest, run) +
                               " --seed 9 --val-cutoff 2016-05-01"
                               " --test-cutoff 2017-03-01");
  REQUIRE(trained.code == 0);
  CHECK(fs::exists(fs::path(run) / "baseline.ckpt"));
  const auto grid = pdfscan::csv::read_file(run + "/baseline_grid.csv");
  REQUIRE(grid.size() > 1);
  CHECK(grid[0] == std::vector<std::string>(
                       {"k", "val_detection_at_1pct", "chosen"}));
  int chosen = 0;
  for (std::size_t i = 1; i < grid.size(); ++i) chosen += grid[i][2] == "1";
  CHECK(chosen == 1);

  const auto evaled = run_cli("eval " +
                              common_flags(run + "/split_manifest.csv",
                                           tmp.str("eval")) +
                              " --model \"" + run + "/baseline.ckpt\"");
  CHECK(evaled.code == 0);
  CHECK(has(evaled.err, "tag forest"));

  const auto scanned = run_cli("scan --model \"" + run + "/baseline.ckpt\" \"" +
                               tmp.str("corpus") + "/mal_00000.pdf\" \"" +
                               tmp.str("corpus") + "/ben_00000.pdf\"");
  REQUIRE(scanned.code == 0);
  CHECK(has(scanned.out, "mal_00000.pdf,"));
  CHECK(has(scanned.out, "ben_00000.pdf,"));

  // A manifest is not a model file.
  CHECK(run_cli("scan --model \"" + manifest + "\" \"" + tmp.str("corpus") +
                "/ben_00000.pdf\"").code == 4);
}

TEST_CASE("clustering writes reports and rejects unsuitable inputs") {
  testutil::TempDir tmp("cli_cluster");
  make_corpus(tmp.str("corpus"), 16, 12, 21);
  const std::string manifest = tmp.str("corpus") + "/manifest.csv";
  const std::string run_b = tmp.str("run_b");
  const std::string run_a = tmp.str("run_a");

  REQUIRE(run_cli("train " + common_flags(manifest, run_b) +
                  " --arch B --ensemble-size 1 --epochs 1 --batch-size 16"
                  " --input-length 512 --seed 3 --val-cutoff 2016-04-01"
                  " --test-cutoff 2017-03-01").code == 0);
  REQUIRE(run_cli("train " + common_flags(manifest, run_a) +
                  " --arch A --ensemble-size 1 --epochs 1 --batch-size 16"
                  " --input-length 512 --seed 3 --val-cutoff 2016-04-01"
                  " --test-cutoff 2017-03-01").code == 0);

  const std::string out = tmp.str("clusters");
  const auto clustered = run_cli("cluster " + common_flags(manifest, out) +
                                 " --checkpoint \"" + run_b +
                                 "/member_00.ckpt\" --split all"
                                 " --min-cluster-size 3");
  REQUIRE(clustered.code == 0);
  CHECK(has(clustered.err, "12 samples -> "));
  for (const char* name :
       {"report.csv", "metrics.csv", "projection.csv", "clusters.svg"}) {
    CAPTURE(name);
    CHECK(fs::exists(fs::path(out) / name));
  }
  const auto report = pdfscan::csv::read_file(out + "/report.csv");
  REQUIRE(report.size() == 13);  // 12 samples, one vendor
  CHECK(report[0] == std::vector<std::string>(
                         {"sample_id", "cluster", "score", "vendor", "family"}));
  const auto metrics = pdfscan::csv::read_file(out + "/metrics.csv");
  CHECK(metrics[0] ==
        std::vector<std::string>({"cluster", "vendor", "homogeneity",
                                  "completeness", "detection", "size"}));
  CHECK(has(slurp(out + "/clusters.svg"), "<svg"));

  // Feature extraction needs the B architecture.
  const auto wrong_arch = run_cli("cluster " + common_flags(manifest, out) +
                                  " --checkpoint \"" + run_a +
                                  "/member_00.ckpt\" --split all");
  CHECK(wrong_arch.code == 5);
  CHECK(has(wrong_arch.err, "B architecture"));

  // The raw manifest carries no splits, so only --split all works.
  CHECK(run_cli("cluster " + common_flags(manifest, out) + " --checkpoint \"" +
                run_b + "/member_00.ckpt\" --split test").code == 5);
  CHECK(run_cli("cluster " + common_flags(manifest, out) + " --checkpoint \"" +
                run_b + "/member_00.ckpt\" --split all"
                " --min-cluster-size 1").code == 2);
  CHECK(run_cli("cluster " + common_flags(manifest, out) +
                " --split all").code == 1);  // --checkpoint is required
}

TEST_CASE("failures map to distinct exit codes") {
  testutil::TempDir tmp("cli_failures");
  make_corpus(tmp.str("corpus"), 12, 6, 13);
  const std::string manifest = tmp.str("corpus") + "/manifest.csv";

  SUBCASE("training divergence is exit 3") {
    const auto r = run_cli("train " + common_flags(manifest, tmp.str("run")) +
                           " --arch A --ensemble-size 1 --epochs 1"
                           " --batch-size 16 --input-length 64"
                           " --learning-rate 1e200 --val-cutoff 2016-05-01"
                           " --test-cutoff 2017-03-01");
    CHECK(r.code == 3);
    CHECK(has(r.err, "training diverged at epoch 1"));
  }
  SUBCASE("configuration problems are exit 2") {
    CHECK(run_cli("train --out \"" + tmp.str("run") + "\"").code == 2);
    CHECK(run_cli("train " + common_flags(manifest, tmp.str("run")) +
                  " --arch Z").code == 2);
    CHECK(run_cli("train " + common_flags(manifest, tmp.str("run")) +
                  " --val-cutoff 2016-05-01").code == 2);  // missing test cutoff
    CHECK(run_cli("train " + common_flags(manifest, tmp.str("run")) +
                  " --config \"" + tmp.str("absent.cfg") + "\"").code == 2);

    write_file_bytes(tmp.str("broken.cfg"), to_bytes("epochs: 4\n"));
    CHECK(run_cli("train " + common_flags(manifest, tmp.str("run")) +
                  " --config \"" + tmp.str("broken.cfg") + "\"").code == 2);
    write_file_bytes(tmp.str("unknown.cfg"), to_bytes("sharpness = 11\n"));
    CHECK(run_cli("train " + common_flags(manifest, tmp.str("run")) +
                  " --config \"" + tmp.str("unknown.cfg") + "\"").code == 2);
  }
  SUBCASE("evaluation problems are exit 4") {
    // The raw manifest has no split column.
    CHECK(run_cli("eval " + common_flags(manifest, tmp.str("out"))).code == 4);
    CHECK(run_cli("eval " + common_flags(tmp.str("absent.csv"),
                                         tmp.str("out"))).code == 4);
    CHECK(run_cli("scan --model \"" + tmp.str("absent.ckpt") + "\" \"" +
                  tmp.str("corpus") + "/ben_00000.pdf\"").code == 4);
  }
  SUBCASE("command-line flags override config file values") {
    write_file_bytes(
        tmp.str("run.cfg"),
        to_bytes("manifest = " + manifest +
                 "\narch = A\nensemble_size = 1\nepochs = 5\n"
                 "batch_size = 16\ninput_length = 64  # keep runs short\n"
                 "val_cutoff = 2016-05-01\ntest_cutoff = 2017-03-01\n"));
    const std::string run = tmp.str("cfg_run");
    const auto r = run_cli("train --config \"" + tmp.str("run.cfg") +
                           "\" --out \"" + run + "\" --epochs 1");
    REQUIRE(r.code == 0);
    const auto log = pdfscan::csv::read_file(run + "/member_00.train.csv");
    CHECK(log.size() == 2);  // header plus exactly one epoch
    CHECK(log[1][0] == "1");
  }
}
