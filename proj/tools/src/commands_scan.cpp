#include <cstdio>
#include <string>
#include <vector>

#include "commands.hpp"
#include "pdfscan/bytes.hpp"
#include "pdfscan/errors.hpp"
#include "pdfscan/parallel.hpp"
#include "scoresource.hpp"
#include "textfmt.hpp"

namespace pdfscan::tools {

int run_scan(const ScanArgs& args) {
  try {
    if (args.model.empty()) throw ValidationError("--model is required");
    if (args.paths.empty()) throw ValidationError("no files to scan");
    const ScoreSource src = load_score_source(args.model);

    // Score in parallel, print in argument order.
    std::vector<double> scores(args.paths.size());
    const int n_threads = args.threads > 0 ? args.threads : default_thread_count();
    parallel_for(args.paths.size(), n_threads, [&](std::size_t i) {
      scores[i] = src.score(read_file_bytes(args.paths[i]));
    });
    for (std::size_t i = 0; i < args.paths.size(); ++i) {
      const char* verdict = scores[i] >= args.threshold ? "malicious" : "benign";
      std::printf("%s,%s,%s@%g\n", args.paths[i].c_str(),
                  fmt_g(scores[i]).c_str(), verdict, args.threshold);
    }
    return 0;
  } catch (const Error& e) {
    std::fprintf(stderr, "pdfscan scan: %s\n", e.what());
    return 4;
  }
}

}  // namespace pdfscan::tools
