#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pdfscan/dataset.hpp"
#include "pdfscan/metrics.hpp"
#include "pdfscan/model.hpp"

namespace pdfscan::training {

struct TrainConfig {
  models::ModelConfig model;
  int epochs = 10;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  // When set, malicious samples are weighted by n_benign / n_malicious of
  // the training split so both classes contribute equal total loss mass.
  bool weight_positive_class = false;
  double fpr_target = 0.01;  // operating point used for epoch selection
  void validate() const;
};

struct EpochLog {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_detection = 0.0;
  double wall_seconds = 0.0;
};

using EpochCallback = std::function<void(const EpochLog&)>;

struct TrainResult {
  models::ModelCheckpoint checkpoint;
  std::vector<EpochLog> log;
};

// Adam on shuffled mini-batches. After every epoch the parameters are
// snapshotted to float32 and the snapshot is scored on the validation
// split; the returned checkpoint is the epoch with the best validation
// detection at cfg.fpr_target (earliest epoch wins ties), so re-measuring
// the checkpoint reproduces meta.val_detection_at_1pct exactly.
//
// Throws TrainingError when either split lacks one of the classes or when
// a batch loss turns non-finite (the message names the 1-based epoch and
// batch).
TrainResult train_one(const TrainConfig& cfg, const data::Dataset& train,
                      const data::Dataset& val, std::uint64_t seed,
                      const EpochCallback& on_epoch = {});

struct EnsembleResult {
  std::vector<models::ModelCheckpoint> members;
  std::vector<std::vector<EpochLog>> logs;
};

// Members m = 0..n-1 train independently with seed + m.
EnsembleResult train_ensemble(const TrainConfig& cfg,
                              const data::Dataset& train,
                              const data::Dataset& val, std::uint64_t seed,
                              int n_members, const EpochCallback& on_epoch = {});

// Checkpoint-restored members; the ensemble score is the arithmetic mean
// of the member scores.
class ScoringEnsemble {
 public:
  explicit ScoringEnsemble(const std::vector<models::ModelCheckpoint>& members);
  std::size_t size() const { return nets_.size(); }
  const models::Network& member(std::size_t i) const { return nets_.at(i); }
  std::vector<double> member_scores(std::span<const std::uint8_t> bytes) const;
  double score(std::span<const std::uint8_t> bytes) const;

 private:
  std::vector<models::Network> nets_;
};

std::vector<metrics::ScoredSample> score_dataset(const ScoringEnsemble& ens,
                                                 const data::Dataset& ds,
                                                 int threads = 0);

}  // namespace pdfscan::training
