#include "pdfscan/training.hpp"

#include <chrono>
#include <cmath>

#include "pdfscan/errors.hpp"
#include "pdfscan/parallel.hpp"
#include "pdfscan/rng.hpp"

namespace pdfscan::training {

namespace {

void require_both_classes(const data::Dataset& ds, const char* which) {
  if (ds.count(Label::benign) == 0 || ds.count(Label::malicious) == 0) {
    throw TrainingError(std::string(which) +
                        " split needs both benign and malicious samples");
  }
}

// Consecutive index chunks after a seeded shuffle. Batch norm cannot
// normalize a batch of one, so a trailing singleton is folded into the
// previous batch for models that use it.
std::vector<std::vector<std::size_t>> make_batches(std::size_t n,
                                                   int batch_size,
                                                   bool needs_pairs,
                                                   Rng& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  shuffle(idx, rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n;
       start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end =
        std::min(n, start + static_cast<std::size_t>(batch_size));
    batches.emplace_back(idx.begin() + start, idx.begin() + end);
  }
  if (needs_pairs && batches.size() >= 2 && batches.back().size() == 1) {
    batches[batches.size() - 2].push_back(batches.back()[0]);
    batches.pop_back();
  }
  if (needs_pairs && batches.size() == 1 && batches[0].size() == 1) {
    throw TrainingError("batch norm needs at least two training samples");
  }
  return batches;
}

double validation_detection(const models::ModelCheckpoint& snapshot,
                            const data::Dataset& val, double fpr_target) {
  const models::Network net(snapshot);
  std::vector<metrics::ScoredSample> scored(val.size());
  for (std::size_t i = 0; i < val.size(); ++i) {
    scored[i] = {net.score(val.samples[i].view()), val.samples[i].malicious};
  }
  return metrics::detection_at_fpr(scored, fpr_target).detection;
}

}  // namespace

void TrainConfig::validate() const {
  model.validate();
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (batch_size < 2 && model.uses_batch_norm()) {
    throw ValidationError("batch_size must be >= 2 with batch norm");
  }
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("learning_rate must be positive and finite");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ValidationError("adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ValidationError("adam_eps must be positive");
  if (!(fpr_target >= 0.0 && fpr_target <= 1.0)) {
    throw ValidationError("fpr_target must lie in [0, 1]");
  }
}

TrainResult train_one(const TrainConfig& cfg, const data::Dataset& train,
                      const data::Dataset& val, std::uint64_t seed,
                      const EpochCallback& on_epoch) {
  cfg.validate();
  require_both_classes(train, "training");
  require_both_classes(val, "validation");

  const double positive_weight =
      cfg.weight_positive_class
          ? static_cast<double>(train.count(Label::benign)) /
                static_cast<double>(train.count(Label::malicious))
          : 1.0;

  models::Network net(cfg.model, seed);
  auto refs = net.trainable_blocks();
  std::vector<std::vector<double>> adam_m(refs.size()), adam_v(refs.size());
  for (std::size_t i = 0; i < refs.size(); ++i) {
    adam_m[i].assign(refs[i].data->size(), 0.0);
    adam_v[i].assign(refs[i].data->size(), 0.0);
  }

  const auto views = data::sample_views(train);
  const auto labels = data::sample_labels(train);
  const bool needs_pairs = cfg.model.uses_batch_norm();

  TrainResult result;
  models::ModelCheckpoint best;
  int best_epoch = 0;
  double best_detection = 0.0;
  std::vector<double> detection_by_epoch;
  std::vector<std::vector<double>> grads;
  long long adam_t = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng shuffle_rng(derive_seed(seed, 21, static_cast<std::uint64_t>(epoch)));
    Rng dropout_rng(derive_seed(seed, 20, static_cast<std::uint64_t>(epoch)));
    const auto batches =
        make_batches(train.size(), cfg.batch_size, needs_pairs, shuffle_rng);

    double loss_sum = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      std::vector<std::span<const std::uint8_t>> batch_views;
      std::vector<double> batch_labels;
      for (std::size_t i : batches[b]) {
        batch_views.push_back(views[i]);
        batch_labels.push_back(labels[i]);
      }
      double loss = 0.0;
      try {
        loss = net.forward_backward(batch_views, batch_labels, dropout_rng,
                                    /*update_running_stats=*/true, grads,
                                    positive_weight);
      } catch (const ContractError& e) {
        // Exploding parameters overflow inside a layer before the batch
        // loss exists; the layer-boundary finiteness guard reports it.
        throw TrainingError("training diverged at epoch " +
                            std::to_string(epoch) + ", batch " +
                            std::to_string(b + 1) + " (" + e.what() + ")");
      }
      if (!std::isfinite(loss)) {
        throw TrainingError("training diverged at epoch " +
                            std::to_string(epoch) + ", batch " +
                            std::to_string(b + 1));
      }
      loss_sum += loss * static_cast<double>(batches[b].size());

      ++adam_t;
      const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(adam_t));
      const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(adam_t));
      for (std::size_t i = 0; i < refs.size(); ++i) {
        auto& w = *refs[i].data;
        for (std::size_t j = 0; j < w.size(); ++j) {
          const double g = grads[i][j];
          adam_m[i][j] = cfg.beta1 * adam_m[i][j] + (1.0 - cfg.beta1) * g;
          adam_v[i][j] = cfg.beta2 * adam_v[i][j] + (1.0 - cfg.beta2) * g * g;
          const double mhat = adam_m[i][j] / bc1;
          const double vhat = adam_v[i][j] / bc2;
          w[j] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
        }
      }
    }

    auto snapshot = net.to_checkpoint();
    double detection = 0.0;
    try {
      detection = validation_detection(snapshot, val, cfg.fpr_target);
    } catch (const ContractError& e) {
      // Parameters that blew up on the epoch's last update surface here,
      // when the snapshot scores the validation split.
      throw TrainingError("training diverged at epoch " +
                          std::to_string(epoch) + " (" + e.what() + ")");
    }
    detection_by_epoch.push_back(detection);
    if (best_epoch == 0 || detection > best_detection) {
      best = std::move(snapshot);
      best_epoch = epoch;
      best_detection = detection;
    }

    EpochLog row;
    row.epoch = epoch;
    row.train_loss = loss_sum / static_cast<double>(train.size());
    row.val_detection = detection;
    row.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    result.log.push_back(row);
    if (on_epoch) on_epoch(row);
  }

  best.meta.seed = seed;
  best.meta.epochs_run = cfg.epochs;
  best.meta.selected_epoch = best_epoch;
  best.meta.val_detection_at_1pct = best_detection;
  best.meta.val_detection_by_epoch = std::move(detection_by_epoch);
  result.checkpoint = std::move(best);
  return result;
}

EnsembleResult train_ensemble(const TrainConfig& cfg,
                              const data::Dataset& train,
                              const data::Dataset& val, std::uint64_t seed,
                              int n_members, const EpochCallback& on_epoch) {
  if (n_members < 1) throw ValidationError("n_members must be >= 1");
  EnsembleResult result;
  for (int m = 0; m < n_members; ++m) {
    try {
      auto one = train_one(cfg, train, val,
                           seed + static_cast<std::uint64_t>(m), on_epoch);
      result.members.push_back(std::move(one.checkpoint));
      result.logs.push_back(std::move(one.log));
    } catch (const TrainingError& e) {
      throw TrainingError("member " + std::to_string(m) + ": " + e.what());
    }
  }
  return result;
}

ScoringEnsemble::ScoringEnsemble(
    const std::vector<models::ModelCheckpoint>& members) {
  if (members.empty()) throw ContractError("ensemble needs at least one member");
  nets_.reserve(members.size());
  for (const auto& ckpt : members) nets_.emplace_back(ckpt);
}

std::vector<double> ScoringEnsemble::member_scores(
    std::span<const std::uint8_t> bytes) const {
  std::vector<double> scores;
  scores.reserve(nets_.size());
  for (const auto& net : nets_) scores.push_back(net.score(bytes));
  return scores;
}

double ScoringEnsemble::score(std::span<const std::uint8_t> bytes) const {
  double sum = 0.0;
  for (const auto& net : nets_) sum += net.score(bytes);
  return sum / static_cast<double>(nets_.size());
}

std::vector<metrics::ScoredSample> score_dataset(const ScoringEnsemble& ens,
                                                 const data::Dataset& ds,
                                                 int threads) {
  std::vector<metrics::ScoredSample> scored(ds.size());
  const int n_threads = threads > 0 ? threads : default_thread_count();
  parallel_for(ds.size(), n_threads, [&](std::size_t i) {
    scored[i] = {ens.score(ds.samples[i].view()), ds.samples[i].malicious};
  });
  return scored;
}

}  // namespace pdfscan::training
