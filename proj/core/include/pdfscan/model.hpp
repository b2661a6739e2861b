#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pdfscan/bytes.hpp"
#include "pdfscan/layers.hpp"

namespace pdfscan::models {

enum class ArchitectureId { A, B, C };

char arch_letter(ArchitectureId arch);
ArchitectureId arch_from_letter(char letter);  // throws UnknownArchError

struct ConvBlockSpec {
  int window = 0;
  int stride = 0;
  int kernels = 0;
  bool batch_norm = false;

  bool operator==(const ConvBlockSpec&) const = default;
};

// Full architecture description. canonical() gives the production shapes;
// tests and desk-scale experiments shrink input_length (and layer sizes)
// through the same fields rather than through separate code paths.
struct ModelConfig {
  ArchitectureId arch = ArchitectureId::A;
  int input_length = static_cast<int>(kSequenceLength);
  int embed_dim = 16;
  std::vector<ConvBlockSpec> convs;
  int hidden = 0;  // 0 = no hidden dense layer
  bool hidden_batch_norm = false;
  double dropout_p = 0.0;

  bool operator==(const ModelConfig&) const = default;

  static ModelConfig canonical(ArchitectureId arch);
  void validate() const;  // throws ValidationError

  // Width of the pooled feature vector (= kernel count of the last conv).
  int feature_width() const;
  // Map length after each conv stage, starting from input_length.
  std::vector<int> stage_lengths() const;
  // True when any conv stage or the hidden layer normalizes batches.
  bool uses_batch_norm() const;
};

struct ParamBlock {
  std::string name;
  std::vector<int> shape;
  bool trainable = true;
  std::vector<float> values;  // checkpoint storage is 32-bit
};

struct TrainMeta {
  std::uint64_t seed = 0;
  int epochs_run = 0;
  int selected_epoch = 0;  // 1-based epoch the snapshot was taken at
  double val_detection_at_1pct = 0.0;
  std::vector<double> val_detection_by_epoch;
};

struct ModelCheckpoint {
  ModelConfig config;
  std::vector<ParamBlock> blocks;
  TrainMeta meta;
};

// The byte CNN: embedding, conv stack (with optional per-stage batch norm),
// global max pool, optional hidden dense layer, sigmoid output head.
class Network {
 public:
  // Fresh seeded initialization (embedding uniform +-0.05, conv/dense
  // He-uniform, biases zero, batch-norm identity).
  Network(const ModelConfig& config, std::uint64_t seed);
  // Restore from a checkpoint; block names and shapes must match the
  // checkpoint's own architecture description exactly.
  explicit Network(const ModelCheckpoint& checkpoint);

  const ModelConfig& config() const { return config_; }

  struct Evaluation {
    double score = 0.0;
    std::vector<double> features;  // pooled per-kernel activations
  };
  // Eval mode: running batch-norm stats, dropout disabled. The score and
  // the feature vector come from the same forward pass.
  Evaluation evaluate(std::span<const std::uint8_t> bytes) const;
  Evaluation evaluate(const ByteSequence& seq) const {
    return evaluate(seq.view());
  }
  double score(std::span<const std::uint8_t> bytes) const {
    return evaluate(bytes).score;
  }
  std::vector<double> features(std::span<const std::uint8_t> bytes) const {
    return evaluate(bytes).features;
  }

  // Train-mode forward + backward over a batch. Returns the mean
  // binary-cross-entropy loss; fills `grads` aligned with
  // trainable_blocks(). Dropout masks are drawn from `dropout_rng`;
  // positive_weight scales the loss of malicious samples.
  double forward_backward(const std::vector<std::span<const std::uint8_t>>& batch,
                          const std::vector<double>& labels, Rng& dropout_rng,
                          bool update_running_stats,
                          std::vector<std::vector<double>>& grads,
                          double positive_weight = 1.0);
  // Train-mode loss only (identical dropout handling); used by gradient
  // checks.
  double batch_loss(const std::vector<std::span<const std::uint8_t>>& batch,
                    const std::vector<double>& labels, Rng& dropout_rng,
                    double positive_weight = 1.0);

  struct BlockRef {
    std::string name;
    std::vector<int> shape;
    bool trainable = true;
    std::vector<double>* data = nullptr;
  };
  // Stable declaration order; checkpoints serialize exactly this list.
  std::vector<BlockRef> blocks();
  std::vector<BlockRef> trainable_blocks();
  std::size_t param_count();  // trainable values only

  ModelCheckpoint to_checkpoint(const TrainMeta& meta = {});

 private:
  void build_layers();
  void load_blocks(const std::vector<ParamBlock>& blocks);

  ModelConfig config_;
  nn::Embedding embed_;
  std::vector<nn::Conv1D> convs_;
  std::vector<std::optional<nn::BatchNorm>> conv_bns_;
  std::optional<nn::Dense> hidden_;
  std::optional<nn::BatchNorm> hidden_bn_;
  nn::Dense out_;
};

}  // namespace pdfscan::models
