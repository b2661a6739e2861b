#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pdfscan/rng.hpp"
#include "pdfscan/tensor.hpp"

namespace pdfscan::nn {

// Output length of a strided window sweep; valid (>= 1) whenever
// in_rows >= window.
constexpr int conv_output_length(int in_rows, int window, int stride) {
  return (in_rows - window) / stride + 1;
}

// Learned byte embedding: each byte value 0..255 maps to a column of W
// (dim x 256). Positions past the end of `bytes` read as byte 0, which is
// exactly the zero-padding rule for short files.
struct Embedding {
  int dim = 16;
  std::vector<double> weight;  // dim x 256, row-major

  void init(Rng& rng);  // uniform in [-0.05, 0.05]
  Tensor2D forward(std::span<const std::uint8_t> bytes, int length) const;
  void accumulate_grad(std::span<const std::uint8_t> bytes,
                       const Tensor2D& upstream,
                       std::vector<double>& grad_weight) const;
};

// 1-D convolution over a (positions x channels) map. A window spans
// `window` consecutive rows, which are contiguous in row-major storage, so
// each output value is a single dense dot product.
struct Conv1D {
  int window = 0;
  int stride = 0;
  int kernels = 0;
  int in_channels = 0;
  std::vector<double> weight;  // kernels x (window * in_channels)
  std::vector<double> bias;    // kernels

  void init(Rng& rng);  // He-uniform, limit sqrt(6 / fan_in)
  int out_rows(int in_rows) const {
    return conv_output_length(in_rows, window, stride);
  }
  Tensor2D forward(const Tensor2D& x) const;
  // Accumulates into *dweight/*dbias (when non-null); overwrites *dx.
  // Rows of `upstream` that are entirely zero are skipped, which makes the
  // post-max-pool backward pass cheap without a separate sparse path.
  void backward(const Tensor2D& x, const Tensor2D& upstream, Tensor2D* dx,
                std::vector<double>* dweight,
                std::vector<double>* dbias) const;
};

struct Dense {
  int in = 0;
  int out = 0;
  std::vector<double> weight;  // out x in
  std::vector<double> bias;    // out

  void init(Rng& rng);  // He-uniform
  std::vector<double> forward(std::span<const double> x) const;
  void backward(std::span<const double> x, std::span<const double> upstream,
                std::vector<double>* dx, std::vector<double>* dweight,
                std::vector<double>* dbias) const;
};

// Per-channel batch normalization over all positions of all batch members.
// Train mode uses batch statistics (and needs a batch with >= 2 values per
// channel); eval mode uses the running estimates.
struct BatchNorm {
  int channels = 0;
  double eps = 1e-5;
  double momentum = 0.1;
  std::vector<double> gamma, beta, running_mean, running_var;

  void init();

  struct Cache {
    std::vector<double> mean, var;  // per channel, biased variance
    std::size_t count = 0;          // values per channel in the batch
  };
  // Normalizes in place; optionally folds the batch statistics into the
  // running estimates.
  Cache forward_train(std::vector<Tensor2D>& batch, bool update_running);
  void forward_eval(Tensor2D& x) const;
  void backward(const std::vector<Tensor2D>& pre_normalized,
                const Cache& cache, const std::vector<Tensor2D>& upstream,
                std::vector<Tensor2D>* dx, std::vector<double>* dgamma,
                std::vector<double>* dbeta) const;
};

void relu_inplace(Tensor2D& x);
void relu_inplace(std::vector<double>& x);
// grad *= (pre > 0); `pre` is the pre-activation input.
void relu_backward_inplace(const Tensor2D& pre, Tensor2D& grad);
void relu_backward_inplace(std::span<const double> pre,
                           std::vector<double>& grad);

double sigmoid(double z);

// Column-wise max with recorded argmax rows; ties resolve to the smallest
// row index. Empty input (0 rows) is a contract violation.
struct PoolResult {
  std::vector<double> values;
  std::vector<int> argmax;
};
PoolResult global_max_pool(const Tensor2D& x);
// Routes upstream[c] to dx(argmax[c], c); accumulates.
void global_max_pool_backward(const PoolResult& pool,
                              std::span<const double> upstream, Tensor2D& dx);

// Inverted dropout: entries are 0 with probability p, else 1/(1-p), so the
// expected value of mask[i]*x[i] is x[i]. p must lie in [0, 1).
std::vector<double> dropout_mask(std::size_t n, double p, Rng& rng);

// Numerically stable binary cross-entropy evaluated on the logit z (the
// value before the sigmoid); y is 0 or 1.
double bce_loss_from_logit(double z, double y);
double bce_dlogit(double z, double y);  // d(loss)/dz = sigmoid(z) - y

}  // namespace pdfscan::nn
