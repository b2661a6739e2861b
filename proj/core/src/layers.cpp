#include "pdfscan/layers.hpp"

#include <algorithm>
#include <cmath>

namespace pdfscan::nn {

namespace {

// Four-accumulator dot product: fixed association order (deterministic
// across runs) while still auto-vectorizing.
double dot(const double* a, const double* b, int n) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

void axpy(double alpha, const double* x, double* y, int n) {
  for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}

bool row_all_zero(const double* r, int n) {
  for (int i = 0; i < n; ++i) {
    if (r[i] != 0.0) return false;
  }
  return true;
}

}  // namespace

void Embedding::init(Rng& rng) {
  weight.resize(static_cast<std::size_t>(dim) * 256);
  for (auto& w : weight) w = rng.uniform(-0.05, 0.05);
}

Tensor2D Embedding::forward(std::span<const std::uint8_t> bytes,
                            int length) const {
  require_shape(length >= 1, "embedding: non-positive sequence length");
  require_shape(weight.size() == static_cast<std::size_t>(dim) * 256,
                "embedding: weight size mismatch");
  Tensor2D out(length, dim);
  for (int r = 0; r < length; ++r) {
    const std::uint8_t byte =
        static_cast<std::size_t>(r) < bytes.size() ? bytes[r] : 0;
    double* dst = out.row(r);
    const double* col = weight.data() + byte;
    for (int j = 0; j < dim; ++j) dst[j] = col[static_cast<std::size_t>(j) * 256];
  }
  return out;
}

void Embedding::accumulate_grad(std::span<const std::uint8_t> bytes,
                                const Tensor2D& upstream,
                                std::vector<double>& grad_weight) const {
  require_shape(upstream.cols == dim, "embedding backward: dim mismatch");
  grad_weight.resize(weight.size());
  for (int r = 0; r < upstream.rows; ++r) {
    const double* u = upstream.row(r);
    if (row_all_zero(u, dim)) continue;
    const std::uint8_t byte =
        static_cast<std::size_t>(r) < bytes.size() ? bytes[r] : 0;
    double* col = grad_weight.data() + byte;
    for (int j = 0; j < dim; ++j) col[static_cast<std::size_t>(j) * 256] += u[j];
  }
}

void Conv1D::init(Rng& rng) {
  const int fan_in = window * in_channels;
  const double limit = std::sqrt(6.0 / fan_in);
  weight.resize(static_cast<std::size_t>(kernels) * fan_in);
  bias.assign(static_cast<std::size_t>(kernels), 0.0);
  for (auto& w : weight) w = rng.uniform(-limit, limit);
}

Tensor2D Conv1D::forward(const Tensor2D& x) const {
  require_shape(x.cols == in_channels, "conv1d: channel mismatch");
  require_shape(x.rows >= window, "conv1d: input shorter than window");
  require_finite(x, "conv1d");
  const int flat = window * in_channels;
  require_shape(weight.size() == static_cast<std::size_t>(kernels) * flat &&
                    bias.size() == static_cast<std::size_t>(kernels),
                "conv1d: weight size mismatch");
  const int t_out = out_rows(x.rows);
  Tensor2D out(t_out, kernels);
  for (int t = 0; t < t_out; ++t) {
    // The window covers `window` consecutive rows: contiguous memory.
    const double* win = x.row(t * stride);
    double* dst = out.row(t);
    const double* w = weight.data();
    for (int k = 0; k < kernels; ++k, w += flat) {
      dst[k] = bias[static_cast<std::size_t>(k)] + dot(w, win, flat);
    }
  }
  return out;
}

void Conv1D::backward(const Tensor2D& x, const Tensor2D& upstream,
                      Tensor2D* dx, std::vector<double>* dweight,
                      std::vector<double>* dbias) const {
  const int flat = window * in_channels;
  const int t_out = out_rows(x.rows);
  require_shape(upstream.rows == t_out && upstream.cols == kernels,
                "conv1d backward: upstream shape mismatch");
  if (dx) *dx = Tensor2D(x.rows, x.cols);
  if (dweight) dweight->resize(weight.size());
  if (dbias) dbias->resize(bias.size());
  for (int t = 0; t < t_out; ++t) {
    const double* u = upstream.row(t);
    if (row_all_zero(u, kernels)) continue;
    const double* win = x.row(t * stride);
    double* dwin = dx ? dx->row(t * stride) : nullptr;
    for (int k = 0; k < kernels; ++k) {
      const double uk = u[k];
      if (uk == 0.0) continue;
      const double* w = weight.data() + static_cast<std::size_t>(k) * flat;
      if (dbias) (*dbias)[static_cast<std::size_t>(k)] += uk;
      if (dweight) {
        axpy(uk, win, dweight->data() + static_cast<std::size_t>(k) * flat,
             flat);
      }
      if (dwin) axpy(uk, w, dwin, flat);
    }
  }
}

void Dense::init(Rng& rng) {
  const double limit = std::sqrt(6.0 / in);
  weight.resize(static_cast<std::size_t>(out) * in);
  bias.assign(static_cast<std::size_t>(out), 0.0);
  for (auto& w : weight) w = rng.uniform(-limit, limit);
}

std::vector<double> Dense::forward(std::span<const double> x) const {
  require_shape(static_cast<int>(x.size()) == in, "dense: input size mismatch");
  for (double v : x) {
    if (!std::isfinite(v)) throw ContractError("dense: non-finite input value");
  }
  std::vector<double> y(static_cast<std::size_t>(out));
  for (int o = 0; o < out; ++o) {
    y[static_cast<std::size_t>(o)] =
        bias[static_cast<std::size_t>(o)] +
        dot(weight.data() + static_cast<std::size_t>(o) * in, x.data(), in);
  }
  return y;
}

void Dense::backward(std::span<const double> x, std::span<const double> upstream,
                     std::vector<double>* dx, std::vector<double>* dweight,
                     std::vector<double>* dbias) const {
  require_shape(static_cast<int>(x.size()) == in &&
                    static_cast<int>(upstream.size()) == out,
                "dense backward: shape mismatch");
  if (dx) dx->assign(static_cast<std::size_t>(in), 0.0);
  if (dweight) dweight->resize(weight.size());
  if (dbias) dbias->resize(bias.size());
  for (int o = 0; o < out; ++o) {
    const double uo = upstream[static_cast<std::size_t>(o)];
    if (uo == 0.0) continue;
    if (dbias) (*dbias)[static_cast<std::size_t>(o)] += uo;
    if (dweight) {
      axpy(uo, x.data(), dweight->data() + static_cast<std::size_t>(o) * in,
           in);
    }
    if (dx) {
      axpy(uo, weight.data() + static_cast<std::size_t>(o) * in, dx->data(),
           in);
    }
  }
}

void BatchNorm::init() {
  gamma.assign(static_cast<std::size_t>(channels), 1.0);
  beta.assign(static_cast<std::size_t>(channels), 0.0);
  running_mean.assign(static_cast<std::size_t>(channels), 0.0);
  running_var.assign(static_cast<std::size_t>(channels), 1.0);
}

BatchNorm::Cache BatchNorm::forward_train(std::vector<Tensor2D>& batch,
                                          bool update_running) {
  Cache cache;
  cache.mean.assign(static_cast<std::size_t>(channels), 0.0);
  cache.var.assign(static_cast<std::size_t>(channels), 0.0);
  std::size_t count = 0;
  for (const auto& t : batch) {
    require_shape(t.cols == channels, "batchnorm: channel mismatch");
    require_finite(t, "batchnorm");
    count += static_cast<std::size_t>(t.rows);
  }
  require_shape(count >= 2, "batchnorm: train mode needs >= 2 values per channel");
  cache.count = count;

  for (const auto& t : batch) {
    for (int r = 0; r < t.rows; ++r) {
      const double* row = t.row(r);
      for (int c = 0; c < channels; ++c) cache.mean[static_cast<std::size_t>(c)] += row[c];
    }
  }
  for (auto& m : cache.mean) m /= static_cast<double>(count);
  for (const auto& t : batch) {
    for (int r = 0; r < t.rows; ++r) {
      const double* row = t.row(r);
      for (int c = 0; c < channels; ++c) {
        const double d = row[c] - cache.mean[static_cast<std::size_t>(c)];
        cache.var[static_cast<std::size_t>(c)] += d * d;
      }
    }
  }
  for (auto& v : cache.var) v /= static_cast<double>(count);

  for (auto& t : batch) {
    for (int r = 0; r < t.rows; ++r) {
      double* row = t.row(r);
      for (int c = 0; c < channels; ++c) {
        const std::size_t ci = static_cast<std::size_t>(c);
        const double xhat =
            (row[c] - cache.mean[ci]) / std::sqrt(cache.var[ci] + eps);
        row[c] = gamma[ci] * xhat + beta[ci];
      }
    }
  }
  if (update_running) {
    for (int c = 0; c < channels; ++c) {
      const std::size_t ci = static_cast<std::size_t>(c);
      running_mean[ci] =
          (1.0 - momentum) * running_mean[ci] + momentum * cache.mean[ci];
      running_var[ci] =
          (1.0 - momentum) * running_var[ci] + momentum * cache.var[ci];
    }
  }
  return cache;
}

void BatchNorm::forward_eval(Tensor2D& x) const {
  require_shape(x.cols == channels, "batchnorm: channel mismatch");
  for (int r = 0; r < x.rows; ++r) {
    double* row = x.row(r);
    for (int c = 0; c < channels; ++c) {
      const std::size_t ci = static_cast<std::size_t>(c);
      row[c] = gamma[ci] * (row[c] - running_mean[ci]) /
                   std::sqrt(running_var[ci] + eps) +
               beta[ci];
    }
  }
}

void BatchNorm::backward(const std::vector<Tensor2D>& pre_normalized,
                         const Cache& cache,
                         const std::vector<Tensor2D>& upstream,
                         std::vector<Tensor2D>* dx,
                         std::vector<double>* dgamma,
                         std::vector<double>* dbeta) const {
  const double m = static_cast<double>(cache.count);
  if (dgamma) dgamma->resize(static_cast<std::size_t>(channels));
  if (dbeta) dbeta->resize(static_cast<std::size_t>(channels));
  if (dx) {
    dx->clear();
    for (const auto& t : pre_normalized) dx->emplace_back(t.rows, t.cols);
  }

  // Channel-wise sums needed by the standard batch-norm backward pass.
  std::vector<double> sum_u(static_cast<std::size_t>(channels), 0.0);
  std::vector<double> sum_u_xhat(static_cast<std::size_t>(channels), 0.0);
  for (std::size_t b = 0; b < upstream.size(); ++b) {
    const auto& u = upstream[b];
    const auto& x = pre_normalized[b];
    require_shape(u.same_shape(x), "batchnorm backward: shape mismatch");
    for (int r = 0; r < u.rows; ++r) {
      const double* urow = u.row(r);
      const double* xrow = x.row(r);
      for (int c = 0; c < channels; ++c) {
        const std::size_t ci = static_cast<std::size_t>(c);
        const double xhat =
            (xrow[c] - cache.mean[ci]) / std::sqrt(cache.var[ci] + eps);
        sum_u[ci] += urow[c];
        sum_u_xhat[ci] += urow[c] * xhat;
      }
    }
  }
  if (dgamma) *dgamma = sum_u_xhat;
  if (dbeta) *dbeta = sum_u;
  if (!dx) return;

  for (std::size_t b = 0; b < upstream.size(); ++b) {
    const auto& u = upstream[b];
    const auto& x = pre_normalized[b];
    auto& g = (*dx)[b];
    for (int r = 0; r < u.rows; ++r) {
      const double* urow = u.row(r);
      const double* xrow = x.row(r);
      double* grow = g.row(r);
      for (int c = 0; c < channels; ++c) {
        const std::size_t ci = static_cast<std::size_t>(c);
        const double inv_std = 1.0 / std::sqrt(cache.var[ci] + eps);
        const double xhat = (xrow[c] - cache.mean[ci]) * inv_std;
        // dL/dx = gamma*inv_std/m * (m*u - sum(u) - xhat*sum(u*xhat))
        grow[c] = gamma[ci] * inv_std / m *
                  (m * urow[c] - sum_u[ci] - xhat * sum_u_xhat[ci]);
      }
    }
  }
}

void relu_inplace(Tensor2D& x) {
  for (auto& v : x.v) v = v > 0.0 ? v : 0.0;
}

void relu_inplace(std::vector<double>& x) {
  for (auto& v : x) v = v > 0.0 ? v : 0.0;
}

void relu_backward_inplace(const Tensor2D& pre, Tensor2D& grad) {
  require_shape(pre.same_shape(grad), "relu backward: shape mismatch");
  for (std::size_t i = 0; i < grad.v.size(); ++i) {
    if (pre.v[i] <= 0.0) grad.v[i] = 0.0;
  }
}

void relu_backward_inplace(std::span<const double> pre,
                           std::vector<double>& grad) {
  require_shape(pre.size() == grad.size(), "relu backward: shape mismatch");
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (pre[i] <= 0.0) grad[i] = 0.0;
  }
}

double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

PoolResult global_max_pool(const Tensor2D& x) {
  require_shape(x.rows >= 1, "global_max_pool: empty input");
  require_finite(x, "global_max_pool");
  PoolResult out;
  out.values.assign(static_cast<std::size_t>(x.cols), 0.0);
  out.argmax.assign(static_cast<std::size_t>(x.cols), 0);
  for (int c = 0; c < x.cols; ++c) {
    double best = x.at(0, c);
    int best_row = 0;
    for (int r = 1; r < x.rows; ++r) {
      const double v = x.at(r, c);
      if (v > best) {  // strict: ties keep the smallest row index
        best = v;
        best_row = r;
      }
    }
    out.values[static_cast<std::size_t>(c)] = best;
    out.argmax[static_cast<std::size_t>(c)] = best_row;
  }
  return out;
}

void global_max_pool_backward(const PoolResult& pool,
                              std::span<const double> upstream, Tensor2D& dx) {
  require_shape(upstream.size() == pool.values.size() &&
                    static_cast<int>(upstream.size()) == dx.cols,
                "global_max_pool backward: shape mismatch");
  for (int c = 0; c < dx.cols; ++c) {
    dx.at(pool.argmax[static_cast<std::size_t>(c)], c) +=
        upstream[static_cast<std::size_t>(c)];
  }
}

std::vector<double> dropout_mask(std::size_t n, double p, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw ContractError("dropout: p must lie in [0, 1)");
  }
  std::vector<double> mask(n);
  const double keep_scale = 1.0 / (1.0 - p);
  for (auto& m : mask) m = rng.next_double() < p ? 0.0 : keep_scale;
  return mask;
}

double bce_loss_from_logit(double z, double y) {
  // -[y log s + (1-y) log(1-s)] with s = sigmoid(z), rearranged to avoid
  // overflow for large |z|.
  return std::max(z, 0.0) - y * z + std::log1p(std::exp(-std::abs(z)));
}

double bce_dlogit(double z, double y) { return sigmoid(z) - y; }

}  // namespace pdfscan::nn
