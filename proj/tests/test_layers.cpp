#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "pdfscan/errors.hpp"
#include "pdfscan/layers.hpp"
#include "pdfscan/rng.hpp"
#include "testutil.hpp"

using namespace pdfscan;
using namespace pdfscan::nn;

namespace {

constexpr double kFdStep = 1e-5;
constexpr double kLayerTol = 1e-4;  // relative error bound per layer

double rel_err(double got, double want) {
  const double scale = std::max({1e-9, std::fabs(got), std::fabs(want)});
  return std::fabs(got - want) / scale;
}

// Deterministic scalar projection of a tensor, used as the loss for
// finite-difference checks: loss = sum c_ij * x_ij with fixed pseudo-random
// coefficients. Gradient w.r.t. x is exactly c.
struct Projection {
  std::vector<double> c;
  explicit Projection(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    c.resize(n);
    for (auto& v : c) v = rng.next_double() * 2.0 - 1.0;
  }
  double loss(const Tensor2D& x) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < x.v.size(); ++i) sum += c[i] * x.v[i];
    return sum;
  }
  double loss(std::span<const double> x) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) sum += c[i] * x[i];
    return sum;
  }
  Tensor2D upstream(int rows, int cols) const {
    Tensor2D u(rows, cols);
    u.v.assign(c.begin(), c.begin() + u.v.size());
    return u;
  }
};

// Central finite difference of f around *slot.
template <typename F>
double fd(double* slot, F&& f) {
  const double saved = *slot;
  *slot = saved + kFdStep;
  const double hi = f();
  *slot = saved - kFdStep;
  const double lo = f();
  *slot = saved;
  return (hi - lo) / (2.0 * kFdStep);
}

Tensor2D random_tensor(int rows, int cols, Rng& rng, double scale = 1.0) {
  Tensor2D x(rows, cols);
  for (auto& v : x.v) v = (rng.next_double() * 2.0 - 1.0) * scale;
  return x;
}

}  // namespace

TEST_CASE("conv output length formula") {
  CHECK(conv_output_length(200'000, 16, 4) == 49'997);
  CHECK(conv_output_length(49'997, 16, 4) == 12'496);
  CHECK(conv_output_length(12'496, 4, 2) == 6'247);
  CHECK(conv_output_length(16, 16, 4) == 1);
  CHECK(conv_output_length(20, 16, 4) == 2);
}

TEST_CASE("conv forward matches a triple-loop oracle on random configs") {
  Rng rng(101);
  for (int rep = 0; rep < 100; ++rep) {
    Conv1D conv;
    conv.window = 1 + static_cast<int>(rng.next_u64() % 6);
    conv.stride = 1 + static_cast<int>(rng.next_u64() % 4);
    conv.kernels = 1 + static_cast<int>(rng.next_u64() % 8);
    conv.in_channels = 1 + static_cast<int>(rng.next_u64() % 5);
    conv.init(rng);
    const int rows =
        conv.window + static_cast<int>(rng.next_u64() % 40);
    const Tensor2D x = random_tensor(rows, conv.in_channels, rng);

    const Tensor2D got = conv.forward(x);
    const int out_rows = conv.out_rows(rows);
    REQUIRE(got.rows == out_rows);
    REQUIRE(got.cols == conv.kernels);

    for (int o = 0; o < out_rows; ++o) {
      for (int k = 0; k < conv.kernels; ++k) {
        double want = conv.bias[static_cast<std::size_t>(k)];
        for (int w = 0; w < conv.window; ++w) {
          for (int c = 0; c < conv.in_channels; ++c) {
            want += x.at(o * conv.stride + w, c) *
                    conv.weight[static_cast<std::size_t>(k) *
                                    (conv.window * conv.in_channels) +
                                static_cast<std::size_t>(w * conv.in_channels + c)];
          }
        }
        REQUIRE(std::fabs(got.at(o, k) - want) <= 1e-9);
      }
    }
  }
}

TEST_CASE("conv rejects malformed inputs") {
  Conv1D conv;
  conv.window = 4;
  conv.stride = 2;
  conv.kernels = 3;
  conv.in_channels = 2;
  Rng rng(1);
  conv.init(rng);
  CHECK_THROWS_AS(conv.forward(Tensor2D(5, 3)), ContractError);  // channels
  CHECK_THROWS_AS(conv.forward(Tensor2D(3, 2)), ContractError);  // too short
  Tensor2D bad(6, 2);
  bad.at(1, 1) = std::nan("");
  CHECK_THROWS_AS(conv.forward(bad), ContractError);
}

TEST_CASE("embedding forward looks up columns and zero-pads the tail") {
  Embedding embed;
  embed.dim = 3;
  Rng rng(5);
  embed.init(rng);
  const std::vector<std::uint8_t> bytes = {7, 255, 0};
  const Tensor2D out = embed.forward(bytes, 5);
  REQUIRE(out.rows == 5);
  REQUIRE(out.cols == 3);
  for (int d = 0; d < 3; ++d) {
    CHECK(out.at(0, d) == embed.weight[static_cast<std::size_t>(d) * 256 + 7]);
    CHECK(out.at(1, d) == embed.weight[static_cast<std::size_t>(d) * 256 + 255]);
    // Explicit byte 0 and padding past the end read the same column.
    CHECK(out.at(2, d) == embed.weight[static_cast<std::size_t>(d) * 256 + 0]);
    CHECK(out.at(3, d) == out.at(2, d));
    CHECK(out.at(4, d) == out.at(2, d));
  }
  CHECK(embed.weight.size() == 3 * 256);
  for (double w : embed.weight) CHECK(std::fabs(w) <= 0.05);
}

TEST_CASE("embedding gradient matches finite differences") {
  Rng rng(301);
  for (int rep = 0; rep < 50; ++rep) {
    Embedding embed;
    embed.dim = 2 + static_cast<int>(rng.next_u64() % 3);
    embed.init(rng);
    const int length = 4 + static_cast<int>(rng.next_u64() % 8);
    auto bytes = testutil::random_bytes(static_cast<std::size_t>(length) - 1,
                                        1000 + static_cast<std::uint64_t>(rep));
    // One position past the end exercises the padding path.
    const Projection proj(static_cast<std::size_t>(length * embed.dim),
                          2000 + static_cast<std::uint64_t>(rep));

    std::vector<double> grad(embed.weight.size(), 0.0);
    embed.accumulate_grad(bytes, proj.upstream(length, embed.dim), grad);

    for (std::size_t i = 0; i < embed.weight.size(); ++i) {
      const double want = fd(&embed.weight[i], [&] {
        return proj.loss(embed.forward(bytes, length));
      });
      REQUIRE(rel_err(grad[i], want) <= kLayerTol);
    }
  }
}

TEST_CASE("conv gradients match finite differences") {
  Rng rng(401);
  for (int rep = 0; rep < 50; ++rep) {
    Conv1D conv;
    conv.window = 1 + static_cast<int>(rng.next_u64() % 4);
    conv.stride = 1 + static_cast<int>(rng.next_u64() % 3);
    conv.kernels = 1 + static_cast<int>(rng.next_u64() % 4);
    conv.in_channels = 1 + static_cast<int>(rng.next_u64() % 3);
    conv.init(rng);
    const int rows = conv.window + static_cast<int>(rng.next_u64() % 10);
    Tensor2D x = random_tensor(rows, conv.in_channels, rng);
    const int out_rows = conv.out_rows(rows);
    const Projection proj(
        static_cast<std::size_t>(out_rows) * static_cast<std::size_t>(conv.kernels),
        4000 + static_cast<std::uint64_t>(rep));

    Tensor2D dx(rows, conv.in_channels);
    std::vector<double> dw(conv.weight.size(), 0.0), db(conv.bias.size(), 0.0);
    conv.backward(x, proj.upstream(out_rows, conv.kernels), &dx, &dw, &db);

    auto loss = [&] { return proj.loss(conv.forward(x)); };
    for (std::size_t i = 0; i < conv.weight.size(); ++i) {
      REQUIRE(rel_err(dw[i], fd(&conv.weight[i], loss)) <= kLayerTol);
    }
    for (std::size_t i = 0; i < conv.bias.size(); ++i) {
      REQUIRE(rel_err(db[i], fd(&conv.bias[i], loss)) <= kLayerTol);
    }
    for (std::size_t i = 0; i < x.v.size(); ++i) {
      REQUIRE(rel_err(dx.v[i], fd(&x.v[i], loss)) <= kLayerTol);
    }
  }
}

TEST_CASE("dense matches a matrix-vector oracle and finite differences") {
  Rng rng(501);
  for (int rep = 0; rep < 50; ++rep) {
    Dense dense;
    dense.in = 1 + static_cast<int>(rng.next_u64() % 8);
    dense.out = 1 + static_cast<int>(rng.next_u64() % 8);
    dense.init(rng);
    std::vector<double> x(static_cast<std::size_t>(dense.in));
    for (auto& v : x) v = rng.next_double() * 2.0 - 1.0;

    const auto got = dense.forward(x);
    REQUIRE(got.size() == static_cast<std::size_t>(dense.out));
    for (int o = 0; o < dense.out; ++o) {
      double want = dense.bias[static_cast<std::size_t>(o)];
      for (int i = 0; i < dense.in; ++i) {
        want += dense.weight[static_cast<std::size_t>(o) * dense.in + i] *
                x[static_cast<std::size_t>(i)];
      }
      CHECK(std::fabs(got[static_cast<std::size_t>(o)] - want) <= 1e-12);
    }

    const Projection proj(got.size(), 6000 + static_cast<std::uint64_t>(rep));
    std::vector<double> dx(x.size(), 0.0), dw(dense.weight.size(), 0.0),
        db(dense.bias.size(), 0.0);
    std::vector<double> upstream(proj.c.begin(), proj.c.begin() + got.size());
    dense.backward(x, upstream, &dx, &dw, &db);
    auto loss = [&] { return proj.loss(dense.forward(x)); };
    for (std::size_t i = 0; i < dense.weight.size(); ++i) {
      REQUIRE(rel_err(dw[i], fd(&dense.weight[i], loss)) <= kLayerTol);
    }
    for (std::size_t i = 0; i < dense.bias.size(); ++i) {
      REQUIRE(rel_err(db[i], fd(&dense.bias[i], loss)) <= kLayerTol);
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      REQUIRE(rel_err(dx[i], fd(&x[i], loss)) <= kLayerTol);
    }
  }
}

TEST_CASE("relu and its mask") {
  Tensor2D x(2, 2);
  x.at(0, 0) = -1.5;
  x.at(0, 1) = 2.0;
  x.at(1, 0) = 0.0;
  x.at(1, 1) = -0.0;
  Tensor2D pre = x;
  relu_inplace(x);
  CHECK(x.at(0, 0) == 0.0);
  CHECK(x.at(0, 1) == 2.0);
  CHECK(x.at(1, 0) == 0.0);
  CHECK(x.at(1, 1) == 0.0);

  Tensor2D grad(2, 2);
  grad.v = {1.0, 1.0, 1.0, 1.0};
  relu_backward_inplace(pre, grad);
  CHECK(grad.v == std::vector<double>{0.0, 1.0, 0.0, 0.0});
}

TEST_CASE("relu gradient matches finite differences away from the kink") {
  Rng rng(601);
  int done = 0;
  while (done < 50) {
    Tensor2D x = random_tensor(3, 4, rng);
    // Resample when any entry sits within the finite-difference step of
    // the kink at zero, where the two-sided difference is meaningless.
    bool near_kink = false;
    for (double v : x.v) near_kink |= std::fabs(v) < 1e-3;
    if (near_kink) continue;
    ++done;
    const Projection proj(x.v.size(), 7000 + static_cast<std::uint64_t>(done));
    Tensor2D grad = proj.upstream(3, 4);
    relu_backward_inplace(x, grad);
    for (std::size_t i = 0; i < x.v.size(); ++i) {
      const double want = fd(&x.v[i], [&] {
        Tensor2D y = x;
        relu_inplace(y);
        return proj.loss(y);
      });
      REQUIRE(rel_err(grad.v[i], want) <= kLayerTol);
    }
  }
}

TEST_CASE("global max pool keeps the first of tied maxima") {
  Tensor2D x(3, 2);
  x.v = {1.0, 5.0,
         7.0, 5.0,
         7.0, 2.0};
  const PoolResult pool = global_max_pool(x);
  CHECK(pool.values == std::vector<double>{7.0, 5.0});
  CHECK(pool.argmax == std::vector<int>{1, 0});

  Tensor2D dx(3, 2);
  global_max_pool_backward(pool, std::vector<double>{2.0, 3.0}, dx);
  CHECK(dx.at(1, 0) == 2.0);
  CHECK(dx.at(0, 1) == 3.0);
  CHECK(dx.at(0, 0) == 0.0);
  CHECK(dx.at(2, 0) == 0.0);

  CHECK_THROWS_AS(global_max_pool(Tensor2D(0, 2)), ContractError);
}

TEST_CASE("max pool gradient matches finite differences with a clear winner") {
  Rng rng(701);
  int done = 0;
  while (done < 50) {
    Tensor2D x = random_tensor(5, 3, rng);
    // Resample when the winner and runner-up are too close: a finite
    // nudge could flip the argmax and the comparison breaks down.
    bool ambiguous = false;
    for (int c = 0; c < x.cols; ++c) {
      double best = -1e300, second = -1e300;
      for (int r = 0; r < x.rows; ++r) {
        const double v = x.at(r, c);
        if (v > best) {
          second = best;
          best = v;
        } else if (v > second) {
          second = v;
        }
      }
      ambiguous |= best - second < 1e-3;
    }
    if (ambiguous) continue;
    ++done;
    const Projection proj(static_cast<std::size_t>(x.cols),
                          8000 + static_cast<std::uint64_t>(done));
    const PoolResult pool = global_max_pool(x);
    Tensor2D dx(x.rows, x.cols);
    global_max_pool_backward(pool, proj.c, dx);
    for (std::size_t i = 0; i < x.v.size(); ++i) {
      const double want = fd(&x.v[i], [&] {
        return proj.loss(global_max_pool(x).values);
      });
      REQUIRE(rel_err(dx.v[i], want) <= kLayerTol);
    }
  }
}

TEST_CASE("batch norm normalizes to zero mean and unit variance") {
  Rng rng(801);
  BatchNorm bn;
  bn.channels = 3;
  bn.init();
  std::vector<Tensor2D> batch = {random_tensor(4, 3, rng, 2.0),
                                 random_tensor(4, 3, rng, 2.0)};
  bn.forward_train(batch, /*update_running=*/false);
  for (int c = 0; c < 3; ++c) {
    double sum = 0.0, sq = 0.0;
    for (const auto& t : batch) {
      for (int r = 0; r < t.rows; ++r) {
        sum += t.at(r, c);
        sq += t.at(r, c) * t.at(r, c);
      }
    }
    const double n = 8.0;
    CHECK(std::fabs(sum / n) < 1e-9);
    CHECK(sq / n == doctest::Approx(1.0).epsilon(1e-3));  // eps shrinks it
  }
}

TEST_CASE("batch norm gradients match finite differences") {
  Rng rng(901);
  for (int rep = 0; rep < 50; ++rep) {
    BatchNorm bn;
    bn.channels = 1 + static_cast<int>(rng.next_u64() % 3);
    bn.init();
    for (auto& g : bn.gamma) g = 0.5 + rng.next_double();
    for (auto& b : bn.beta) b = rng.next_double() - 0.5;
    const int rows = 2 + static_cast<int>(rng.next_u64() % 3);
    const std::size_t members = 2;
    std::vector<Tensor2D> x;
    for (std::size_t m = 0; m < members; ++m) {
      x.push_back(random_tensor(rows, bn.channels, rng));
    }
    const std::size_t per = static_cast<std::size_t>(rows) * bn.channels;
    const Projection proj(per * members, 9000 + static_cast<std::uint64_t>(rep));

    auto loss = [&] {
      std::vector<Tensor2D> batch = x;
      bn.forward_train(batch, false);
      double sum = 0.0;
      for (std::size_t m = 0; m < members; ++m) {
        for (std::size_t i = 0; i < per; ++i) {
          sum += proj.c[m * per + i] * batch[m].v[i];
        }
      }
      return sum;
    };

    std::vector<Tensor2D> normalized = x;
    const BatchNorm::Cache cache = bn.forward_train(normalized, false);
    std::vector<Tensor2D> upstream;
    for (std::size_t m = 0; m < members; ++m) {
      Tensor2D u(rows, bn.channels);
      for (std::size_t i = 0; i < per; ++i) u.v[i] = proj.c[m * per + i];
      upstream.push_back(std::move(u));
    }
    std::vector<Tensor2D> dx(members, Tensor2D(rows, bn.channels));
    std::vector<double> dgamma(bn.gamma.size(), 0.0), dbeta(bn.beta.size(), 0.0);
    bn.backward(x, cache, upstream, &dx, &dgamma, &dbeta);

    for (std::size_t i = 0; i < bn.gamma.size(); ++i) {
      REQUIRE(rel_err(dgamma[i], fd(&bn.gamma[i], loss)) <= kLayerTol);
    }
    for (std::size_t i = 0; i < bn.beta.size(); ++i) {
      REQUIRE(rel_err(dbeta[i], fd(&bn.beta[i], loss)) <= kLayerTol);
    }
    for (std::size_t m = 0; m < members; ++m) {
      for (std::size_t i = 0; i < per; ++i) {
        REQUIRE(rel_err(dx[m].v[i], fd(&x[m].v[i], loss)) <= kLayerTol);
      }
    }
  }
}

TEST_CASE("batch norm running statistics feed eval mode") {
  Rng rng(1001);
  BatchNorm bn;
  bn.channels = 2;
  bn.init();
  // Identity before any update.
  Tensor2D probe = random_tensor(3, 2, rng);
  Tensor2D before = probe;
  bn.forward_eval(probe);
  for (std::size_t i = 0; i < probe.v.size(); ++i) {
    CHECK(probe.v[i] == doctest::Approx(before.v[i]).epsilon(1e-4));
  }
  // After many updates on a fixed distribution, eval ~ train behaviour.
  for (int step = 0; step < 200; ++step) {
    std::vector<Tensor2D> batch = {random_tensor(8, 2, rng, 3.0)};
    for (auto& t : batch)
      for (auto& v : t.v) v += 1.5;  // mean shift
    bn.forward_train(batch, /*update_running=*/true);
  }
  CHECK(bn.running_mean[0] == doctest::Approx(1.5).epsilon(0.1));
  CHECK(bn.running_var[0] == doctest::Approx(3.0).epsilon(0.15));
}

TEST_CASE("dropout mask is inverted and seeded") {
  Rng rng_a(7), rng_b(7);
  const auto a = dropout_mask(1000, 0.25, rng_a);
  const auto b = dropout_mask(1000, 0.25, rng_b);
  CHECK(a == b);  // same stream, same mask
  std::size_t zeros = 0;
  for (double v : a) {
    CHECK((v == 0.0 || v == doctest::Approx(1.0 / 0.75)));
    zeros += v == 0.0;
  }
  CHECK(zeros > 180);  // ~250 expected
  CHECK(zeros < 320);

  const auto none = dropout_mask(64, 0.0, rng_a);
  for (double v : none) CHECK(v == 1.0);
  CHECK_THROWS_AS(dropout_mask(8, 1.0, rng_a), ContractError);
  CHECK_THROWS_AS(dropout_mask(8, -0.1, rng_a), ContractError);
}

TEST_CASE("sigmoid and logit-space binary cross entropy") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(4.0) == doctest::Approx(1.0 / (1.0 + std::exp(-4.0))));
  // Saturation stays finite and ordered.
  CHECK(sigmoid(1000.0) == 1.0);
  CHECK(sigmoid(-1000.0) == 0.0);

  // Loss agrees with the naive formula where the naive one is stable.
  for (double z : {-3.0, -0.5, 0.0, 0.7, 2.5}) {
    for (double y : {0.0, 1.0}) {
      const double p = sigmoid(z);
      const double naive = -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
      CHECK(bce_loss_from_logit(z, y) == doctest::Approx(naive).epsilon(1e-9));
    }
  }
  // Extreme logits: finite, no overflow.
  CHECK(std::isfinite(bce_loss_from_logit(800.0, 0.0)));
  CHECK(bce_loss_from_logit(800.0, 0.0) == doctest::Approx(800.0));
  CHECK(std::isfinite(bce_loss_from_logit(-800.0, 1.0)));

  // Gradient: sigmoid(z) - y, and at z=0 the sigmoid derivative is 0.25.
  Rng rng(1101);
  for (int rep = 0; rep < 50; ++rep) {
    double z = rng.next_double() * 8.0 - 4.0;
    const double y = rng.next_u64() % 2 ? 1.0 : 0.0;
    const double want = fd(&z, [&] { return bce_loss_from_logit(z, y); });
    REQUIRE(rel_err(bce_dlogit(z, y), want) <= kLayerTol);
  }
  double z0 = 0.0;
  const double ds = fd(&z0, [&] { return sigmoid(z0); });
  CHECK(ds == doctest::Approx(0.25).epsilon(1e-6));
}
