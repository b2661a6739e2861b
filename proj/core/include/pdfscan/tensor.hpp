#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "pdfscan/errors.hpp"

namespace pdfscan::nn {

// Dense row-major 2-D tensor of doubles. All internal accumulation is
// 64-bit; 32-bit storage only appears at the checkpoint boundary.
struct Tensor2D {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Tensor2D() = default;
  Tensor2D(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const {
    return v[static_cast<std::size_t>(r) * cols + c];
  }
  double* row(int r) { return v.data() + static_cast<std::size_t>(r) * cols; }
  const double* row(int r) const {
    return v.data() + static_cast<std::size_t>(r) * cols;
  }
  std::size_t size() const { return v.size(); }

  bool same_shape(const Tensor2D& o) const {
    return rows == o.rows && cols == o.cols;
  }
};

// Layers reject NaN/Inf at their boundaries; this is the shared check.
inline void require_finite(const Tensor2D& t, const char* where) {
  for (double x : t.v) {
    if (!std::isfinite(x)) {
      throw ContractError(std::string(where) + ": non-finite input value");
    }
  }
}

inline void require_shape(bool ok, const std::string& message) {
  if (!ok) throw ContractError(message);
}

}  // namespace pdfscan::nn
