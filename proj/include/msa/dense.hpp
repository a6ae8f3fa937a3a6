#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "msa/error.hpp"

namespace msa {

using Vec = std::vector<double>;

// Minimal row-major dense matrix. Rows are the unit of access everywhere
// (instance representations, domain embeddings).
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double* operator[](std::size_t r) { return data.data() + r * cols; }
  const double* operator[](std::size_t r) const { return data.data() + r * cols; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ArgumentError("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) {
  double s = 0.0;
  for (const double v : a) s += v * v;
  return std::sqrt(s);
}

// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(std::span<double> x, double alpha) {
  for (double& v : x) v *= alpha;
}

inline bool all_finite(std::span<const double> x) {
  for (const double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// In-place softmax with max-logit subtraction; raw dot products of
// unnormalized representations can otherwise overflow exp.
inline void softmax_inplace(std::span<double> logits) {
  if (logits.empty()) throw ArgumentError("softmax: empty logits");
  double m = logits[0];
  for (const double v : logits) m = std::max(m, v);
  double sum = 0.0;
  for (double& v : logits) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : logits) v /= sum;
}

// Cosine similarity; a zero vector on either side yields 0 (all-OOV
// documents embed to the zero vector and must not break the pipeline).
inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  const double na = norm2(a);
  const double nb = norm2(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

}  // namespace msa
