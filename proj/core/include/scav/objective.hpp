#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "scav/types.hpp"

namespace scav {

enum class Axis { Rows, Cols };

/// Population z-score along rows or columns, with enough state kept around
/// to run the backward pass through both statistics.
class ZScore {
 public:
  ZScore(const Matrix& input, Axis axis, double eps = 1e-8);

  const Matrix& value() const { return value_; }
  Matrix backward(const Matrix& grad_output) const;

 private:
  Axis axis_;
  double eps_;
  Matrix value_;
  Vector std_;  // per row (Rows) or per column (Cols)
};

inline Matrix zscore(const Matrix& m, Axis axis, double eps = 1e-8) {
  return ZScore(m, axis, eps).value();
}

struct NormalizedDistances {
  Matrix d_v2a;  // row-wise z-scored
  Matrix d_a2v;  // column-wise z-scored
};

NormalizedDistances normalize_distances(const Matrix& d, double eps = 1e-8);

/// Positive temperature stored in log space so gradient steps keep it positive.
struct Temperature {
  double log_value = 0.0;

  static Temperature from_value(double v) { return Temperature{std::log(v)}; }
  double value() const { return std::exp(log_value); }
};

struct LossResult {
  double loss = 0.0;
  Matrix grad_distances;     // dL/dD, SCAV only
  Matrix grad_similarities;  // dL/dS, CAV only
  std::vector<Matrix> grad_videos;  // CAV: through pooling to each sequence
  std::vector<Matrix> grad_audios;
  double grad_log_lambda = 0.0;
  double grad_log_tau = 0.0;
};

/// Symmetric InfoNCE over negated distances. D is B x B, rows are videos.
LossResult scav_loss(const Matrix& distances, Temperature lambda, bool normalize);

/// Symmetric InfoNCE over cosine similarities of mean-pooled sequences.
LossResult cav_loss(std::span<const Matrix> videos, std::span<const Matrix> audios,
                    Temperature tau);

/// w * scav + (1 - w) * cav, with gradients combined the same way.
LossResult multitask_loss(const LossResult& scav, const LossResult& cav, double weight = 0.5);

/// Temporal mean of a sequence.
RowVector mean_pool(const Matrix& seq);

double cosine_similarity(const RowVector& a, const RowVector& b);

}  // namespace scav
