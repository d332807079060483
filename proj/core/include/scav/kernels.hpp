#pragma once

#include <span>
#include <string>
#include <variant>

#include "scav/types.hpp"

namespace scav {

enum class Stage { Pre, Post };

std::string to_string(Stage s);
Stage parse_stage(const std::string& s);

/// Interpolated Euclidean. V2A resamples the video-role sequence (x) to the
/// audio-role length; A2V the reverse. Pre/Post is enacted by the trainer.
struct EuclInterp {
  Direction direction = Direction::V2A;
  Stage stage = Stage::Post;
};

struct SoftDtw {
  double gamma = 0.1;
};

/// Min-plus DTW. Evaluation only; has no gradient.
struct HardDtw {};

/// Entropic OT with a positional cost term that makes frame order matter.
struct Wasserstein {
  double epsilon = 0.1;
  int iters = 100;
  double pos_weight = 1.0;
  // Stop once the L1 row-marginal violation drops below this.
  double tolerance = 1e-6;
  // Report <P,C> + eps*KL(P | a b^T) instead of <P,C>. The analytic gradient
  // is exact for this objective.
  bool regularized_value = false;
};

using DistanceKind = std::variant<EuclInterp, SoftDtw, HardDtw, Wasserstein>;

void validate(const DistanceKind& kind);
std::string to_string(const DistanceKind& kind);
bool is_differentiable(const DistanceKind& kind);

/// Endpoint-aligned resampling: output row k samples t_k = k(T-1)/(L-1).
Matrix linear_interp(const Matrix& seq, int target_len);

/// Adjoint of linear_interp: maps a gradient on the L resampled rows back
/// onto the `source_len` source rows.
Matrix linear_interp_backward(const Matrix& grad_out, int source_len);

struct KernelGrad {
  Matrix grad_x;
  Matrix grad_y;
};

struct KernelResult {
  double value = 0.0;
  KernelGrad grad;
};

// x is always the video-role sequence, y the audio-role one.
double eucl_dist(const Matrix& x, const Matrix& y, Direction direction);
KernelResult eucl_dist_grad(const Matrix& x, const Matrix& y, Direction direction);

double soft_dtw(const Matrix& x, const Matrix& y, double gamma);
KernelResult soft_dtw_grad(const Matrix& x, const Matrix& y, double gamma);

double hard_dtw(const Matrix& x, const Matrix& y);

struct SinkhornResult {
  double value = 0.0;
  KernelGrad grad;  // empty unless requested
  double marginal_violation = 0.0;
  int iterations = 0;
  Matrix plan;
};

/// Squared frame distance / c plus the positional penalty.
Matrix wasserstein_cost(const Matrix& x, const Matrix& y, double pos_weight);
SinkhornResult wasserstein(const Matrix& x, const Matrix& y, const Wasserstein& cfg,
                           bool with_grad = true);

double distance(const Matrix& x, const Matrix& y, const DistanceKind& kind);
KernelResult distance_grad(const Matrix& x, const Matrix& y, const DistanceKind& kind);

struct DistanceMatrix {
  Matrix values;  // rows: videos, cols: audios
  DistanceKind kind;
};

/// Entry (i, j) = distance(videos[i], audios[j]). Bitwise independent of `workers`.
DistanceMatrix pairwise_matrix(std::span<const Matrix> videos, std::span<const Matrix> audios,
                               const DistanceKind& kind, int workers = 1);

}  // namespace scav
