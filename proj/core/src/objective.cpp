#include "scav/objective.hpp"

#include <algorithm>
#include <limits>
#include <optional>

namespace scav {

namespace {

void require_square_batch(const Matrix& m) {
  if (m.rows() != m.cols()) throw InvalidArgument("expected a square B x B matrix");
  if (m.rows() < 2) throw InvalidArgument("batch size must be >= 2");
  if (!m.allFinite()) throw NumericError("non-finite entries in loss input");
}

// Cross-entropy of the diagonal under a row-wise softmax of `logits`.
// Returns sum_i -log softmax(logits_i)_i and writes d/dlogits into grad.
double diagonal_nll(const Matrix& logits, Matrix& grad) {
  const Eigen::Index b = logits.rows();
  grad.resize(b, b);
  double total = 0.0;
  for (Eigen::Index i = 0; i < b; ++i) {
    const double m = logits.row(i).maxCoeff();
    const RowVector shifted = (logits.row(i).array() - m).exp().matrix();
    const double z = shifted.sum();
    total += -(logits(i, i) - m - std::log(z));
    grad.row(i) = shifted / z;
    grad(i, i) -= 1.0;
  }
  return total;
}

// Symmetric InfoNCE where `row_scores` is scored along rows and
// `col_scores` along columns; both are already divided by the temperature.
// Returns the loss and gradients w.r.t. each score matrix.
double symmetric_infonce(const Matrix& row_scores, const Matrix& col_scores, Matrix& grad_rows,
                         Matrix& grad_cols) {
  const double b = static_cast<double>(row_scores.rows());
  Matrix gr, gc;
  const double lr = diagonal_nll(row_scores, gr);
  const Matrix col_t = col_scores.transpose();
  const double lc = diagonal_nll(col_t, gc);
  grad_rows = gr / (2.0 * b);
  grad_cols = gc.transpose() / (2.0 * b);
  return (lr + lc) / (2.0 * b);
}

}  // namespace

ZScore::ZScore(const Matrix& input, Axis axis, double eps) : axis_(axis), eps_(eps) {
  const Eigen::Index n = axis == Axis::Rows ? input.cols() : input.rows();
  if (n < 2) throw InvalidArgument("z-score needs at least 2 entries per slice");
  // Work on rows; columns are handled via the transpose.
  const Matrix x = axis == Axis::Rows ? input : Matrix(input.transpose());
  Matrix out(x.rows(), x.cols());
  std_.resize(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).mean();
    const RowVector centered = x.row(r).array() - mean;
    const double sd = std::sqrt(centered.squaredNorm() / static_cast<double>(n));
    std_(r) = sd;
    // Slices with sd <= eps count as constant: zeros out, zero gradient back.
    // A floor rather than sd + eps keeps the map exactly scale invariant.
    out.row(r) = sd > eps_ ? RowVector(centered / sd) : RowVector::Zero(x.cols());
  }
  value_ = axis == Axis::Rows ? out : Matrix(out.transpose());
}

Matrix ZScore::backward(const Matrix& grad_output) const {
  const Matrix g = axis_ == Axis::Rows ? grad_output : Matrix(grad_output.transpose());
  const Matrix y = axis_ == Axis::Rows ? value_ : Matrix(value_.transpose());
  const double n = static_cast<double>(g.cols());
  Matrix out(g.rows(), g.cols());
  for (Eigen::Index r = 0; r < g.rows(); ++r) {
    const double sd = std_(r);
    if (!(sd > eps_)) {
      out.row(r).setZero();
      continue;
    }
    const RowVector gr = g.row(r);
    const RowVector yr = y.row(r);
    // dx = (g - mean(g) - y * <g, y> / n) / sd
    out.row(r) = ((gr.array() - gr.mean()) - yr.array() * (gr.dot(yr) / n)).matrix() / sd;
  }
  return axis_ == Axis::Rows ? out : Matrix(out.transpose());
}

NormalizedDistances normalize_distances(const Matrix& d, double eps) {
  return {zscore(d, Axis::Rows, eps), zscore(d, Axis::Cols, eps)};
}

LossResult scav_loss(const Matrix& distances, Temperature lambda, bool normalize) {
  require_square_batch(distances);
  const double lam = lambda.value();
  if (!(lam > 0.0) || !std::isfinite(lam)) throw NumericError("temperature must be finite and > 0");

  std::optional<ZScore> zr, zc;
  Matrix v2a = distances, a2v = distances;
  if (normalize) {
    zr.emplace(distances, Axis::Rows);
    zc.emplace(distances, Axis::Cols);
    v2a = zr->value();
    a2v = zc->value();
  }
  const Matrix logits_r = -v2a / lam;
  const Matrix logits_c = -a2v / lam;
  Matrix g_lr, g_lc;
  LossResult res;
  res.loss = symmetric_infonce(logits_r, logits_c, g_lr, g_lc);

  // logits = -D / lambda: d/dlog(lambda) of logits equals -logits.
  res.grad_log_lambda = -((g_lr.array() * logits_r.array()).sum() +
                          (g_lc.array() * logits_c.array()).sum());
  Matrix g_v2a = -g_lr / lam;
  Matrix g_a2v = -g_lc / lam;
  if (normalize)
    res.grad_distances = zr->backward(g_v2a) + zc->backward(g_a2v);
  else
    res.grad_distances = g_v2a + g_a2v;
  return res;
}

RowVector mean_pool(const Matrix& seq) {
  if (seq.rows() < 1) throw InvalidArgument("cannot pool an empty sequence");
  return seq.colwise().mean();
}

double cosine_similarity(const RowVector& a, const RowVector& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw NumericError("cosine similarity of a zero-norm embedding");
  return a.dot(b) / (na * nb);
}

LossResult cav_loss(std::span<const Matrix> videos, std::span<const Matrix> audios,
                    Temperature tau) {
  if (videos.size() != audios.size()) throw InvalidArgument("modalities differ in batch size");
  const auto b = static_cast<Eigen::Index>(videos.size());
  if (b < 2) throw InvalidArgument("batch size must be >= 2");
  const double t = tau.value();
  if (!(t > 0.0) || !std::isfinite(t)) throw NumericError("temperature must be finite and > 0");

  // Unit-normalized pooled embeddings.
  const Eigen::Index c = videos[0].cols();
  Matrix uv(b, c), ua(b, c);
  Vector nv(b), na(b);
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (videos[k].cols() != c || audios[k].cols() != c)
      throw InvalidArgument("embedding dimension mismatch");
    const RowVector pv = mean_pool(videos[k]);
    const RowVector pa = mean_pool(audios[k]);
    nv(i) = pv.norm();
    na(i) = pa.norm();
    if (nv(i) == 0.0 || na(i) == 0.0)
      throw NumericError("zero-norm pooled embedding (cosine undefined)");
    uv.row(i) = pv / nv(i);
    ua.row(i) = pa / na(i);
  }
  const Matrix sim = uv * ua.transpose();
  const Matrix logits = sim / t;
  Matrix g_r, g_c;
  LossResult res;
  res.loss = symmetric_infonce(logits, logits, g_r, g_c);
  const Matrix g_logits = g_r + g_c;
  res.grad_log_tau = -(g_logits.array() * logits.array()).sum();
  res.grad_similarities = g_logits / t;

  // s_ij = u_i . w_j with u = p / |p|; d u / d p = (I - u u^T) / |p|.
  const Matrix g_uv = res.grad_similarities * ua;
  const Matrix g_ua = res.grad_similarities.transpose() * uv;
  res.grad_videos.reserve(videos.size());
  res.grad_audios.reserve(audios.size());
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const RowVector gpv = (g_uv.row(i) - g_uv.row(i).dot(uv.row(i)) * uv.row(i)) / nv(i);
    const RowVector gpa = (g_ua.row(i) - g_ua.row(i).dot(ua.row(i)) * ua.row(i)) / na(i);
    res.grad_videos.push_back(
        gpv.replicate(videos[k].rows(), 1) / static_cast<double>(videos[k].rows()));
    res.grad_audios.push_back(
        gpa.replicate(audios[k].rows(), 1) / static_cast<double>(audios[k].rows()));
  }
  return res;
}

LossResult multitask_loss(const LossResult& scav, const LossResult& cav, double weight) {
  if (!(weight >= 0.0 && weight <= 1.0)) throw InvalidArgument("multitask weight must be in [0, 1]");
  const double w = weight, v = 1.0 - weight;
  LossResult res;
  res.loss = w * scav.loss + v * cav.loss;
  res.grad_distances = w * scav.grad_distances;
  res.grad_similarities = v * cav.grad_similarities;
  for (const auto& g : cav.grad_videos) res.grad_videos.push_back(v * g);
  for (const auto& g : cav.grad_audios) res.grad_audios.push_back(v * g);
  res.grad_log_lambda = w * scav.grad_log_lambda;
  res.grad_log_tau = v * cav.grad_log_tau;
  return res;
}

}  // namespace scav
