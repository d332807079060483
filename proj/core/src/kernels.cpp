#include "scav/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "scav/parallel.hpp"

namespace scav {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_dims(const Matrix& x, const Matrix& y) {
  if (x.rows() < 1 || y.rows() < 1) throw InvalidArgument("sequences must have at least one frame");
  if (x.cols() != y.cols())
    throw InvalidArgument("dimension mismatch: " + std::to_string(x.cols()) + " vs " +
                          std::to_string(y.cols()));
}

// Source row and blend weight of every resampled position.
struct InterpGrid {
  std::vector<Eigen::Index> lo;
  std::vector<double> frac;
};

InterpGrid interp_grid(Eigen::Index source_len, int target_len) {
  InterpGrid g;
  g.lo.resize(static_cast<std::size_t>(target_len));
  g.frac.resize(static_cast<std::size_t>(target_len));
  for (int k = 0; k < target_len; ++k) {
    double pos = 0.0;
    if (target_len > 1)
      pos = static_cast<double>(k) * static_cast<double>(source_len - 1) /
            static_cast<double>(target_len - 1);
    auto lo = static_cast<Eigen::Index>(std::floor(pos));
    lo = std::clamp<Eigen::Index>(lo, 0, source_len - 1);
    double frac = pos - static_cast<double>(lo);
    if (lo == source_len - 1) frac = 0.0;
    g.lo[static_cast<std::size_t>(k)] = lo;
    g.frac[static_cast<std::size_t>(k)] = frac;
  }
  return g;
}

// Squared frame distances divided by the channel count.
Matrix frame_costs(const Matrix& x, const Matrix& y) {
  // Plain left-to-right accumulation, so hard DTW reproduces a path sum
  // computed frame by frame bit for bit.
  Matrix cost(x.rows(), y.rows());
  const double c = static_cast<double>(x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < y.rows(); ++j) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < x.cols(); ++k) {
        const double d = x(i, k) - y(j, k);
        s += d * d;
      }
      cost(i, j) = s / c;
    }
  return cost;
}

// Gradient of sum_ij W_ij * |x_i - y_j|^2 / c, scaled by `scale`.
KernelGrad weighted_cost_grad(const Matrix& x, const Matrix& y, const Matrix& w, double scale) {
  const double s = 2.0 * scale / static_cast<double>(x.cols());
  KernelGrad g;
  const Vector row_mass = w.rowwise().sum();
  const Vector col_mass = w.colwise().sum().transpose();
  g.grad_x = s * (row_mass.asDiagonal() * x - w * y);
  g.grad_y = s * (col_mass.asDiagonal() * y - w.transpose() * x);
  return g;
}

double softmin3(double a, double b, double c, double gamma) {
  const double m = std::min({a, b, c});
  if (m == kInf) return kInf;
  const double s = std::exp(-(a - m) / gamma) + std::exp(-(b - m) / gamma) +
                   std::exp(-(c - m) / gamma);
  return m - gamma * std::log(s);
}

// Accumulated soft-DTW table with an infinite border row/column at index 0.
Matrix soft_dtw_table(const Matrix& cost, double gamma) {
  const Eigen::Index n = cost.rows(), m = cost.cols();
  Matrix r = Matrix::Constant(n + 2, m + 2, kInf);
  r(0, 0) = 0.0;
  for (Eigen::Index i = 1; i <= n; ++i)
    for (Eigen::Index j = 1; j <= m; ++j)
      r(i, j) = cost(i - 1, j - 1) + softmin3(r(i - 1, j), r(i, j - 1), r(i - 1, j - 1), gamma);
  return r;
}

double log_sum_exp(const double* v, Eigen::Index n, Eigen::Index stride) {
  double m = -kInf;
  for (Eigen::Index k = 0; k < n; ++k) m = std::max(m, v[k * stride]);
  if (m == -kInf) return -kInf;
  double s = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) s += std::exp(v[k * stride] - m);
  return m + std::log(s);
}

}  // namespace

std::string to_string(Direction d) { return d == Direction::V2A ? "v2a" : "a2v"; }

Direction parse_direction(const std::string& s) {
  if (s == "v2a") return Direction::V2A;
  if (s == "a2v") return Direction::A2V;
  throw InvalidArgument("unknown direction '" + s + "' (expected v2a|a2v)");
}

std::string to_string(Stage s) { return s == Stage::Pre ? "pre" : "post"; }

Stage parse_stage(const std::string& s) {
  if (s == "pre") return Stage::Pre;
  if (s == "post") return Stage::Post;
  throw InvalidArgument("unknown stage '" + s + "' (expected pre|post)");
}

void validate(const DistanceKind& kind) {
  std::visit(Overloaded{
                 [](const EuclInterp&) {},
                 [](const SoftDtw& k) {
                   if (!(k.gamma > 0.0)) throw InvalidArgument("soft-DTW gamma must be > 0");
                 },
                 [](const HardDtw&) {},
                 [](const Wasserstein& k) {
                   if (!(k.epsilon > 0.0)) throw InvalidArgument("Wasserstein epsilon must be > 0");
                   if (k.iters < 1) throw InvalidArgument("Wasserstein iters must be >= 1");
                   if (!(k.pos_weight >= 0.0))
                     throw InvalidArgument("Wasserstein pos_weight must be >= 0");
                 },
             },
             kind);
}

std::string to_string(const DistanceKind& kind) {
  std::ostringstream os;
  std::visit(Overloaded{
                 [&](const EuclInterp& k) {
                   os << "eucl/" << to_string(k.stage) << "(" << to_string(k.direction) << ")";
                 },
                 [&](const SoftDtw& k) { os << "sdtw(gamma=" << k.gamma << ")"; },
                 [&](const HardDtw&) { os << "dtw"; },
                 [&](const Wasserstein& k) {
                   os << "wass(eps=" << k.epsilon << ",iters=" << k.iters
                      << ",pos_weight=" << k.pos_weight << ")";
                 },
             },
             kind);
  return os.str();
}

bool is_differentiable(const DistanceKind& kind) {
  return !std::holds_alternative<HardDtw>(kind);
}

Matrix linear_interp(const Matrix& seq, int target_len) {
  if (seq.rows() < 1) throw InvalidArgument("cannot interpolate an empty sequence");
  if (target_len < 1) throw InvalidArgument("target length must be >= 1");
  if (target_len == seq.rows()) return seq;
  const auto grid = interp_grid(seq.rows(), target_len);
  Matrix out(target_len, seq.cols());
  for (int k = 0; k < target_len; ++k) {
    const auto lo = grid.lo[static_cast<std::size_t>(k)];
    const double f = grid.frac[static_cast<std::size_t>(k)];
    if (f == 0.0)
      out.row(k) = seq.row(lo);
    else
      out.row(k) = (1.0 - f) * seq.row(lo) + f * seq.row(lo + 1);
  }
  return out;
}

Matrix linear_interp_backward(const Matrix& grad_out, int source_len) {
  if (source_len < 1) throw InvalidArgument("source length must be >= 1");
  if (grad_out.rows() == source_len) return grad_out;
  const auto target_len = static_cast<int>(grad_out.rows());
  const auto grid = interp_grid(source_len, target_len);
  Matrix g = Matrix::Zero(source_len, grad_out.cols());
  for (int k = 0; k < target_len; ++k) {
    const auto lo = grid.lo[static_cast<std::size_t>(k)];
    const double f = grid.frac[static_cast<std::size_t>(k)];
    g.row(lo) += (1.0 - f) * grad_out.row(k);
    if (f != 0.0) g.row(lo + 1) += f * grad_out.row(k);
  }
  return g;
}

double eucl_dist(const Matrix& x, const Matrix& y, Direction direction) {
  check_dims(x, y);
  const double c = static_cast<double>(x.cols());
  if (x.rows() == y.rows())
    return (x - y).squaredNorm() / (static_cast<double>(x.rows()) * c);
  if (direction == Direction::V2A) {
    const Matrix xi = linear_interp(x, static_cast<int>(y.rows()));
    return (xi - y).squaredNorm() / (static_cast<double>(y.rows()) * c);
  }
  const Matrix yi = linear_interp(y, static_cast<int>(x.rows()));
  return (x - yi).squaredNorm() / (static_cast<double>(x.rows()) * c);
}

KernelResult eucl_dist_grad(const Matrix& x, const Matrix& y, Direction direction) {
  check_dims(x, y);
  const double c = static_cast<double>(x.cols());
  const bool resample_x = direction == Direction::V2A;
  const Matrix xi = resample_x ? linear_interp(x, static_cast<int>(y.rows())) : x;
  const Matrix yi = resample_x ? y : linear_interp(y, static_cast<int>(x.rows()));
  const double len = static_cast<double>(xi.rows());
  const Matrix diff = xi - yi;
  KernelResult res;
  res.value = diff.squaredNorm() / (len * c);
  const Matrix g = (2.0 / (len * c)) * diff;
  if (resample_x) {
    res.grad.grad_x = linear_interp_backward(g, static_cast<int>(x.rows()));
    res.grad.grad_y = -g;
  } else {
    res.grad.grad_x = g;
    res.grad.grad_y = linear_interp_backward(-g, static_cast<int>(y.rows()));
  }
  return res;
}

double soft_dtw(const Matrix& x, const Matrix& y, double gamma) {
  check_dims(x, y);
  if (!(gamma > 0.0)) throw InvalidArgument("soft-DTW gamma must be > 0");
  const Matrix r = soft_dtw_table(frame_costs(x, y), gamma);
  return r(x.rows(), y.rows()) / static_cast<double>(x.rows() + y.rows());
}

KernelResult soft_dtw_grad(const Matrix& x, const Matrix& y, double gamma) {
  check_dims(x, y);
  if (!(gamma > 0.0)) throw InvalidArgument("soft-DTW gamma must be > 0");
  const Eigen::Index n = x.rows(), m = y.rows();
  const Matrix cost = frame_costs(x, y);
  Matrix r = soft_dtw_table(cost, gamma);
  const double total = r(n, m);

  // Backward pass over soft alignment weights, padded so that the last
  // row/column see -inf neighbours.
  Matrix d = Matrix::Zero(n + 2, m + 2);
  d.block(1, 1, n, m) = cost;
  for (Eigen::Index i = 1; i <= n; ++i) r(i, m + 1) = -kInf;
  for (Eigen::Index j = 1; j <= m; ++j) r(n + 1, j) = -kInf;
  r(n + 1, m + 1) = r(n, m);
  Matrix e = Matrix::Zero(n + 2, m + 2);
  e(n + 1, m + 1) = 1.0;
  for (Eigen::Index j = m; j >= 1; --j) {
    for (Eigen::Index i = n; i >= 1; --i) {
      const double a = std::exp((r(i + 1, j) - r(i, j) - d(i + 1, j)) / gamma);
      const double b = std::exp((r(i, j + 1) - r(i, j) - d(i, j + 1)) / gamma);
      const double c = std::exp((r(i + 1, j + 1) - r(i, j) - d(i + 1, j + 1)) / gamma);
      e(i, j) = e(i + 1, j) * a + e(i, j + 1) * b + e(i + 1, j + 1) * c;
    }
  }
  const double norm = static_cast<double>(n + m);
  KernelResult res;
  res.value = total / norm;
  res.grad = weighted_cost_grad(x, y, e.block(1, 1, n, m), 1.0 / norm);
  return res;
}

double hard_dtw(const Matrix& x, const Matrix& y) {
  check_dims(x, y);
  const Eigen::Index n = x.rows(), m = y.rows();
  const Matrix cost = frame_costs(x, y);
  Matrix r = Matrix::Constant(n + 1, m + 1, kInf);
  r(0, 0) = 0.0;
  for (Eigen::Index i = 1; i <= n; ++i)
    for (Eigen::Index j = 1; j <= m; ++j)
      r(i, j) = cost(i - 1, j - 1) + std::min({r(i - 1, j), r(i, j - 1), r(i - 1, j - 1)});
  return r(n, m) / static_cast<double>(n + m);
}

Matrix wasserstein_cost(const Matrix& x, const Matrix& y, double pos_weight) {
  check_dims(x, y);
  Matrix cost = frame_costs(x, y);
  const Eigen::Index n = x.rows(), m = y.rows();
  if (pos_weight > 0.0 && n > 1 && m > 1) {
    for (Eigen::Index k = 0; k < n; ++k) {
      const double pk = static_cast<double>(k) / static_cast<double>(n - 1);
      for (Eigen::Index l = 0; l < m; ++l) {
        const double dp = pk - static_cast<double>(l) / static_cast<double>(m - 1);
        cost(k, l) += pos_weight * dp * dp;
      }
    }
  }
  return cost;
}

SinkhornResult wasserstein(const Matrix& x, const Matrix& y, const Wasserstein& cfg,
                           bool with_grad) {
  validate(DistanceKind{cfg});
  const Matrix cost = wasserstein_cost(x, y, cfg.pos_weight);
  const Eigen::Index n = cost.rows(), m = cost.cols();
  const double eps = cfg.epsilon;
  const double log_a = -std::log(static_cast<double>(n));
  const double log_b = -std::log(static_cast<double>(m));
  const double a = 1.0 / static_cast<double>(n);

  Vector f = Vector::Zero(n), g = Vector::Zero(m);
  Matrix scratch(n, m);
  Matrix plan(n, m);
  SinkhornResult res;
  for (int it = 1; it <= cfg.iters; ++it) {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < m; ++j) scratch(i, j) = (g(j) - cost(i, j)) / eps;
    for (Eigen::Index i = 0; i < n; ++i)
      f(i) = eps * log_a - eps * log_sum_exp(scratch.row(i).data(), m, 1);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < m; ++j) scratch(i, j) = (f(i) - cost(i, j)) / eps;
    for (Eigen::Index j = 0; j < m; ++j)
      g(j) = eps * log_b - eps * log_sum_exp(scratch.data() + j, n, m);

    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < m; ++j) plan(i, j) = std::exp((f(i) + g(j) - cost(i, j)) / eps);
    double violation = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) violation += std::abs(plan.row(i).sum() - a);
    res.iterations = it;
    res.marginal_violation = violation;
    if (violation < cfg.tolerance) break;
  }

  res.value = (plan.array() * cost.array()).sum();
  if (cfg.regularized_value) {
    double kl = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < m; ++j) {
        const double p = plan(i, j);
        if (p > 0.0) kl += p * (std::log(p) - log_a - log_b);
      }
    res.value += eps * kl;
  }
  if (with_grad) res.grad = weighted_cost_grad(x, y, plan, 1.0);
  res.plan = std::move(plan);
  return res;
}

double distance(const Matrix& x, const Matrix& y, const DistanceKind& kind) {
  return std::visit(Overloaded{
                        [&](const EuclInterp& k) { return eucl_dist(x, y, k.direction); },
                        [&](const SoftDtw& k) { return soft_dtw(x, y, k.gamma); },
                        [&](const HardDtw&) { return hard_dtw(x, y); },
                        [&](const Wasserstein& k) { return wasserstein(x, y, k, false).value; },
                    },
                    kind);
}

KernelResult distance_grad(const Matrix& x, const Matrix& y, const DistanceKind& kind) {
  return std::visit(
      Overloaded{
          [&](const EuclInterp& k) { return eucl_dist_grad(x, y, k.direction); },
          [&](const SoftDtw& k) { return soft_dtw_grad(x, y, k.gamma); },
          [&](const HardDtw&) -> KernelResult {
            throw InvalidArgument("hard DTW has no gradient; use soft-DTW for training");
          },
          [&](const Wasserstein& k) {
            auto r = wasserstein(x, y, k, true);
            return KernelResult{r.value, std::move(r.grad)};
          },
      },
      kind);
}

DistanceMatrix pairwise_matrix(std::span<const Matrix> videos, std::span<const Matrix> audios,
                               const DistanceKind& kind, int workers) {
  validate(kind);
  DistanceMatrix out{Matrix(static_cast<Eigen::Index>(videos.size()),
                            static_cast<Eigen::Index>(audios.size())),
                     kind};
  parallel_for(videos.size(), workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i)
      for (std::size_t j = 0; j < audios.size(); ++j)
        out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            distance(videos[i], audios[j], kind);
  });
  if (!out.values.allFinite()) throw NumericError("non-finite entry in distance matrix");
  return out;
}

}  // namespace scav
