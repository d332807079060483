#include "scav/verification.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>

#include "scav/encoder.hpp"
#include "scav/kernels.hpp"
#include "scav/objective.hpp"
#include "scav/trainer.hpp"

namespace scav {

Vector numeric_gradient(const ScalarFn& f, const Vector& point, double h,
                        std::span<const Eigen::Index> coords) {
  Vector grad = Vector::Zero(point.size());
  Vector x = point;
  auto probe = [&](Eigen::Index i) {
    const double orig = x(i);
    x(i) = orig + h;
    const double fp = f(x);
    x(i) = orig - h;
    const double fm = f(x);
    x(i) = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw NumericError("non-finite evaluation at coordinate " + std::to_string(i));
    grad(i) = (fp - fm) / (2.0 * h);
  };
  if (coords.empty()) {
    for (Eigen::Index i = 0; i < x.size(); ++i) probe(i);
  } else {
    for (auto i : coords) probe(i);
  }
  return grad;
}

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
}

GradCheckReport check_gradient(const std::string& target, const ScalarFn& f,
                               const Vector& analytic, const Vector& point, double threshold,
                               std::span<const Eigen::Index> coords, double h) {
  const Vector numeric = numeric_gradient(f, point, h, coords);
  GradCheckReport rep;
  rep.target = target;
  rep.threshold = threshold;
  auto visit = [&](Eigen::Index i) {
    rep.max_rel_error = std::max(rep.max_rel_error, relative_error(analytic(i), numeric(i)));
    rep.max_abs_error = std::max(rep.max_abs_error, std::abs(analytic(i) - numeric(i)));
    ++rep.coordinates;
  };
  if (coords.empty()) {
    for (Eigen::Index i = 0; i < point.size(); ++i) visit(i);
  } else {
    for (auto i : coords) visit(i);
  }
  rep.pass = rep.max_rel_error < threshold;
  return rep;
}

namespace {

// Frame cost written out with plain loops, independent of the kernels.
double oracle_frame_cost(const Matrix& x, Eigen::Index i, const Matrix& y, Eigen::Index j) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    const double d = x(i, k) - y(j, k);
    s += d * d;
  }
  return s / static_cast<double>(x.cols());
}

double delannoy(Eigen::Index n, Eigen::Index m) {
  std::vector<std::vector<double>> d(static_cast<std::size_t>(n + 1),
                                     std::vector<double>(static_cast<std::size_t>(m + 1), 1.0));
  for (std::size_t i = 1; i <= static_cast<std::size_t>(n); ++i)
    for (std::size_t j = 1; j <= static_cast<std::size_t>(m); ++j)
      d[i][j] = d[i - 1][j] + d[i][j - 1] + d[i - 1][j - 1];
  return d[static_cast<std::size_t>(n)][static_cast<std::size_t>(m)];
}

void enumerate_paths(const Matrix& x, const Matrix& y, Eigen::Index i, Eigen::Index j, double acc,
                     std::vector<double>& out) {
  acc += oracle_frame_cost(x, i, y, j);
  if (i == x.rows() - 1 && j == y.rows() - 1) {
    out.push_back(acc);
    return;
  }
  if (i + 1 < x.rows()) enumerate_paths(x, y, i + 1, j, acc, out);
  if (j + 1 < y.rows()) enumerate_paths(x, y, i, j + 1, acc, out);
  if (i + 1 < x.rows() && j + 1 < y.rows()) enumerate_paths(x, y, i + 1, j + 1, acc, out);
}

}  // namespace

double brute_dtw(const Matrix& x, const Matrix& y, std::optional<double> gamma) {
  if (x.cols() != y.cols() || x.rows() < 1 || y.rows() < 1)
    throw InvalidArgument("brute_dtw needs non-empty sequences of equal dim");
  if (delannoy(x.rows() - 1, y.rows() - 1) > 1e4)
    throw InvalidArgument("instance too large for path enumeration");
  std::vector<double> costs;
  enumerate_paths(x, y, 0, 0, 0.0, costs);
  const double norm = static_cast<double>(x.rows() + y.rows());
  const double best = *std::min_element(costs.begin(), costs.end());
  if (!gamma) return best / norm;
  const double g = *gamma;
  if (!(g > 0.0)) throw InvalidArgument("gamma must be > 0");
  double s = 0.0;
  for (double c : costs) s += std::exp(-(c - best) / g);
  return (best - g * std::log(s)) / norm;
}

double brute_wasserstein(const Matrix& x, const Matrix& y, double pos_weight) {
  if (x.rows() != y.rows()) throw InvalidArgument("brute_wasserstein needs equal lengths");
  if (x.rows() > 4 || x.rows() < 1) throw InvalidArgument("brute_wasserstein supports 1 <= T <= 4");
  if (x.cols() != y.cols()) throw InvalidArgument("dimension mismatch");
  const Eigen::Index t = x.rows();
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(t));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (Eigen::Index k = 0; k < t; ++k) {
      const Eigen::Index l = perm[static_cast<std::size_t>(k)];
      double c = oracle_frame_cost(x, k, y, l);
      if (t > 1) {
        const double dp = static_cast<double>(k - l) / static_cast<double>(t - 1);
        c += pos_weight * dp * dp;
      }
      total += c;
    }
    best = std::min(best, total / static_cast<double>(t));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  Matrix normal(Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> d(0.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = d(gen_);
    // Unit RMS keeps the finite-difference step well scaled.
    const double rms = std::sqrt(m.squaredNorm() / static_cast<double>(m.size()));
    return rms > 0.0 ? Matrix(m / rms) : m;
  }

  std::vector<Eigen::Index> sample(Eigen::Index begin, Eigen::Index end, int n) {
    std::vector<Eigen::Index> all(static_cast<std::size_t>(end - begin));
    std::iota(all.begin(), all.end(), begin);
    if (static_cast<int>(all.size()) <= n) return all;
    std::shuffle(all.begin(), all.end(), gen_);
    all.resize(static_cast<std::size_t>(n));
    std::sort(all.begin(), all.end());
    return all;
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

// Packs a list of matrices into one vector and back.
struct Packer {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> shapes;

  explicit Packer(const std::vector<Matrix>& ms) {
    for (const auto& m : ms) shapes.emplace_back(m.rows(), m.cols());
  }

  Eigen::Index size() const {
    Eigen::Index n = 0;
    for (auto [r, c] : shapes) n += r * c;
    return n;
  }

  Vector pack(const std::vector<Matrix>& ms) const {
    Vector v(size());
    Eigen::Index off = 0;
    for (const auto& m : ms) {
      v.segment(off, m.size()) = Eigen::Map<const Vector>(m.data(), m.size());
      off += m.size();
    }
    return v;
  }

  std::vector<Matrix> unpack(const Vector& v) const {
    std::vector<Matrix> out;
    Eigen::Index off = 0;
    for (auto [r, c] : shapes) {
      Matrix m(r, c);
      Eigen::Map<Vector>(m.data(), m.size()) = v.segment(off, r * c);
      out.push_back(std::move(m));
      off += r * c;
    }
    return out;
  }
};

GradCheckReport check_kernel(const std::string& name, const Matrix& x, const Matrix& y,
                             const DistanceKind& kind, double threshold) {
  const Packer packer({x, y});
  const Vector point = packer.pack({x, y});
  auto f = [&](const Vector& v) {
    const auto ms = packer.unpack(v);
    return distance_grad(ms[0], ms[1], kind).value;
  };
  const auto r = distance_grad(x, y, kind);
  return check_gradient(name, f, packer.pack({r.grad.grad_x, r.grad.grad_y}), point, threshold);
}

GradCheckReport check_zscore(const std::string& name, Axis axis, Rng& rng, double threshold) {
  const Matrix m = rng.normal(4, 4);
  const Matrix w = rng.normal(4, 4);
  auto f = [&](const Vector& v) {
    const Matrix mm = Eigen::Map<const Matrix>(v.data(), 4, 4);
    return (zscore(mm, axis).array() * w.array()).sum();
  };
  const Matrix g = ZScore(m, axis).backward(w);
  return check_gradient(name, f, Eigen::Map<const Vector>(g.data(), g.size()),
                        Eigen::Map<const Vector>(m.data(), m.size()), threshold);
}

GradCheckReport check_scav(const std::string& name, bool normalize, Rng& rng, double threshold) {
  const Eigen::Index b = 4;
  const Matrix d = rng.normal(b, b).array().abs();
  Vector point(b * b + 1);
  point.head(b * b) = Eigen::Map<const Vector>(d.data(), d.size());
  point(b * b) = std::log(0.5);
  auto f = [&](const Vector& v) {
    const Matrix dd = Eigen::Map<const Matrix>(v.data(), b, b);
    return scav_loss(dd, Temperature{v(b * b)}, normalize).loss;
  };
  const auto r = scav_loss(d, Temperature{point(b * b)}, normalize);
  Vector analytic(point.size());
  analytic.head(b * b) = Eigen::Map<const Vector>(r.grad_distances.data(), b * b);
  analytic(b * b) = r.grad_log_lambda;
  return check_gradient(name, f, analytic, point, threshold);
}

std::vector<Matrix> random_sequences(Rng& rng, int count, std::initializer_list<int> lengths,
                                     int dim) {
  std::vector<Matrix> out;
  auto it = lengths.begin();
  for (int i = 0; i < count; ++i) {
    out.push_back(rng.normal(*it, dim));
    if (++it == lengths.end()) it = lengths.begin();
  }
  return out;
}

GradCheckReport check_cav(const std::string& name, Rng& rng, double threshold) {
  const auto hv = random_sequences(rng, 3, {4, 5, 3}, 4);
  const auto ha = random_sequences(rng, 3, {3, 2, 4}, 4);
  std::vector<Matrix> all = hv;
  all.insert(all.end(), ha.begin(), ha.end());
  all.push_back(Matrix::Constant(1, 1, std::log(0.2)));
  const Packer packer(all);
  auto f = [&](const Vector& v) {
    const auto ms = packer.unpack(v);
    return cav_loss(std::span(ms).subspan(0, 3), std::span(ms).subspan(3, 3), Temperature{ms[6](0, 0)})
        .loss;
  };
  const auto r = cav_loss(hv, ha, Temperature{all[6](0, 0)});
  std::vector<Matrix> g = r.grad_videos;
  g.insert(g.end(), r.grad_audios.begin(), r.grad_audios.end());
  g.push_back(Matrix::Constant(1, 1, r.grad_log_tau));
  return check_gradient(name, f, packer.pack(g), packer.pack(all), threshold);
}

GradCheckReport check_multitask(const std::string& name, Rng& rng, double threshold) {
  const Eigen::Index b = 3;
  const Matrix d = rng.normal(b, b).array().abs();
  const auto hv = random_sequences(rng, 3, {3, 4, 2}, 3);
  const auto ha = random_sequences(rng, 3, {2, 3, 3}, 3);
  std::vector<Matrix> all{d};
  all.insert(all.end(), hv.begin(), hv.end());
  all.insert(all.end(), ha.begin(), ha.end());
  all.push_back(Matrix::Constant(1, 1, 0.0));           // log lambda
  all.push_back(Matrix::Constant(1, 1, std::log(0.1)));  // log tau
  const Packer packer(all);
  constexpr double w = 0.3;
  auto eval = [&](const std::vector<Matrix>& ms) {
    const auto s = scav_loss(ms[0], Temperature{ms[7](0, 0)}, true);
    const auto c = cav_loss(std::span(ms).subspan(1, 3), std::span(ms).subspan(4, 3),
                            Temperature{ms[8](0, 0)});
    return multitask_loss(s, c, w);
  };
  auto f = [&](const Vector& v) { return eval(packer.unpack(v)).loss; };
  const auto r = eval(all);
  std::vector<Matrix> g{r.grad_distances};
  g.insert(g.end(), r.grad_videos.begin(), r.grad_videos.end());
  g.insert(g.end(), r.grad_audios.begin(), r.grad_audios.end());
  g.push_back(Matrix::Constant(1, 1, r.grad_log_lambda));
  g.push_back(Matrix::Constant(1, 1, r.grad_log_tau));
  return check_gradient(name, f, packer.pack(g), packer.pack(all), threshold);
}

GradCheckReport check_encoder(const std::string& name, Rng& rng, double threshold) {
  EncoderParams enc = init_encoder({4, 3, 6, 5, 6}, rng.engine()());
  // Move away from the identity/zero init so every tensor gets gradient.
  enc.for_each([&](const std::string&, Matrix& m) { m += 0.3 * rng.normal(m.rows(), m.cols()); });
  const BranchParams params = enc.video;
  const Matrix x = rng.normal(4, 4);
  const Matrix w = rng.normal(4, 5);
  std::vector<Matrix> all;
  params.for_each([&](const char*, const Matrix& m) { all.push_back(m); });
  all.push_back(x);
  const Packer packer(all);
  auto unpack_params = [](const std::vector<Matrix>& ms) {
    BranchParams p;
    std::size_t k = 0;
    p.for_each([&](const char*, Matrix& m) { m = ms[k++]; });
    return p;
  };
  auto f = [&](const Vector& v) {
    const auto ms = packer.unpack(v);
    return (encode(unpack_params(ms), ms.back()).array() * w.array()).sum();
  };
  BranchParams grads = zeros_like(params);
  const Matrix gx = encode_backward(params, x, w, grads);
  std::vector<Matrix> g;
  grads.for_each([&](const char*, const Matrix& m) { g.push_back(m); });
  g.push_back(gx);
  return check_gradient(name, f, packer.pack(g), packer.pack(all), threshold);
}

GradCheckReport check_pipeline(const std::string& name, LossKind loss, const DistanceKind& kind,
                               Rng& rng, double threshold) {
  TrainConfig cfg;
  cfg.loss = loss;
  cfg.distance = kind;
  cfg.hidden_dim = 5;
  cfg.latent_dim = 4;
  cfg.tau_init = 0.2;
  cfg.lambda_init = 0.7;
  cfg.seed = rng.engine()();
  Model model = init_model(cfg, 3, 2, 6);
  model.encoder.for_each(
      [&](const std::string&, Matrix& m) { m += 0.2 * rng.normal(m.rows(), m.cols()); });

  const int b = 3;
  const auto videos = random_sequences(rng, b, {5, 4, 5}, 3);
  const auto audios = random_sequences(rng, b, {3, 4, 2}, 2);

  std::vector<Matrix> all;
  model.encoder.for_each([&](const std::string&, const Matrix& m) { all.push_back(m); });
  all.push_back(Matrix::Constant(1, 1, model.tau.log_value));
  all.push_back(Matrix::Constant(1, 1, model.lambda.log_value));
  const Packer packer(all);
  auto to_model = [&](const std::vector<Matrix>& ms) {
    Model m = model;
    std::size_t k = 0;
    m.encoder.for_each([&](const std::string&, Matrix& t) { t = ms[k++]; });
    m.tau.log_value = ms[k++](0, 0);
    m.lambda.log_value = ms[k](0, 0);
    return m;
  };
  auto f = [&](const Vector& v) { return batch_objective(to_model(packer.unpack(v)), videos, audios, false).loss; };

  const auto eval = batch_objective(model, videos, audios, true);
  std::vector<Matrix> g;
  eval.grads.encoder.for_each([&](const std::string&, const Matrix& m) { g.push_back(m); });
  g.push_back(Matrix::Constant(1, 1, eval.grads.log_tau));
  g.push_back(Matrix::Constant(1, 1, eval.grads.log_lambda));

  // At least five sampled coordinates per parameter group.
  std::vector<Eigen::Index> coords;
  Eigen::Index off = 0;
  for (const auto& m : all) {
    for (auto c : rng.sample(off, off + m.size(), 5)) coords.push_back(c);
    off += m.size();
  }
  return check_gradient(name, f, packer.pack(g), packer.pack(all), threshold, coords);
}

Wasserstein gradcheck_wasserstein() {
  Wasserstein w;
  w.epsilon = 0.5;
  w.iters = 20000;
  w.pos_weight = 1.0;
  w.tolerance = 1e-15;
  w.regularized_value = true;
  return w;
}

struct Target {
  std::string name;
  bool pipeline;
  std::function<GradCheckReport(const std::string&, Rng&, double)> run;
};

std::vector<Target> registry() {
  std::vector<Target> t;
  auto kernel = [](DistanceKind kind, int tx, int ty) {
    return [kind, tx, ty](const std::string& n, Rng& rng, double thr) {
      const Matrix x = rng.normal(tx, 3);
      const Matrix y = rng.normal(ty, 3);
      return check_kernel(n, x, y, kind, thr);
    };
  };
  t.push_back({"eucl_v2a", false, kernel(EuclInterp{Direction::V2A, Stage::Post}, 5, 3)});
  t.push_back({"eucl_a2v", false, kernel(EuclInterp{Direction::A2V, Stage::Post}, 4, 6)});
  t.push_back({"sdtw", false, kernel(SoftDtw{0.5}, 4, 5)});
  t.push_back({"sdtw_sharp", false, kernel(SoftDtw{0.05}, 5, 3)});
  t.push_back({"wass", false, kernel(gradcheck_wasserstein(), 4, 5)});
  t.push_back({"zscore_rows", false,
               [](const std::string& n, Rng& rng, double thr) { return check_zscore(n, Axis::Rows, rng, thr); }});
  t.push_back({"zscore_cols", false,
               [](const std::string& n, Rng& rng, double thr) { return check_zscore(n, Axis::Cols, rng, thr); }});
  t.push_back({"scav", false,
               [](const std::string& n, Rng& rng, double thr) { return check_scav(n, true, rng, thr); }});
  t.push_back({"scav_nonorm", false,
               [](const std::string& n, Rng& rng, double thr) { return check_scav(n, false, rng, thr); }});
  t.push_back({"cav", false, check_cav});
  t.push_back({"multitask", false, check_multitask});
  t.push_back({"encoder", false, check_encoder});

  const std::vector<std::pair<std::string, DistanceKind>> metrics{
      {"eucl", EuclInterp{Direction::V2A, Stage::Pre}},
      {"eucl_post", EuclInterp{Direction::A2V, Stage::Post}},
      {"sdtw", SoftDtw{0.5}},
      {"wass", gradcheck_wasserstein()}};
  t.push_back({"pipeline_cav", true, [](const std::string& n, Rng& rng, double thr) {
                 return check_pipeline(n, LossKind::Cav, EuclInterp{}, rng, thr);
               }});
  for (auto loss : {LossKind::Scav, LossKind::Multi})
    for (const auto& [mname, kind] : metrics)
      t.push_back({"pipeline_" + to_string(loss) + "_" + mname, true,
                   [loss, kind = kind](const std::string& n, Rng& rng, double thr) {
                     return check_pipeline(n, loss, kind, rng, thr);
                   }});
  return t;
}

}  // namespace

std::vector<std::string> gradcheck_targets() {
  std::vector<std::string> names;
  for (const auto& t : registry()) names.push_back(t.name);
  return names;
}

std::vector<GradCheckReport> run_gradchecks(const std::string& target, double threshold,
                                            std::uint64_t seed) {
  std::vector<GradCheckReport> out;
  bool found = false;
  for (const auto& t : registry()) {
    if (target != "all" && target != t.name) continue;
    found = true;
    // Each target gets its own stream so results do not depend on the selection.
    Rng rng(seed + std::hash<std::string>{}(t.name));
    const double thr = t.pipeline ? std::max(threshold, 1e-3) : threshold;
    out.push_back(t.run(t.name, rng, thr));
  }
  if (!found) throw InvalidArgument("unknown gradcheck target '" + target + "'");
  return out;
}

std::string format_report(const GradCheckReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-24s %s coords=%-4d max_rel=%.3e max_abs=%.3e threshold=%.0e",
                r.target.c_str(), r.pass ? "PASS" : "FAIL", r.coordinates, r.max_rel_error,
                r.max_abs_error, r.threshold);
  return buf;
}

}  // namespace scav
