// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.
// Exit status is non-zero if any criterion fails.
//
//   scav_acceptance            all criteria
//   scav_acceptance 2 5 9      a subset

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "scav/kernels.hpp"
#include "scav/objective.hpp"
#include "scav/retrieval.hpp"
#include "scav/seqdata.hpp"
#include "scav/trainer.hpp"
#include "scav/verification.hpp"

namespace {

using namespace scav;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Matrix random_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1 -------------------------------------------------------------------------
Outcome gradient_correctness() {
  const auto t0 = Clock::now();
  const auto reports = run_gradchecks("all", 1e-4, 12345);
  const double elapsed = seconds_since(t0);
  Outcome o;
  double worst = 0.0, worst_pipeline = 0.0;
  for (const auto& r : reports) {
    o.pass = o.pass && r.pass;
    const bool pipeline = r.target.rfind("pipeline_", 0) == 0;
    (pipeline ? worst_pipeline : worst) = std::max(pipeline ? worst_pipeline : worst, r.max_rel_error);
    if (!r.pass) o.detail += r.target + " failed; ";
  }
  o.pass = o.pass && worst < 1e-4 && worst_pipeline < 1e-3 && elapsed < 60.0;
  o.detail += fmt("%zu targets, max rel err %.2e (components) %.2e (pipeline), %.2fs", reports.size(), worst,
                  worst_pipeline, elapsed);
  return o;
}

// 2 -------------------------------------------------------------------------
Outcome soft_dtw_oracle() {
  std::mt19937_64 rng(2002);
  std::uniform_int_distribution<int> len(1, 5), dim(1, 4);
  std::uniform_real_distribution<double> gamma(0.01, 2.0);
  double max_soft = 0.0, max_limit = 0.0;
  int hard_mismatch = 0;
  for (int i = 0; i < 50; ++i) {
    const int c = dim(rng);
    const Matrix x = random_matrix(len(rng), c, rng), y = random_matrix(len(rng), c, rng);
    const double g = gamma(rng);
    max_soft = std::max(max_soft, std::abs(soft_dtw(x, y, g) - brute_dtw(x, y, g)));
    const double hard = hard_dtw(x, y);
    if (hard != brute_dtw(x, y, std::nullopt)) ++hard_mismatch;
    max_limit = std::max(max_limit, std::abs(soft_dtw(x, y, 1e-4) - hard));
  }
  return {max_soft < 1e-8 && hard_mismatch == 0 && max_limit < 1e-3,
          fmt("50 instances: max |soft - brute| %.1e, hard mismatches %d, max |soft(1e-4) - hard| %.1e",
              max_soft, hard_mismatch, max_limit)};
}

// 3 -------------------------------------------------------------------------
Outcome wasserstein_oracle() {
  std::mt19937_64 rng(3003);
  std::uniform_int_distribution<int> len(2, 4), dim(1, 4);
  Wasserstein sharp;
  sharp.epsilon = 1e-3;
  sharp.iters = 5000;
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const int T = len(rng), c = dim(rng);
    const Matrix x = random_matrix(T, c, rng), y = random_matrix(T, c, rng);
    sharp.pos_weight = i % 2 == 0 ? 1.0 : 0.0;
    const double brute = brute_wasserstein(x, y, sharp.pos_weight);
    const double v = wasserstein(x, y, sharp, false).value;
    worst = std::max(worst, std::abs(v - brute) / brute);
  }
  int insensitive = 0;
  double min_gap = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 50; ++i) {
    const Matrix x = random_matrix(3 + i % 6, 4, rng);
    const Matrix rev = x.colwise().reverse();
    const Wasserstein w;  // pos_weight = 1
    const double d_rev = wasserstein(x, rev, w, false).value;
    const double d_self = wasserstein(x, x, w, false).value;
    min_gap = std::min(min_gap, d_rev - d_self);
    if (!(d_rev > 1e-9 && d_rev > d_self + 1e-9)) ++insensitive;
  }
  return {worst < 0.02 && insensitive == 0,
          fmt("50 instances: max rel gap to permutation optimum %.2f%%; reversal: %d/50 insensitive, "
              "min d(x,rev x) - d(x,x) = %.3g",
              100.0 * worst, insensitive, min_gap)};
}

// 4 -------------------------------------------------------------------------
Outcome loss_limits() {
  std::mt19937_64 rng(4004);
  double worst_limit = 0.0;
  for (int b : {2, 4, 8}) {
    const Matrix d = random_matrix(b, b, rng).cwiseAbs();
    std::vector<Matrix> v, a;
    for (int i = 0; i < b; ++i) {
      v.push_back(random_matrix(4, 3, rng));
      a.push_back(random_matrix(5, 3, rng));
    }
    for (bool norm : {true, false})
      worst_limit = std::max(worst_limit,
                             std::abs(scav_loss(d, Temperature::from_value(1e6), norm).loss - std::log(b)));
    worst_limit = std::max(worst_limit, std::abs(cav_loss(v, a, Temperature::from_value(1e6)).loss - std::log(b)));
  }
  double worst_affine = 0.0;
  std::uniform_real_distribution<double> scale(1e-3, 1e3), shift(-50.0, 50.0);
  for (int i = 0; i < 20; ++i) {
    const Matrix d = random_matrix(6, 6, rng).cwiseAbs();
    const auto lam = Temperature::from_value(0.5);
    const double base = scav_loss(d, lam, true).loss;
    const Matrix t = (d * scale(rng)).array() + shift(rng);
    worst_affine = std::max(worst_affine, std::abs(scav_loss(t, lam, true).loss - base));
  }
  int ranking_violations = 0;
  for (int i = 0; i < 100; ++i) {
    const Matrix d = random_matrix(8, 12, rng);
    const Matrix zr = zscore(d, Axis::Rows), zc = zscore(d, Axis::Cols);
    for (Eigen::Index r = 0; r < d.rows(); ++r)
      for (Eigen::Index j = 0; j < d.cols(); ++j)
        for (Eigen::Index k = 0; k < d.cols(); ++k)
          if ((d(r, j) < d(r, k)) != (zr(r, j) < zr(r, k))) ++ranking_violations;
    for (Eigen::Index c = 0; c < d.cols(); ++c)
      for (Eigen::Index j = 0; j < d.rows(); ++j)
        for (Eigen::Index k = 0; k < d.rows(); ++k)
          if ((d(j, c) < d(k, c)) != (zc(j, c) < zc(k, c))) ++ranking_violations;
  }
  return {worst_limit < 1e-3 && worst_affine < 1e-9 && ranking_violations == 0,
          fmt("max |loss - ln B| %.1e at temperature 1e6; max affine drift %.1e; ranking violations %d/100 "
              "matrices",
              worst_limit, worst_affine, ranking_violations)};
}

// 5 -------------------------------------------------------------------------
Outcome hybrid_identities() {
  SynthConfig cfg;
  cfg.num_pairs = 1000;
  cfg.dim_v = cfg.dim_a = cfg.latent_dim = 8;
  cfg.identity_projections = true;
  cfg.len_v = 14;
  cfg.len_a = 10;
  cfg.noise_std = 0.8;
  cfg.distractor_correlation = 0.5;
  cfg.seed = 5005;
  const auto data = as_encoded(synthesize(cfg));
  int mismatches = 0;
  std::string kinds;
  for (const DistanceKind& kind : {DistanceKind{EuclInterp{}}, DistanceKind{SoftDtw{0.1}}}) {
    const auto task = make_task(data, data, Direction::A2V, 200);
    const int K = static_cast<int>(task.candidates.size());
    const auto seq = seq_retrieve(task.queries, task.candidates, kind, Modality::Audio, 1);
    const auto agg = agg_retrieve(task.queries, task.candidates, 1);
    const auto full = hybrid_retrieve(task.queries, task.candidates, K, kind, Modality::Audio, 1);
    const auto one = hybrid_retrieve(task.queries, task.candidates, 1, kind, Modality::Audio, 1);
    for (std::size_t q = 0; q < task.queries.size(); ++q) {
      if (full[q][0] != seq[q][0]) ++mismatches;
      if (one[q][0] != agg[q][0]) ++mismatches;
    }
    kinds += (kinds.empty() ? "" : ", ") + to_string(kind);
  }
  return {mismatches == 0, fmt("200 queries x 1000 candidates (%s): %d top-1 mismatches", kinds.c_str(),
                               mismatches)};
}

// 6 and 7 -----------------------------------------------------------------
// The synthetic benchmark and the shared training budget.
constexpr std::uint64_t kMechanismSeed = 1;
constexpr double kMechanismNoise = 1.0;
constexpr int kMechanismSteps = 5000;
constexpr double kMechanismLr = 3e-3;
constexpr int kMechanismWarmup = 200;
constexpr double kMechanismWeightDecay = 1.0;

struct MechanismData {
  PairedDataset train, test;
};

const MechanismData& mechanism_data() {
  static const MechanismData data = [] {
    SynthConfig cfg;
    cfg.num_pairs = 512;
    cfg.distractor_correlation = 0.6;
    cfg.noise_std = kMechanismNoise;
    cfg.seed = kMechanismSeed;
    MechanismData d;
    d.train = synthesize(cfg);
    cfg.num_pairs = 256;
    cfg.id_offset = 512;
    d.test = synthesize(cfg);
    return d;
  }();
  return data;
}

TrainConfig mechanism_config(LossKind loss) {
  TrainConfig cfg;
  cfg.loss = loss;
  cfg.distance = EuclInterp{Direction::V2A, Stage::Pre};
  cfg.batch_size = 32;
  cfg.steps = kMechanismSteps;
  cfg.base_lr = kMechanismLr;
  cfg.warmup_steps = kMechanismWarmup;
  cfg.weight_decay = kMechanismWeightDecay;
  cfg.seed = kMechanismSeed;
  return cfg;
}

struct RunResult {
  EvalMetrics eval;
  double seconds = 0.0;
  double seq_mean() const { return 0.5 * (eval.seq_a2v + eval.seq_v2a); }
};

// Memoized so criteria 6 and 7 share the baseline runs.
const RunResult& run_variant(const std::string& name) {
  static std::map<std::string, RunResult> cache;
  if (auto it = cache.find(name); it != cache.end()) return it->second;
  TrainConfig cfg = mechanism_config(name == "cav" ? LossKind::Cav : name == "multi" ? LossKind::Multi : LossKind::Scav);
  if (name == "scav_no_norm") cfg.normalize_distances = false;
  if (name == "scav_lambda_0.07") cfg.lambda_init = 0.07;
  const auto& d = mechanism_data();
  const auto report = train(d.train, cfg, &d.test);
  return cache[name] = {*report.eval, report.elapsed_seconds};
}

Outcome end_to_end_mechanism() {
  const auto& cav = run_variant("cav");
  const auto& scav = run_variant("scav");
  const double baseline = 100.0 / 256.0;
  const bool a = scav.eval.seq_a2v >= cav.eval.agg_a2v + 0.05 && scav.eval.seq_v2a >= cav.eval.agg_v2a + 0.05;
  const bool b = scav.eval.seq_a2v >= baseline && scav.eval.seq_v2a >= baseline;
  const double total = cav.seconds + scav.seconds;
  return {a && b && total <= 600.0,
          fmt("R@1 A2V/V2A: SCAV seq %.3f/%.3f vs CAV agg %.3f/%.3f (need +0.05); 100x random = %.3f; "
              "training %.0fs",
              scav.eval.seq_a2v, scav.eval.seq_v2a, cav.eval.agg_a2v, cav.eval.agg_v2a, baseline, total)};
}

Outcome ablation_directions() {
  const auto& scav = run_variant("scav");
  const auto& no_norm = run_variant("scav_no_norm");
  const auto& low_lambda = run_variant("scav_lambda_0.07");
  const auto& multi = run_variant("multi");
  const bool one = no_norm.seq_mean() < scav.seq_mean();
  const bool two = low_lambda.seq_mean() <= scav.seq_mean();
  const bool three = multi.seq_mean() <= scav.seq_mean() + 0.01;
  return {one && two && three,
          fmt("mean seq R@1: SCAV %.4f | (1) no-dist-norm %.4f [%s] | (2) lambda0=0.07 %.4f [%s] | "
              "(3) multitask %.4f [%s]",
              scav.seq_mean(), no_norm.seq_mean(), one ? "lower" : "NOT lower", low_lambda.seq_mean(),
              two ? "<=" : "HIGHER", multi.seq_mean(), three ? "<= +1pt" : "ABOVE +1pt")};
}

// 8 -------------------------------------------------------------------------
constexpr double kLatencyNoise = 1.5;

Outcome latency_trend() {
  SynthConfig cfg;
  cfg.num_pairs = 10000;
  cfg.dim_v = cfg.dim_a = cfg.latent_dim = 64;
  cfg.identity_projections = true;
  cfg.len_v = cfg.len_a = 60;
  cfg.noise_std = kLatencyNoise;
  cfg.distractor_correlation = 0.6;
  cfg.seed = 8008;
  const auto data = as_encoded(synthesize(cfg));
  const std::vector<RetrievalMode> modes{Agg{}, Seq{EuclInterp{}}, Hybrid{100, EuclInterp{}}};
  const std::vector<Direction> dirs{Direction::A2V};
  const auto reports = bench(data, data, modes, dirs, 1000, {10, 1});
  const auto& agg = reports[0];
  const auto& seq = reports[1];
  const auto& hyb = reports[2];
  const bool fast = hyb.total_s <= 0.1 * seq.total_s;
  const bool close = std::abs(hyb.recall1 - seq.recall1) <= 0.005;
  const bool agg_fastest = agg.total_s < hyb.total_s && agg.total_s < seq.total_s;
  return {fast && close && agg_fastest,
          fmt("Q=1000 K=10000 T=60 c=64, 1 worker: agg %.2fs R@1 %.3f | seq %.2fs R@1 %.3f | hybrid:100 "
              "%.2fs (%.2f + %.2f) R@1 %.3f | ratio %.3f",
              agg.total_s, agg.recall1, seq.total_s, seq.recall1, hyb.total_s, hyb.preselect_s, hyb.rerank_s,
              hyb.recall1, hyb.total_s / seq.total_s)};
}

// 9 -------------------------------------------------------------------------
// Best-of-N wall time for `reps` kernel calls.
double time_kernel(const std::function<double()>& fn, int reps) {
  double best = std::numeric_limits<double>::infinity();
  volatile double sink = 0.0;
  for (int round = 0; round < 5; ++round) {
    const auto t0 = Clock::now();
    for (int i = 0; i < reps; ++i) sink = sink + fn();
    best = std::min(best, seconds_since(t0));
  }
  return best;
}

Outcome scaling_property() {
  std::mt19937_64 rng(9009);
  const Matrix x64 = random_matrix(64, 16, rng), y64 = random_matrix(64, 16, rng);
  const Matrix x256 = random_matrix(256, 16, rng), y256 = random_matrix(256, 16, rng);
  const double e64 = time_kernel([&] { return eucl_dist(x64, y64, Direction::V2A); }, 2000);
  const double e256 = time_kernel([&] { return eucl_dist(x256, y256, Direction::V2A); }, 2000);
  const double s64 = time_kernel([&] { return soft_dtw(x64, y64, 0.1); }, 40);
  const double s256 = time_kernel([&] { return soft_dtw(x256, y256, 0.1); }, 40);
  const double eucl_ratio = e256 / e64, sdtw_ratio = s256 / s64;
  return {sdtw_ratio > eucl_ratio, fmt("time(T=256)/time(T=64): sdtw %.1f vs eucl %.1f", sdtw_ratio, eucl_ratio)};
}

struct Criterion {
  int id;
  const char* name;
  Outcome (*run)();
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "gradient correctness", gradient_correctness},
      {2, "soft-DTW oracle", soft_dtw_oracle},
      {3, "Wasserstein oracle", wasserstein_oracle},
      {4, "loss limits and invariances", loss_limits},
      {5, "hybrid identities", hybrid_identities},
      {6, "end-to-end mechanism", end_to_end_mechanism},
      {7, "ablation directions", ablation_directions},
      {8, "latency trend", latency_trend},
      {9, "scaling property", scaling_property},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failed = 0;
  for (const auto& c : all) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("[%s] %d %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
