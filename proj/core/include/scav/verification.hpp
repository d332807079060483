#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scav/types.hpp"

namespace scav {

using ScalarFn = std::function<double(const Vector&)>;

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h. Only the listed
/// coordinates are perturbed (all when empty); others stay zero.
Vector numeric_gradient(const ScalarFn& f, const Vector& point, double h = 1e-5,
                        std::span<const Eigen::Index> coords = {});

/// |a - n| / max(|a|, |n|, 1e-8)
double relative_error(double analytic, double numeric);

struct GradCheckReport {
  std::string target;
  int coordinates = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

GradCheckReport check_gradient(const std::string& target, const ScalarFn& f,
                               const Vector& analytic, const Vector& point, double threshold,
                               std::span<const Eigen::Index> coords = {}, double h = 1e-5);

/// Path-enumeration DTW over all monotone alignments with moves right, down
/// and diagonal; hard minimum when gamma is empty, soft-min otherwise.
/// Normalized by (T_x + T_y). Throws when the path count exceeds 1e4.
double brute_dtw(const Matrix& x, const Matrix& y, std::optional<double> gamma);

/// Minimum over permutations of the mean matched cost. Requires T_x == T_y <= 4.
double brute_wasserstein(const Matrix& x, const Matrix& y, double pos_weight);

/// Names accepted by run_gradchecks.
std::vector<std::string> gradcheck_targets();

/// Runs one target (or "all") on seeded random instances. The end-to-end
/// pipeline targets use max(threshold, 1e-3) when `threshold` is 1e-4.
std::vector<GradCheckReport> run_gradchecks(const std::string& target, double threshold = 1e-4,
                                            std::uint64_t seed = 12345);

std::string format_report(const GradCheckReport& r);

}  // namespace scav
