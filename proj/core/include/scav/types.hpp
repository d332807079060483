#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace scav {

/// Row-major so that row t of a sequence is one contiguous frame.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on arguments was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed file contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A computation produced NaN/inf where a finite value is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Which modality plays the query role, and which sequence gets resampled.
enum class Direction { V2A, A2V };

enum class Modality { Video, Audio };

std::string to_string(Direction d);
Direction parse_direction(const std::string& s);

}  // namespace scav
