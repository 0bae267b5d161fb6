#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace zobilevel {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using VectorXd = Vector<double>;
using MatrixXd = Matrix<double>;
using Index = Eigen::Index;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration key or value was rejected.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error(what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// A loss or gradient became non-finite.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Architecture parameters: the outer variable of the bi-level problem.
template <typename Scalar = double>
using ArchParams = Vector<Scalar>;

/// A candidate update u with its cached Euclidean norm.
template <typename Scalar = double>
struct Perturbation {
  Vector<Scalar> u;
  Scalar radius = Scalar(0);

  Perturbation() = default;
  explicit Perturbation(Vector<Scalar> v) : u(std::move(v)), radius(u.norm()) {}

  static Perturbation zero(Index d) { return Perturbation(Vector<Scalar>::Zero(d)); }
  Index dim() const { return u.size(); }
};

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& v) {
  return v.allFinite();
}

}  // namespace zobilevel
