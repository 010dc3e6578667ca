#pragma once

// Finite-state linear algebra substrate: stochastic and generator matrices,
// matrix exponentials, stationary distributions and eigenvalues.

#include <complex>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace duality {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Input violated a documented precondition (invalid matrix, bad parameter).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file or literal. Message carries the location.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Numerical tolerances shared by all modules. Defaults are the documented
/// constants; the CLI may override individual fields.
struct Tolerances {
  double entry = 1e-12;          // negative entries above -entry are clamped
  double row = 1e-10;            // row-sum deviation
  double spectral = 1e-8;        // eigenvalue matching
  double duality = 1e-9;         // duality residuals
  double semigroup = 1e-8;       // residuals after exponentiation
  double reversibility = 1e-10;  // detailed-balance preconditions
  double lp = 1e-9;              // phase-1 infeasibility threshold
  double pivot = 1e-10;          // rank decisions in row reduction
};

/// Tolerances used when the caller does not pass any.
const Tolerances& default_tolerances();

/// Max-norm (largest absolute entry) of a matrix.
double max_abs(const Matrix& m);

struct ValidationReport {
  bool pass = false;
  double max_row_deviation = 0.0;
  std::size_t worst_row = 0;
  double min_entry = 0.0;
};

/// Checks row sums against 1 and entries against -tol.entry.
/// Throws ValidationError on a non-finite entry.
ValidationReport validate_stochastic(const Matrix& m, const Tolerances& tol = default_tolerances());

/// Same for Q-matrices: off-diagonals >= -tol.entry, row sums 0.
ValidationReport validate_generator(const Matrix& m, const Tolerances& tol = default_tolerances());

/// Row-stochastic matrix; rows may index a different set than columns.
class StochasticMatrix {
 public:
  /// Validates, clamps entries in [-tol.entry, 0) to zero, throws ValidationError otherwise.
  static StochasticMatrix from(Matrix m, const Tolerances& tol = default_tolerances());
  static StochasticMatrix identity(std::size_t n);

  const Matrix& matrix() const { return m_; }
  std::size_t rows() const { return static_cast<std::size_t>(m_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(m_.cols()); }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  bool square() const { return m_.rows() == m_.cols(); }

 private:
  explicit StochasticMatrix(Matrix m) : m_(std::move(m)) {}
  Matrix m_;
};

/// Q-matrix: zero row sums, nonnegative off-diagonal rates.
class GeneratorMatrix {
 public:
  static GeneratorMatrix from(Matrix m, const Tolerances& tol = default_tolerances());
  static GeneratorMatrix zero(std::size_t n);

  const Matrix& matrix() const { return m_; }
  std::size_t size() const { return static_cast<std::size_t>(m_.rows()); }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }

 private:
  explicit GeneratorMatrix(Matrix m) : m_(std::move(m)) {}
  Matrix m_;
};

class ProbabilityVector {
 public:
  static ProbabilityVector from(Vector v, const Tolerances& tol = default_tolerances());
  static ProbabilityVector uniform(std::size_t n);

  const Vector& vector() const { return v_; }
  std::size_t size() const { return static_cast<std::size_t>(v_.size()); }
  double operator()(std::size_t i) const { return v_(i); }

 private:
  explicit ProbabilityVector(Vector v) : v_(std::move(v)) {}
  Vector v_;
};

/// A finite signed measure.
class SignedVector {
 public:
  static SignedVector from(Vector v);
  const Vector& vector() const { return v_; }

 private:
  explicit SignedVector(Vector v) : v_(std::move(v)) {}
  Vector v_;
};

enum class DualityStructure { generic, tensor_coalescing, tensor_annihilating, tensor_q, siegmund, diagonal };

std::string to_string(DualityStructure s);

/// The duality function H as a dense |E| x |F| matrix.
class DualityMatrix {
 public:
  static DualityMatrix from(Matrix m, DualityStructure tag = DualityStructure::generic);

  const Matrix& matrix() const { return m_; }
  std::size_t rows() const { return static_cast<std::size_t>(m_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(m_.cols()); }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  DualityStructure structure() const { return tag_; }

 private:
  DualityMatrix(Matrix m, DualityStructure tag) : m_(std::move(m)), tag_(tag) {}
  Matrix m_;
  DualityStructure tag_;
};

/// exp(tL) by uniformization. Throws ValidationError for t < 0.
StochasticMatrix transition_matrix(const GeneratorMatrix& l, double t);

/// Stationary distribution of a discrete-time chain (pi P = pi).
ProbabilityVector stationary_distribution(const StochasticMatrix& p, const Tolerances& tol = default_tolerances());
/// Stationary distribution of a continuous-time chain (pi L = 0).
ProbabilityVector stationary_distribution(const GeneratorMatrix& l, const Tolerances& tol = default_tolerances());

/// Eigenvalues with algebraic multiplicity, sorted by (real, imag).
/// Hessenberg reduction followed by Francis double-shift QR.
std::vector<std::complex<double>> eigenvalue_multiset(const Matrix& m);

void require_same_dims(const Matrix& a, const Matrix& b, const char* what);

}  // namespace duality
