#include "duality/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace duality {

namespace {

void require_finite(const Matrix& m, const char* what) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (!std::isfinite(m(i, j))) {
        std::ostringstream os;
        os << what << ": non-finite entry at (" << i << ", " << j << ")";
        throw ValidationError(os.str());
      }
    }
  }
}

void clamp_small_negatives(Matrix& m, double tol, bool skip_diagonal) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (skip_diagonal && i == j) continue;
      if (m(i, j) < 0.0 && m(i, j) >= -tol) m(i, j) = 0.0;
    }
  }
}

}  // namespace

const Tolerances& default_tolerances() {
  static const Tolerances tol{};
  return tol;
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

void require_same_dims(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    std::ostringstream os;
    os << what << ": dimension mismatch " << a.rows() << "x" << a.cols() << " vs " << b.rows() << "x" << b.cols();
    throw DimensionError(os.str());
  }
}

ValidationReport validate_stochastic(const Matrix& m, const Tolerances& tol) {
  require_finite(m, "validate_stochastic");
  ValidationReport r;
  if (m.rows() == 0 || m.cols() == 0) return r;
  r.min_entry = m.minCoeff();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double dev = std::abs(m.row(i).sum() - 1.0);
    if (dev > r.max_row_deviation) {
      r.max_row_deviation = dev;
      r.worst_row = static_cast<std::size_t>(i);
    }
  }
  r.pass = r.max_row_deviation <= tol.row && r.min_entry >= -tol.entry;
  return r;
}

ValidationReport validate_generator(const Matrix& m, const Tolerances& tol) {
  require_finite(m, "validate_generator");
  ValidationReport r;
  if (m.rows() == 0 || m.rows() != m.cols()) return r;
  r.min_entry = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double dev = std::abs(m.row(i).sum());
    if (dev > r.max_row_deviation) {
      r.max_row_deviation = dev;
      r.worst_row = static_cast<std::size_t>(i);
    }
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (i != j) r.min_entry = std::min(r.min_entry, m(i, j));
    }
  }
  if (m.rows() == 1) r.min_entry = 0.0;
  r.pass = r.max_row_deviation <= tol.row && r.min_entry >= -tol.entry;
  return r;
}

StochasticMatrix StochasticMatrix::from(Matrix m, const Tolerances& tol) {
  const ValidationReport r = validate_stochastic(m, tol);
  if (m.rows() == 0 || m.cols() == 0) throw ValidationError("stochastic matrix must be non-empty");
  if (!r.pass) {
    std::ostringstream os;
    os.precision(17);
    os << "not a stochastic matrix: worst row " << r.worst_row << " deviates by " << r.max_row_deviation
       << ", min entry " << r.min_entry;
    throw ValidationError(os.str());
  }
  clamp_small_negatives(m, tol.entry, false);
  return StochasticMatrix(std::move(m));
}

StochasticMatrix StochasticMatrix::identity(std::size_t n) {
  const auto k = static_cast<Eigen::Index>(n);
  return StochasticMatrix(Matrix::Identity(k, k));
}

GeneratorMatrix GeneratorMatrix::from(Matrix m, const Tolerances& tol) {
  if (m.rows() == 0 || m.rows() != m.cols()) throw DimensionError("generator must be square and non-empty");
  const ValidationReport r = validate_generator(m, tol);
  if (!r.pass) {
    std::ostringstream os;
    os.precision(17);
    os << "not a Q-matrix: worst row " << r.worst_row << " sums to " << r.max_row_deviation
       << ", min off-diagonal " << r.min_entry;
    throw ValidationError(os.str());
  }
  clamp_small_negatives(m, tol.entry, true);
  return GeneratorMatrix(std::move(m));
}

GeneratorMatrix GeneratorMatrix::zero(std::size_t n) {
  const auto k = static_cast<Eigen::Index>(n);
  return GeneratorMatrix(Matrix::Zero(k, k));
}

ProbabilityVector ProbabilityVector::from(Vector v, const Tolerances& tol) {
  if (v.size() == 0) throw ValidationError("probability vector must be non-empty");
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v(i))) throw ValidationError("probability vector: non-finite entry");
    if (v(i) < -tol.entry) throw ValidationError("probability vector: negative entry at " + std::to_string(i));
    if (v(i) < 0.0) v(i) = 0.0;
  }
  if (std::abs(v.sum() - 1.0) > tol.row) throw ValidationError("probability vector does not sum to 1");
  return ProbabilityVector(std::move(v));
}

ProbabilityVector ProbabilityVector::uniform(std::size_t n) {
  const auto k = static_cast<Eigen::Index>(n);
  return ProbabilityVector(Vector::Constant(k, 1.0 / static_cast<double>(n)));
}

SignedVector SignedVector::from(Vector v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v(i))) throw ValidationError("signed vector: non-finite entry");
  }
  return SignedVector(std::move(v));
}

std::string to_string(DualityStructure s) {
  switch (s) {
    case DualityStructure::generic: return "generic";
    case DualityStructure::tensor_coalescing: return "tensor-coalescing";
    case DualityStructure::tensor_annihilating: return "tensor-annihilating";
    case DualityStructure::tensor_q: return "tensor-q";
    case DualityStructure::siegmund: return "siegmund";
    case DualityStructure::diagonal: return "diagonal";
  }
  return "generic";
}

DualityMatrix DualityMatrix::from(Matrix m, DualityStructure tag) {
  require_finite(m, "duality matrix");
  if (m.rows() == 0 || m.cols() == 0) throw ValidationError("duality matrix must be non-empty");
  return DualityMatrix(std::move(m), tag);
}

StochasticMatrix transition_matrix(const GeneratorMatrix& l, double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw ValidationError("transition_matrix: time must be finite and >= 0");
  const Eigen::Index n = l.matrix().rows();
  const double rate = l.matrix().diagonal().cwiseAbs().maxCoeff();
  if (t == 0.0 || rate == 0.0) return StochasticMatrix::identity(static_cast<std::size_t>(n));

  // Halve the horizon until the Poisson mean is small enough that e^{-a}
  // stays well inside double range, then square back up.
  int squarings = 0;
  double tau = t;
  while (rate * tau > 32.0) {
    tau *= 0.5;
    ++squarings;
  }
  const double a = rate * tau;
  const Matrix p_tilde = Matrix::Identity(n, n) + l.matrix() / rate;

  Matrix power = Matrix::Identity(n, n);
  double weight = std::exp(-a);
  double mass = weight;
  Matrix sum = weight * power;
  constexpr int kMaxTerms = 2000;
  for (int k = 1; k < kMaxTerms; ++k) {
    power = power * p_tilde;
    weight *= a / k;
    mass += weight;
    sum += weight * power;
    if (k > a && 1.0 - mass < 1e-14) break;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;

  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (sum(i, j) < 0.0) sum(i, j) = 0.0;
    }
    sum.row(i) /= sum.row(i).sum();
  }
  return StochasticMatrix::from(std::move(sum));
}

namespace {

ProbabilityVector solve_left_null(const Matrix& a_transposed, const Matrix& check_against, bool generator,
                                  const Tolerances& tol) {
  // Solve A^T pi = 0 subject to sum(pi) = 1 as an overdetermined system.
  const Eigen::Index n = a_transposed.rows();
  Matrix sys(n + 1, n);
  sys.topRows(n) = a_transposed;
  sys.row(n).setOnes();
  Vector rhs = Vector::Zero(n + 1);
  rhs(n) = 1.0;
  Vector pi = sys.completeOrthogonalDecomposition().solve(rhs);

  for (Eigen::Index i = 0; i < n; ++i) {
    if (pi(i) < 0.0 && pi(i) > -1e-9) pi(i) = 0.0;
  }
  if (pi.minCoeff() < 0.0) {
    std::ostringstream os;
    os << "stationary_distribution: solution has negative mass " << pi.minCoeff();
    throw Error(os.str());
  }
  pi /= pi.sum();
  const Vector image = check_against.transpose() * pi;
  const double residual = generator ? image.cwiseAbs().maxCoeff() : (image - pi).cwiseAbs().maxCoeff();
  const double bound = tol.row * std::max(1.0, max_abs(check_against));
  if (!(residual <= bound)) {
    std::ostringstream os;
    os.precision(17);
    os << "stationary_distribution: residual " << residual << " exceeds " << bound;
    throw Error(os.str());
  }
  return ProbabilityVector::from(pi, tol);
}

}  // namespace

ProbabilityVector stationary_distribution(const StochasticMatrix& p, const Tolerances& tol) {
  if (!p.square()) throw DimensionError("stationary_distribution: matrix must be square");
  const Eigen::Index n = p.matrix().rows();
  return solve_left_null(p.matrix().transpose() - Matrix::Identity(n, n), p.matrix(), false, tol);
}

ProbabilityVector stationary_distribution(const GeneratorMatrix& l, const Tolerances& tol) {
  return solve_left_null(l.matrix().transpose(), l.matrix(), true, tol);
}

}  // namespace duality
