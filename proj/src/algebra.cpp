#include "duality/algebra.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "duality/lp.hpp"

namespace duality::algebra {

double duality_residual(const Matrix& p, const Matrix& q, const Matrix& h) {
  if (p.rows() != p.cols() || q.rows() != q.cols() || p.cols() != h.rows() || q.cols() != h.cols()) {
    std::ostringstream os;
    os << "duality residual: incompatible shapes P " << p.rows() << "x" << p.cols() << ", Q " << q.rows() << "x"
       << q.cols() << ", H " << h.rows() << "x" << h.cols();
    throw DimensionError(os.str());
  }
  return max_abs(p * h - h * q.transpose());
}

double check_duality_discrete(const StochasticMatrix& p, const StochasticMatrix& q, const DualityMatrix& h) {
  return duality_residual(p.matrix(), q.matrix(), h.matrix());
}

GeneratorDualityReport check_duality_generators(const GeneratorMatrix& lx, const GeneratorMatrix& ly,
                                                const DualityMatrix& h, const Tolerances& tol) {
  GeneratorDualityReport r;
  r.generator_residual = duality_residual(lx.matrix(), ly.matrix(), h.matrix());
  r.residual_matrix = lx.matrix() * h.matrix() - h.matrix() * ly.matrix().transpose();
  bool ok = r.generator_residual <= tol.duality;
  for (std::size_t i = 0; i < r.semigroup_times.size(); ++i) {
    const double t = r.semigroup_times[i];
    r.semigroup_residuals[i] =
        duality_residual(transition_matrix(lx, t).matrix(), transition_matrix(ly, t).matrix(), h.matrix());
    ok = ok && r.semigroup_residuals[i] <= tol.semigroup;
  }
  r.pass = ok;
  return r;
}

std::string to_string(DualStatus s) {
  switch (s) {
    case DualStatus::exists_stochastic: return "exists_stochastic";
    case DualStatus::exists_signed_only: return "exists_signed_only";
    case DualStatus::none: return "none";
  }
  return "none";
}

namespace {

// Feasibility of {nu >= 0, H nu = target, 1^T nu = 1}.
lp::Result<double> convex_lp(const Matrix& h, const Vector& target, const Tolerances& tol) {
  lp::Problem<double> prob;
  prob.rows = static_cast<std::size_t>(h.rows()) + 1;
  prob.cols = static_cast<std::size_t>(h.cols());
  prob.a.assign(prob.rows * prob.cols, 0.0);
  prob.b.assign(prob.rows, 0.0);
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    for (Eigen::Index j = 0; j < h.cols(); ++j) prob.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = h(i, j);
    prob.b[static_cast<std::size_t>(i)] = target(i);
  }
  for (std::size_t j = 0; j < prob.cols; ++j) prob.at(prob.rows - 1, j) = 1.0;
  prob.b[prob.rows - 1] = 1.0;
  return lp::solve(prob, lp::Tolerance<double>{1e-12, tol.lp});
}

Vector normalized(const std::vector<double>& x) {
  Vector v(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) v(static_cast<Eigen::Index>(i)) = std::max(0.0, x[i]);
  const double s = v.sum();
  if (s > 0.0) v /= s;
  return v;
}

}  // namespace

std::optional<Vector> convex_representation(const Matrix& h, const Vector& target, const Tolerances& tol) {
  if (target.size() != h.rows()) throw DimensionError("convex_representation: target length differs from H rows");
  const auto res = convex_lp(h, target, tol);
  if (res.status != lp::Status::optimal) return std::nullopt;
  return normalized(res.x);
}

InvarianceReport check_v1plus_invariance(const Matrix& p, const DualityMatrix& h, const Tolerances& tol) {
  if (p.rows() != p.cols() || p.cols() != h.matrix().rows()) {
    throw DimensionError("check_v1plus_invariance: P must be |E| x |E| with |E| = rows of H");
  }
  InvarianceReport rep;
  rep.invariant = true;
  const Matrix ph = p * h.matrix();
  for (Eigen::Index y = 0; y < ph.cols(); ++y) {
    const auto res = convex_lp(h.matrix(), ph.col(y), tol);
    if (res.status != lp::Status::optimal) {
      rep.invariant = false;
      rep.violating_column = static_cast<std::size_t>(y);
      rep.certificate = res.farkas;
      rep.phase1_objective = res.phase1_objective;
      return rep;
    }
  }
  return rep;
}

DualitySolveResult solve_dual(const StochasticMatrix& p, const DualityMatrix& h, const Tolerances& tol) {
  if (!p.square() || p.cols() != h.rows()) throw DimensionError("solve_dual: P must be |E| x |E| with |E| = rows of H");
  const Matrix& hm = h.matrix();
  const Matrix ph = p.matrix() * hm;
  const Eigen::Index nf = hm.cols();

  DualitySolveResult out;
  out.unique = nondegeneracy_check(hm, tol).separating_columns;
  out.column_residuals.assign(static_cast<std::size_t>(nf), 0.0);

  Matrix stochastic(nf, nf);
  bool all_stochastic = true;
  for (Eigen::Index y = 0; y < nf && all_stochastic; ++y) {
    const auto res = convex_lp(hm, ph.col(y), tol);
    if (res.status != lp::Status::optimal) {
      all_stochastic = false;
      out.first_failing_column = static_cast<std::size_t>(y);
      break;
    }
    stochastic.row(y) = normalized(res.x).transpose();
  }
  if (all_stochastic) {
    for (Eigen::Index y = 0; y < nf; ++y) {
      out.column_residuals[static_cast<std::size_t>(y)] = (hm * stochastic.row(y).transpose() - ph.col(y)).cwiseAbs().maxCoeff();
    }
    out.status = DualStatus::exists_stochastic;
    out.dual = std::move(stochastic);
    return out;
  }

  // Signed solve: H q = P h_y for every column, by minimum-norm least squares.
  const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(hm);
  Matrix signed_dual(nf, nf);
  bool all_signed = true;
  const double scale = std::max(1.0, max_abs(ph));
  for (Eigen::Index y = 0; y < nf; ++y) {
    const Vector q = cod.solve(ph.col(y));
    const double res = (hm * q - ph.col(y)).cwiseAbs().maxCoeff();
    out.column_residuals[static_cast<std::size_t>(y)] = res;
    signed_dual.row(y) = q.transpose();
    if (!(res <= tol.duality * scale)) all_signed = false;
  }
  if (all_signed) {
    out.status = DualStatus::exists_signed_only;
    out.dual = std::move(signed_dual);
  } else {
    out.status = DualStatus::none;
  }
  return out;
}

MonotoneReport check_monotone(const Matrix& p) {
  if (p.rows() != p.cols()) throw DimensionError("check_monotone: matrix must be square");
  const Eigen::Index n = p.rows();
  // tail(x, z) = sum_{x' >= z} P(x, x')
  Matrix tail = Matrix::Zero(n, n + 1);
  for (Eigen::Index x = 0; x < n; ++x) {
    for (Eigen::Index z = n - 1; z >= 0; --z) tail(x, z) = tail(x, z + 1) + p(x, z);
  }
  MonotoneReport rep;
  for (Eigen::Index x = 0; x < n; ++x) {
    for (Eigen::Index y = x + 1; y < n; ++y) {
      for (Eigen::Index z = 0; z < n; ++z) {
        if (tail(x, z) > tail(y, z) + 1e-12) {
          rep.monotone = false;
          rep.witness = std::array<std::size_t, 3>{static_cast<std::size_t>(x), static_cast<std::size_t>(y),
                                                   static_cast<std::size_t>(z)};
          return rep;
        }
      }
    }
  }
  return rep;
}

Matrix SiegmundDual::restricted() const {
  const Eigen::Index n = q.matrix().rows() - 1;
  return q.matrix().topLeftCorner(n, n);
}

DualityMatrix siegmund_duality_matrix(std::size_t n) {
  const auto k = static_cast<Eigen::Index>(n);
  Matrix h = Matrix::Zero(k, k);
  for (Eigen::Index x = 0; x < k; ++x) {
    for (Eigen::Index y = 0; y <= x; ++y) h(x, y) = 1.0;
  }
  return DualityMatrix::from(std::move(h), DualityStructure::siegmund);
}

SiegmundDual siegmund_dual(const StochasticMatrix& p) {
  if (!p.square()) throw DimensionError("siegmund_dual: matrix must be square");
  const MonotoneReport mono = check_monotone(p.matrix());
  if (!mono.monotone) {
    const auto& w = *mono.witness;
    std::ostringstream os;
    os << "siegmund_dual: chain is not stochastically monotone, witness (x,y,z) = (" << w[0] << "," << w[1] << ","
       << w[2] << ")";
    throw ValidationError(os.str());
  }
  const Eigen::Index n = p.matrix().rows();
  const Matrix& pm = p.matrix();
  Matrix g = Matrix::Zero(n, n);  // g(x, y) = sum_{x' >= y} P(x, x')
  for (Eigen::Index x = 0; x < n; ++x) {
    double acc = 0.0;
    for (Eigen::Index y = n - 1; y >= 0; --y) {
      acc += pm(x, y);
      g(x, y) = acc;
    }
  }
  Matrix q = Matrix::Zero(n + 1, n + 1);
  std::vector<double> defect(static_cast<std::size_t>(n), 0.0);
  for (Eigen::Index y = 0; y < n; ++y) {
    double prev = 0.0;
    for (Eigen::Index x = 0; x < n; ++x) {
      // Monotone rows give nonnegative increments up to round-off.
      q(y, x) = std::max(0.0, g(x, y) - prev);
      prev = g(x, y);
    }
    const double d = std::max(0.0, 1.0 - g(n - 1, y));
    q(y, n) = d;
    defect[static_cast<std::size_t>(y)] = d;
  }
  q(n, n) = 1.0;
  return SiegmundDual{StochasticMatrix::from(std::move(q)), std::move(defect)};
}

namespace {

// Kuhn's augmenting-path matching restricted to edges with dist <= bound.
bool perfect_matching(const Matrix& dist, double bound, std::vector<int>& match_right) {
  const int n = static_cast<int>(dist.rows());
  match_right.assign(static_cast<std::size_t>(n), -1);
  std::vector<char> seen;
  std::function<bool(int)> augment = [&](int u) {
    for (int v = 0; v < n; ++v) {
      if (dist(u, v) > bound || seen[static_cast<std::size_t>(v)]) continue;
      seen[static_cast<std::size_t>(v)] = 1;
      int& owner = match_right[static_cast<std::size_t>(v)];
      if (owner < 0 || augment(owner)) {
        owner = u;
        return true;
      }
    }
    return false;
  };
  for (int u = 0; u < n; ++u) {
    seen.assign(static_cast<std::size_t>(n), 0);
    if (!augment(u)) return false;
  }
  return true;
}

}  // namespace

SpectrumReport spectrum_compare(const Matrix& p, const Matrix& q, const Tolerances& tol) {
  SpectrumReport rep;
  rep.lhs = eigenvalue_multiset(p);
  rep.rhs = eigenvalue_multiset(q);
  if (rep.lhs.size() != rep.rhs.size()) {
    rep.pass = false;
    rep.max_distance = std::numeric_limits<double>::infinity();
    return rep;
  }
  const auto n = static_cast<Eigen::Index>(rep.lhs.size());
  if (n == 0) {
    rep.pass = true;
    return rep;
  }
  Matrix dist(n, n);
  std::vector<double> candidates;
  candidates.reserve(static_cast<std::size_t>(n * n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      dist(i, j) = std::abs(rep.lhs[static_cast<std::size_t>(i)] - rep.rhs[static_cast<std::size_t>(j)]);
      candidates.push_back(dist(i, j));
    }
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  std::size_t lo = 0, hi = candidates.size() - 1;
  std::vector<int> match;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (perfect_matching(dist, candidates[mid], match)) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  perfect_matching(dist, candidates[lo], match);
  rep.max_distance = candidates[lo];
  for (Eigen::Index j = 0; j < n; ++j) {
    const int i = match[static_cast<std::size_t>(j)];
    if (dist(i, j) > tol.spectral) {
      rep.mismatches.emplace_back(rep.lhs[static_cast<std::size_t>(i)], rep.rhs[static_cast<std::size_t>(j)]);
    }
  }
  rep.pass = rep.max_distance <= tol.spectral;
  return rep;
}

namespace {

double reversibility_residual(const Matrix& p, const Vector& mu, const char* what, const Tolerances& tol) {
  if (p.rows() != p.cols() || mu.size() != p.rows()) throw DimensionError(std::string(what) + ": dimension mismatch");
  double worst = 0.0;
  Eigen::Index wx = 0, wy = 0;
  for (Eigen::Index x = 0; x < p.rows(); ++x) {
    for (Eigen::Index y = x + 1; y < p.cols(); ++y) {
      const double d = std::abs(mu(x) * p(x, y) - mu(y) * p(y, x));
      if (d > worst) {
        worst = d;
        wx = x;
        wy = y;
      }
    }
  }
  if (worst > tol.reversibility) {
    std::ostringstream os;
    os.precision(17);
    os << what << ": measure is not reversible, worst pair (" << wx << "," << wy << ") with imbalance " << worst;
    throw ValidationError(os.str());
  }
  return worst;
}

}  // namespace

IntertwiningReport reversible_intertwining_check(const Matrix& p, const Matrix& q, const DualityMatrix& h,
                                                 const Vector& mu, const Vector& nu, const Tolerances& tol) {
  if (p.rows() != h.matrix().rows() || q.rows() != h.matrix().cols()) {
    throw DimensionError("reversible_intertwining_check: H must be |E| x |F|");
  }
  IntertwiningReport rep;
  rep.reversibility_p = reversibility_residual(p, mu, "reversible_intertwining_check (P, mu)", tol);
  rep.reversibility_q = reversibility_residual(q, nu, "reversible_intertwining_check (Q, nu)", tol);
  const Matrix t = h.matrix() * nu.asDiagonal();
  rep.intertwining_residual = max_abs(p * t - t * q);
  rep.pass = rep.intertwining_residual <= tol.duality;
  return rep;
}

DualityMatrix build_tensor_duality(TensorKind kind, std::size_t n_sites, double q) {
  if (n_sites == 0 || n_sites > kMaxTensorSites) {
    throw ValidationError("build_tensor_duality: site count must be in [1, " + std::to_string(kMaxTensorSites) + "]");
  }
  DualityStructure tag = DualityStructure::tensor_q;
  if (kind == TensorKind::coalescing) {
    q = 0.0;
    tag = DualityStructure::tensor_coalescing;
  } else if (kind == TensorKind::annihilating) {
    q = -1.0;
    tag = DualityStructure::tensor_annihilating;
  }
  const Eigen::Index dim = Eigen::Index{1} << n_sites;
  // Powers by repeated multiplication, matching the Kronecker product of the factor.
  std::vector<double> powers(n_sites + 1, 1.0);
  for (std::size_t k = 1; k <= n_sites; ++k) powers[k] = powers[k - 1] * q;
  Matrix h(dim, dim);
  for (Eigen::Index x = 0; x < dim; ++x) {
    for (Eigen::Index y = 0; y < dim; ++y) {
      h(x, y) = powers[static_cast<std::size_t>(std::popcount(static_cast<std::uint64_t>(x & y)))];
    }
  }
  return DualityMatrix::from(std::move(h), tag);
}

NondegeneracyReport nondegeneracy_check(const Matrix& h, const Tolerances& tol) {
  NondegeneracyReport rep;
  rep.rows = static_cast<std::size_t>(h.rows());
  rep.cols = static_cast<std::size_t>(h.cols());
  Matrix a = h;
  const double threshold = tol.pivot * std::max(1.0, max_abs(h));
  const Eigen::Index m = a.rows(), n = a.cols();
  std::vector<Eigen::Index> pivot_cols;
  Eigen::Index row = 0;
  for (Eigen::Index col = 0; col < n && row < m; ++col) {
    Eigen::Index best = row;
    for (Eigen::Index i = row + 1; i < m; ++i) {
      if (std::abs(a(i, col)) > std::abs(a(best, col))) best = i;
    }
    if (std::abs(a(best, col)) <= threshold) {
      a.col(col).tail(m - row).setZero();
      continue;
    }
    a.row(row).swap(a.row(best));
    a.row(row) /= a(row, col);
    for (Eigen::Index i = 0; i < m; ++i) {
      if (i != row && a(i, col) != 0.0) a.row(i) -= a(i, col) * a.row(row);
    }
    pivot_cols.push_back(col);
    ++row;
  }
  rep.rank = pivot_cols.size();
  rep.invertible = m == n && rep.rank == rep.rows;
  rep.separating_columns = rep.rank == rep.cols;
  std::vector<char> is_pivot(static_cast<std::size_t>(n), 0);
  for (auto c : pivot_cols) is_pivot[static_cast<std::size_t>(c)] = 1;
  for (Eigen::Index f = 0; f < n; ++f) {
    if (is_pivot[static_cast<std::size_t>(f)]) continue;
    Vector v = Vector::Zero(n);
    v(f) = 1.0;
    for (std::size_t r = 0; r < pivot_cols.size(); ++r) v(pivot_cols[r]) = -a(static_cast<Eigen::Index>(r), f);
    rep.right_null_basis.push_back(std::move(v));
  }
  return rep;
}

MeasureDualityData measure_from_diagonal(const DualityMatrix& h) {
  const Matrix& m = h.matrix();
  if (m.rows() != m.cols()) throw ValidationError("measure_from_diagonal: matrix must be square");
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (i != j && m(i, j) != 0.0) {
        throw ValidationError("measure_from_diagonal: non-zero off-diagonal entry at (" + std::to_string(i) + ", " +
                              std::to_string(j) + ")");
      }
    }
  }
  MeasureDualityData d{Vector::Zero(m.rows()), {}, h};
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (m(i, i) != 0.0) {
      d.mu(i) = 1.0 / std::abs(m(i, i));
      d.support.push_back(static_cast<std::size_t>(i));
    }
  }
  return d;
}

DualityMatrix diagonal_from_measure(const Vector& mu) {
  Matrix h = Matrix::Zero(mu.size(), mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    if (!std::isfinite(mu(i)) || mu(i) < 0.0) throw ValidationError("diagonal_from_measure: measure must be nonnegative");
    if (mu(i) > 0.0) h(i, i) = 1.0 / mu(i);
  }
  return DualityMatrix::from(std::move(h), DualityStructure::diagonal);
}

double check_measure_duality(const Matrix& p, const Matrix& q, const Vector& mu) {
  if (p.rows() != p.cols() || q.rows() != p.rows() || q.cols() != p.cols() || mu.size() != p.rows()) {
    throw DimensionError("check_measure_duality: dimension mismatch");
  }
  return max_abs(mu.asDiagonal() * p - (mu.asDiagonal() * q).transpose());
}

bool check_trap(const Matrix& p, const std::vector<std::size_t>& trap) {
  std::vector<char> in(static_cast<std::size_t>(p.cols()), 0);
  for (auto t : trap) {
    if (t >= in.size()) throw DimensionError("check_trap: state index out of range");
    in[t] = 1;
  }
  for (auto x : trap) {
    for (Eigen::Index y = 0; y < p.cols(); ++y) {
      if (!in[static_cast<std::size_t>(y)] && p(static_cast<Eigen::Index>(x), y) != 0.0) return false;
    }
  }
  return true;
}

Matrix resolvent(const GeneratorMatrix& l, double lambda) {
  if (!(lambda > 0.0)) throw ValidationError("resolvent: lambda must be positive");
  const Eigen::Index n = l.matrix().rows();
  const Matrix a = lambda * Matrix::Identity(n, n) - l.matrix();
  const Eigen::FullPivLU<Matrix> lu(a);
  if (!lu.isInvertible()) throw Error("resolvent: (lambda I - L) is singular");
  return lu.inverse();
}

ResolventReport resolvent_duality_check(const GeneratorMatrix& lx, const GeneratorMatrix& ly, const Vector& mu,
                                        double lambda, double t, const Tolerances& tol) {
  if (lx.size() != ly.size() || static_cast<std::size_t>(mu.size()) != lx.size()) {
    throw DimensionError("resolvent_duality_check: dimension mismatch");
  }
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    if (!(mu(i) > 0.0)) throw ValidationError("resolvent_duality_check: mu must be strictly positive");
  }
  ResolventReport rep;
  rep.weak_duality_residual = check_measure_duality(lx.matrix(), ly.matrix(), mu);
  if (rep.weak_duality_residual > tol.reversibility) {
    std::ostringstream os;
    os.precision(17);
    os << "resolvent_duality_check: generators are not mu-dual (residual " << rep.weak_duality_residual << ")";
    throw ValidationError(os.str());
  }
  rep.r = resolvent(lx, lambda) * mu.cwiseInverse().asDiagonal();
  rep.residual = duality_residual(transition_matrix(lx, t).matrix(), transition_matrix(ly, t).matrix(), rep.r);
  rep.pass = rep.residual <= tol.semigroup;
  return rep;
}

SepInstance sep_instance(std::size_t sites) {
  if (sites < 2 || sites > 10) throw ValidationError("sep_instance: site count must be in [2, 10]");
  const Eigen::Index dim = Eigen::Index{1} << sites;
  Matrix l = Matrix::Zero(dim, dim);
  for (Eigen::Index a = 0; a < dim; ++a) {
    for (std::size_t k = 0; k + 1 < sites; ++k) {
      const bool bk = (a >> k) & 1;
      const bool bk1 = (a >> (k + 1)) & 1;
      if (bk == bk1) continue;
      const Eigen::Index b = a ^ (Eigen::Index{3} << k);
      l(a, b) += 1.0;
      l(a, a) -= 1.0;
    }
  }
  Matrix h(dim, dim);
  Matrix lam(dim, dim);
  for (Eigen::Index a = 0; a < dim; ++a) {
    for (Eigen::Index b = 0; b < dim; ++b) {
      h(a, b) = (a & ~b) == 0 ? 1.0 : 0.0;
      // Occupied sites stay occupied; each empty site fills with probability 1/2.
      if ((a & ~b) != 0) {
        lam(a, b) = 0.0;
      } else {
        const int empty = static_cast<int>(sites) - std::popcount(static_cast<std::uint64_t>(a));
        lam(a, b) = std::ldexp(1.0, -empty);
      }
    }
  }
  return SepInstance{sites, GeneratorMatrix::from(std::move(l)), DualityMatrix::from(std::move(h)),
                     StochasticMatrix::from(std::move(lam))};
}

SepReport sep_symmetry_check(std::size_t sites) {
  const SepInstance s = sep_instance(sites);
  const Matrix& l = s.l.matrix();
  SepReport rep;
  rep.commutation_residual = max_abs(l * s.lambda.matrix() - s.lambda.matrix() * l);
  rep.self_duality_residual = max_abs(l * s.h_subset.matrix() - s.h_subset.matrix() * l.transpose());
  rep.pass = rep.commutation_residual <= 1e-12 && rep.self_duality_residual <= 1e-12;
  return rep;
}

namespace models {

StochasticMatrix absorbed_srw(std::size_t interior) {
  const auto n = static_cast<Eigen::Index>(interior + 2);
  Matrix p = Matrix::Zero(n, n);
  p(0, 0) = 1.0;
  p(n - 1, n - 1) = 1.0;
  for (Eigen::Index x = 1; x + 1 < n; ++x) {
    p(x, x - 1) = 0.5;
    p(x, x + 1) = 0.5;
  }
  return StochasticMatrix::from(std::move(p));
}

Matrix killed_srw(std::size_t interior) {
  const auto n = static_cast<Eigen::Index>(interior);
  Matrix p = Matrix::Zero(n, n);
  for (Eigen::Index x = 0; x < n; ++x) {
    if (x > 0) p(x, x - 1) = 0.5;
    if (x + 1 < n) p(x, x + 1) = 0.5;
  }
  return p;
}

GeneratorMatrix voter_count_generator(std::size_t n, double rate) {
  const auto dim = static_cast<Eigen::Index>(n + 1);
  Matrix l = Matrix::Zero(dim, dim);
  for (Eigen::Index k = 0; k < dim; ++k) {
    const double r = rate * static_cast<double>(k) * static_cast<double>(static_cast<Eigen::Index>(n) - k);
    if (r == 0.0) continue;
    l(k, k + 1) = r;
    l(k, k - 1) = r;
    l(k, k) = -2.0 * r;
  }
  return GeneratorMatrix::from(std::move(l));
}

GeneratorMatrix coalescing_count_generator(std::size_t n, double rate) {
  const auto dim = static_cast<Eigen::Index>(n + 1);
  Matrix l = Matrix::Zero(dim, dim);
  for (Eigen::Index k = 2; k < dim; ++k) {
    const double r = rate * static_cast<double>(k) * static_cast<double>(k - 1);
    l(k, k - 1) = r;
    l(k, k) = -r;
  }
  return GeneratorMatrix::from(std::move(l));
}

DualityMatrix hypergeometric_matrix(std::size_t n) {
  const auto dim = static_cast<Eigen::Index>(n + 1);
  Matrix h(dim, dim);
  for (Eigen::Index a = 0; a < dim; ++a) {
    for (Eigen::Index b = 0; b < dim; ++b) {
      // prod_{i<b} (N-a-i)/(N-i): probability that b draws avoid a marked items.
      double v = 1.0;
      for (Eigen::Index i = 0; i < b; ++i) {
        v *= static_cast<double>(static_cast<Eigen::Index>(n) - a - i) / static_cast<double>(static_cast<Eigen::Index>(n) - i);
        if (v <= 0.0) {
          v = 0.0;
          break;
        }
      }
      h(a, b) = v;
    }
  }
  return DualityMatrix::from(std::move(h));
}

GeneratorMatrix wf_grid_generator(std::size_t k) {
  if (k < 1) throw ValidationError("wf_grid_generator: need at least one grid interval");
  const auto dim = static_cast<Eigen::Index>(k + 1);
  const double h = 1.0 / static_cast<double>(k);
  Matrix l = Matrix::Zero(dim, dim);
  for (Eigen::Index i = 1; i + 1 < dim; ++i) {
    const double x = static_cast<double>(i) * h;
    const double r = 0.5 * x * (1.0 - x) / (h * h);
    l(i, i - 1) = r;
    l(i, i + 1) = r;
    l(i, i) = -2.0 * r;
  }
  return GeneratorMatrix::from(std::move(l));
}

GeneratorMatrix kingman_block_generator(std::size_t n_max) {
  const auto dim = static_cast<Eigen::Index>(n_max);
  Matrix l = Matrix::Zero(dim, dim);
  for (Eigen::Index i = 1; i < dim; ++i) {
    const double n = static_cast<double>(i + 1);
    const double r = 0.5 * n * (n - 1.0);
    l(i, i - 1) = r;
    l(i, i) = -r;
  }
  return GeneratorMatrix::from(std::move(l));
}

DualityMatrix moment_matrix(std::size_t k, std::size_t n_max) {
  const auto rows = static_cast<Eigen::Index>(k + 1);
  const auto cols = static_cast<Eigen::Index>(n_max);
  Matrix h(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(k);
    for (Eigen::Index j = 0; j < cols; ++j) h(i, j) = std::pow(x, static_cast<double>(j + 1));
  }
  return DualityMatrix::from(std::move(h));
}

double wf_grid_truncation_error(double x, std::size_t n, double h) {
  double sum = 0.0;
  for (std::size_t m = 2; 2 * m <= n; ++m) {
    double binom = 1.0;  // C(n, 2m)
    for (std::size_t i = 0; i < 2 * m; ++i) binom = binom * static_cast<double>(n - i) / static_cast<double>(i + 1);
    sum += 2.0 * binom * std::pow(h, static_cast<double>(2 * m - 2)) * std::pow(x, static_cast<double>(n - 2 * m));
  }
  return 0.5 * x * (1.0 - x) * sum;
}

}  // namespace models

}  // namespace duality::algebra
