#include "duality/cone.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "duality/algebra.hpp"
#include "duality/lp.hpp"

namespace duality::cone {

namespace {

template <class T>
using Columns = std::vector<std::vector<T>>;  // columns[j][i] = H(i, j)

template <class T>
T absval(const T& v) {
  return v < T(0) ? T(-v) : v;
}

template <class T>
struct Policy;

template <>
struct Policy<double> {
  static constexpr double dedupe = 1e-10;
  static lp::Tolerance<double> lp_tol() { return {1e-12, 1e-10}; }
  static constexpr double pivot = 1e-10;
};

template <>
struct Policy<Rational> {
  static inline const Rational dedupe{0};
  static lp::Tolerance<Rational> lp_tol() { return {Rational(0), Rational(0)}; }
  static inline const Rational pivot{0};
};

// Convex weights of target over the given columns, if any.
template <class T>
std::optional<std::vector<T>> convex_weights(const Columns<T>& cols, const std::vector<std::size_t>& use,
                                             const std::vector<T>& target) {
  const std::size_t rows = target.size();
  lp::Problem<T> prob;
  prob.rows = rows + 1;
  prob.cols = use.size();
  prob.a.assign(prob.rows * prob.cols, T(0));
  prob.b.assign(prob.rows, T(0));
  for (std::size_t k = 0; k < use.size(); ++k) {
    for (std::size_t i = 0; i < rows; ++i) prob.at(i, k) = cols[use[k]][i];
    prob.at(rows, k) = T(1);
  }
  for (std::size_t i = 0; i < rows; ++i) prob.b[i] = target[i];
  prob.b[rows] = T(1);
  auto res = lp::solve(prob, Policy<T>::lp_tol());
  if (res.status != lp::Status::optimal) return std::nullopt;
  return res.x;
}

// Rank of a dense row-major matrix by partial-pivot elimination.
template <class T>
std::size_t rank_of(std::vector<std::vector<T>> a, const T& threshold) {
  if (a.empty()) return 0;
  const std::size_t m = a.size();
  const std::size_t n = a[0].size();
  std::size_t row = 0;
  for (std::size_t col = 0; col < n && row < m; ++col) {
    std::size_t best = row;
    for (std::size_t i = row + 1; i < m; ++i) {
      if (absval(a[i][col]) > absval(a[best][col])) best = i;
    }
    if (!(absval(a[best][col]) > threshold)) continue;
    std::swap(a[row], a[best]);
    for (std::size_t i = row + 1; i < m; ++i) {
      if (a[i][col] == T(0)) continue;
      const T f = a[i][col] / a[row][col];
      for (std::size_t j = col; j < n; ++j) a[i][j] -= f * a[row][j];
    }
    ++row;
  }
  return row;
}

template <class T>
struct Decomposition {
  std::vector<std::size_t> extremal;
  std::vector<std::size_t> representative;
  bool simplex = false;
  std::vector<std::vector<T>> pi;
};

template <class T>
Decomposition<T> decompose(const Columns<T>& cols, bool want_pi, bool reversed, const T& dedupe = Policy<T>::dedupe) {
  const std::size_t nf = cols.size();
  const std::size_t ne = nf ? cols[0].size() : 0;
  Decomposition<T> d;
  d.representative.resize(nf);
  std::vector<std::size_t> distinct;
  for (std::size_t j = 0; j < nf; ++j) {
    d.representative[j] = j;
    for (std::size_t r : distinct) {
      T diff(0);
      for (std::size_t i = 0; i < ne; ++i) diff = std::max<T>(diff, absval<T>(cols[j][i] - cols[r][i]));
      if (diff <= dedupe) {
        d.representative[j] = r;
        break;
      }
    }
    if (d.representative[j] == j) distinct.push_back(j);
  }
  for (std::size_t c : distinct) {
    std::vector<std::size_t> others;
    for (std::size_t o : distinct) {
      if (o != c) others.push_back(o);
    }
    if (others.empty() || !convex_weights(cols, others, cols[c])) d.extremal.push_back(c);
  }

  const std::size_t k = d.extremal.size();
  if (k <= 1) {
    d.simplex = true;
  } else {
    std::vector<std::vector<T>> diffs(ne, std::vector<T>(k - 1));
    for (std::size_t i = 0; i < ne; ++i) {
      for (std::size_t e = 1; e < k; ++e) diffs[i][e - 1] = cols[d.extremal[e]][i] - cols[d.extremal[0]][i];
    }
    d.simplex = rank_of(std::move(diffs), Policy<T>::pivot) == k - 1;
  }
  if (!want_pi || !d.simplex) return d;

  std::vector<std::size_t> order = d.extremal;
  if (reversed) std::reverse(order.begin(), order.end());
  d.pi.assign(nf, std::vector<T>(k, T(0)));
  for (std::size_t y = 0; y < nf; ++y) {
    const auto pos = std::find(d.extremal.begin(), d.extremal.end(), d.representative[y]);
    if (pos != d.extremal.end()) {
      d.pi[y][static_cast<std::size_t>(pos - d.extremal.begin())] = T(1);
      continue;
    }
    auto w = convex_weights(cols, order, cols[y]);
    if (!w) throw Error("decomposition_kernel: column " + std::to_string(y) + " has no convex representation");
    for (std::size_t e = 0; e < k; ++e) {
      const std::size_t slot = reversed ? k - 1 - e : e;
      d.pi[y][slot] = (*w)[e];
    }
  }
  return d;
}

Columns<double> columns_of(const Matrix& h) {
  Columns<double> cols(static_cast<std::size_t>(h.cols()), std::vector<double>(static_cast<std::size_t>(h.rows())));
  for (Eigen::Index j = 0; j < h.cols(); ++j) {
    for (Eigen::Index i = 0; i < h.rows(); ++i) cols[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = h(i, j);
  }
  return cols;
}

Matrix pi_matrix(const std::vector<std::vector<double>>& pi) {
  const auto nf = static_cast<Eigen::Index>(pi.size());
  const auto k = nf ? static_cast<Eigen::Index>(pi[0].size()) : 0;
  Matrix m(nf, k);
  for (Eigen::Index y = 0; y < nf; ++y) {
    double sum = 0.0;
    for (Eigen::Index e = 0; e < k; ++e) {
      m(y, e) = std::max(0.0, pi[static_cast<std::size_t>(y)][static_cast<std::size_t>(e)]);
      sum += m(y, e);
    }
    if (sum > 0.0) m.row(y) /= sum;
  }
  return m;
}

}  // namespace

ExtremalStructure extremal_columns(const Matrix& h, double tol) {
  if (h.cols() == 0 || h.rows() == 0) throw ValidationError("extremal_columns: H must be non-empty");
  auto d = decompose(columns_of(h), false, false, tol);
  return ExtremalStructure{d.extremal, d.representative, d.simplex, std::nullopt};
}

bool simplex_test(const ExtremalStructure& s, const Matrix& h) {
  const std::size_t k = s.extremal.size();
  if (k <= 1) return true;
  Matrix diffs(h.rows(), static_cast<Eigen::Index>(k - 1));
  for (std::size_t e = 1; e < k; ++e) {
    diffs.col(static_cast<Eigen::Index>(e - 1)) =
        h.col(static_cast<Eigen::Index>(s.extremal[e])) - h.col(static_cast<Eigen::Index>(s.extremal[0]));
  }
  return algebra::nondegeneracy_check(diffs).rank == k - 1;
}

Matrix decomposition_kernel(const Matrix& h, bool reversed_order) {
  if (h.cols() == 0 || h.rows() == 0) throw ValidationError("decomposition_kernel: H must be non-empty");
  auto d = decompose(columns_of(h), true, reversed_order);
  if (!d.simplex) {
    throw ValidationError(
        "decomposition_kernel: extremal columns are not affinely independent (not a simplex); use solve_dual instead");
  }
  return pi_matrix(d.pi);
}

ExtremalStructure analyze(const Matrix& h) {
  if (h.cols() == 0 || h.rows() == 0) throw ValidationError("analyze: H must be non-empty");
  auto d = decompose(columns_of(h), true, false);
  ExtremalStructure s{d.extremal, d.representative, d.simplex, std::nullopt};
  if (d.simplex) s.pi = pi_matrix(d.pi);
  return s;
}

Matrix projection(const ExtremalStructure& s, std::size_t n_cols) {
  if (!s.pi) throw ValidationError("projection: decomposition kernel not computed");
  const auto n = static_cast<Eigen::Index>(n_cols);
  Matrix p = Matrix::Zero(n, n);
  for (Eigen::Index y = 0; y < n; ++y) {
    for (std::size_t e = 0; e < s.extremal.size(); ++e) {
      p(y, static_cast<Eigen::Index>(s.extremal[e])) = (*s.pi)(y, static_cast<Eigen::Index>(e));
    }
  }
  return p;
}

ExactDecomposition decompose_exact(const std::vector<std::vector<Rational>>& h) {
  if (h.empty() || h[0].empty()) throw ValidationError("decompose_exact: H must be non-empty");
  const std::size_t ne = h.size();
  const std::size_t nf = h[0].size();
  Columns<Rational> cols(nf, std::vector<Rational>(ne));
  for (std::size_t i = 0; i < ne; ++i) {
    if (h[i].size() != nf) throw DimensionError("decompose_exact: ragged rows");
    for (std::size_t j = 0; j < nf; ++j) cols[j][i] = h[i][j];
  }
  auto d = decompose(cols, true, false);
  return ExactDecomposition{d.extremal, d.representative, d.simplex, d.pi};
}

Matrix cone_dual(const StochasticMatrix& p, const Matrix& h) {
  if (!p.square() || p.cols() != static_cast<std::size_t>(h.rows())) {
    throw DimensionError("cone_dual: P must be |E| x |E| with |E| = rows of H");
  }
  const auto inv = algebra::check_v1plus_invariance(p.matrix(), DualityMatrix::from(h));
  if (!inv.invariant) {
    throw ValidationError("cone_dual: convex hull of columns is not invariant, violating column " +
                          std::to_string(*inv.violating_column));
  }
  const ExtremalStructure s = analyze(h);
  if (!s.simplex) throw ValidationError("cone_dual: extremal columns do not form a simplex");
  const auto cols = columns_of(h);
  const Matrix ph = p.matrix() * h;
  const std::size_t k = s.extremal.size();
  Matrix r(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  for (std::size_t e = 0; e < k; ++e) {
    const Eigen::Index y = static_cast<Eigen::Index>(s.extremal[e]);
    std::vector<double> target(static_cast<std::size_t>(h.rows()));
    for (Eigen::Index i = 0; i < h.rows(); ++i) target[static_cast<std::size_t>(i)] = ph(i, y);
    auto w = convex_weights(cols, s.extremal, target);
    if (!w) throw ValidationError("cone_dual: image of extremal column " + std::to_string(y) + " is not representable");
    r.row(static_cast<Eigen::Index>(e)) = pi_matrix({*w}).row(0);
  }
  return r;
}

Matrix jump_dual(const Matrix& r, const ExtremalStructure& s, std::size_t n_cols) {
  if (!s.pi) throw ValidationError("jump_dual: decomposition kernel not computed");
  const auto k = static_cast<Eigen::Index>(s.extremal.size());
  if (r.rows() != k || r.cols() != k) throw DimensionError("jump_dual: R must be |F1| x |F1|");
  const Matrix mixed = *s.pi * r;
  const auto n = static_cast<Eigen::Index>(n_cols);
  Matrix q = Matrix::Zero(n, n);
  for (Eigen::Index e = 0; e < k; ++e) q.col(static_cast<Eigen::Index>(s.extremal[static_cast<std::size_t>(e)])) = mixed.col(e);
  return q;
}

double intertwining_residual(const Matrix& q, const Matrix& pi, const Matrix& r) { return max_abs(q * pi - pi * r); }

DualGenerator continuous_dual_generator(const GeneratorMatrix& l, const Matrix& h, const Tolerances& tol) {
  const Eigen::Index ne = h.rows();
  const Eigen::Index nf = h.cols();
  if (static_cast<Eigen::Index>(l.size()) != ne) throw DimensionError("continuous_dual_generator: L must be |E| x |E|");

  ExtremalStructure s = analyze(h);
  if (!s.simplex) throw ValidationError("continuous_dual_generator: extremal columns do not form a simplex");
  const DualityMatrix hd = DualityMatrix::from(h);
  for (double t : {0.01, 0.1, 1.0}) {
    const auto inv = algebra::check_v1plus_invariance(transition_matrix(l, t).matrix(), hd, tol);
    if (!inv.invariant) {
      std::ostringstream os;
      os << "continuous_dual_generator: convex hull of columns is not invariant under exp(tL) at t = " << t
         << ", violating column " << *inv.violating_column;
      throw ValidationError(os.str());
    }
  }

  const Matrix pi_hat = projection(s, static_cast<std::size_t>(nf));
  // U spans R1 + W as functions on F; B U = [0, H^T L^T].
  Matrix u(nf, ne + 1);
  u.col(0).setOnes();
  u.rightCols(ne) = h.transpose();
  Matrix bu(nf, ne + 1);
  bu.col(0).setZero();
  bu.rightCols(ne) = h.transpose() * l.matrix().transpose();

  const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(u);
  const Matrix c = cod.solve(pi_hat);
  const double span_residual = max_abs(u * c - pi_hat);
  // B must vanish on the null space of U for the solve to be well defined.
  const algebra::NondegeneracyReport nd = algebra::nondegeneracy_check(u, tol);
  double consistency = span_residual;
  for (const Vector& v : nd.right_null_basis) consistency = std::max(consistency, (bu * v).cwiseAbs().maxCoeff());
  const double scale = std::max(1.0, max_abs(bu));
  if (consistency > 1e-9 * scale) {
    std::ostringstream os;
    os.precision(17);
    os << "continuous_dual_generator: B is not determined on the span of the columns (residual " << consistency << ")";
    throw ValidationError(os.str());
  }
  Matrix b_pi_hat = bu * c;

  // Off-diagonals where Pi_hat vanishes (all of the F1 rows among them) do not depend on lambda.
  constexpr double kNeg = 1e-12;
  for (Eigen::Index y = 0; y < nf; ++y) {
    for (Eigen::Index z = 0; z < nf; ++z) {
      if (y == z || pi_hat(y, z) > 0.0) continue;
      if (b_pi_hat(y, z) < -kNeg * scale) {
        std::ostringstream os;
        os.precision(17);
        os << "continuous_dual_generator: entry (" << y << "," << z << ") of B Pi_hat is " << b_pi_hat(y, z)
           << " and cannot be compensated by lambda";
        throw ValidationError(os.str());
      }
    }
  }
  for (Eigen::Index y = 0; y < nf; ++y) {
    for (Eigen::Index z = 0; z < nf; ++z) {
      if (y != z && b_pi_hat(y, z) < 0.0 && b_pi_hat(y, z) >= -kNeg * scale && pi_hat(y, z) == 0.0) b_pi_hat(y, z) = 0.0;
    }
  }

  const Matrix id = Matrix::Identity(nf, nf);
  auto valid = [&](double lambda) {
    const Matrix lh = b_pi_hat + lambda * (pi_hat - id);
    for (Eigen::Index y = 0; y < nf; ++y) {
      for (Eigen::Index z = 0; z < nf; ++z) {
        if (y != z && lh(y, z) < -kNeg) return false;
      }
    }
    return true;
  };
  double hi = 1.0;
  constexpr double kMaxLambda = 1048576.0;  // 2^20
  while (!valid(hi)) {
    if (hi >= kMaxLambda) throw ValidationError("continuous_dual_generator: no lambda <= 2^20 yields a Q-matrix");
    hi *= 2.0;
  }
  double lo = hi / 2.0;  // invalid unless hi == 1
  if (hi > 1.0) {
    while (hi - lo > 1.0) {
      const double mid = std::floor((lo + hi) / 2.0);
      if (valid(mid)) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
  }

  Matrix l_hat = b_pi_hat + hi * (pi_hat - id);
  // Row sums of B Pi_hat vanish analytically; remove round-off on the diagonal.
  for (Eigen::Index y = 0; y < nf; ++y) {
    double off = 0.0;
    for (Eigen::Index z = 0; z < nf; ++z) {
      if (z == y) continue;
      if (l_hat(y, z) < 0.0) l_hat(y, z) = 0.0;
      off += l_hat(y, z);
    }
    l_hat(y, y) = -off;
  }

  DualGenerator out{GeneratorMatrix::from(l_hat, tol), hi, b_pi_hat, pi_hat, Matrix(), s, 0.0, consistency};
  const auto k = static_cast<Eigen::Index>(s.extremal.size());
  out.r_generator.resize(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) {
      out.r_generator(a, b) = l_hat(static_cast<Eigen::Index>(s.extremal[static_cast<std::size_t>(a)]),
                                    static_cast<Eigen::Index>(s.extremal[static_cast<std::size_t>(b)]));
    }
  }
  out.duality_residual = max_abs(l_hat * h.transpose() - h.transpose() * l.matrix().transpose());
  return out;
}

}  // namespace duality::cone
