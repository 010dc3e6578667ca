#pragma once

// Dense two-phase tableau simplex with Bland's rule, templated on the scalar so
// the same code runs in double and in exact rationals.
//
// Standard form: minimize c^T x subject to A x = b, x >= 0.

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

namespace duality::lp {

template <class T>
struct Problem {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> a;  // row-major rows x cols
  std::vector<T> b;  // rows
  std::vector<T> c;  // cols; empty means pure feasibility

  T& at(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  const T& at(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
};

enum class Status { optimal, infeasible, unbounded };

template <class T>
struct Result {
  Status status = Status::infeasible;
  std::vector<T> x;          // primal solution when optimal
  std::vector<T> farkas;     // y with y^T A <= 0, y^T b > 0 when infeasible
  T phase1_objective{};      // residual infeasibility at the end of phase 1
  std::size_t pivots = 0;
};

/// Tolerance policy. For exact scalars both thresholds are zero.
template <class T>
struct Tolerance {
  T pivot;        // entries with |v| <= pivot are treated as zero
  T infeasible;   // phase-1 objective above this means infeasible
};

namespace detail {

template <class T>
T absval(const T& v) {
  return v < T(0) ? T(-v) : v;
}

template <class T>
class Tableau {
 public:
  Tableau(std::size_t m, std::size_t width) : m_(m), w_(width), t_((m + 1) * width, T(0)) {}
  T& operator()(std::size_t i, std::size_t j) { return t_[i * w_ + j]; }
  std::size_t width() const { return w_; }

  // Row m_ is the objective (reduced costs, last entry = -objective value).
  void pivot(std::size_t r, std::size_t c) {
    const T inv = T(1) / (*this)(r, c);
    for (std::size_t j = 0; j < w_; ++j) (*this)(r, j) *= inv;
    (*this)(r, c) = T(1);
    for (std::size_t i = 0; i <= m_; ++i) {
      if (i == r) continue;
      const T f = (*this)(i, c);
      if (f == T(0)) continue;
      for (std::size_t j = 0; j < w_; ++j) (*this)(i, j) -= f * (*this)(r, j);
      (*this)(i, c) = T(0);
    }
  }

 private:
  std::size_t m_;
  std::size_t w_;
  std::vector<T> t_;
};

// Runs Bland's-rule pivots over columns [0, allowed). Returns false if unbounded.
template <class T>
bool iterate(Tableau<T>& tab, std::vector<std::size_t>& basis, std::size_t m, std::size_t allowed, const T& eps,
             std::size_t& pivots) {
  const std::size_t rhs = tab.width() - 1;
  constexpr std::size_t kMaxPivots = 100000;
  while (pivots < kMaxPivots) {
    std::size_t enter = allowed;
    for (std::size_t j = 0; j < allowed; ++j) {
      if (tab(m, j) < -eps) {
        enter = j;
        break;
      }
    }
    if (enter == allowed) return true;
    std::size_t leave = m;
    T best{};
    for (std::size_t i = 0; i < m; ++i) {
      const T v = tab(i, enter);
      if (!(v > eps)) continue;
      const T ratio = tab(i, rhs) / v;
      if (leave == m || ratio < best || (ratio == best && basis[i] < basis[leave])) {
        leave = i;
        best = ratio;
      }
    }
    if (leave == m) return false;
    tab.pivot(leave, enter);
    basis[leave] = enter;
    ++pivots;
  }
  throw std::runtime_error("simplex: pivot limit exceeded");
}

}  // namespace detail

template <class T>
Result<T> solve(const Problem<T>& p, const Tolerance<T>& tol) {
  using detail::absval;
  const std::size_t m = p.rows;
  const std::size_t n = p.cols;
  if (p.a.size() != m * n || p.b.size() != m || (!p.c.empty() && p.c.size() != n)) {
    throw std::invalid_argument("simplex: inconsistent problem dimensions");
  }
  // Columns: n originals, m artificials, rhs.
  detail::Tableau<T> tab(m, n + m + 1);
  const std::size_t rhs = n + m;
  std::vector<int> flip(m, 1);
  std::vector<std::size_t> basis(m);
  for (std::size_t i = 0; i < m; ++i) {
    flip[i] = p.b[i] < T(0) ? -1 : 1;
    const T s = T(flip[i]);
    for (std::size_t j = 0; j < n; ++j) tab(i, j) = s * p.at(i, j);
    tab(i, n + i) = T(1);
    tab(i, rhs) = s * p.b[i];
    basis[i] = n + i;
  }
  for (std::size_t j = 0; j < n; ++j) {
    T sum(0);
    for (std::size_t i = 0; i < m; ++i) sum += tab(i, j);
    tab(m, j) = -sum;
  }
  {
    T sum(0);
    for (std::size_t i = 0; i < m; ++i) sum += tab(i, rhs);
    tab(m, rhs) = -sum;
  }

  Result<T> res;
  detail::iterate(tab, basis, m, n, tol.pivot, res.pivots);
  res.phase1_objective = -tab(m, rhs);
  if (res.phase1_objective > tol.infeasible) {
    res.status = Status::infeasible;
    res.farkas.resize(m);
    for (std::size_t i = 0; i < m; ++i) res.farkas[i] = T(flip[i]) * (T(1) - tab(m, n + i));
    return res;
  }

  // Drive remaining artificials out of the basis where possible.
  for (std::size_t i = 0; i < m; ++i) {
    if (basis[i] < n) continue;
    for (std::size_t j = 0; j < n; ++j) {
      bool basic = false;
      for (std::size_t k = 0; k < m; ++k) basic = basic || basis[k] == j;
      if (!basic && absval(tab(i, j)) > tol.pivot) {
        tab.pivot(i, j);
        basis[i] = j;
        ++res.pivots;
        break;
      }
    }
  }

  if (!p.c.empty()) {
    for (std::size_t j = 0; j < n + m + 1; ++j) tab(m, j) = T(0);
    for (std::size_t j = 0; j < n; ++j) tab(m, j) = p.c[j];
    for (std::size_t i = 0; i < m; ++i) {
      if (basis[i] >= n) continue;
      const T cb = p.c[basis[i]];
      if (cb == T(0)) continue;
      for (std::size_t j = 0; j < n + m + 1; ++j) tab(m, j) -= cb * tab(i, j);
    }
    if (!detail::iterate(tab, basis, m, n, tol.pivot, res.pivots)) {
      res.status = Status::unbounded;
      return res;
    }
  }

  res.status = Status::optimal;
  res.x.assign(n, T(0));
  for (std::size_t i = 0; i < m; ++i) {
    if (basis[i] < n) {
      T v = tab(i, rhs);
      if (v < T(0) && -v <= tol.infeasible) v = T(0);
      res.x[basis[i]] = v;
    }
  }
  return res;
}

}  // namespace duality::lp
