// Dense nonsymmetric eigenvalues: balancing, Gaussian-elimination reduction to
// upper Hessenberg form, then the Francis double-shift QR iteration. Internal
// arrays are 1-based to keep the index arithmetic of the classical routines.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "duality/core.hpp"

namespace duality {

namespace {

class Square1 {
 public:
  explicit Square1(int n) : n_(n), a_(static_cast<std::size_t>((n + 1) * (n + 1)), 0.0) {}
  double& operator()(int i, int j) { return a_[static_cast<std::size_t>(i * (n_ + 1) + j)]; }

 private:
  int n_;
  std::vector<double> a_;
};

void balance(Square1& a, int n) {
  constexpr double radix = 2.0;
  constexpr double sqrdx = radix * radix;
  bool done = false;
  while (!done) {
    done = true;
    for (int i = 1; i <= n; ++i) {
      double r = 0.0;
      double c = 0.0;
      for (int j = 1; j <= n; ++j) {
        if (j == i) continue;
        c += std::abs(a(j, i));
        r += std::abs(a(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      double g = r / radix;
      double f = 1.0;
      const double s = c + r;
      while (c < g) {
        f *= radix;
        c *= sqrdx;
      }
      g = r * radix;
      while (c > g) {
        f /= radix;
        c /= sqrdx;
      }
      if ((c + r) / f < 0.95 * s) {
        done = false;
        g = 1.0 / f;
        for (int j = 1; j <= n; ++j) a(i, j) *= g;
        for (int j = 1; j <= n; ++j) a(j, i) *= f;
      }
    }
  }
}

void to_hessenberg(Square1& a, int n) {
  for (int m = 2; m < n; ++m) {
    double x = 0.0;
    int i = m;
    for (int j = m; j <= n; ++j) {
      if (std::abs(a(j, m - 1)) > std::abs(x)) {
        x = a(j, m - 1);
        i = j;
      }
    }
    if (i != m) {
      for (int j = m - 1; j <= n; ++j) std::swap(a(i, j), a(m, j));
      for (int j = 1; j <= n; ++j) std::swap(a(j, i), a(j, m));
    }
    if (x != 0.0) {
      for (i = m + 1; i <= n; ++i) {
        double y = a(i, m - 1);
        if (y == 0.0) continue;
        y /= x;
        a(i, m - 1) = y;
        for (int j = m; j <= n; ++j) a(i, j) -= y * a(m, j);
        for (int j = 1; j <= n; ++j) a(j, m) += y * a(j, i);
      }
    }
  }
  // Multipliers were stored below the subdiagonal.
  for (int i = 3; i <= n; ++i) {
    for (int j = 1; j < i - 1; ++j) a(i, j) = 0.0;
  }
}

double sign(double a, double b) { return b >= 0.0 ? std::abs(a) : -std::abs(a); }

void hessenberg_qr(Square1& a, int n, std::vector<double>& wr, std::vector<double>& wi) {
  double anorm = 0.0;
  for (int i = 1; i <= n; ++i) {
    for (int j = std::max(i - 1, 1); j <= n; ++j) anorm += std::abs(a(i, j));
  }
  int nn = n;
  double t = 0.0;
  double p = 0.0, q = 0.0, r = 0.0, s = 0.0, w = 0.0, x = 0.0, y = 0.0, z = 0.0;
  while (nn >= 1) {
    int its = 0;
    int l = 0;
    do {
      for (l = nn; l >= 2; --l) {
        s = std::abs(a(l - 1, l - 1)) + std::abs(a(l, l));
        if (s == 0.0) s = anorm;
        if (std::abs(a(l, l - 1)) + s == s) {
          a(l, l - 1) = 0.0;
          break;
        }
      }
      x = a(nn, nn);
      if (l == nn) {
        wr[static_cast<std::size_t>(nn)] = x + t;
        wi[static_cast<std::size_t>(nn--)] = 0.0;
      } else {
        y = a(nn - 1, nn - 1);
        w = a(nn, nn - 1) * a(nn - 1, nn);
        if (l == nn - 1) {
          p = 0.5 * (y - x);
          q = p * p + w;
          z = std::sqrt(std::abs(q));
          x += t;
          const auto hi = static_cast<std::size_t>(nn);
          if (q >= 0.0) {
            z = p + sign(z, p);
            wr[hi - 1] = wr[hi] = x + z;
            if (z != 0.0) wr[hi] = x - w / z;
            wi[hi - 1] = wi[hi] = 0.0;
          } else {
            wr[hi - 1] = wr[hi] = x + p;
            wi[hi] = z;
            wi[hi - 1] = -z;
          }
          nn -= 2;
        } else {
          if (its == 30) {
            std::ostringstream os;
            os << "eigenvalue_multiset: QR iteration did not converge for the block ending at row " << nn - 1;
            throw Error(os.str());
          }
          if (its == 10 || its == 20) {
            // Exceptional shift.
            t += x;
            for (int i = 1; i <= nn; ++i) a(i, i) -= x;
            s = std::abs(a(nn, nn - 1)) + std::abs(a(nn - 1, nn - 2));
            y = x = 0.75 * s;
            w = -0.4375 * s * s;
          }
          ++its;
          int m = nn - 2;
          for (; m >= l; --m) {
            z = a(m, m);
            r = x - z;
            s = y - z;
            p = (r * s - w) / a(m + 1, m) + a(m, m + 1);
            q = a(m + 1, m + 1) - z - r - s;
            r = a(m + 2, m + 1);
            s = std::abs(p) + std::abs(q) + std::abs(r);
            p /= s;
            q /= s;
            r /= s;
            if (m == l) break;
            const double u = std::abs(a(m, m - 1)) * (std::abs(q) + std::abs(r));
            const double v = std::abs(p) * (std::abs(a(m - 1, m - 1)) + std::abs(z) + std::abs(a(m + 1, m + 1)));
            if (u + v == v) break;
          }
          for (int i = m + 2; i <= nn; ++i) {
            a(i, i - 2) = 0.0;
            if (i != m + 2) a(i, i - 3) = 0.0;
          }
          for (int k = m; k <= nn - 1; ++k) {
            if (k != m) {
              p = a(k, k - 1);
              q = a(k + 1, k - 1);
              r = 0.0;
              if (k != nn - 1) r = a(k + 2, k - 1);
              if ((x = std::abs(p) + std::abs(q) + std::abs(r)) != 0.0) {
                p /= x;
                q /= x;
                r /= x;
              }
            }
            if ((s = sign(std::sqrt(p * p + q * q + r * r), p)) != 0.0) {
              if (k == m) {
                if (l != m) a(k, k - 1) = -a(k, k - 1);
              } else {
                a(k, k - 1) = -s * x;
              }
              p += s;
              x = p / s;
              y = q / s;
              z = r / s;
              q /= p;
              r /= p;
              for (int j = k; j <= nn; ++j) {
                p = a(k, j) + q * a(k + 1, j);
                if (k != nn - 1) {
                  p += r * a(k + 2, j);
                  a(k + 2, j) -= p * z;
                }
                a(k + 1, j) -= p * y;
                a(k, j) -= p * x;
              }
              const int mmin = nn < k + 3 ? nn : k + 3;
              for (int i = l; i <= mmin; ++i) {
                p = x * a(i, k) + y * a(i, k + 1);
                if (k != nn - 1) {
                  p += z * a(i, k + 2);
                  a(i, k + 2) -= p * r;
                }
                a(i, k + 1) -= p * q;
                a(i, k) -= p;
              }
            }
          }
        }
      }
    } while (l < nn - 1);
  }
}

}  // namespace

std::vector<std::complex<double>> eigenvalue_multiset(const Matrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("eigenvalue_multiset: matrix must be square");
  const int n = static_cast<int>(m.rows());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (!std::isfinite(m(i, j))) throw ValidationError("eigenvalue_multiset: non-finite entry");
    }
  }
  std::vector<std::complex<double>> out;
  if (n == 0) return out;

  Square1 a(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i + 1, j + 1) = m(i, j);
  }
  balance(a, n);
  to_hessenberg(a, n);
  std::vector<double> wr(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<double> wi(static_cast<std::size_t>(n + 1), 0.0);
  hessenberg_qr(a, n, wr, wi);

  out.reserve(static_cast<std::size_t>(n));
  for (std::size_t i = 1; i <= static_cast<std::size_t>(n); ++i) out.emplace_back(wr[i], wi[i]);
  std::sort(out.begin(), out.end(), [](const auto& u, const auto& v) {
    return u.real() != v.real() ? u.real() < v.real() : u.imag() < v.imag();
  });
  return out;
}

}  // namespace duality
