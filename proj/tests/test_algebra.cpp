#include <doctest.h>

#include <bit>
#include <cmath>

#include "duality/algebra.hpp"
#include "duality/core.hpp"
#include "duality/pathsim.hpp"
#include "duality/rng.hpp"

using namespace duality;
using namespace duality::algebra;

namespace {

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

Matrix random_stochastic(Eigen::Index n, SplitMix64& rng, double zero_prob = 0.0) {
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = rng.uniform() < zero_prob ? 0.0 : rng.uniform();
    if (m.row(i).sum() == 0.0) m(i, i) = 1.0;
    m.row(i) /= m.row(i).sum();
  }
  return m;
}

// Monotone chain: rows are increasing in the usual stochastic order, built
// from sorted quantile functions.
Matrix random_monotone(Eigen::Index n, SplitMix64& rng) {
  // tail(x, z) non-decreasing in x for each z.
  Matrix tail = Matrix::Zero(n, n + 1);
  for (Eigen::Index z = 1; z < n; ++z) {
    std::vector<double> col(static_cast<std::size_t>(n));
    for (auto& v : col) v = rng.uniform();
    std::sort(col.begin(), col.end());
    for (Eigen::Index x = 0; x < n; ++x) tail(x, z) = col[static_cast<std::size_t>(x)];
  }
  // Tails must also decrease in z; enforce by a running minimum per row.
  for (Eigen::Index x = 0; x < n; ++x) {
    tail(x, 0) = 1.0;
    for (Eigen::Index z = 1; z < n; ++z) tail(x, z) = std::min(tail(x, z), tail(x, z - 1));
  }
  Matrix p(n, n);
  for (Eigen::Index x = 0; x < n; ++x) {
    for (Eigen::Index z = 0; z < n; ++z) p(x, z) = tail(x, z) - tail(x, z + 1);
  }
  return p;
}

double binom(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
  return r;
}

// Spin-system generator on {0,1}^N from a two-site mechanism applied at rate
// lambda on every ordered pair of the complete graph.
Matrix spin_generator(std::size_t n, const pathsim::Mechanism& f, double lambda) {
  const auto dim = static_cast<Eigen::Index>(1u << n);
  Matrix l = Matrix::Zero(dim, dim);
  for (Eigen::Index x = 0; x < dim; ++x) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const int xi = (x >> i) & 1, xj = (x >> j) & 1;
        const auto out = f(pathsim::encode(xi, xj));
        Eigen::Index y = x & ~((Eigen::Index{1} << i) | (Eigen::Index{1} << j));
        y |= static_cast<Eigen::Index>(pathsim::first(out)) << i;
        y |= static_cast<Eigen::Index>(pathsim::second(out)) << j;
        if (y == x) continue;
        l(x, y) += lambda;
        l(x, x) -= lambda;
      }
    }
  }
  return l;
}

}  // namespace

TEST_CASE("check_duality_discrete examples") {
  const Matrix ds = mat({{0.2, 0.5, 0.3}, {0.5, 0.1, 0.4}, {0.3, 0.4, 0.3}});
  CHECK(check_duality_discrete(StochasticMatrix::from(ds), StochasticMatrix::from(ds.transpose()),
                               DualityMatrix::from(Matrix::Identity(3, 3))) == 0.0);

  const auto p = models::absorbed_srw(2);
  const auto h = DualityMatrix::from(mat({{0, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 0}}));
  CHECK(check_duality_discrete(p, p, h) == 0.0);

  SplitMix64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix pm = random_stochastic(3, rng);
    Matrix hm(3, 3);
    for (Eigen::Index i = 0; i < 3; ++i) {
      for (Eigen::Index j = 0; j < 3; ++j) hm(i, j) = rng.uniform() + (i == j ? 1.5 : 0.0);
    }
    const Matrix qm = (hm.inverse() * pm * hm).transpose();
    CHECK(duality_residual(pm, qm, hm) <= 1e-12);
    CHECK(spectrum_compare(pm, qm).pass);
  }

  CHECK_THROWS_AS(duality_residual(Matrix::Identity(3, 3), Matrix::Identity(2, 2), Matrix::Identity(3, 3)), DimensionError);
}

TEST_CASE("generator duality: zero generators and the Moran/coalescing pair") {
  const auto z = GeneratorMatrix::zero(3);
  const auto r0 = check_duality_generators(z, z, DualityMatrix::from(Matrix::Ones(3, 3)));
  CHECK(r0.generator_residual == 0.0);
  CHECK(r0.pass);

  const std::size_t n = 4;
  const auto voter = models::voter_count_generator(n, 0.7);
  const auto coal = models::coalescing_count_generator(n, 0.7);
  Matrix hyp(5, 5);
  for (int a = 0; a <= 4; ++a) {
    for (int b = 0; b <= 4; ++b) hyp(a, b) = binom(4 - a, b) / binom(4, b);
  }
  CHECK(max_abs(models::hypergeometric_matrix(n).matrix() - hyp) <= 1e-15);
  const auto rep = check_duality_generators(voter, coal, DualityMatrix::from(hyp));
  CHECK(rep.generator_residual <= 1e-12);
  CHECK(rep.pass);
  for (double r : rep.semigroup_residuals) CHECK(r <= 1e-8);

  // Larger N, still exact up to round-off.
  const auto h20 = models::hypergeometric_matrix(20);
  CHECK(check_duality_generators(models::voter_count_generator(20), models::coalescing_count_generator(20), h20)
            .generator_residual <= 1e-9);
}

TEST_CASE("Wright-Fisher grid against Kingman: residual is the truncation error") {
  for (std::size_t k : {5u, 10u, 40u}) {
    const std::size_t n_max = 6;
    const double h = 1.0 / static_cast<double>(k);
    const auto lx = models::wf_grid_generator(k);
    const auto ly = models::kingman_block_generator(n_max);
    const auto hm = models::moment_matrix(k, n_max);
    const Matrix res = lx.matrix() * hm.matrix() - hm.matrix() * ly.matrix().transpose();
    for (std::size_t i = 0; i <= k; ++i) {
      const double x = static_cast<double>(i) * h;
      for (std::size_t n = 1; n <= n_max; ++n) {
        // Brute force: apply both generators to the monomial by hand.
        const double dn = static_cast<double>(n);
        double lhs = 0.0;
        if (i > 0 && i < k) {
          lhs = 0.5 * x * (1 - x) / (h * h) * (std::pow(x + h, dn) + std::pow(x - h, dn) - 2 * std::pow(x, dn));
        }
        const double rhs = 0.5 * dn * (dn - 1) * (std::pow(x, dn - 1) - std::pow(x, dn));
        const double oracle = lhs - rhs;
        const auto ii = static_cast<Eigen::Index>(i);
        const auto jj = static_cast<Eigen::Index>(n - 1);
        CHECK(res(ii, jj) == doctest::Approx(oracle).epsilon(1e-9).scale(1.0));
        CHECK(std::abs(res(ii, jj) - models::wf_grid_truncation_error(x, n, h)) <= 1e-9);
      }
    }
  }
  // n <= 3: the central difference is exact on cubics.
  CHECK(models::wf_grid_truncation_error(0.3, 3, 0.1) == 0.0);
}

TEST_CASE("solve_dual examples") {
  const Matrix ds = mat({{0.2, 0.5, 0.3}, {0.5, 0.1, 0.4}, {0.3, 0.4, 0.3}});
  const auto r = solve_dual(StochasticMatrix::from(ds), DualityMatrix::from(Matrix::Identity(3, 3)));
  CHECK(r.status == DualStatus::exists_stochastic);
  CHECK(r.unique);
  REQUIRE(r.dual);
  CHECK(max_abs(*r.dual - ds.transpose()) <= 1e-12);

  const auto p = models::absorbed_srw(2);
  const auto h = DualityMatrix::from(mat({{0, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 0}}));
  const auto rs = solve_dual(p, h);
  CHECK(rs.status == DualStatus::exists_stochastic);
  CHECK_FALSE(rs.unique);
  REQUIRE(rs.dual);
  CHECK(duality_residual(p.matrix(), *rs.dual, h.matrix()) <= 1e-12);

  // Non-monotone two-state chain with the Siegmund function.
  const Matrix flip = mat({{0.1, 0.9}, {0.9, 0.1}});
  const auto hs = siegmund_duality_matrix(2);
  const auto rn = solve_dual(StochasticMatrix::from(flip), hs);
  CHECK(rn.status == DualStatus::exists_signed_only);
  // Oracle: scan every probability row nu on a grid; none reproduces P h_1.
  const Vector target = flip * hs.matrix().col(1);
  double best = 1e300;
  for (int k = 0; k <= 1000; ++k) {
    Vector nu(2);
    nu << k / 1000.0, 1.0 - k / 1000.0;
    best = std::min(best, (hs.matrix() * nu - target).cwiseAbs().maxCoeff());
  }
  CHECK(best > 0.1);
}

TEST_CASE("V1+ invariance") {
  const Matrix exasim = mat({{2, 0, 1, 0}, {0, 2, 1, 2}});
  CHECK(check_v1plus_invariance(Matrix::Identity(2, 2), DualityMatrix::from(exasim)).invariant);

  const auto bad = check_v1plus_invariance(mat({{0, 1}, {1, 0}}), DualityMatrix::from(mat({{1, 0}, {0, 0}})));
  CHECK_FALSE(bad.invariant);
  REQUIRE(bad.violating_column);
  CHECK(*bad.violating_column == 0);
  // Certificate: y^T [H; 1] <= 0 columnwise and y^T [P h; 1] > 0.
  REQUIRE(bad.certificate.size() == 3);
  const Matrix h = mat({{1, 0}, {0, 0}});
  for (Eigen::Index j = 0; j < 2; ++j) {
    CHECK(bad.certificate[0] * h(0, j) + bad.certificate[1] * h(1, j) + bad.certificate[2] <= 1e-12);
  }
  CHECK(bad.certificate[0] * 0 + bad.certificate[1] * 1 + bad.certificate[2] > 0);

  // SEP: the subset function is invariant under exp(tL).
  const auto sep = sep_instance(3);
  const auto pt = transition_matrix(sep.l, 0.4);
  CHECK(check_v1plus_invariance(pt.matrix(), sep.h_subset).invariant);
}

TEST_CASE("solve_dual agrees with V1+ invariance; stochastic duals share the spectrum") {
  SplitMix64 rng(99);
  int stochastic = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const Eigen::Index n = 3 + static_cast<Eigen::Index>(trial % 3);
    Matrix p = trial % 2 == 0 ? random_monotone(n, rng) : random_stochastic(n, rng, 0.4);
    Matrix h;
    if (trial % 4 == 0) {
      h = siegmund_duality_matrix(static_cast<std::size_t>(n)).matrix();
      p.row(n - 1).setZero();
      p(n - 1, n - 1) = 1.0;
    } else if (trial % 4 == 2) {
      h = siegmund_duality_matrix(static_cast<std::size_t>(n)).matrix();
    } else {
      h = Matrix(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) h(i, j) = rng.below(3) == 0 ? 0.0 : std::floor(3 * rng.uniform());
      }
    }
    const auto sp = StochasticMatrix::from(p);
    const auto hd = DualityMatrix::from(h);
    const auto r = solve_dual(sp, hd);
    const auto inv = check_v1plus_invariance(p, hd);
    CHECK((r.status == DualStatus::exists_stochastic) == inv.invariant);
    if (r.status == DualStatus::exists_stochastic) {
      REQUIRE(r.dual);
      CHECK(duality_residual(p, *r.dual, h) <= 1e-9);
      CHECK(validate_stochastic(*r.dual).pass);
      if (nondegeneracy_check(h).invertible) {
        ++stochastic;
        CHECK(spectrum_compare(p, *r.dual).pass);
      }
    }
  }
  CHECK(stochastic >= 20);
}

TEST_CASE("monotonicity") {
  CHECK(check_monotone(Matrix::Identity(3, 3)).monotone);
  const auto flip = check_monotone(mat({{0.1, 0.9}, {0.9, 0.1}}));
  CHECK_FALSE(flip.monotone);
  REQUIRE(flip.witness);
  CHECK((*flip.witness)[0] == 0);
  CHECK((*flip.witness)[1] == 1);
  CHECK((*flip.witness)[2] == 1);
  // Birth-death chains are monotone: embedded voter count chain, uniformized.
  const auto l = models::voter_count_generator(4);
  const Matrix p = Matrix::Identity(5, 5) + l.matrix() / 8.0;
  CHECK(check_monotone(p).monotone);
}

TEST_CASE("Siegmund dual") {
  const auto id = siegmund_dual(StochasticMatrix::identity(3));
  CHECK(max_abs(id.restricted() - Matrix::Identity(3, 3)) == 0.0);
  for (double d : id.defect) CHECK(d == 0.0);

  auto verify = [](const Matrix& p, const SiegmundDual& d) {
    const Eigen::Index n = p.rows();
    const Matrix q = d.restricted();
    for (Eigen::Index x = 0; x < n; ++x) {
      for (Eigen::Index y = 0; y < n; ++y) {
        double lhs = 0.0, rhs = 0.0;
        for (Eigen::Index z = y; z < n; ++z) lhs += p(x, z);
        for (Eigen::Index z = 0; z <= x; ++z) rhs += q(y, z);
        CHECK(std::abs(lhs - rhs) <= 1e-12);
      }
    }
    CHECK(validate_stochastic(d.q.matrix()).pass);
  };

  // Absorbed walk on {0,...,3}: from 1 the dual holds or steps up.
  const auto srw = models::absorbed_srw(2);
  const auto d = siegmund_dual(srw);
  verify(srw.matrix(), d);
  const Matrix q = d.restricted();
  CHECK(q(0, 0) == 1.0);
  CHECK(q(1, 1) == 0.5);
  CHECK(q(1, 2) == 0.5);

  const Matrix p3 = mat({{1, 0, 0}, {0.3, 0.4, 0.3}, {0, 0, 1}});
  verify(p3, siegmund_dual(StochasticMatrix::from(p3)));

  SplitMix64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix p = random_monotone(2 + trial % 5, rng);
    const auto ds = siegmund_dual(StochasticMatrix::from(p));
    verify(p, ds);
    CHECK(duality_residual(p, ds.restricted(), siegmund_duality_matrix(static_cast<std::size_t>(p.rows())).matrix()) <= 1e-12);
  }
  CHECK_THROWS_WITH_AS(siegmund_dual(StochasticMatrix::from(mat({{0.1, 0.9}, {0.9, 0.1}}))), doctest::Contains("(0,1,1)"),
                       ValidationError);
}

TEST_CASE("spectrum_compare") {
  const Matrix p = mat({{0.5, 0.5, 0}, {0.25, 0.5, 0.25}, {0, 0.5, 0.5}});
  const auto same = spectrum_compare(p, p);
  CHECK(same.pass);
  CHECK(same.max_distance == 0.0);

  const auto diff = spectrum_compare(p, Matrix::Identity(3, 3));
  CHECK_FALSE(diff.pass);
  CHECK_FALSE(diff.mismatches.empty());

  // Voter/coalescing on the complete graph with three sites.
  const auto& ms = pathsim::standard_mechanisms();
  const Matrix lv = spin_generator(3, ms[0], 1.0);
  const Matrix lc = spin_generator(3, ms[1], 1.0);
  const auto h = build_tensor_duality(TensorKind::coalescing, 3);
  CHECK(duality_residual(lv, lc, h.matrix()) <= 1e-12);
  const auto pv = transition_matrix(GeneratorMatrix::from(lv), 1.0);
  const auto pc = transition_matrix(GeneratorMatrix::from(lc), 1.0);
  CHECK(spectrum_compare(pv.matrix(), pc.matrix()).pass);
}

TEST_CASE("reversible intertwining") {
  const Matrix sym = mat({{0.5, 0.3, 0.2}, {0.3, 0.4, 0.3}, {0.2, 0.3, 0.5}});
  const Vector u = Vector::Constant(3, 1.0 / 3);
  const auto r = reversible_intertwining_check(sym, sym, DualityMatrix::from(Matrix::Identity(3, 3)), u, u);
  CHECK(r.pass);
  CHECK(r.intertwining_residual == 0.0);

  const auto sep = sep_instance(3);
  const Vector ber = Vector::Constant(8, 1.0 / 8);
  CHECK(reversible_intertwining_check(sep.l.matrix(), sep.l.matrix(), sep.h_subset, ber, ber).pass);

  // Reversible random pair: weights W symmetric, P = D^-1 W, mu ~ row sums; measure duality H = diag(1/mu).
  SplitMix64 rng(4);
  Matrix w(3, 3);
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (Eigen::Index j = i; j < 3; ++j) w(i, j) = w(j, i) = rng.uniform();
  }
  Vector mu = w.rowwise().sum();
  Matrix p = mu.cwiseInverse().asDiagonal() * w;
  mu /= mu.sum();
  const auto h = diagonal_from_measure(mu);
  CHECK(reversible_intertwining_check(p, p, h, mu, mu).pass);

  const Matrix nonrev = mat({{0, 1, 0}, {0, 0, 1}, {1, 0, 0}});
  const Vector bad = (Vector(3) << 0.5, 0.3, 0.2).finished();
  CHECK_THROWS_AS(reversible_intertwining_check(nonrev, nonrev, DualityMatrix::from(Matrix::Identity(3, 3)), bad, bad),
                  ValidationError);
}

TEST_CASE("tensor duality matrices") {
  CHECK(build_tensor_duality(TensorKind::coalescing, 1).matrix() == mat({{1, 1}, {1, 0}}));
  CHECK(build_tensor_duality(TensorKind::annihilating, 1).matrix() == mat({{1, 1}, {1, -1}}));
  const auto hq = build_tensor_duality(TensorKind::q, 2, 0.5);
  for (int x = 0; x < 4; ++x) {
    for (int y = 0; y < 4; ++y) CHECK(hq(x, y) == std::pow(0.5, std::popcount(static_cast<unsigned>(x & y))));
  }
  for (std::size_t n = 1; n <= 6; ++n) {
    const auto c = build_tensor_duality(TensorKind::coalescing, n);
    const auto a = build_tensor_duality(TensorKind::annihilating, n);
    CHECK(c.structure() == DualityStructure::tensor_coalescing);
    bool ok = true;
    for (std::size_t x = 0; x < (1u << n); ++x) {
      for (std::size_t y = 0; y < (1u << n); ++y) {
        ok = ok && c(x, y) == ((x & y) == 0 ? 1.0 : 0.0);
        ok = ok && a(x, y) == (std::popcount(x & y) % 2 == 0 ? 1.0 : -1.0);
      }
    }
    CHECK(ok);
  }
  CHECK_THROWS_AS(build_tensor_duality(TensorKind::coalescing, kMaxTensorSites + 1), ValidationError);
}

TEST_CASE("non-degeneracy") {
  for (std::size_t n = 1; n <= 5; ++n) {
    CHECK(nondegeneracy_check(build_tensor_duality(TensorKind::coalescing, n).matrix()).invertible);
  }
  // Lift through pi: {0,1,2} -> {0,1}, pi(1) = pi(2) = 1.
  const Matrix h = mat({{1, 1}, {1, 0}});
  Matrix lifted(2, 3);
  lifted.col(0) = h.col(0);
  lifted.col(1) = h.col(1);
  lifted.col(2) = h.col(1);
  const auto r = nondegeneracy_check(lifted);
  CHECK_FALSE(r.separating_columns);
  REQUIRE(r.right_null_basis.size() == 1);
  const Vector& v = r.right_null_basis[0];
  CHECK(std::abs(v(0)) <= 1e-12);
  CHECK(std::abs(v(1) + v(2)) <= 1e-12);
  CHECK(std::abs(v(1)) > 0.1);

  const auto ex = nondegeneracy_check(mat({{2, 0, 1, 0}, {0, 2, 1, 2}}));
  CHECK(ex.rank == 2);
  CHECK(ex.right_null_basis.size() == 2);
}

TEST_CASE("measure duality conversions") {
  const auto d = measure_from_diagonal(DualityMatrix::from(mat({{0, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 0}})));
  CHECK(d.mu == (Vector(4) << 0, 1, 1, 0).finished());
  CHECK(d.support == std::vector<std::size_t>{1, 2});
  CHECK(diagonal_from_measure(Vector::Constant(4, 0.25)).matrix() == 4.0 * Matrix::Identity(4, 4));
  CHECK(diagonal_from_measure((Vector(3) << 0.5, 1.0 / 3, 1.0 / 6).finished()).matrix().diagonal().isApprox(
      (Vector(3) << 2, 3, 6).finished(), 1e-14));
  CHECK_THROWS_AS(measure_from_diagonal(DualityMatrix::from(mat({{1, 1e-30}, {0, 1}}))), ValidationError);

  const Matrix killed = models::killed_srw(4);
  CHECK(check_measure_duality(killed, killed, Vector::Ones(4)) == 0.0);
  CHECK(check_trap(models::absorbed_srw(2).matrix(), {0, 3}));
  CHECK_FALSE(check_trap(models::absorbed_srw(2).matrix(), {1}));

  // Round trip from a reversible pair.
  SplitMix64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix w(4, 4);
    for (Eigen::Index i = 0; i < 4; ++i) {
      for (Eigen::Index j = i; j < 4; ++j) w(i, j) = w(j, i) = rng.uniform();
    }
    Vector mu = w.rowwise().sum();
    const Matrix p = mu.cwiseInverse().asDiagonal() * w;
    mu /= mu.sum();
    CHECK(check_measure_duality(p, p, mu) <= 1e-15);
    const auto h = diagonal_from_measure(mu);
    CHECK(check_duality_discrete(StochasticMatrix::from(p), StochasticMatrix::from(p), h) <= 1e-12);
    const auto back = measure_from_diagonal(h);
    CHECK((back.mu - mu).cwiseAbs().maxCoeff() <= 1e-15);
  }
}

TEST_CASE("resolvent duality") {
  const auto sym = GeneratorMatrix::from(mat({{-1, 0.5, 0.5}, {0.5, -1, 0.5}, {0.5, 0.5, -1}}));
  const auto r = resolvent_duality_check(sym, sym, Vector::Constant(3, 1.0 / 3), 1.0, 0.7);
  CHECK(r.pass);
  CHECK(r.residual <= 1e-10);

  // Two-state chain 0 -> 1 at a, 1 -> 0 at b, reversible for mu = (b, a) / (a + b).
  const double a = 2.0, b = 0.5;
  const auto l = GeneratorMatrix::from(mat({{-a, a}, {b, -b}}));
  const Vector mu = (Vector(2) << b / (a + b), a / (a + b)).finished();
  const auto rr = resolvent_duality_check(l, l, mu, 1.0, 0.7);
  CHECK(rr.pass);
  // Closed form (lambda I - L)^{-1} = [[lambda + b, a], [b, lambda + a]] / (lambda (lambda + a + b)).
  const double lam = 1.0;
  const Matrix closed = mat({{lam + b, a}, {b, lam + a}}) / (lam * (lam + a + b));
  CHECK(max_abs(resolvent(l, lam) - closed) <= 1e-14);

  const double big = 1e4;
  CHECK(max_abs(big * resolvent(sym, big) - Matrix::Identity(3, 3)) <= 10.0 / big);
  CHECK_THROWS(resolvent(sym, 0.0));
}

TEST_CASE("symmetric exclusion") {
  const auto r2 = sep_symmetry_check(2);
  CHECK(r2.commutation_residual == 0.0);
  CHECK(r2.self_duality_residual == 0.0);
  for (std::size_t m = 2; m <= 6; ++m) CHECK(sep_symmetry_check(m).pass);
  CHECK_THROWS_AS(sep_instance(1), ValidationError);
  CHECK_THROWS_AS(sep_instance(11), ValidationError);

  const auto s = sep_instance(2);
  Vector hv(4);
  for (int a = 0; a < 4; ++a) hv(a) = std::ldexp(1.0, -std::popcount(static_cast<unsigned>(a)));
  CHECK((s.l.matrix() * hv).cwiseAbs().maxCoeff() == 0.0);
  for (int b = 0; b < 4; ++b) CHECK(s.lambda(0, static_cast<std::size_t>(b)) == 0.25);
}
