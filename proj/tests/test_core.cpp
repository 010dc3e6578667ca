#include <doctest.h>

#include <bit>

#include <cmath>
#include <complex>
#include <fstream>

#include <Eigen/Eigenvalues>

#include "duality/algebra.hpp"
#include "duality/core.hpp"
#include "duality/matrix_io.hpp"
#include "duality/rng.hpp"

using namespace duality;

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

Matrix random_stochastic(std::size_t n, SplitMix64& rng) {
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.uniform();
    m.row(i) /= m.row(i).sum();
  }
  return m;
}

Matrix random_generator(std::size_t n, SplitMix64& rng) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (i != j) m(i, j) = 3.0 * rng.uniform();
    }
    m(i, i) = -m.row(i).sum();
  }
  return m;
}

// Plain Taylor series, as an independent reference for small t |L|.
Matrix taylor_exp(const Matrix& a, int terms) {
  Matrix sum = Matrix::Identity(a.rows(), a.cols());
  Matrix term = sum;
  for (int k = 1; k < terms; ++k) {
    term = term * a / static_cast<double>(k);
    sum += term;
  }
  return sum;
}

std::vector<std::complex<double>> sorted(std::vector<std::complex<double>> v) {
  std::sort(v.begin(), v.end(), [](auto a, auto b) { return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag(); });
  return v;
}

}  // namespace

TEST_CASE("validate_stochastic on small matrices") {
  auto id = validate_stochastic(Matrix::Identity(2, 2));
  CHECK(id.pass);
  CHECK(id.max_row_deviation == 0.0);

  auto bad = validate_stochastic(mat({{0.5, 0.5}, {0.3, 0.6}}));
  CHECK_FALSE(bad.pass);
  CHECK(bad.worst_row == 1);
  CHECK(bad.max_row_deviation == doctest::Approx(0.1).epsilon(1e-12));

  CHECK(validate_stochastic(mat({{0.5, 0.5}, {0.5, 0.5}})).pass);

  Matrix nan = Matrix::Identity(2, 2);
  nan(0, 1) = std::nan("");
  CHECK_THROWS_AS(validate_stochastic(nan), ValidationError);
}

TEST_CASE("StochasticMatrix clamps round-off negatives and rejects real ones") {
  auto p = StochasticMatrix::from(mat({{1.0 + 5e-13, -5e-13}, {0.0, 1.0}}));
  CHECK(p(0, 1) == 0.0);
  CHECK_THROWS_AS(StochasticMatrix::from(mat({{1.1, -0.1}, {0.0, 1.0}})), ValidationError);
  CHECK_THROWS_AS(GeneratorMatrix::from(mat({{-1.0, 1.0}, {1.0, -0.5}})), ValidationError);
  CHECK_THROWS_AS(GeneratorMatrix::from(mat({{1.0, -1.0}, {1.0, -1.0}})), ValidationError);
}

TEST_CASE("transition_matrix special cases") {
  const auto zero = GeneratorMatrix::zero(3);
  CHECK(max_abs(transition_matrix(zero, 7.5).matrix() - Matrix::Identity(3, 3)) == 0.0);

  const auto flip = GeneratorMatrix::from(mat({{-1, 1}, {1, -1}}));
  const auto p = transition_matrix(flip, std::log(2.0) / 2.0);
  CHECK(max_abs(p.matrix() - mat({{0.75, 0.25}, {0.25, 0.75}})) <= 1e-13);
  for (double t : {0.0, 0.01, 0.3, 2.0, 40.0}) {
    const auto pt = transition_matrix(flip, t);
    const double a = 0.5 * (1 + std::exp(-2 * t));
    CHECK(max_abs(pt.matrix() - mat({{a, 1 - a}, {1 - a, a}})) <= 1e-13);
  }
  CHECK_THROWS_AS(transition_matrix(flip, -1.0), ValidationError);
}

TEST_CASE("transition_matrix agrees with a Taylor series on the Kingman block chain") {
  const auto l = algebra::models::kingman_block_generator(3);
  const Matrix ref = taylor_exp(l.matrix(), 60);
  CHECK(max_abs(transition_matrix(l, 1.0).matrix() - ref) <= 1e-12);
}

TEST_CASE("transition_matrix properties on random generators") {
  SplitMix64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const auto l = GeneratorMatrix::from(random_generator(2 + trial % 6, rng));
    const double t = 0.1 + 3.0 * rng.uniform();
    const double s = 0.1 + 3.0 * rng.uniform();
    const auto pt = transition_matrix(l, t);
    const auto ps = transition_matrix(l, s);
    const auto pts = transition_matrix(l, t + s);
    // Chapman-Kolmogorov.
    CHECK(max_abs(pts.matrix() - pt.matrix() * ps.matrix()) <= 1e-9);
    const auto v = validate_stochastic(pt.matrix());
    CHECK(v.pass);
    CHECK(v.min_entry >= -1e-12);
    // Reference: Taylor series on short sub-steps, then powers.
    const int pieces = 64;
    Matrix step = taylor_exp(l.matrix() * (t / pieces), 30);
    Matrix ref = Matrix::Identity(l.matrix().rows(), l.matrix().cols());
    for (int k = 0; k < pieces; ++k) ref = ref * step;
    CHECK(max_abs(pt.matrix() - ref) <= 1e-10);
  }
}

TEST_CASE("stationary distributions") {
  const auto ds = StochasticMatrix::from(mat({{0.2, 0.5, 0.3}, {0.5, 0.2, 0.3}, {0.3, 0.3, 0.4}}));
  const auto u = stationary_distribution(ds);
  for (std::size_t i = 0; i < 3; ++i) CHECK(u(i) == doctest::Approx(1.0 / 3).epsilon(1e-12));

  const auto two = StochasticMatrix::from(mat({{0.9, 0.1}, {0.2, 0.8}}));
  const auto pi = stationary_distribution(two);
  CHECK(pi(0) == doctest::Approx(2.0 / 3).epsilon(1e-12));
  CHECK(pi(1) == doctest::Approx(1.0 / 3).epsilon(1e-12));

  SplitMix64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = StochasticMatrix::from(random_stochastic(5, rng));
    const Vector s = stationary_distribution(p).vector();
    CHECK((s.transpose() * p.matrix() - s.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
    const auto l = GeneratorMatrix::from(random_generator(5, rng));
    const Vector sl = stationary_distribution(l).vector();
    CHECK((sl.transpose() * l.matrix()).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("SEP on three sites: stationary law uniform within each particle sector") {
  const auto sep = algebra::sep_instance(3);
  const Matrix& l = sep.l.matrix();
  // Restrict to the sector with k particles and compare with a brute-force null vector.
  for (int k = 0; k <= 3; ++k) {
    std::vector<Eigen::Index> states;
    for (Eigen::Index a = 0; a < 8; ++a) {
      if (std::popcount(static_cast<unsigned>(a)) == k) states.push_back(a);
    }
    const auto n = static_cast<Eigen::Index>(states.size());
    Matrix block(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) block(i, j) = l(states[i], states[j]);
    }
    const auto pi = stationary_distribution(GeneratorMatrix::from(block));
    for (Eigen::Index i = 0; i < n; ++i) CHECK(pi(static_cast<std::size_t>(i)) == doctest::Approx(1.0 / n).epsilon(1e-10));
  }
}

TEST_CASE("eigenvalue_multiset basics") {
  const auto id = eigenvalue_multiset(Matrix::Identity(4, 4));
  REQUIRE(id.size() == 4);
  for (auto z : id) CHECK(std::abs(z - 1.0) <= 1e-12);

  const auto sw = eigenvalue_multiset(mat({{0, 1}, {1, 0}}));
  REQUIRE(sw.size() == 2);
  CHECK(std::abs(sw[0] + 1.0) <= 1e-12);
  CHECK(std::abs(sw[1] - 1.0) <= 1e-12);

  const auto rot = eigenvalue_multiset(mat({{0, -1}, {1, 0}}));
  REQUIRE(rot.size() == 2);
  CHECK(std::abs(rot[0] - std::complex<double>(0, -1)) <= 1e-12);
  CHECK(std::abs(rot[1] - std::complex<double>(0, 1)) <= 1e-12);
}

TEST_CASE("eigenvalue_multiset against Eigen and under similarity") {
  SplitMix64 rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 2 + trial % 7;
    const Matrix p = random_stochastic(n, rng);
    const auto ours = eigenvalue_multiset(p);
    // Stochastic: contains 1, spectral radius <= 1.
    bool has_one = false;
    for (auto z : ours) {
      has_one = has_one || std::abs(z - 1.0) <= 1e-8;
      CHECK(std::abs(z) <= 1.0 + 1e-8);
    }
    CHECK(has_one);

    Eigen::EigenSolver<Matrix> es(p, false);
    std::vector<std::complex<double>> ref(es.eigenvalues().data(), es.eigenvalues().data() + n);
    ref = sorted(ref);
    // Greedy nearest matching against the reference.
    std::vector<bool> used(n, false);
    for (auto z : ours) {
      double best = 1e300;
      std::size_t arg = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (!used[j] && std::abs(z - ref[j]) < best) {
          best = std::abs(z - ref[j]);
          arg = j;
        }
      }
      used[arg] = true;
      CHECK(best <= 1e-8);
    }

    if (n == 4) {
      Matrix h(4, 4);
      for (Eigen::Index i = 0; i < 4; ++i) {
        for (Eigen::Index j = 0; j < 4; ++j) h(i, j) = rng.uniform() - 0.5 + (i == j ? 2.0 : 0.0);
      }
      const Matrix q = (h.inverse() * p * h).transpose();
      CHECK(algebra::spectrum_compare(p, q).max_distance <= 1e-8);
    }
  }
}

TEST_CASE("matrix parsing") {
  const Matrix m = io::parse_csv_matrix("1, 2.5\n-3,4e-1\n");
  CHECK(m.rows() == 2);
  CHECK(m(1, 1) == 0.4);
  CHECK_THROWS_WITH_AS(io::parse_csv_matrix("1,2\n3\n", "m.csv"), doctest::Contains("m.csv:2:"), ParseError);
  CHECK_THROWS_AS(io::parse_csv_matrix("1,x\n"), ParseError);
  CHECK_THROWS_AS(io::parse_csv_matrix("1,,2\n"), ParseError);

  const Matrix j = io::parse_json_matrix("[[1, 0], [0.5, 0.5]]");
  CHECK(j(1, 0) == 0.5);
  CHECK_THROWS_AS(io::parse_json_matrix("[[1, 0], [0.5]]"), ParseError);
  CHECK_THROWS_AS(io::parse_json_matrix("[[1, \"a\"]]"), ParseError);
  CHECK_THROWS_AS(io::parse_json_matrix("{"), ParseError);

  // Round trip through the CSV writer is exact.
  SplitMix64 rng(3);
  const Matrix r = random_stochastic(4, rng);
  CHECK(io::parse_csv_matrix(io::format_csv_matrix(r)) == r);
}
