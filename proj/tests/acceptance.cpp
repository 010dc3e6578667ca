// Acceptance run: one PASS/FAIL line per criterion with its pinned tolerance
// and runtime. Exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "duality/algebra.hpp"
#include "duality/cone.hpp"
#include "duality/core.hpp"
#include "duality/pathsim.hpp"
#include "duality/rng.hpp"
#include "duality/scaling.hpp"

using namespace duality;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  double limit_seconds;
  std::function<Outcome()> body;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Matrix random_monotone(Eigen::Index n, SplitMix64& rng) {
  Matrix tail = Matrix::Zero(n, n + 1);
  for (Eigen::Index z = 1; z < n; ++z) {
    std::vector<double> col(static_cast<std::size_t>(n));
    for (auto& v : col) v = rng.uniform();
    std::sort(col.begin(), col.end());
    for (Eigen::Index x = 0; x < n; ++x) tail(x, z) = col[static_cast<std::size_t>(x)];
  }
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

Matrix random_stochastic(Eigen::Index n, SplitMix64& rng) {
  Matrix p(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) p(i, j) = rng.uniform();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

// Monotone in the index order: tails P(x, >= z) non-decreasing in x.
bool monotone_oracle(const Matrix& p) {
  for (Eigen::Index z = 1; z < p.cols(); ++z) {
    for (Eigen::Index x = 1; x < p.rows(); ++x) {
      if (p.row(x - 1).tail(p.cols() - z).sum() > p.row(x).tail(p.cols() - z).sum() + 1e-12) return false;
    }
  }
  return true;
}

Outcome c1() {
  using namespace pathsim;
  const auto q0 = QParameter::from(Rational(0)), qm = QParameter::from(Rational(-1));
  const auto& m = mechanism_by_name;
  const bool rc = is_q_dual_mechanism(m("R"), m("C"), q0).dual;
  const bool ra = is_q_dual_mechanism(m("R"), m("A"), qm).dual;
  const bool dd = is_q_dual_mechanism(m("D"), m("D"), qm).dual;
  const bool baba = is_q_dual_mechanism(m("BA"), m("BA"), qm).dual;
  const auto rd = is_q_dual_mechanism(m("R"), m("D"), q0);
  const bool table = m("R")(encode(1, 0)) == encode(1, 1) && m("A")(encode(1, 1)) == encode(0, 0) &&
                     m("BA")(encode(1, 1)) == encode(1, 0);
  std::ostringstream d;
  d << "R/C q=0 " << rc << ", R/A q=-1 " << ra << ", D/D q=-1 " << dd << ", BA/BA q=-1 " << baba << ", R/D q=0 "
    << rd.dual;
  if (rd.witness) d << " witness (" << int(rd.witness->first) << "," << int(rd.witness->second) << ")";
  return {table && rc && ra && dd && baba && !rd.dual && rd.witness.has_value(), d.str()};
}

Outcome c2() {
  const std::vector<std::vector<Rational>> h = {{2, 0, 1, 0}, {0, 2, 1, 2}};
  const auto e = cone::decompose_exact(h);
  const std::vector<std::vector<Rational>> want = {{1, 0}, {0, 1}, {Rational(1, 2), Rational(1, 2)}, {0, 1}};
  const bool ok = e.simplex && e.extremal == std::vector<std::size_t>{0, 1} && e.pi == want;
  return {ok, "extremal {0,1}, Pi exact"};
}

Outcome c3() {
  Matrix h(2, 4);
  h << 2, 0, 1, 0, 0, 2, 1, 2;
  Matrix l(2, 2);
  l << -1, 1, 1, -1;
  const auto lg = GeneratorMatrix::from(l);
  const auto d = cone::continuous_dual_generator(lg, h);
  const Matrix lh = d.l_hat.matrix();
  double row = 0.0, off = 0.0;
  for (Eigen::Index i = 0; i < lh.rows(); ++i) {
    row = std::max(row, std::abs(lh.row(i).sum()));
    for (Eigen::Index j = 0; j < lh.cols(); ++j) {
      if (i != j) off = std::min(off, lh(i, j));
    }
  }
  const double gen = max_abs(lh * h.transpose() - h.transpose() * l.transpose());
  double semi = 0.0;
  for (double t : {0.1, 1.0}) {
    const Matrix pt = transition_matrix(lg, t).matrix(), qt = transition_matrix(d.l_hat, t).matrix();
    semi = std::max(semi, max_abs(pt * h - h * qt.transpose()));
  }
  const bool ok = row <= 1e-10 && off >= -1e-12 && gen <= 1e-9 && semi <= 1e-8;
  return {ok, "row " + fmt(row) + " <= 1e-10, min off-diag " + fmt(off) + " >= -1e-12, generator residual " + fmt(gen) +
                  " <= 1e-9, semigroup residual " + fmt(semi) + " <= 1e-8, lambda " + fmt(d.lambda)};
}

Outcome c4() {
  const auto p = algebra::models::absorbed_srw(2);
  Matrix hd = Matrix::Zero(4, 4);
  hd(1, 1) = hd(2, 2) = 1.0;
  const auto h = DualityMatrix::from(hd);
  const double r1 = algebra::check_duality_discrete(p, p, h);
  const Matrix k = algebra::models::killed_srw(2);
  const double r2 = algebra::check_measure_duality(k, k, Vector::Ones(2));
  return {r1 == 0.0 && r2 == 0.0, "diagonal residual " + fmt(r1) + ", killed-walk residual " + fmt(r2) + " (exact 0)"};
}

Outcome c5() {
  SplitMix64 rng(505);
  int found = 0, tried = 0;
  double worst = 0.0;
  bool ok = true;
  while (found < 20 && tried < 10000) {
    ++tried;
    Matrix p, h;
    if (tried % 2 == 0) {
      // Monotone chain absorbed at the top with the Siegmund function.
      p = random_monotone(4, rng);
      p.row(3).setZero();
      p(3, 3) = 1.0;
      h = algebra::siegmund_duality_matrix(4).matrix();
    } else {
      p = random_stochastic(4, rng);
      h = Matrix(4, 4);
      for (Eigen::Index i = 0; i < 4; ++i) {
        for (Eigen::Index j = 0; j < 4; ++j) h(i, j) = rng.uniform();
      }
    }
    if (std::abs(h.determinant()) < 1e-6) continue;
    const auto res = algebra::solve_dual(StochasticMatrix::from(p), DualityMatrix::from(h));
    if (res.status != algebra::DualStatus::exists_stochastic) continue;
    ++found;
    const auto s = algebra::spectrum_compare(p, *res.dual);
    worst = std::max(worst, s.max_distance);
    ok = ok && s.pass && s.max_distance <= 1e-8;
  }
  return {ok && found == 20, std::to_string(found) + " instances (" + std::to_string(tried) +
                                 " drawn), max eigenvalue distance " + fmt(worst) + " <= 1e-8"};
}

Outcome c6() {
  bool ok = true;
  double worst = 0.0;
  for (std::size_t m = 2; m <= 6; ++m) {
    const auto r = algebra::sep_symmetry_check(m);
    worst = std::max({worst, r.commutation_residual, r.self_duality_residual});
    ok = ok && r.commutation_residual <= 1e-12 && r.self_duality_residual <= 1e-12;
  }
  return {ok, "M = 2..6, max residual " + fmt(worst) + " <= 1e-12"};
}

Outcome c7() {
  using namespace pathsim;
  const auto g = sample_graphical_representation(RateTable::complete_graph(4, {1.0}), 2.0, 7);
  const auto vc = verify_all_pairs(QParameter::from(Rational(0)), g, {mechanism_by_name("R")}, {mechanism_by_name("C")});
  const auto va = verify_all_pairs(QParameter::from(Rational(-1)), g, {mechanism_by_name("R")}, {mechanism_by_name("A")});
  const bool ok = vc.holds && va.holds && vc.pairs_checked == 256 && va.pairs_checked == 256;
  return {ok, std::to_string(g.size()) + " arrows, 256 pairs each, " + std::to_string(vc.intervals_checked + va.intervals_checked) +
                  " intervals compared exactly"};
}

Outcome c8() {
  SplitMix64 rng(808);
  bool ok = true;
  for (int run = 0; run < 1000; ++run) {
    const long x = static_cast<long>(rng.below(21)), y = static_cast<long>(rng.below(21));
    const auto w = pathsim::rw_siegmund_pathwise(x, y, 100, rng());
    ok = ok && w.holds;
    for (std::size_t n = 0; n <= 100 && ok; ++n) ok = static_cast<int>(w.forward[n] <= w.backward[100 - n]) == w.indicator;
  }
  return {ok, "1000 runs, 100 steps, indicator equal at every step"};
}

Outcome c9() {
  pathsim::ExchangeableConfig cfg;
  cfg.mechanisms = {pathsim::mechanism_by_name("R"), pathsim::mechanism_by_name("C")};
  cfg.seed = 9;
  const auto rep = pathsim::mc_exchangeable_duality(cfg);
  std::ostringstream d;
  d << "N=20 a=5 b=3 t=1, 1e5 replicas, max pairwise z " << fmt(rep.details["max_pairwise_z"].get<double>()) << " <= 3";
  bool ok = rep.estimates.size() == 5;
  for (std::size_t i = 0; i < rep.estimates.size(); ++i) {
    for (std::size_t j = i + 1; j < rep.estimates.size(); ++j) {
      const auto& a = rep.estimates[i];
      const auto& b = rep.estimates[j];
      ok = ok && std::abs(a.mean - b.mean) <= 3.0 * std::hypot(a.se, b.se);
    }
  }
  return {ok, d.str()};
}

Outcome c10() {
  scaling::MomentDualityConfig cfg;
  cfg.seed = 10;
  const auto rep = scaling::mc_moment_duality(cfg);
  const auto& a = rep.estimates[0];
  const auto& b = rep.estimates[1];
  const double diff = std::abs(a.mean - b.mean), se = std::hypot(a.se, b.se);

  const std::size_t k = 40, n_max = 6;
  const auto lx = algebra::models::wf_grid_generator(k);
  const auto ly = algebra::models::kingman_block_generator(n_max);
  const auto h = algebra::models::moment_matrix(k, n_max);
  const Matrix res = lx.matrix() * h.matrix() - h.matrix() * ly.matrix().transpose();
  double dev = 0.0;
  for (Eigen::Index i = 0; i < res.rows(); ++i) {
    for (Eigen::Index j = 0; j < res.cols(); ++j) {
      const double e = algebra::models::wf_grid_truncation_error(static_cast<double>(i) / k, static_cast<std::size_t>(j + 1),
                                                                 1.0 / k);
      dev = std::max(dev, std::abs(res(i, j) - e));
    }
  }
  const bool ok = diff <= 3.0 * se && dev <= 1e-9;
  return {ok, "|E[X_t^3] - E[0.5^N_t]| = " + fmt(diff) + " <= 3 SE = " + fmt(3.0 * se) +
                  "; generator residual minus truncation error " + fmt(dev) + " <= 1e-9"};
}

Outcome c11() {
  scaling::RescalingConfig cfg;
  const auto r = scaling::rescaling_experiment(cfg);
  bool finite = true, monotone = true;
  for (const auto& row : r.rows) finite = finite && row.gap <= 3.0 * std::hypot(row.lhs.se, row.rhs.se);
  for (std::size_t i = 1; i < r.rows.size(); ++i) {
    const auto& a = r.rows[i - 1];
    const auto& b = r.rows[i];
    monotone = monotone && b.limit_gap_lhs <= a.limit_gap_lhs + 3.0 * std::hypot(a.limit_gap_lhs_se, b.limit_gap_lhs_se);
    monotone = monotone && b.limit_gap_rhs <= a.limit_gap_rhs + 3.0 * std::hypot(a.limit_gap_rhs_se, b.limit_gap_rhs_se);
  }
  // gap ~ C / N by least squares on each side.
  double sl = 0, sr = 0, sw = 0;
  for (const auto& row : r.rows) {
    const double inv = 1.0 / static_cast<double>(row.n);
    sl += row.limit_gap_lhs * inv;
    sr += row.limit_gap_rhs * inv;
    sw += inv * inv;
  }
  const auto& last = r.rows.back();
  const double inv = 1.0 / static_cast<double>(last.n);
  const bool envelope = last.limit_gap_lhs <= 3.0 * last.limit_gap_lhs_se + sl / sw * inv &&
                        last.limit_gap_rhs <= 3.0 * last.limit_gap_rhs_se + sr / sw * inv;
  std::ostringstream d;
  d << "N";
  for (const auto& row : r.rows) d << " " << row.n << ": gap " << fmt(row.gap) << " (3SE " << fmt(3 * row.se) << "), limit gaps " << fmt(row.limit_gap_lhs) << "/" << fmt(row.limit_gap_rhs) << ";";
  d << " finite " << finite << ", non-increasing " << monotone << ", envelope " << envelope << " (C " << fmt(sl / sw) << "/"
    << fmt(sr / sw) << ")";
  return {finite && monotone && envelope, d.str()};
}

Outcome c12() {
  SplitMix64 rng(1212);
  int monotone = 0, rejected = 0;
  double worst = 0.0;
  bool ok = true;
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.below(4));
    const Matrix p = trial % 2 == 0 ? random_monotone(n, rng) : random_stochastic(n, rng);
    if (monotone_oracle(p)) {
      ++monotone;
      const auto d = algebra::siegmund_dual(StochasticMatrix::from(p));
      const Matrix q = d.restricted();
      for (Eigen::Index x = 0; x < n; ++x) {
        for (Eigen::Index y = 0; y < n; ++y) {
          worst = std::max(worst, std::abs(p.row(x).tail(n - y).sum() - q.row(y).head(x + 1).sum()));
        }
      }
    } else {
      try {
        algebra::siegmund_dual(StochasticMatrix::from(p));
        ok = false;
      } catch (const ValidationError& e) {
        ok = ok && std::string(e.what()).find("witness") != std::string::npos;
        ++rejected;
      }
    }
  }
  ok = ok && worst <= 1e-12;
  return {ok, std::to_string(monotone) + " monotone (max identity error " + fmt(worst) + " <= 1e-12), " +
                  std::to_string(rejected) + " rejected with a witness"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "mechanism table and q-duality", 1e-3, c1},
      {2, "cone example, exact decomposition", 1e-2, c2},
      {3, "Q-matrix cone dual", 0.1, c3},
      {4, "diagonal and measure duality of the walk", 1e-3, c4},
      {5, "spectra of dual pairs", 1.0, c5},
      {6, "exclusion symmetry and self-duality", 5.0, c6},
      {7, "exact pathwise duality, all initial pairs", 10.0, c7},
      {8, "absorbed and reflected walks", 5.0, c8},
      {9, "exchangeable hypergeometric duality (MC)", 120.0, c9},
      {10, "Wright-Fisher and Kingman moment duality (MC)", 300.0, c10},
      {11, "rescaled duality and diffusion limit (MC)", 600.0, c11},
      {12, "Siegmund dual round trip", 1.0, c12},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.limit_seconds;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("%s criterion %2d: %s | %.4g s (limit %g s%s) | %s\n", pass ? "PASS" : "FAIL", c.id, c.title.c_str(), secs,
                c.limit_seconds, in_time ? "" : ", exceeded", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
