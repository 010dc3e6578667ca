#pragma once

// Jump-chain and diffusion simulators for the rescaled spin-system dualities:
// complete-graph count chains, their branching-annihilating limit, the
// Wright-Fisher type SDE and Kingman's block counting process.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "duality/report.hpp"

namespace duality::scaling {

/// Count chain of the voter/branching-coalescing system on N sites with
/// f^R at rate r/N and f^BA at rate b/N per ordered pair.
struct CountChainSpec {
  std::size_t n = 0;
  double r = 0.0;
  double b = 0.0;
  double horizon = 0.0;
  std::size_t k0 = 0;

  void validate() const;
};

struct CountPathPoint {
  double time;
  std::size_t count;
};

struct CountChainResult {
  std::size_t final_count = 0;
  std::size_t jumps = 0;
  std::vector<CountPathPoint> path;  // filled only on request, starts with (0, k0)
};

/// Exact Gillespie simulation of the forward count chain.
CountChainResult simulate_count_chain(const CountChainSpec& spec, std::uint64_t seed, bool keep_path = false);

/// Dual count chain (f^A at r/N, f^BA at b/N): n -> n+1 at b/N n(N-n),
/// n -> n-1 at b/N n(n-1), n -> n-2 at r/N n(n-1). spec.k0 is the start.
CountChainResult simulate_dual_count_chain(const CountChainSpec& spec, std::uint64_t seed);

struct BranchingAnnihilatingSpec {
  double beta = 0.0;
  double alpha = 0.0;
  std::size_t n0 = 0;
  double horizon = 0.0;
  std::size_t cap = 1000000;

  void validate() const;
};

struct BaResult {
  std::size_t final_count = 0;
  double absorption_time = -1.0;  // first time at 0, or -1 if not absorbed by T
  std::size_t jumps = 0;
};

/// k -> k+1 at beta k, k -> k-2 at alpha k(k-1). Throws Error once the count
/// exceeds the cap.
BaResult simulate_ba_dual(const BranchingAnnihilatingSpec& spec, std::uint64_t seed);

struct SdeSpec {
  double alpha = 0.5;
  double beta = 0.0;
  double x0 = 0.0;
  double dt = 1e-4;
  double horizon = 0.0;

  void validate() const;
};

struct SdeResult {
  double value = 0.0;
  std::size_t steps = 0;
  std::size_t clamps = 0;  // steps whose raw update left [0, 1]
  bool absorbed = false;
};

/// Euler-Maruyama for dX = beta X(1-2X) dt + sqrt(2 alpha X(1-X)) dB, clamped
/// to [0, 1] after each step. With beta = 0 a path within 1e-9 of {0, 1} is
/// absorbed there.
SdeResult simulate_wf_sde(const SdeSpec& spec, std::uint64_t seed);

struct KingmanResult {
  std::size_t final_count = 0;
  double time_to_one = -1.0;  // -1 if 1 was not reached by T
};

/// Pure death chain n -> n-1 at rate C(n, 2).
KingmanResult simulate_kingman_block(std::size_t n0, double horizon, std::uint64_t seed);

struct MomentDualityConfig {
  double x0 = 0.5;
  std::size_t n0 = 3;
  double t = 0.5;
  double dt = 1e-4;
  std::size_t replicas = 100000;
  std::uint64_t seed = 1;
};

/// E[X_t^{n0}] for the classical WF diffusion against E[x0^{N_t}] for the
/// Kingman block count; passes within 3 combined SE.
SimulationReport mc_moment_duality(const MomentDualityConfig& cfg);

/// N -> c N^e; the default schedules are r_N = alpha N and b_N = beta.
struct Schedule {
  double coefficient = 0.0;
  double exponent = 0.0;

  double at(std::size_t n) const;
};

struct RescalingConfig {
  std::vector<std::size_t> n_list{50, 100, 200, 400};
  std::string q = "-1";
  Schedule r_schedule{0.5, 1.0};
  Schedule b_schedule{1.0, 0.0};
  double x0 = 0.3;  // k0 = round(x0 N)
  std::size_t n0 = 2;
  double t = 0.5;
  double dt = 1e-4;
  std::size_t replicas = 20000;
  std::uint64_t seed = 1;
  std::size_t cap = 1000000;
};

struct ConvergenceRow {
  std::size_t n = 0;
  std::size_t k0 = 0;
  Estimate lhs;  // E[Hhat(X_t, n0)]
  Estimate rhs;  // E[Hhat(k0, Y_t)]
  double gap = 0.0;
  double se = 0.0;
  double limit_gap_lhs = 0.0;  // |lhs - limit lhs|
  double limit_gap_lhs_se = 0.0;
  double limit_gap_rhs = 0.0;  // |rhs - limit rhs|
  double limit_gap_rhs_se = 0.0;
};

struct RescalingResult {
  std::vector<ConvergenceRow> rows;
  Estimate limit_lhs;  // E[(1+(q-1)X_t)^{n0}] from the SDE
  Estimate limit_rhs;  // E[(1+(q-1)x0)^{n_t}] from the BA dual
  double alpha = 0.0;
  double beta = 0.0;
  double fitted_c_lhs = 0.0;
  double fitted_c_rhs = 0.0;
  std::size_t sde_clamps = 0;
  std::size_t sde_steps = 0;
  SimulationReport report;

  /// Columns N,lhs,rhs,gap,se,limit_lhs,limit_rhs.
  std::string table_csv() const;
};

/// Finite-N hypergeometric duality on both sides, and convergence of the
/// finite-N estimates to the limiting SDE / branching-annihilating pair.
/// Refuses (ValidationError naming the hypothesis) schedules outside the
/// limit regime.
RescalingResult rescaling_experiment(const RescalingConfig& cfg);

struct MonotoneLimitConfig {
  double x0 = 0.2;
  double x0_prime = 0.6;
  std::size_t n0 = 3;
  std::size_t n0_prime = 5;
  double t = 0.5;
  double dt = 1e-4;
  std::vector<double> z_grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::size_t replicas = 20000;
  std::uint64_t seed = 1;
};

/// q = 0 limit pair: empirical stochastic monotonicity of the WF diffusion
/// (x0 <= x0') on the z-grid and of the Kingman block count (n0 <= n0').
SimulationReport monotone_limit_check(const MonotoneLimitConfig& cfg);

}  // namespace duality::scaling
