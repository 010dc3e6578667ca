#pragma once

// Duality checks and constructions on finite state spaces.
//
// Orientation: P acts on E, Q on F, H is |E| x |F|, and duality means
// P H = H Q^T (discrete time) or L^X H = H (L^Y)^T (continuous time).

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "duality/core.hpp"

namespace duality::algebra {

/// ||P H - H Q^T||_inf on raw matrices; Q may be substochastic.
double duality_residual(const Matrix& p, const Matrix& q, const Matrix& h);

/// ||P H - H Q^T||_inf. Duality holds iff the result is <= tol.duality.
double check_duality_discrete(const StochasticMatrix& p, const StochasticMatrix& q, const DualityMatrix& h);

struct GeneratorDualityReport {
  double generator_residual = 0.0;
  std::array<double, 3> semigroup_times{0.1, 0.5, 1.0};
  std::array<double, 3> semigroup_residuals{};
  Matrix residual_matrix;  // L^X H - H (L^Y)^T
  bool pass = false;
};

GeneratorDualityReport check_duality_generators(const GeneratorMatrix& lx, const GeneratorMatrix& ly,
                                                const DualityMatrix& h, const Tolerances& tol = default_tolerances());

enum class DualStatus { exists_stochastic, exists_signed_only, none };
std::string to_string(DualStatus s);

struct DualitySolveResult {
  DualStatus status = DualStatus::none;
  std::optional<Matrix> dual;           // rows indexed by F; stochastic when status says so
  bool unique = false;                  // H has trivial right null space
  std::vector<double> column_residuals; // ||H q_y - P h_y||_inf per column y
  std::optional<std::size_t> first_failing_column;
};

DualitySolveResult solve_dual(const StochasticMatrix& p, const DualityMatrix& h,
                              const Tolerances& tol = default_tolerances());

struct InvarianceReport {
  bool invariant = false;
  std::optional<std::size_t> violating_column;
  /// Farkas certificate y over the |E| duality rows followed by the mass row:
  /// y^T [H; 1] <= 0 and y^T [P h; 1] > 0.
  std::vector<double> certificate;
  double phase1_objective = 0.0;
};

/// True iff every P h_y is a convex combination of columns of H.
InvarianceReport check_v1plus_invariance(const Matrix& p, const DualityMatrix& h,
                                         const Tolerances& tol = default_tolerances());

/// Probability vector nu with H nu = target, if one exists (within tol.lp).
std::optional<Vector> convex_representation(const Matrix& h, const Vector& target,
                                            const Tolerances& tol = default_tolerances());

struct MonotoneReport {
  bool monotone = true;
  std::optional<std::array<std::size_t, 3>> witness;  // (x, y, z): x < y but P_x(>= z) > P_y(>= z)
};

/// Stochastic monotonicity w.r.t. index order.
MonotoneReport check_monotone(const Matrix& p);

struct SiegmundDual {
  StochasticMatrix q;          // (n+1) x (n+1); last state is the absorbing cemetery
  std::vector<double> defect;  // mass routed to the cemetery, per state of E
  /// The block of q indexed by E (substochastic).
  Matrix restricted() const;
};

/// H(x, y) = 1{x >= y} on an n-point ordered set.
DualityMatrix siegmund_duality_matrix(std::size_t n);

/// Throws ValidationError naming a witness when P is not monotone.
SiegmundDual siegmund_dual(const StochasticMatrix& p);

struct SpectrumReport {
  bool pass = false;
  double max_distance = 0.0;
  std::vector<std::complex<double>> lhs;
  std::vector<std::complex<double>> rhs;
  /// Matched pairs whose distance exceeds the tolerance.
  std::vector<std::pair<std::complex<double>, std::complex<double>>> mismatches;
};

/// Bottleneck matching of eigenvalue multisets.
SpectrumReport spectrum_compare(const Matrix& p, const Matrix& q, const Tolerances& tol = default_tolerances());

struct IntertwiningReport {
  double intertwining_residual = 0.0;  // ||P T - T Q||, T = H diag(nu)
  double reversibility_p = 0.0;
  double reversibility_q = 0.0;
  bool pass = false;
};

/// P and Q may be stochastic matrices or generators. Throws ValidationError
/// naming the worst pair when mu (nu) is not reversible for P (Q).
IntertwiningReport reversible_intertwining_check(const Matrix& p, const Matrix& q, const DualityMatrix& h,
                                                 const Vector& mu, const Vector& nu,
                                                 const Tolerances& tol = default_tolerances());

enum class TensorKind { coalescing, annihilating, q };

/// Dense cap for tensor builders.
inline constexpr std::size_t kMaxTensorSites = 12;

/// 2^N x 2^N matrix with entries prod_k h(x_k, y_k), h = [[1,1],[1,q]];
/// coalescing uses q = 0 and annihilating q = -1. Bit k of a state index is site k.
DualityMatrix build_tensor_duality(TensorKind kind, std::size_t n_sites, double q = 0.0);

struct NondegeneracyReport {
  std::size_t rank = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  bool invertible = false;
  bool separating_columns = false;  // trivial right null space
  std::vector<Vector> right_null_basis;
};

/// Row reduction with partial pivoting; pivots below tol.pivot * max(1, |H|) are zero.
NondegeneracyReport nondegeneracy_check(const Matrix& h, const Tolerances& tol = default_tolerances());

struct MeasureDualityData {
  Vector mu;
  std::vector<std::size_t> support;
  DualityMatrix h;
};

/// Requires exact zeros off the diagonal.
MeasureDualityData measure_from_diagonal(const DualityMatrix& h);
/// H(x,x) = 1/mu(x) on the support, 0 elsewhere. mu must be nonnegative.
DualityMatrix diagonal_from_measure(const Vector& mu);

/// max |mu(x) P(x,y) - mu(y) Q(y,x)|.
double check_measure_duality(const Matrix& p, const Matrix& q, const Vector& mu);
/// True iff P(x, E \ T) = 0 for every x in T.
bool check_trap(const Matrix& p, const std::vector<std::size_t>& trap);

struct ResolventReport {
  double weak_duality_residual = 0.0;  // max |mu(x) LX(x,y) - mu(y) LY(y,x)|
  double residual = 0.0;               // ||exp(tLX) r - r exp(tLY)^T||
  Matrix r;                            // r(x,y) = R(x,y) / mu(y)
  bool pass = false;
};

ResolventReport resolvent_duality_check(const GeneratorMatrix& lx, const GeneratorMatrix& ly, const Vector& mu,
                                        double lambda, double t, const Tolerances& tol = default_tolerances());

/// (lambda I - L)^{-1}; throws when singular.
Matrix resolvent(const GeneratorMatrix& l, double lambda);

struct SepInstance {
  std::size_t sites = 0;
  GeneratorMatrix l;
  DualityMatrix h_subset;  // 1{A subset of B}
  StochasticMatrix lambda; // prod_k [[1/2,1/2],[0,1]]
};

SepInstance sep_instance(std::size_t sites);

struct SepReport {
  double commutation_residual = 0.0;  // ||L Lambda - Lambda L||
  double self_duality_residual = 0.0; // ||L H - H L^T||
  bool pass = false;
};

SepReport sep_symmetry_check(std::size_t sites);

namespace models {

/// Simple random walk on {0,...,L+1} absorbed at both ends.
StochasticMatrix absorbed_srw(std::size_t interior);
/// Substochastic walk on {1,...,L} killed at the boundary (raw matrix).
Matrix killed_srw(std::size_t interior);
/// Voter-model count chain on {0..N}: k -> k+-1 at rate rate*k(N-k).
GeneratorMatrix voter_count_generator(std::size_t n, double rate = 1.0);
/// Coalescing-walk count chain on {0..N}: n -> n-1 at rate rate*n(n-1).
GeneratorMatrix coalescing_count_generator(std::size_t n, double rate = 1.0);
/// Hyp(N,a,b)(0) = C(N-a, b) / C(N, b), indexed a, b in {0..N}.
DualityMatrix hypergeometric_matrix(std::size_t n);
/// Birth-death grid chain on {0, 1/K, ..., 1} approximating 1/2 x(1-x) f''.
GeneratorMatrix wf_grid_generator(std::size_t k);
/// Kingman block-counting chain on {1..n_max}: n -> n-1 at rate C(n,2).
GeneratorMatrix kingman_block_generator(std::size_t n_max);
/// H(x_i, n) = x_i^n with x_i = i/K, n = 1..n_max.
DualityMatrix moment_matrix(std::size_t k, std::size_t n_max);
/// Closed-form generator residual of the grid/Kingman pair at (x, n):
/// 1/2 x(1-x) sum_{m>=2} 2 C(n,2m) h^{2m-2} x^{n-2m}.
double wf_grid_truncation_error(double x, std::size_t n, double h);

}  // namespace models

}  // namespace duality::algebra
