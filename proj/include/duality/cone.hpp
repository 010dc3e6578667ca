#pragma once

// Cone duality on finite state spaces: extremal columns of the convex hull of
// the columns of H, the decomposition kernel Pi, the cone dual R on the
// extremal representatives F1, the jump dual on F and a Q-matrix dual.

#include <cstddef>
#include <optional>
#include <vector>

#include "duality/core.hpp"
#include "duality/rational.hpp"

namespace duality::cone {

struct ExtremalStructure {
  std::vector<std::size_t> extremal;        // F1, ascending
  std::vector<std::size_t> representative;  // per column: lowest-index equal column
  bool simplex = false;
  std::optional<Matrix> pi;                 // |F| x |F1| when computed
};

/// Columns equal within tol are collapsed onto the lowest index; a distinct
/// column is extremal iff it is not a convex combination of the others.
ExtremalStructure extremal_columns(const Matrix& h, double tol = 1e-10);

/// Extremal columns are affinely independent.
bool simplex_test(const ExtremalStructure& s, const Matrix& h);

/// Unique convex weights of every column over the extremal columns. Rows
/// indexed by F1 are unit rows. Throws ValidationError if not a simplex.
/// reversed_order feeds the extremal columns to the LP in reverse order.
Matrix decomposition_kernel(const Matrix& h, bool reversed_order = false);

/// extremal_columns plus simplex flag plus Pi (when a simplex).
ExtremalStructure analyze(const Matrix& h);

/// |F| x |F| projection: Pi_hat(y, iota(e)) = Pi(y, e), zero elsewhere.
Matrix projection(const ExtremalStructure& s, std::size_t n_cols);

struct ExactDecomposition {
  std::vector<std::size_t> extremal;
  std::vector<std::size_t> representative;
  bool simplex = false;
  std::vector<std::vector<Rational>> pi;  // empty unless simplex
};

/// Same construction in exact rational arithmetic; h is given row-major.
ExactDecomposition decompose_exact(const std::vector<std::vector<Rational>>& h);

/// Discrete-time cone dual: R(e, .) are the weights of P e over the extremal
/// columns. Throws ValidationError naming the column when invariance fails.
Matrix cone_dual(const StochasticMatrix& p, const Matrix& h);

/// Q(y, iota(e')) = sum_e Pi(y, e) R(e, e'); zero on columns outside F1.
Matrix jump_dual(const Matrix& r, const ExtremalStructure& s, std::size_t n_cols);

/// ||Q Pi - Pi R||_inf.
double intertwining_residual(const Matrix& q, const Matrix& pi, const Matrix& r);

struct DualGenerator {
  GeneratorMatrix l_hat;
  double lambda = 0.0;
  Matrix b_pi_hat;     // B Pi_hat
  Matrix pi_hat;
  Matrix r_generator;  // F1 block: generator of the cone dual
  ExtremalStructure structure;
  double duality_residual = 0.0;  // ||L_hat H^T - H^T L^T||
  double consistency_residual = 0.0;
};

/// L_hat = B Pi_hat + lambda (Pi_hat - I) with B H^T = H^T L^T, B 1 = 0 and the
/// smallest integer lambda >= 1 that makes L_hat a Q-matrix.
DualGenerator continuous_dual_generator(const GeneratorMatrix& l, const Matrix& h,
                                        const Tolerances& tol = default_tolerances());

}  // namespace duality::cone
