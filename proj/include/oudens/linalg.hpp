#pragma once

#include <Eigen/Dense>
#include <vector>

namespace oudens {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Builds a matrix from row-major nested arrays, rejecting ragged shapes and
// non-finite entries.
Matrix matrix_from_rows(const std::vector<std::vector<double>>& rows);

void require_finite(const Matrix& m, const char* what);
void require_finite(const Vector& v, const char* what);

// The linear system dX = A X dt + B dZ: A is n x n, B is n x d. The noise
// dimension d may be smaller than the state dimension n.
struct OUSystem {
  Matrix A;
  Matrix B;

  OUSystem(Matrix a, Matrix b);

  int state_dim() const { return static_cast<int>(A.rows()); }
  int noise_dim() const { return static_cast<int>(B.cols()); }
};

// e^{sM} by scaling-and-squaring with Pade degree chosen from the norm
// (robust for defective matrices; no eigendecomposition involved).
Matrix mat_exp(const Matrix& m, double s);

// Applies e^{sA} to a vector by sub-stepped truncated Taylor series. Exact to
// machine precision; cheap when s*||A|| is small, which is the hot case in
// jump-time propagation.
Vector expm_action(const Matrix& a, double s, Vector v);

// The n x (n*d) block matrix [B, AB, ..., A^{n-1}B].
Matrix kalman_matrix(const OUSystem& sys);

struct RankResult {
  int rank;
  bool satisfied;
};

// Numerical rank of the Kalman matrix: singular values above tol times the
// largest one count. satisfied iff rank == n.
RankResult rank_condition(const OUSystem& sys, double tol = 1e-10);

int numerical_rank(const Matrix& m, double tol = 1e-10);

// int_0^t e^{sA} B B^T e^{sA^T} ds by Gauss-Legendre quadrature; symmetric PSD
// up to roundoff.
Matrix controllability_gramian(const OUSystem& sys, double t, int quad_nodes = 64);

// Smallest eigenvalue of the Gramian; positive iff the rank condition holds.
double gramian_floor(const OUSystem& sys, double t, int quad_nodes = 64);

// Whether [e^{s_1 A}B, ..., e^{s_m A}B] has full row rank for the given
// strictly increasing nonnegative times.
bool onto_check(const OUSystem& sys, const std::vector<double>& times, double tol = 1e-10);

}  // namespace oudens
