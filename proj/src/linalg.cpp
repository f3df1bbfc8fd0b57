#include "oudens/linalg.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

#include "oudens/errors.hpp"
#include "oudens/quadrature.hpp"

namespace oudens {

Matrix matrix_from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw DimensionError("matrix_from_rows: no rows");
  const std::size_t cols = rows[0].size();
  if (cols == 0) throw DimensionError("matrix_from_rows: empty row");
  Matrix m(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) throw DimensionError("matrix_from_rows: ragged rows");
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = rows[i][j];
  }
  require_finite(m, "matrix_from_rows");
  return m;
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw ParameterError(std::string(what) + ": non-finite entries");
}

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw ParameterError(std::string(what) + ": non-finite entries");
}

OUSystem::OUSystem(Matrix a, Matrix b) : A(std::move(a)), B(std::move(b)) {
  if (A.rows() != A.cols()) throw DimensionError("OUSystem: A must be square");
  if (A.rows() < 1) throw DimensionError("OUSystem: state dimension must be >= 1");
  if (B.rows() != A.rows()) throw DimensionError("OUSystem: B must have n rows");
  if (B.cols() < 1) throw DimensionError("OUSystem: noise dimension must be >= 1");
  require_finite(A, "OUSystem A");
  require_finite(B, "OUSystem B");
}

Matrix mat_exp(const Matrix& m, double s) {
  if (m.rows() != m.cols()) throw DimensionError("mat_exp: matrix must be square");
  if (!std::isfinite(s)) throw ParameterError("mat_exp: scale must be finite");
  require_finite(m, "mat_exp");
  return (s * m).exp();
}

Vector expm_action(const Matrix& a, double s, Vector v) {
  if (a.rows() != a.cols() || a.rows() != v.size())
    throw DimensionError("expm_action: shape mismatch");
  if (s == 0.0) return v;
  const double norm = std::abs(s) * a.cwiseAbs().rowwise().sum().maxCoeff();
  const int substeps = std::max(1, static_cast<int>(std::ceil(norm / 0.5)));
  const double h = s / substeps;
  for (int step = 0; step < substeps; ++step) {
    Vector term = v;
    Vector acc = v;
    // ||hA|| <= 0.5 so 20 terms is far past machine precision; the loop
    // normally exits much earlier (immediately for nilpotent A).
    for (int k = 1; k <= 20; ++k) {
      term = (h / k) * (a * term);
      acc += term;
      if (term.lpNorm<Eigen::Infinity>() <= 1e-18 * (1.0 + acc.lpNorm<Eigen::Infinity>()))
        break;
    }
    v = acc;
  }
  return v;
}

Matrix kalman_matrix(const OUSystem& sys) {
  const int n = sys.state_dim();
  const int d = sys.noise_dim();
  Matrix k(n, n * d);
  Matrix block = sys.B;
  for (int i = 0; i < n; ++i) {
    k.middleCols(i * d, d) = block;
    if (i + 1 < n) block = sys.A * block;
  }
  return k;
}

int numerical_rank(const Matrix& m, double tol) {
  if (tol <= 0) throw ParameterError("numerical_rank: tol must be > 0");
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return 0;
  const double cutoff = tol * sv(0);
  if (sv(0) == 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) ++rank;
  }
  return rank;
}

RankResult rank_condition(const OUSystem& sys, double tol) {
  const int rank = numerical_rank(kalman_matrix(sys), tol);
  return {rank, rank == sys.state_dim()};
}

Matrix controllability_gramian(const OUSystem& sys, double t, int quad_nodes) {
  if (t <= 0) throw ParameterError("controllability_gramian: t must be > 0");
  if (quad_nodes < 2) throw ParameterError("controllability_gramian: quad_nodes must be >= 2");
  const int n = sys.state_dim();
  const GaussLegendre& rule = gauss_legendre(quad_nodes);
  Matrix g = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double s = 0.5 * t * (rule.nodes[i] + 1.0);
    const Matrix eb = mat_exp(sys.A, s) * sys.B;
    g.noalias() += (0.5 * t * rule.weights[i]) * (eb * eb.transpose());
  }
  return 0.5 * (g + g.transpose());
}

double gramian_floor(const OUSystem& sys, double t, int quad_nodes) {
  const Matrix g = controllability_gramian(sys, t, quad_nodes);
  Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool onto_check(const OUSystem& sys, const std::vector<double>& times, double tol) {
  if (times.empty()) throw ParameterError("onto_check: need at least one time");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < 0) throw ParameterError("onto_check: times must be nonnegative");
    if (i > 0 && times[i] <= times[i - 1])
      throw ParameterError("onto_check: times must be strictly increasing");
  }
  const int n = sys.state_dim();
  const int d = sys.noise_dim();
  Matrix blocks(n, d * static_cast<int>(times.size()));
  for (std::size_t j = 0; j < times.size(); ++j) {
    blocks.middleCols(static_cast<int>(j) * d, d) = mat_exp(sys.A, times[j]) * sys.B;
  }
  return numerical_rank(blocks, tol) == n;
}

}  // namespace oudens
