#include "oudens/linalg.hpp"

#include <cmath>

#include "doctest.h"
#include "oudens/errors.hpp"
#include "oudens/rng.hpp"

using namespace oudens;

namespace {

Matrix kolmogorov_a() {
  Matrix a(2, 2);
  a << 0, 0, 1, 0;
  return a;
}

Matrix kolmogorov_b() {
  Matrix b(2, 1);
  b << 1, 0;
  return b;
}

OUSystem kolmogorov_system() { return OUSystem(kolmogorov_a(), kolmogorov_b()); }

Matrix random_matrix(int rows, int cols, RngStream& rng, double scale) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = scale * (2.0 * rng.uniform01() - 1.0);
  return m;
}

// exact rank of a 2 x m matrix from its 2x2 minors
int brute_rank_2xm(const Matrix& m) {
  bool nonzero = false;
  for (int i = 0; i < m.cols(); ++i)
    for (int j = i + 1; j < m.cols(); ++j) {
      if (std::abs(m(0, i) * m(1, j) - m(0, j) * m(1, i)) > 1e-12) return 2;
    }
  for (int i = 0; i < m.cols(); ++i)
    if (m(0, i) != 0.0 || m(1, i) != 0.0) nonzero = true;
  return nonzero ? 1 : 0;
}

}  // namespace

TEST_CASE("mat_exp at s = 0 is the identity") {
  RngStream rng(11);
  const Matrix m = random_matrix(3, 3, rng, 2.0);
  CHECK((mat_exp(m, 0.0) - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mat_exp of the nilpotent Kolmogorov drift is I + sA") {
  const Matrix a = kolmogorov_a();
  for (double s : {0.25, 1.0, -3.0}) {
    const Matrix expected = Matrix::Identity(2, 2) + s * a;
    CHECK((mat_exp(a, s) - expected).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("mat_exp 1x1 matches the scalar exponential") {
  Matrix m(1, 1);
  m << -1.0;
  CHECK(mat_exp(m, 1.0)(0, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
}

TEST_CASE("mat_exp rejects non-square input") {
  CHECK_THROWS_AS(mat_exp(Matrix::Zero(2, 3), 1.0), DimensionError);
}

TEST_CASE("mat_exp semigroup property on random matrices") {
  RngStream rng(42);
  for (int trial = 0; trial < 40; ++trial) {
    Matrix m = random_matrix(4, 4, rng, 1.0);
    const double norm = m.norm();
    if (norm > 2.0) m *= 2.0 / norm;
    const double s = 2.0 * rng.uniform01();
    const double u = 2.0 * rng.uniform01();
    const Matrix lhs = mat_exp(m, s + u);
    const Matrix rhs = mat_exp(m, s) * mat_exp(m, u);
    CHECK((lhs - rhs).norm() < 1e-10);
  }
}

TEST_CASE("expm_action agrees with the dense exponential") {
  RngStream rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix m = random_matrix(4, 4, rng, 1.5);
    Vector v = random_matrix(4, 1, rng, 1.0).col(0);
    const double s = 3.0 * rng.uniform01();
    const Vector expected = mat_exp(m, s) * v;
    const Vector got = expm_action(m, s, v);
    CHECK((expected - got).norm() < 1e-12 * (1.0 + expected.norm()));
  }
}

TEST_CASE("kalman_matrix of the Kolmogorov system is the identity") {
  const Matrix k = kalman_matrix(kolmogorov_system());
  REQUIRE(k.rows() == 2);
  REQUIRE(k.cols() == 2);
  CHECK((k - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("kalman_matrix with zero drift stacks B next to zero blocks") {
  const OUSystem sys(Matrix::Zero(2, 2), kolmogorov_b());
  const Matrix k = kalman_matrix(sys);
  CHECK(k(0, 0) == 1.0);
  CHECK(k.col(1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("kalman_matrix in one dimension is just B") {
  Matrix a(1, 1), b(1, 1);
  a << -1.0;
  b << 2.0;
  const Matrix k = kalman_matrix(OUSystem(a, b));
  REQUIRE(k.cols() == 1);
  CHECK(k(0, 0) == 2.0);
}

TEST_CASE("rank_condition") {
  SUBCASE("Kolmogorov system satisfies it") {
    const RankResult r = rank_condition(kolmogorov_system());
    CHECK(r.rank == 2);
    CHECK(r.satisfied);
  }
  SUBCASE("zero drift with thin B fails") {
    const RankResult r = rank_condition(OUSystem(Matrix::Zero(2, 2), kolmogorov_b()));
    CHECK(r.rank == 1);
    CHECK_FALSE(r.satisfied);
  }
  SUBCASE("full B succeeds regardless of A") {
    const RankResult r = rank_condition(OUSystem(Matrix::Identity(2, 2), Matrix::Identity(2, 2)));
    CHECK(r.rank == 2);
    CHECK(r.satisfied);
  }
  SUBCASE("zero B has rank zero") {
    const RankResult r = rank_condition(OUSystem(kolmogorov_a(), Matrix::Zero(2, 1)));
    CHECK(r.rank == 0);
    CHECK_FALSE(r.satisfied);
  }
  SUBCASE("nonpositive tolerance is rejected") {
    CHECK_THROWS_AS(rank_condition(kolmogorov_system(), 0.0), ParameterError);
  }
}

TEST_CASE("gramian of A = 0, B = I over [0,2] is 2I") {
  const OUSystem sys(Matrix::Zero(2, 2), Matrix::Identity(2, 2));
  const Matrix g = controllability_gramian(sys, 2.0);
  CHECK((g - 2.0 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("gramian of the Kolmogorov system at t = 1") {
  // integrand e^{sA} B B^T e^{sA^T} = [[1, s], [s, s^2]]; exact integrals
  // over [0,1] are 1, 1/2, 1/3.
  const Matrix g = controllability_gramian(kolmogorov_system(), 1.0);
  CHECK(g(0, 0) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(g(0, 1) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(g(1, 0) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(g(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
}

TEST_CASE("gramian of a scalar stable system matches the closed form") {
  Matrix a(1, 1), b(1, 1);
  a << -1.0;
  b << 1.0;
  const Matrix g = controllability_gramian(OUSystem(a, b), 1.0);
  const double expected = (1.0 - std::exp(-2.0)) / 2.0;
  CHECK(g(0, 0) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("gramian rejects t <= 0") {
  CHECK_THROWS_AS(controllability_gramian(kolmogorov_system(), 0.0), ParameterError);
}

TEST_CASE("gramian_floor") {
  SUBCASE("A = 0, B = I gives t") {
    const OUSystem sys(Matrix::Zero(2, 2), Matrix::Identity(2, 2));
    CHECK(gramian_floor(sys, 2.0) == doctest::Approx(2.0).epsilon(1e-12));
  }
  SUBCASE("rank-deficient system gives zero") {
    const OUSystem sys(Matrix::Zero(2, 2), kolmogorov_b());
    CHECK(std::abs(gramian_floor(sys, 1.0)) < 1e-12);
  }
  SUBCASE("Kolmogorov floor matches the 2x2 eigenvalue formula") {
    // for [[1, 1/2], [1/2, 1/3]]: mean +- sqrt(((a-c)/2)^2 + b^2)
    const double mean = 0.5 * (1.0 + 1.0 / 3.0);
    const double disc = std::sqrt(std::pow(0.5 * (1.0 - 1.0 / 3.0), 2) + 0.25);
    CHECK(gramian_floor(kolmogorov_system(), 1.0) ==
          doctest::Approx(mean - disc).epsilon(1e-10));
  }
}

TEST_CASE("gramian is symmetric PSD and its floor is monotone in t") {
  RngStream rng(101);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform01() * 4.0);
    const int d = 1 + static_cast<int>(rng.uniform01() * n);
    const OUSystem sys(random_matrix(n, n, rng, 1.0), random_matrix(n, d, rng, 1.0));
    const Matrix g = controllability_gramian(sys, 1.0);
    CHECK((g - g.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() > -1e-12);
    const double t1 = 0.25 + rng.uniform01();
    const double t2 = t1 + rng.uniform01();
    CHECK(gramian_floor(sys, t1) <= gramian_floor(sys, t2) + 1e-12);
  }
}

TEST_CASE("onto_check") {
  SUBCASE("Kolmogorov system at (0, 0.5, 0.7)") {
    // oracle: blocks e^{s A}B = (1, s)^T, so the stacked matrix is
    // [[1,1,1],[0,0.5,0.7]] whose exact rank is 2
    Matrix blocks(2, 3);
    blocks << 1, 1, 1, 0, 0.5, 0.7;
    REQUIRE(brute_rank_2xm(blocks) == 2);
    CHECK(onto_check(kolmogorov_system(), {0.0, 0.5, 0.7}));
  }
  SUBCASE("single time 0 reduces to rank of B") {
    CHECK_FALSE(onto_check(kolmogorov_system(), {0.0}));
  }
  SUBCASE("invertible blocks at two times") {
    const OUSystem sys(Matrix::Identity(2, 2), Matrix::Identity(2, 2));
    CHECK(onto_check(sys, {0.1, 0.2}));
  }
  SUBCASE("unsorted times are rejected") {
    CHECK_THROWS_AS(onto_check(kolmogorov_system(), {0.5, 0.2}), ParameterError);
  }
  SUBCASE("negative times are rejected") {
    CHECK_THROWS_AS(onto_check(kolmogorov_system(), {-0.1, 0.2}), ParameterError);
  }
}

TEST_CASE("rank condition implies onto over small-horizon time tuples") {
  RngStream rng(202);
  int tested = 0;
  for (int trial = 0; trial < 60 && tested < 25; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform01() * 3.0);
    const int d = 1 + static_cast<int>(rng.uniform01() * n);
    Matrix a = random_matrix(n, n, rng, 1.0);
    const double norm = a.norm();
    if (norm > 1.0) a /= norm;
    const OUSystem sys(a, random_matrix(n, d, rng, 1.0));
    if (!rank_condition(sys).satisfied) continue;
    ++tested;
    const int m = n + 1 + static_cast<int>(rng.uniform01() * 2.0);
    std::vector<double> times;
    double cur = 0.0;
    for (int i = 0; i < m; ++i) {
      cur += 0.01 + rng.uniform01() * (0.5 - cur - 0.01 * (m - i)) / (m - i);
      times.push_back(cur);
    }
    CHECK(onto_check(sys, times));
  }
  CHECK(tested >= 20);
}

TEST_CASE("rank condition is equivalent to a positive gramian floor at t = 1") {
  RngStream rng(303);
  int deficient_seen = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform01() * 4.0);
    const int d = 1 + static_cast<int>(rng.uniform01() * n);
    Matrix b = random_matrix(n, d, rng, 1.0);
    if (trial % 3 == 0) b.setZero();  // force rank failures into the fleet
    const OUSystem sys(random_matrix(n, n, rng, 1.0), b);
    const bool satisfied = rank_condition(sys).satisfied;
    const bool positive = gramian_floor(sys, 1.0) > 1e-10;
    if (!satisfied) ++deficient_seen;
    CHECK(satisfied == positive);
  }
  CHECK(deficient_seen > 0);
}

TEST_CASE("matrix_from_rows validation") {
  CHECK_THROWS_AS(matrix_from_rows({{1.0, 2.0}, {3.0}}), DimensionError);
  CHECK_THROWS_AS(matrix_from_rows({{1.0, std::nan("")}}), ParameterError);
  const Matrix m = matrix_from_rows({{1.0, 2.0}, {3.0, 4.0}});
  CHECK(m(1, 0) == 3.0);
}

TEST_CASE("OUSystem validates shapes") {
  CHECK_THROWS_AS(OUSystem(Matrix::Zero(2, 3), Matrix::Zero(2, 1)), DimensionError);
  CHECK_THROWS_AS(OUSystem(Matrix::Zero(2, 2), Matrix::Zero(3, 1)), DimensionError);
}
