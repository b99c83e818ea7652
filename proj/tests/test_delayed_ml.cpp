#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "fsnde/delayed_ml.hpp"
#include "fsnde/quadrature.hpp"

using namespace fsnde;

namespace {

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m(0, 0) = a;
  m(0, 1) = b;
  m(1, 0) = c;
  m(1, 1) = d;
  return m;
}

// matrices of the worked example in the paper family
MatrixTriple example_matrices() {
  return MatrixTriple(mat2(-1, 2, 0, 1), mat2(2, 4, 1, 0), mat2(3, 0.5, 0, -2));
}

double mat_dist(const Matrix& x, const Matrix& y) { return frobenius_norm(x - y); }

// independent oracle: E_{l,nu}(A t^l) as a direct matrix power series with
// libm tgamma
Matrix ml_matrix_oracle(const Matrix& a, double lambda, double nu, double t) {
  const int n = a.rows;
  Matrix sum = Matrix::zeros(n, n);
  Matrix p = Matrix::identity(n);
  for (int k = 0; k < 300; ++k) {
    const double arg = k * lambda + nu;
    double rg;
    if (arg <= 0.0 && arg == std::floor(arg)) {
      rg = 0.0;
    } else {
      rg = 1.0 / std::tgamma(arg);
    }
    const double w = (t > 0.0) ? std::pow(t, k * lambda + nu - 1.0) : (k * lambda + nu - 1.0 == 0.0 ? 1.0 : 0.0);
    sum += p * (rg * w);
    p = p * a;
    if (frobenius_norm(p) * std::pow(t, (k + 1) * lambda + nu - 1.0) < 1e-18 && k > 4) break;
  }
  return sum;
}

}  // namespace

TEST_CASE("QTable pinned values and boundaries") {
  const MatrixTriple m = example_matrices();
  QTable q = build_q_table(m, 4, 3, 3);

  CHECK(mat_dist(q.q(1, 0, 0), Matrix::identity(2)) == 0.0);
  CHECK(mat_dist(q.q(2, 0, 0), m.a0) == 0.0);
  CHECK(mat_dist(q.q(2, 1, 0), m.a1) == 0.0);
  // within-level neutral chain: Q_1(0, m2) = A2^m2
  CHECK(mat_dist(q.q(1, 0, 1), m.a2) == 0.0);
  CHECK(mat_dist(q.q(1, 0, 2), m.a2 * m.a2) == 0.0);
  CHECK(mat_dist(q.q(1, 1, 0), Matrix::zeros(2, 2)) == 0.0);
  CHECK(mat_dist(q.q(1, 2, 1), Matrix::zeros(2, 2)) == 0.0);
  // one recursion step with both routes active
  CHECK(mat_dist(q.q(2, 0, 1), m.a0 * m.a2 + m.a2 * m.a0) == 0.0);
  // out-of-range indices read as zero
  CHECK(mat_dist(q.q(0, 0, 0), Matrix::zeros(2, 2)) == 0.0);
  CHECK(mat_dist(q.q(2, -1, 0), Matrix::zeros(2, 2)) == 0.0);

  CHECK_THROWS_AS(MatrixTriple(Matrix::identity(2), Matrix::identity(3), Matrix::identity(2)),
                  DimensionMismatch);
}

TEST_CASE("recursion satisfies the displayed three-term relation") {
  const MatrixTriple m = example_matrices();
  QTable q = build_q_table(m, 5, 3, 3);
  for (int level = 2; level <= 5; ++level)
    for (int m1 = 0; m1 <= 3; ++m1)
      for (int m2 = 0; m2 <= 3; ++m2) {
        Matrix expect = m.a0 * q.q(level - 1, m1, m2);
        expect += m.a1 * q.q(level - 1, m1 - 1, m2);
        expect += m.a2 * q.q(level, m1, m2 - 1);
        CHECK(mat_dist(q.q(level, m1, m2), expect) < 1e-12 * (1.0 + frobenius_norm(expect)));
      }
}

TEST_CASE("dml_eval piecewise definition at and below zero") {
  const MatrixTriple m = example_matrices();
  const DelayPair d(1.0, 0.5);
  CHECK(mat_dist(dml_eval(m, d, {0.5, 1.0, -0.25}), Matrix::zeros(2, 2)) == 0.0);
  CHECK(mat_dist(dml_eval(m, d, {0.5, 1.0, 0.0}), Matrix::identity(2)) == 0.0);
  CHECK(mat_dist(dml_eval(m, d, {0.5, 0.5, -0.5}), Matrix::zeros(2, 2)) == 0.0);
}

TEST_CASE("single-delay-free collapse matches matrix power series") {
  const Matrix a0 = mat2(-0.8, 0.4, 0.2, 0.6);
  const MatrixTriple m(a0, Matrix::zeros(2, 2), Matrix::zeros(2, 2));
  const DelayPair d(1.0, 0.5);
  DmlSeries s(m, d, 0.6);
  // A1 = A2 = 0: collapse holds for every t
  for (double t : {0.1, 0.45, 1.2, 2.7}) {
    for (double nu : {1.0, 0.6}) {
      const Matrix got = s.eval(nu, t, {1e-14, 1e-300, 2000});
      const Matrix want = ml_matrix_oracle(a0, 0.6, nu, t);
      CHECK(mat_dist(got, want) < 1e-8);
    }
  }
}

TEST_CASE("general triple collapses below the first lattice point") {
  const MatrixTriple m = example_matrices();
  const DelayPair d(1.0, 0.5);
  DmlSeries s(m, d, 0.5);
  for (double t : {0.05, 0.2, 0.45}) {
    const Matrix got = s.eval(1.0, t, {1e-14, 1e-300, 2000});
    const Matrix want = ml_matrix_oracle(m.a0, 0.5, 1.0, t);
    CHECK(mat_dist(got, want) < 1e-8 * (1.0 + frobenius_norm(want)));
  }
}

TEST_CASE("all-zero matrices, nu = 1: identity for t > 0") {
  const MatrixTriple m(Matrix::zeros(2, 2), Matrix::zeros(2, 2), Matrix::zeros(2, 2));
  const DelayPair d(0.7, 0.3);
  DmlSeries s(m, d, 0.4);
  for (double t : {0.1, 1.0, 5.0})
    CHECK(mat_dist(s.eval(1.0, t), Matrix::identity(2)) == 0.0);
}

TEST_CASE("norm majorant dominates the operator norm (Lemma-type bound)") {
  const MatrixTriple m = example_matrices();
  const DelayPair d(1.0, 0.5);
  DmlSeries s(m, d, 0.5);
  TruncationPolicy pol{1e-12, 1e-300, 4000};
  for (int i = 1; i <= 200; ++i) {
    const double t = 2.0 * i / 200.0;
    for (double nu : {1.0, 0.5}) {
      const double lhs = op2_norm(s.eval(nu, t, pol));
      const double rhs = s.majorant(nu, t, pol);
      CHECK(lhs <= rhs * (1.0 + 1e-9) + 1e-12);
    }
  }
  CHECK(s.majorant(1.0, 0.0) == 1.0);
}

TEST_CASE("majorant collapse: A1 = A2 = 0 gives scalar ML series") {
  const Matrix a0 = mat2(0.5, 0.1, 0.0, 0.3);
  const MatrixTriple m(a0, Matrix::zeros(2, 2), Matrix::zeros(2, 2));
  DmlSeries s(m, DelayPair(1.0, 1.0), 0.7);
  const double na = op2_norm(a0);
  for (double t : {0.3, 1.0, 2.5}) {
    // E_{l,1}(|A0| t^l) as scalar series
    double oracle = 0.0;
    for (int k = 0; k < 200; ++k) oracle += std::pow(na, k) * std::pow(t, 0.7 * k) / std::tgamma(0.7 * k + 1.0);
    CHECK(s.majorant(1.0, t) == Catch::Approx(oracle).epsilon(1e-9));
  }
}

TEST_CASE("truncation certificate: refining the plan moves the value less than the bound") {
  const MatrixTriple m = example_matrices();
  const DelayPair d(1.0, 0.5);
  DmlSeries s(m, d, 0.5);
  TruncationPolicy coarse{1e-5, 1e-300, 4000};
  TruncationPolicy fine{1e-14, 1e-300, 8000};
  for (double t : {0.4, 1.1, 1.9}) {
    const auto [v1, bound] = s.eval_with_bound(1.0, t, coarse);
    const Matrix v2 = s.eval(1.0, t, fine);
    CHECK(frobenius_norm(v1 - v2) <= 2.0 * bound + 1e-10);
  }
}

TEST_CASE("panel integral matches analytic antiderivative in the scalar case") {
  Matrix a(1, 1);
  a(0, 0) = 0.4;
  const MatrixTriple m(a, Matrix::zeros(1, 1), Matrix::zeros(1, 1));
  DmlSeries s(m, DelayPair(10.0, 10.0), 0.6);
  // int_0^b E_{l,l}(u) du = sum_k a^k b^{kl+l} / ((kl+l) Gamma(kl+l))
  for (double b : {0.05, 0.3, 0.8}) {
    double oracle = 0.0;
    for (int k = 0; k < 100; ++k) {
      const double e = 0.6 * k + 0.6;
      oracle += std::pow(0.4, k) * std::pow(b, e) / (e * std::tgamma(e));
    }
    CHECK(s.integral(0.6, 0.0, b).a[0] == Catch::Approx(oracle).epsilon(1e-11));
  }
  // interior panel against adaptive quadrature of the pointwise series
  const double q = integrate_adaptive([&](double u) { return s.eval(0.6, u).a[0]; }, 0.3, 0.55,
                                      1e-12);
  CHECK(s.integral(0.6, 0.3, 0.55).a[0] == Catch::Approx(q).epsilon(1e-9));
}

TEST_CASE("integral against piecewise-linear weight") {
  Matrix a(1, 1);
  a(0, 0) = -0.5;
  const MatrixTriple m(a, Matrix::zeros(1, 1), Matrix::zeros(1, 1));
  DmlSeries s(m, DelayPair(10.0, 10.0), 0.55);
  // v(u) = 2 - u on [0, 1], kernel nu = lambda
  std::vector<double> edges;
  std::vector<Vec> vals;
  for (int j = 0; j <= 8; ++j) {
    edges.push_back(j / 8.0);
    vals.push_back(Vec{2.0 - j / 8.0});
  }
  const double got = s.integral_against_plin(0.55, edges, vals)[0];
  const double want = integrate_adaptive(
      [&](double u) { return s.eval(0.55, std::pow(u, 1.0 / 0.55)).a[0] * (2.0 - std::pow(u, 1.0 / 0.55)) * std::pow(u, 1.0 / 0.55 - 1.0) / 0.55; },
      1e-12, 1.0, 1e-11);
  CHECK(got == Catch::Approx(want).epsilon(1e-8));
}

TEST_CASE("gram integral: exact singular panel and smooth panels") {
  // zero matrices: kernel is u^{l-1}/Gamma(l) I, closed-form Gram integrals
  const MatrixTriple m(Matrix::zeros(2, 2), Matrix::zeros(2, 2), Matrix::zeros(2, 2));
  const double lam = 0.6;
  DmlSeries s(m, DelayPair(1.0, 0.5), lam);
  const double g = 1.0 / gamma_fn(lam);
  auto closed = [&](double a, double b) {
    const double e = 2.0 * lam - 1.0;
    return g * g * (std::pow(b, e) - std::pow(a, e)) / e;
  };
  const double dt = 0.05;
  for (int d = 1; d <= 10; ++d) {
    const Matrix gm = s.gram_integral(lam, (d - 1) * dt, d * dt);
    CHECK(gm(0, 0) == Catch::Approx(closed((d - 1) * dt, d * dt)).epsilon(1e-9));
    CHECK(gm(0, 1) == Catch::Approx(0.0).margin(1e-15));
  }

  // scalar nonzero matrix: compare with substitution-based adaptive oracle
  Matrix a(1, 1);
  a(0, 0) = 0.35;
  DmlSeries s2(MatrixTriple(a, Matrix::zeros(1, 1), Matrix::zeros(1, 1)),
               DelayPair(10.0, 10.0), 0.7);
  const double e2 = 2.0 * 0.7 - 1.0;  // w = u^{2l-1} flattens the square
  auto oracle = integrate_adaptive(
      [&](double w) {
        const double u = std::pow(w, 1.0 / e2);
        const double ev = s2.eval(0.7, u).a[0];
        return ev * ev * std::pow(w, 1.0 / e2 - 1.0) / e2;
      },
      0.0, std::pow(0.1, e2), 1e-11);
  CHECK(s2.gram_integral(0.7, 0.0, 0.1)(0, 0) == Catch::Approx(oracle).epsilon(1e-8));
}

TEST_CASE("gram integral rejects non-square-integrable kernels") {
  const MatrixTriple m(Matrix::zeros(1, 1), Matrix::zeros(1, 1), Matrix::zeros(1, 1));
  DmlSeries s(m, DelayPair(1.0, 1.0), 0.4);
  CHECK_THROWS_AS(s.gram_integral(0.4, 0.0, 0.1), DomainError);
}

TEST_CASE("lemma-chain second bound: majorant below t^{nu-1} scalar ML of summed norms") {
  // coarse sanity for the full chain on a small triple
  Matrix a0 = mat2(0.2, 0.0, 0.0, 0.2), a1 = mat2(0.1, 0.0, 0.0, 0.1),
         a2 = mat2(0.05, 0.0, 0.0, 0.05);
  const MatrixTriple m(a0, a1, a2);
  DmlSeries s(m, DelayPair(0.5, 0.25), 0.6);
  for (double t : {0.3, 0.9}) {
    const double maj = s.majorant(1.0, t);
    const double lhs = op2_norm(s.eval(1.0, t));
    CHECK(lhs <= maj * (1.0 + 1e-10));
  }
}
