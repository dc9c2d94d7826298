#include "asg1/numerics.hpp"

#include "doctest.h"

#include <Eigen/SVD>

#include <cmath>
#include <random>

using namespace asg1;

namespace {

// Independent oracle: explicit pseudoinverse from a full Jacobi SVD.
Matrix pinv(const Matrix& M, double tol = 1e-12) {
    Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    Matrix inv_s = Matrix::Zero(M.cols(), M.rows());
    const double cutoff = sv.size() > 0 ? tol * sv(0) : 0.0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cutoff) inv_s(i, i) = 1.0 / sv(i);
    return svd.matrixV() * inv_s * svd.matrixU().transpose();
}

double integrate(const QuadratureRule& r, const std::function<double(double)>& f) {
    double acc = 0.0;
    for (size_t i = 0; i < r.nodes.size(); ++i) acc += r.weights[i] * f(r.nodes[i]);
    return acc;
}

}  // namespace

TEST_CASE("gauss_legendre basic rules") {
    auto r1 = gauss_legendre(1, 0.0, 1.0);
    CHECK(r1.nodes.size() == 1);
    CHECK(r1.nodes[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(r1.weights[0] == doctest::Approx(1.0).epsilon(1e-15));

    auto r2 = gauss_legendre(2, -1.0, 1.0);
    const double q = 1.0 / std::sqrt(3.0);
    CHECK(r2.nodes[0] == doctest::Approx(-q).epsilon(1e-14));
    CHECK(r2.nodes[1] == doctest::Approx(q).epsilon(1e-14));
    CHECK(r2.weights[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(r2.weights[1] == doctest::Approx(1.0).epsilon(1e-14));

    auto r2u = gauss_legendre(2, 0.0, 1.0);
    CHECK(integrate(r2u, [](double x) { return x * x * x; }) ==
          doctest::Approx(0.25).epsilon(1e-14));

    CHECK_THROWS_AS(gauss_legendre(0, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("gauss_legendre exactness through degree 2q-1") {
    for (int q = 1; q <= 12; ++q) {
        auto r = gauss_legendre(q, 0.25, 1.75);
        double wsum = 0.0;
        for (double w : r.weights) {
            CHECK(w > 0.0);
            wsum += w;
        }
        CHECK(wsum == doctest::Approx(1.5).epsilon(1e-14));
        for (int m = 0; m <= 2 * q - 1; ++m) {
            const double exact =
                (std::pow(1.75, m + 1) - std::pow(0.25, m + 1)) / (m + 1);
            const double got = integrate(r, [m](double x) { return std::pow(x, m); });
            CHECK(std::abs(got - exact) <= 1e-13 * std::max(1.0, std::abs(exact)));
        }
    }
}

TEST_CASE("solve_saddle trivial cases") {
    QuadraticProgram qp;
    qp.H = Matrix::Identity(2, 2);
    qp.c = Vector::Zero(2);
    qp.A = Matrix(0, 2);
    qp.b = Vector(0);
    auto sol = solve_saddle(qp);
    CHECK(sol.x.norm() == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(sol.mult.size() == 0);

    // min ||x||^2 s.t. x1 + x2 = 1
    qp.H = 2.0 * Matrix::Identity(2, 2);
    qp.A = Matrix(1, 2);
    qp.A << 1.0, 1.0;
    qp.b = Vector::Constant(1, 1.0);
    sol = solve_saddle(qp);
    CHECK(sol.x(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(sol.x(1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("solve_saddle against bordered pseudoinverse oracle") {
    std::mt19937 rng(20240811);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 6, m = 2;
        Matrix B(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) B(i, j) = dist(rng);
        Matrix H = B.transpose() * B + 0.5 * Matrix::Identity(n, n);
        Matrix A(m, n);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) A(i, j) = dist(rng);
        Vector x0(n), c(n);
        for (int j = 0; j < n; ++j) {
            x0(j) = dist(rng);
            c(j) = dist(rng);
        }
        Vector b = A * x0;  // consistent by construction

        QuadraticProgram qp{H, c, A, b};
        auto sol = solve_saddle(qp);

        Matrix K(n + m, n + m);
        K.setZero();
        K.topLeftCorner(n, n) = H;
        K.topRightCorner(n, m) = A.transpose();
        K.bottomLeftCorner(m, n) = A;
        Vector rhs(n + m);
        rhs.head(n) = -c;
        rhs.tail(m) = b;
        Vector z = pinv(K) * rhs;
        CHECK((sol.x - z.head(n)).norm() <= 1e-10 * (1.0 + z.head(n).norm()));

        // KKT residuals and stationarity on the nullspace of A.
        CHECK((A * sol.x - b).norm() <= 1e-9 * (1.0 + b.norm()));
        const Vector grad = H * sol.x + c;
        const Matrix P = Matrix::Identity(n, n) - pinv(A) * A;  // projector onto ker A
        CHECK((P * grad).norm() <= 1e-9 * (1.0 + grad.norm()));
    }
}

TEST_CASE("solve_saddle infeasible constraints") {
    QuadraticProgram qp;
    qp.H = Matrix::Identity(2, 2);
    qp.c = Vector::Zero(2);
    qp.A = Matrix(2, 2);
    qp.A << 1.0, 0.0, 1.0, 0.0;
    qp.b = Vector(2);
    qp.b << 0.0, 1.0;
    CHECK_THROWS_AS(solve_saddle(qp), InfeasibleError);
    try {
        solve_saddle(qp);
    } catch (const InfeasibleError& e) {
        CHECK(e.residual() > 0.1);
    }
}

TEST_CASE("lsq_min_norm cases and SVD oracle") {
    Matrix I3 = Matrix::Identity(3, 3);
    Vector b(3);
    b << 1.0, -2.0, 0.5;
    CHECK((lsq_min_norm(I3, b) - b).norm() <= 1e-14);

    Matrix A(1, 2);
    A << 1.0, 1.0;
    Vector b1 = Vector::Constant(1, 2.0);
    Vector x = lsq_min_norm(A, b1);
    CHECK(x(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(x(1) == doctest::Approx(1.0).epsilon(1e-12));

    std::mt19937 rng(7);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        Matrix M(5, 3);
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 3; ++j) M(i, j) = dist(rng);
        M.col(2) = M.col(0) - 2.0 * M.col(1);  // rank deficient
        Vector rhs(5);
        for (int i = 0; i < 5; ++i) rhs(i) = dist(rng);
        const Vector got = lsq_min_norm(M, rhs);
        const Vector want = pinv(M) * rhs;
        CHECK((got - want).norm() <= 1e-11 * (1.0 + want.norm()));
    }
}

TEST_CASE("solve_saddle rejects asymmetric H") {
    QuadraticProgram qp;
    qp.H = Matrix(2, 2);
    qp.H << 1.0, 0.5, -0.5, 1.0;
    qp.c = Vector::Zero(2);
    qp.A = Matrix(0, 2);
    qp.b = Vector(0);
    CHECK_THROWS_AS(solve_saddle(qp), std::invalid_argument);
}
