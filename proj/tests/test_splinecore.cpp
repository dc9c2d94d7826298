#include "asg1/splinespace.hpp"

#include "doctest.h"

#include <cmath>
#include <random>

using namespace asg1;

TEST_CASE("dimension formulas") {
    CHECK(SplineSpace1D(3, 1, 2).dim() == 8);
    CHECK(SplineSpace1D(4, 1, 2).dim() == 11);
    CHECK(SplineSpace1D(5, 1, 0).dim() == 6);
    for (int p = 3; p <= 5; ++p)
        for (int r = 1; r <= p - 2; ++r)
            for (int k = 0; k <= 8; ++k) {
                SplineSpace1D s(p, r, k);
                CHECK(s.dim() == p + 1 + k * (p - r));
                auto [trace, trans] = s.companion_spaces();
                CHECK(trace.dim() == p + 1 + k * (p - r - 1));
                CHECK(trans.dim() == p + k * (p - r - 1));
            }
    CHECK_THROWS_AS(SplineSpace1D(3, 2, 1).companion_spaces(), std::invalid_argument);
}

TEST_CASE("basis partition of unity and endpoint values") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (auto [p, r, k] : {std::array<int, 3>{3, 1, 2}, {4, 1, 2}, {5, 3, 4}, {4, 2, 0}}) {
        SplineSpace1D s(p, r, k);
        for (int trial = 0; trial < 200; ++trial) {
            const double xi = uni(rng);
            const Vector v = s.eval_all(xi, 0);
            for (int j = 0; j < s.dim(); ++j) CHECK(v(j) >= -1e-15);
            CHECK(v.sum() == doctest::Approx(1.0).epsilon(1e-13));
        }
        Vector at0 = s.eval_all(0.0, 0);
        CHECK(at0(0) == doctest::Approx(1.0));
        CHECK(at0.tail(s.dim() - 1).cwiseAbs().maxCoeff() <= 1e-15);
        Vector at1 = s.eval_all(1.0, 0);
        CHECK(at1(s.dim() - 1) == doctest::Approx(1.0));
    }
}

TEST_CASE("basis derivatives match finite differences") {
    SplineSpace1D s(4, 1, 3);
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> uni(0.05, 0.95);
    const double h = 1e-6;
    for (int trial = 0; trial < 20; ++trial) {
        const double xi = uni(rng);
        const Vector d1 = s.eval_all(xi, 1);
        const Vector fd = (s.eval_all(xi + h, 0) - s.eval_all(xi - h, 0)) / (2.0 * h);
        CHECK((d1 - fd).norm() <= 1e-6 * (1.0 + d1.norm()));
    }
}

TEST_CASE("greville abscissae") {
    SplineSpace1D s(3, 2, 1);
    const auto g = s.greville();
    REQUIRE(g.size() == 5);
    const double want[5] = {0.0, 1.0 / 6.0, 0.5, 5.0 / 6.0, 1.0};
    for (int i = 0; i < 5; ++i) CHECK(g[static_cast<size_t>(i)] == doctest::Approx(want[i]).epsilon(1e-15));

    SplineSpace1D s2(4, 1, 2);
    const auto g2 = s2.greville();
    REQUIRE(static_cast<int>(g2.size()) == 11);
    CHECK(g2.front() == 0.0);
    CHECK(g2.back() == 1.0);
    for (size_t i = 0; i + 1 < g2.size(); ++i) CHECK(g2[i] < g2[i + 1]);
    for (size_t i = 0; i < g2.size(); ++i)
        CHECK(g2[i] + g2[g2.size() - 1 - i] == doctest::Approx(1.0).epsilon(1e-14));

    // Linear precision: sum_j greville_j N_j(xi) = xi.
    for (double xi : {0.0, 0.123, 0.5, 0.77, 1.0}) {
        const Vector v = s2.eval_all(xi, 0);
        double acc = 0.0;
        for (int j = 0; j < s2.dim(); ++j) acc += g2[static_cast<size_t>(j)] * v(j);
        CHECK(acc == doctest::Approx(xi).epsilon(1e-14));
    }
}

namespace {

SplinePatch identity_patch(const TensorSplineSpace& space) {
    const auto g = space.s.greville();
    const int n = space.s.dim();
    Matrix c(n * n, 3);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            c.row(space.index(i, j)) =
                Vec3(g[static_cast<size_t>(i)], g[static_cast<size_t>(j)], 0.0).transpose();
    return SplinePatch(space, c);
}

}  // namespace

TEST_CASE("patch evaluation: identity map, corner, mixed derivative") {
    TensorSplineSpace space((SplineSpace1D(4, 1, 2)));
    SplinePatch patch = identity_patch(space);
    for (double u : {0.0, 0.3, 1.0})
        for (double v : {0.1, 0.9}) {
            const Vec3 x = patch.eval3(u, v, 0, 0);
            CHECK(x(0) == doctest::Approx(u).epsilon(1e-14));
            CHECK(x(1) == doctest::Approx(v).epsilon(1e-14));
            const Vec3 du = patch.eval3(u, v, 1, 0);
            CHECK(du(0) == doctest::Approx(1.0).epsilon(1e-13));
            CHECK(std::abs(du(1)) <= 1e-13);
        }
    CHECK((patch.eval3(0.0, 0.0, 0, 0) -
           Vec3(patch.coefs()(0, 0), patch.coefs()(0, 1), patch.coefs()(0, 2)))
              .norm() <= 1e-15);

    // Mixed derivative vs central differences on a curved patch.
    Matrix c = patch.coefs();
    std::mt19937 rng(5);
    std::normal_distribution<double> dist(0.0, 0.05);
    for (Eigen::Index i = 0; i < c.rows(); ++i) c(i, 2) = dist(rng);
    SplinePatch curved(space, c);
    const double h = 1e-4;
    for (auto [u, v] : {std::pair<double, double>{0.37, 0.61}, {0.82, 0.18}}) {
        const Vec3 mixed = curved.eval3(u, v, 1, 1);
        const Vec3 fd = (curved.eval3(u + h, v + h, 0, 0) - curved.eval3(u + h, v - h, 0, 0) -
                         curved.eval3(u - h, v + h, 0, 0) + curved.eval3(u - h, v - h, 0, 0)) /
                        (4.0 * h * h);
        CHECK((mixed - fd).norm() <= 1e-5 * (1.0 + mixed.norm()));
    }
}

TEST_CASE("1d L2 projection") {
    SplineSpace1D s(4, 1, 3);
    // Member reproduction.
    Vector ref = Vector::LinSpaced(s.dim(), -1.0, 2.0);
    for (int j = 0; j < s.dim(); ++j) ref(j) += 0.3 * std::sin(3.0 * j);
    auto member = [&](double x) {
        const Vector v = s.eval_all(x, 0);
        return ref.dot(v);
    };
    Vector proj = l2_project_1d(s, member, s.degree() + 1);
    CHECK((proj - ref).norm() <= 1e-11 * ref.norm());

    // Constant 1 -> all coefficients 1.
    Vector ones = l2_project_1d(s, [](double) { return 1.0; }, s.degree() + 1);
    CHECK((ones - Vector::Ones(s.dim())).cwiseAbs().maxCoeff() <= 1e-12);

    // sin(pi x), p=4, k=8: small error, decreasing ~2^5 under dyadic refinement.
    auto sinf = [](double x) { return std::sin(M_PI * x); };
    auto l2err = [&](const SplineSpace1D& sp) {
        Vector co = l2_project_1d(sp, sinf, sp.degree() + 2);
        double acc = 0.0;
        const int m = 2000;
        for (int i = 0; i <= m; ++i) {
            const double x = static_cast<double>(i) / m;
            const double d = co.dot(sp.eval_all(x, 0)) - sinf(x);
            acc += d * d / (m + 1);
        }
        return std::sqrt(acc);
    };
    SplineSpace1D s8(4, 1, 8);
    const double e8 = l2err(s8);
    CHECK(e8 < 1e-6);
    const double e17 = l2err(s8.refine_dyadic(1));
    CHECK(e8 / e17 > 20.0);  // ~2^5
}

TEST_CASE("dyadic refinement") {
    SplineSpace1D s(4, 1, 2);
    CHECK(s.refine_dyadic(1).inner_knots() == 5);
    CHECK(s.refine_dyadic(0).inner_knots() == 2);
    CHECK(s.refine_dyadic(2).inner_knots() == 11);

    TensorSplineSpace space(s);
    std::mt19937 rng(99);
    std::normal_distribution<double> dist(0.0, 1.0);
    Matrix c(space.dim(), 3);
    for (Eigen::Index i = 0; i < c.rows(); ++i)
        for (int j = 0; j < 3; ++j) c(i, j) = dist(rng);
    SplinePatch patch(space, c);
    SplinePatch fine = patch.refine_dyadic(2);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const double u = uni(rng), v = uni(rng);
        CHECK((patch.eval3(u, v, 0, 0) - fine.eval3(u, v, 0, 0)).norm() <= 1e-12);
    }

    // Embedding into the lower-regularity space of equal degree.
    SplineSpace1D trace(4, 2, 3), full(4, 1, 3);
    const Matrix E = embedding_matrix(trace, full);
    Vector w = Vector::LinSpaced(trace.dim(), 0.0, 1.0).array().sin();
    for (double x : {0.0, 0.21, 0.68, 1.0}) {
        const double a = w.dot(trace.eval_all(x, 0));
        const double b = (E * w).dot(full.eval_all(x, 0));
        CHECK(a == doctest::Approx(b).epsilon(1e-13));
    }
}

TEST_CASE("greville collocation is unisolvent") {
    SplineSpace1D s(4, 1, 2);
    const auto g = s.greville();
    const Matrix C = collocation_matrix(s, g);
    Eigen::FullPivLU<Matrix> lu(C);
    CHECK(lu.isInvertible());
}
