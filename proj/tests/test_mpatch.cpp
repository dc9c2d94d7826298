#include "asg1/builtins.hpp"
#include "asg1/multipatch.hpp"

#include "doctest.h"

#include <cmath>
#include <random>

using namespace asg1;

namespace {

// Two unit squares sharing the y-axis edge, canonical orientation.
MultiPatchSpline two_squares() {
    TensorSplineSpace space((SplineSpace1D(1, 0, 0)));
    Matrix right(4, 3), left(4, 3);
    // F0(u,v) = (u, v);  F1(u,v) = (-v, u)
    right.row(space.index(0, 0)) = Vec3(0, 0, 0).transpose();
    right.row(space.index(1, 0)) = Vec3(1, 0, 0).transpose();
    right.row(space.index(0, 1)) = Vec3(0, 1, 0).transpose();
    right.row(space.index(1, 1)) = Vec3(1, 1, 0).transpose();
    left.row(space.index(0, 0)) = Vec3(0, 0, 0).transpose();
    left.row(space.index(1, 0)) = Vec3(0, 1, 0).transpose();
    left.row(space.index(0, 1)) = Vec3(-1, 0, 0).transpose();
    left.row(space.index(1, 1)) = Vec3(-1, 1, 0).transpose();
    std::vector<InterfaceRecord> itf{{0, 0, 1, Side::U0, Side::V0, false}};
    return canonicalize(space, {right, left}, itf, {});
}

// Three bilinear quads around one inner vertex (triangle split).
MultiPatchSpline three_patch_corner() {
    TensorSplineSpace space((SplineSpace1D(1, 0, 0)));
    const Vec3 C(0, 0, 0);
    const Vec3 V[3] = {Vec3(1, 0, 0), Vec3(-0.5, 0.8660254, 0), Vec3(-0.5, -0.8660254, 0)};
    Vec3 M[3];  // M[i] = midpoint of (V[i-1], V[i])
    for (int i = 0; i < 3; ++i) M[i] = 0.5 * (V[(i + 2) % 3] + V[i]);
    std::vector<Matrix> coefs;
    for (int i = 0; i < 3; ++i) {
        Matrix c(4, 3);
        c.row(space.index(0, 0)) = C.transpose();
        c.row(space.index(1, 0)) = M[i].transpose();
        c.row(space.index(0, 1)) = M[(i + 1) % 3].transpose();
        c.row(space.index(1, 1)) = V[i].transpose();
        coefs.push_back(c);
    }
    std::vector<InterfaceRecord> itf;
    for (int i = 0; i < 3; ++i)
        itf.push_back({i, i, (i + 1) % 3, Side::U0, Side::V0, false});
    return canonicalize(space, coefs, itf, {});
}

MultiPatchSpline single_patch(const TensorSplineSpace& space, const Matrix& coefs) {
    return canonicalize(space, {coefs}, {}, {});
}

}  // namespace

TEST_CASE("canonicalize two squares: C0 along shared edge") {
    auto mp = two_squares();
    REQUIRE(mp.topology().interfaces.size() == 1);
    const auto& itf = mp.topology().interfaces[0];
    for (int i = 0; i < 33; ++i) {
        const double xi = i / 32.0;
        const auto p1 = itf.frame[0].map_point(0.0, xi);
        const auto p2 = itf.frame[1].map_point(xi, 0.0);
        const Vec3 a = mp.eval(itf.patch[0], p1.first, p1.second);
        const Vec3 b = mp.eval(itf.patch[1], p2.first, p2.second);
        CHECK((a - b).norm() <= 1e-12);
    }
    CHECK(mp.topology().boundary.size() == 6);
    // 6 vertices: 2 on the shared edge (valency 2), 4 outer corners.
    int v1 = 0, v2 = 0;
    for (const auto& v : mp.topology().vertices) {
        if (v.valency() == 1) ++v1;
        if (v.valency() == 2) ++v2;
    }
    CHECK(v1 == 4);
    CHECK(v2 == 2);
}

TEST_CASE("canonicalize rejects non-conforming edges") {
    TensorSplineSpace space((SplineSpace1D(1, 0, 0)));
    Matrix right(4, 3), left(4, 3);
    right.row(space.index(0, 0)) = Vec3(0, 0, 0).transpose();
    right.row(space.index(1, 0)) = Vec3(1, 0, 0).transpose();
    right.row(space.index(0, 1)) = Vec3(0, 1, 0).transpose();
    right.row(space.index(1, 1)) = Vec3(1, 1, 0).transpose();
    left = right;
    left.row(space.index(0, 0)) = Vec3(1e-3, 0, 0).transpose();  // gap
    left.row(space.index(1, 0)) = Vec3(0, 1, 0).transpose();
    left.row(space.index(0, 1)) = Vec3(-1, 0, 0).transpose();
    left.row(space.index(1, 1)) = Vec3(-1, 1, 0).transpose();
    std::vector<InterfaceRecord> itf{{0, 0, 1, Side::U0, Side::V0, false}};
    CHECK_THROWS_AS(canonicalize(space, {right, left}, itf, {}), TopologyError);
}

TEST_CASE("three-patch corner has one inner vertex of valency 3") {
    auto mp = three_patch_corner();
    const auto& topo = mp.topology();
    CHECK(topo.interfaces.size() == 3);
    int inner = 0;
    for (const auto& v : topo.vertices) {
        if (!v.boundary) {
            ++inner;
            CHECK(v.valency() == 3);
            CHECK(v.interfaces.size() == 3);
        }
    }
    CHECK(inner == 1);
}

TEST_CASE("valency partition of the 2x2 grid") {
    auto in = make_builtin_input("quad_grid_2x2");
    const auto& topo = in.topology;
    CHECK(topo.num_patches == 4);
    CHECK(topo.interfaces.size() == 4);
    CHECK(topo.boundary.size() == 8);
    int nu1 = 0, nu2 = 0, nu4_inner = 0;
    for (const auto& v : topo.vertices) {
        if (v.valency() == 1) ++nu1;
        if (v.valency() == 2) ++nu2;
        if (v.valency() == 4 && !v.boundary) ++nu4_inner;
    }
    CHECK(nu1 == 4);
    CHECK(nu2 == 4);
    CHECK(nu4_inner == 1);
    CHECK(topo.vertices.size() == 9);
}

TEST_CASE("sphere6 topology is closed with valency-3 vertices") {
    auto in = make_builtin_input("sphere6");
    CHECK(in.topology.closed());
    CHECK(in.topology.interfaces.size() == 12);
    CHECK(in.topology.vertices.size() == 8);
    for (const auto& v : in.topology.vertices) {
        CHECK(v.valency() == 3);
        CHECK(!v.boundary);
    }
}

TEST_CASE("single patch decomposition") {
    TensorSplineSpace space((SplineSpace1D(3, 1, 2)));
    const auto g = space.s.greville();
    Matrix c(space.dim(), 3);
    for (int i = 0; i < space.s.dim(); ++i)
        for (int j = 0; j < space.s.dim(); ++j)
            c.row(space.index(i, j)) =
                Vec3(g[static_cast<size_t>(i)], g[static_cast<size_t>(j)], 0).transpose();
    auto mp = single_patch(space, c);
    CHECK(mp.topology().boundary.size() == 4);
    CHECK(mp.topology().vertices.size() == 4);
    for (const auto& v : mp.topology().vertices) CHECK(v.valency() == 1);
}

TEST_CASE("weighted H1 norm") {
    TensorSplineSpace space((SplineSpace1D(3, 1, 2)));
    const int n = space.s.dim();
    // Constant field.
    Matrix c = Matrix::Zero(n * n, 3);
    for (Eigen::Index i = 0; i < c.rows(); ++i) c.row(i) = Vec3(2.0, -1.0, 0.5).transpose();
    auto mp = single_patch(space, c);
    CHECK(weighted_h1_norm(mp, 0.25, 5) ==
          doctest::Approx(Vec3(2.0, -1.0, 0.5).norm()).epsilon(1e-12));

    // G = (xi1, 0, 0), sigma = 1: norm^2 = 1/3 + 1.
    const auto g = space.s.greville();
    Matrix lin = Matrix::Zero(n * n, 3);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) lin(space.index(i, j), 0) = g[static_cast<size_t>(i)];
    auto mp2 = single_patch(space, lin);
    CHECK(weighted_h1_norm(mp2, 1.0, 5) ==
          doctest::Approx(std::sqrt(1.0 / 3.0 + 1.0)).epsilon(1e-12));

    // Homogeneity and dense Riemann-sum oracle on a random field.
    std::mt19937 rng(3);
    std::normal_distribution<double> dist(0.0, 1.0);
    Matrix rc(n * n, 3);
    for (Eigen::Index i = 0; i < rc.rows(); ++i)
        for (int j = 0; j < 3; ++j) rc(i, j) = dist(rng);
    auto mpr = single_patch(space, rc);
    const double sigma = 0.37;
    const double nrm = weighted_h1_norm(mpr, sigma, 6);
    for (double scale : {-2.0, 0.5}) {
        Matrix sc = scale * rc;
        auto mps = single_patch(space, sc);
        CHECK(weighted_h1_norm(mps, sigma, 6) ==
              doctest::Approx(std::abs(scale) * nrm).epsilon(1e-12));
    }
    // Dense sampling oracle: per-span composite Simpson (the integrand is
    // smooth inside knot spans).
    auto simpson_weights = [](int m, double h) {
        std::vector<double> w(static_cast<size_t>(m + 1), 0.0);
        for (int i = 0; i + 2 <= m; i += 2) {
            w[static_cast<size_t>(i)] += h / 3.0;
            w[static_cast<size_t>(i + 1)] += 4.0 * h / 3.0;
            w[static_cast<size_t>(i + 2)] += h / 3.0;
        }
        return w;
    };
    const auto brk = space.s.breaks();
    double dense = 0.0;
    const int m = 240;
    for (size_t su = 0; su + 1 < brk.size(); ++su)
        for (size_t sv = 0; sv + 1 < brk.size(); ++sv) {
            const double hu = (brk[su + 1] - brk[su]) / m, hv = (brk[sv + 1] - brk[sv]) / m;
            const auto wu = simpson_weights(m, hu), wv = simpson_weights(m, hv);
            for (int i = 0; i <= m; ++i)
                for (int j = 0; j <= m; ++j) {
                    const double u = brk[su] + i * hu, v = brk[sv] + j * hv;
                    const auto jet = mpr.jet2(0, u, v);
                    dense += wu[static_cast<size_t>(i)] * wv[static_cast<size_t>(j)] *
                             (jet[0].squaredNorm() +
                              sigma * (jet[1].squaredNorm() + jet[2].squaredNorm()));
                }
        }
    CHECK(nrm == doctest::Approx(std::sqrt(dense)).epsilon(1e-8));
}

TEST_CASE("relative errors") {
    TensorSplineSpace space((SplineSpace1D(3, 1, 2)));
    const int n = space.s.dim();
    const auto g = space.s.greville();
    Matrix c(n * n, 3);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            c.row(space.index(i, j)) =
                Vec3(g[static_cast<size_t>(i)], g[static_cast<size_t>(j)], 0).transpose();
    auto s_surface = std::make_shared<MultiPatchSpline>(single_patch(space, c));
    SplineSurfaceSource src(s_surface.get());

    auto exact = single_patch(space, c);
    auto [e0, e1] = relative_errors(exact, src, 0.2, 5);
    CHECK(e0 <= 1e-14);
    CHECK(e1 <= 1e-14);

    const Vec3 offset(0.03, -0.01, 0.02);
    Matrix co = c;
    for (Eigen::Index i = 0; i < co.rows(); ++i) co.row(i) += offset.transpose();
    auto shifted = single_patch(space, co);
    auto [eo, eo1] = relative_errors(shifted, src, 0.2, 5);
    // ||S||_L2^2 = int (x^2 + y^2) = 2/3 over the unit square.
    CHECK(eo == doctest::Approx(offset.norm() / std::sqrt(2.0 / 3.0)).epsilon(1e-10));
    CHECK(eo1 > 0.0);
}

TEST_CASE("frames cover the dihedral group exactly") {
    for (Side s : {Side::U0, Side::U1, Side::V0, Side::V1})
        for (bool rev : {false, true}) {
            const Frame f1 = side1_frame(s, rev);
            const Frame f2 = side2_frame(s, rev);
            // side-1 edge {u=0} and side-2 edge {v=0} land on the same
            // directed physical side.
            CHECK(f1.map_point(0.0, 0.25) == f2.map_point(0.25, 0.0));
            CHECK(f1.map_point(0.0, 1.0) == f2.map_point(1.0, 0.0));
        }
}

TEST_CASE("frame index map matches point map on basis symmetry") {
    SplineSpace1D s(3, 1, 2);
    TensorSplineSpace space(s);
    const int n = s.dim();
    std::mt19937 rng(11);
    std::normal_distribution<double> dist(0.0, 1.0);
    Matrix c(n * n, 3);
    for (Eigen::Index i = 0; i < c.rows(); ++i)
        for (int j = 0; j < 3; ++j) c(i, j) = dist(rng);

    for (const Frame f : {Frame{false, true, false}, Frame{true, false, true},
                          Frame{true, true, true}, Frame{false, false, true}}) {
        // Permuted coefficients evaluated at local coords equal the patch at
        // mapped coords.
        Matrix cl(n * n, 3);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                auto [j1, j2] = f.map_index(a, b, n);
                cl.row(space.index(a, b)) = c.row(space.index(j1, j2));
            }
        for (auto [u, v] : {std::pair<double, double>{0.3, 0.8}, {0.0, 0.5}, {1.0, 0.25}}) {
            auto [x, y] = f.map_point(u, v);
            CHECK((tensor_eval3(space, cl, u, v, 0, 0) - tensor_eval3(space, c, x, y, 0, 0))
                      .norm() <= 1e-13);
        }
    }
}
