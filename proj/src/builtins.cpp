#include "asg1/builtins.hpp"

#include <cmath>
#include <map>

namespace asg1 {

namespace {

class OwningSplineSource : public SurfaceSource {
  public:
    explicit OwningSplineSource(std::shared_ptr<const MultiPatchSpline> s) : s_(std::move(s)) {}
    int num_patches() const override { return s_->num_patches(); }
    std::array<Vec3, 6> jet2(int patch, double u, double v) const override {
        return s_->jet2(patch, u, v);
    }

  private:
    std::shared_ptr<const MultiPatchSpline> s_;
};

// Deterministic jitter in [-1,1] from integer keys.
double jitter(unsigned a, unsigned b, unsigned c) {
    unsigned h = a * 2654435761u ^ (b + 0x9e3779b9u + (a << 6)) ^ (c * 40503u + 0x7f4a7c15u);
    h ^= h >> 13;
    h *= 0x5bd1e995u;
    h ^= h >> 15;
    return 2.0 * (static_cast<double>(h % 100000u) / 99999.0) - 1.0;
}

BuiltinGeometryRecords quad_grid_records() {
    BuiltinGeometryRecords rec;
    rec.p = 1;
    rec.r = 0;
    rec.k = 0;
    // 3x3 node grid, interior nodes displaced so that the gluing data is
    // genuinely non-constant.
    Vec3 nodes[3][3];
    for (int i = 0; i <= 2; ++i)
        for (int j = 0; j <= 2; ++j)
            nodes[i][j] = Vec3(i + 0.17 * jitter(i, j, 1), j + 0.17 * jitter(i, j, 2), 0.0);
    const TensorSplineSpace space((SplineSpace1D(1, 0, 0)));
    auto cell = [&](int I, int J) {
        Matrix c(4, 3);
        c.row(space.index(0, 0)) = nodes[I][J].transpose();
        c.row(space.index(1, 0)) = nodes[I + 1][J].transpose();
        c.row(space.index(0, 1)) = nodes[I][J + 1].transpose();
        c.row(space.index(1, 1)) = nodes[I + 1][J + 1].transpose();
        return c;
    };
    for (int J = 0; J < 2; ++J)
        for (int I = 0; I < 2; ++I) rec.coefs.push_back(cell(I, J));
    auto pid = [](int I, int J) { return J * 2 + I; };
    int iid = 0;
    for (int J = 0; J < 2; ++J)
        rec.interfaces.push_back({iid++, pid(0, J), pid(1, J), Side::U1, Side::U0, false});
    for (int I = 0; I < 2; ++I)
        rec.interfaces.push_back({iid++, pid(I, 0), pid(I, 1), Side::V1, Side::V0, false});
    return rec;
}

BuiltinGeometryRecords plate16_records() {
    BuiltinGeometryRecords rec;
    rec.p = 3;
    rec.r = 2;
    rec.k = 0;
    const int N = 4;  // 4x4 patches
    auto node = [&](int I, int J) {
        const double x = I, y = J;
        return Vec3(x + 0.21 * std::sin(0.8 * x + 0.6 * y) + 0.05 * y,
                    y + 0.24 * std::sin(0.5 * x - 0.9 * y), 0.0);
    };
    // Shared cubic edge control points: interior points bent off the chord,
    // which makes the interfaces curved and the grid non-AS-G1.
    std::map<std::array<int, 3>, std::array<Vec3, 4>> edges;  // (I,J,dir) -> 4 ctrl pts
    auto edge_pts = [&](int I, int J, int dir) {              // dir 0: +x, 1: +y
        std::array<int, 3> key{I, J, dir};
        auto it = edges.find(key);
        if (it != edges.end()) return it->second;
        const Vec3 a = node(I, J);
        const Vec3 b = dir == 0 ? node(I + 1, J) : node(I, J + 1);
        const Vec3 d = (b - a) / 3.0;
        const Vec3 perp(-d.y(), d.x(), 0.0);
        std::array<Vec3, 4> pts{a, a + d + 0.35 * jitter(I, J, 10 + dir) * perp,
                                b - d + 0.35 * jitter(I, J, 20 + dir) * perp, b};
        edges.emplace(key, pts);
        return pts;
    };
    const TensorSplineSpace space((SplineSpace1D(3, 2, 0)));
    for (int J = 0; J < N; ++J)
        for (int I = 0; I < N; ++I) {
            const auto e_bottom = edge_pts(I, J, 0);   // v=0, along u
            const auto e_top = edge_pts(I, J + 1, 0);  // v=1
            const auto e_left = edge_pts(I, J, 1);     // u=0, along v
            const auto e_right = edge_pts(I + 1, J, 1);
            Matrix c(16, 3);
            for (int a = 0; a < 4; ++a) {
                c.row(space.index(a, 0)) = e_bottom[static_cast<size_t>(a)].transpose();
                c.row(space.index(a, 3)) = e_top[static_cast<size_t>(a)].transpose();
                c.row(space.index(0, a)) = e_left[static_cast<size_t>(a)].transpose();
                c.row(space.index(3, a)) = e_right[static_cast<size_t>(a)].transpose();
            }
            // Coons interior keeps the patches regular.
            for (int a = 1; a <= 2; ++a)
                for (int b = 1; b <= 2; ++b) {
                    const double u = a / 3.0, v = b / 3.0;
                    const Vec3 ru = (1 - u) * e_left[static_cast<size_t>(b)] +
                                    u * e_right[static_cast<size_t>(b)];
                    const Vec3 rv = (1 - v) * e_bottom[static_cast<size_t>(a)] +
                                    v * e_top[static_cast<size_t>(a)];
                    const Vec3 rc = (1 - u) * (1 - v) * e_bottom[0] + u * (1 - v) * e_bottom[3] +
                                    (1 - u) * v * e_top[0] + u * v * e_top[3];
                    c.row(space.index(a, b)) = (ru + rv - rc).transpose();
                }
            rec.coefs.push_back(c);
        }
    auto pid = [&](int I, int J) { return J * N + I; };
    int iid = 0;
    for (int J = 0; J < N; ++J)
        for (int I = 0; I + 1 < N; ++I)
            rec.interfaces.push_back({iid++, pid(I, J), pid(I + 1, J), Side::U1, Side::U0, false});
    for (int J = 0; J + 1 < N; ++J)
        for (int I = 0; I < N; ++I)
            rec.interfaces.push_back({iid++, pid(I, J), pid(I, J + 1), Side::V1, Side::V0, false});
    return rec;
}

// Sphere via radial projection of the cube: each face map is affine in the
// parameters, F = C / |C|.
class CubeSphereSource : public SurfaceSource {
  public:
    CubeSphereSource() {
        faces_ = {{
            {Vec3(1, -1, -1), Vec3(0, 2, 0), Vec3(0, 0, 2)},   // +x
            {Vec3(-1, -1, -1), Vec3(0, 0, 2), Vec3(0, 2, 0)},  // -x
            {Vec3(-1, 1, -1), Vec3(0, 0, 2), Vec3(2, 0, 0)},   // +y
            {Vec3(-1, -1, -1), Vec3(2, 0, 0), Vec3(0, 0, 2)},  // -y
            {Vec3(-1, -1, 1), Vec3(2, 0, 0), Vec3(0, 2, 0)},   // +z
            {Vec3(-1, -1, -1), Vec3(0, 2, 0), Vec3(2, 0, 0)},  // -z
        }};
    }
    int num_patches() const override { return 6; }
    std::array<Vec3, 6> jet2(int patch, double u, double v) const override {
        const auto& f = faces_[static_cast<size_t>(patch)];
        const Vec3 c = f[0] + u * f[1] + v * f[2];
        const Vec3& cu = f[1];
        const Vec3& cv = f[2];
        const double n2 = c.squaredNorm();
        const double n = std::sqrt(n2), n3 = n * n2, n5 = n3 * n2;
        const double pu = c.dot(cu), pv = c.dot(cv);
        std::array<Vec3, 6> jet;
        jet[0] = c / n;
        jet[1] = cu / n - c * (pu / n3);
        jet[2] = cv / n - c * (pv / n3);
        jet[3] = -2.0 * cu * (pu / n3) - c * (cu.dot(cu) / n3) + 3.0 * c * (pu * pu / n5);
        jet[4] = -(cu * pv + cv * pu + c * cu.dot(cv)) / n3 + 3.0 * c * (pu * pv / n5);
        jet[5] = -2.0 * cv * (pv / n3) - c * (cv.dot(cv) / n3) + 3.0 * c * (pv * pv / n5);
        return jet;
    }
    Vec3 cube_point(int patch, double u, double v) const {
        const auto& f = faces_[static_cast<size_t>(patch)];
        return f[0] + u * f[1] + v * f[2];
    }

  private:
    std::array<std::array<Vec3, 3>, 6> faces_;
};

// Match cube face sides by their endpoints on the cube.
std::vector<InterfaceRecord> cube_interfaces(const CubeSphereSource& src) {
    struct SideInfo {
        int patch;
        Side side;
        Vec3 a, b;  // endpoints in natural direction
    };
    std::vector<SideInfo> sides;
    auto corner = [&](int patch, double u, double v) { return src.cube_point(patch, u, v); };
    for (int p = 0; p < 6; ++p) {
        sides.push_back({p, Side::U0, corner(p, 0, 0), corner(p, 0, 1)});
        sides.push_back({p, Side::U1, corner(p, 1, 0), corner(p, 1, 1)});
        sides.push_back({p, Side::V0, corner(p, 0, 0), corner(p, 1, 0)});
        sides.push_back({p, Side::V1, corner(p, 0, 1), corner(p, 1, 1)});
    }
    std::vector<InterfaceRecord> recs;
    std::vector<bool> used(sides.size(), false);
    int iid = 0;
    for (size_t i = 0; i < sides.size(); ++i) {
        if (used[i]) continue;
        for (size_t j = i + 1; j < sides.size(); ++j) {
            if (used[j] || sides[i].patch == sides[j].patch) continue;
            const bool fwd = (sides[i].a - sides[j].a).norm() < 1e-12 &&
                             (sides[i].b - sides[j].b).norm() < 1e-12;
            const bool rev = (sides[i].a - sides[j].b).norm() < 1e-12 &&
                             (sides[i].b - sides[j].a).norm() < 1e-12;
            if (!fwd && !rev) continue;
            recs.push_back(
                {iid++, sides[i].patch, sides[j].patch, sides[i].side, sides[j].side, rev});
            used[i] = used[j] = true;
            break;
        }
    }
    if (recs.size() != 12) throw std::logic_error("cube_interfaces: expected 12 edges");
    return recs;
}

BuiltinInput make_spline_input(const std::string& name, const BuiltinGeometryRecords& rec) {
    BuiltinInput in;
    in.name = name;
    const TensorSplineSpace space((SplineSpace1D(rec.p, rec.r, rec.k)));
    auto mp = std::make_shared<MultiPatchSpline>(
        canonicalize(space, rec.coefs, rec.interfaces, rec.boundary));
    in.spline = mp;
    in.topology = mp->topology();
    in.source = std::make_shared<OwningSplineSource>(mp);
    in.spline_space = std::array<int, 3>{rec.p, rec.r, rec.k};
    return in;
}

}  // namespace

BuiltinGeometryRecords builtin_geometry_records(const std::string& name) {
    if (name == "quad_grid_2x2") return quad_grid_records();
    if (name == "plate16") return plate16_records();
    throw std::invalid_argument("no bundled spline geometry named '" + name + "'");
}

BuiltinInput make_builtin_input(const std::string& name) {
    if (name == "quad_grid_2x2" || name == "plate16")
        return make_spline_input(name, builtin_geometry_records(name));
    if (name == "sphere6") {
        BuiltinInput in;
        in.name = name;
        auto src = std::make_shared<CubeSphereSource>();
        // Topology from a stand-in bilinear net with the same connectivity.
        const TensorSplineSpace space((SplineSpace1D(1, 0, 0)));
        std::vector<Matrix> coefs;
        for (int p = 0; p < 6; ++p) {
            Matrix c(4, 3);
            c.row(space.index(0, 0)) = src->jet2(p, 0, 0)[0].transpose();
            c.row(space.index(0, 1)) = src->jet2(p, 0, 1)[0].transpose();
            c.row(space.index(1, 0)) = src->jet2(p, 1, 0)[0].transpose();
            c.row(space.index(1, 1)) = src->jet2(p, 1, 1)[0].transpose();
            coefs.push_back(c);
        }
        const auto recs = cube_interfaces(*src);
        MultiPatchSpline net = canonicalize(space, coefs, recs, {});
        in.topology = net.topology();
        in.source = src;
        return in;
    }
    throw std::invalid_argument("no bundled input named '" + name + "'");
}

std::vector<std::string> builtin_input_names() { return {"quad_grid_2x2", "plate16", "sphere6"}; }

}  // namespace asg1
