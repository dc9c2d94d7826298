#include "asg1/multipatch.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>

namespace asg1 {

Side side_from_string(const std::string& s) {
    if (s == "u0") return Side::U0;
    if (s == "u1") return Side::U1;
    if (s == "v0") return Side::V0;
    if (s == "v1") return Side::V1;
    throw std::invalid_argument("unknown side '" + s + "'");
}

std::string side_to_string(Side s) {
    switch (s) {
        case Side::U0: return "u0";
        case Side::U1: return "u1";
        case Side::V0: return "v0";
        case Side::V1: return "v1";
    }
    return "?";
}

std::pair<double, double> Frame::map_point(double u, double v) const {
    double t1 = swap ? v : u;
    double t2 = swap ? u : v;
    if (flip1) t1 = 1.0 - t1;
    if (flip2) t2 = 1.0 - t2;
    return {t1, t2};
}

std::pair<int, int> Frame::map_index(int a, int b, int n) const {
    int j1 = swap ? b : a;
    int j2 = swap ? a : b;
    if (flip1) j1 = n - 1 - j1;
    if (flip2) j2 = n - 1 - j2;
    return {j1, j2};
}

Frame::DerivMap Frame::map_deriv(int a, int b) const {
    const bool fu = swap ? flip2 : flip1;
    const bool fv = swap ? flip1 : flip2;
    DerivMap m;
    m.l1 = swap ? b : a;
    m.l2 = swap ? a : b;
    m.sign = ((a * (fu ? 1 : 0) + b * (fv ? 1 : 0)) % 2 == 0) ? 1.0 : -1.0;
    return m;
}

int Frame::corner_at_origin() const {
    auto [x, y] = map_point(0.0, 0.0);
    return 2 * (x > 0.5 ? 1 : 0) + (y > 0.5 ? 1 : 0);
}

namespace {

const std::array<Frame, 8>& all_frames() {
    static const std::array<Frame, 8> frames = [] {
        std::array<Frame, 8> f{};
        int i = 0;
        for (int sw = 0; sw < 2; ++sw)
            for (int f1 = 0; f1 < 2; ++f1)
                for (int f2 = 0; f2 < 2; ++f2) f[i++] = Frame{sw != 0, f1 != 0, f2 != 0};
        return f;
    }();
    return frames;
}

std::pair<double, double> corner_coords(int corner) {
    return {corner / 2 ? 1.0 : 0.0, corner % 2 ? 1.0 : 0.0};
}

// Directed side endpoints in the side's natural direction.
std::pair<int, int> side_corners(Side s) {
    switch (s) {
        case Side::U0: return {0, 1};
        case Side::U1: return {2, 3};
        case Side::V0: return {0, 2};
        case Side::V1: return {1, 3};
    }
    return {0, 0};
}

Frame find_frame(Side side, bool reversed, bool as_side1) {
    auto [c_start, c_end] = side_corners(side);
    if (reversed) std::swap(c_start, c_end);
    const auto ps = corner_coords(c_start);
    const auto pe = corner_coords(c_end);
    for (const Frame& f : all_frames()) {
        const auto a = as_side1 ? f.map_point(0.0, 0.0) : f.map_point(0.0, 0.0);
        const auto b = as_side1 ? f.map_point(0.0, 1.0) : f.map_point(1.0, 0.0);
        if (a == ps && b == pe) return f;
    }
    throw std::logic_error("find_frame: no symmetry matches");
}

}  // namespace

Frame side1_frame(Side side, bool reversed) { return find_frame(side, reversed, true); }
Frame side2_frame(Side side, bool reversed) { return find_frame(side, reversed, false); }

std::array<Vec3, 6> transform_jet2(const std::array<Vec3, 6>& patch_jet, const Frame& f) {
    static constexpr int orders[6][2] = {{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
    auto slot = [](int l1, int l2) {
        for (int d = 0; d < 6; ++d)
            if (orders[d][0] == l1 && orders[d][1] == l2) return d;
        return -1;
    };
    std::array<Vec3, 6> out;
    for (int d = 0; d < 6; ++d) {
        const auto m = f.map_deriv(orders[d][0], orders[d][1]);
        out[static_cast<size_t>(d)] = m.sign * patch_jet[static_cast<size_t>(slot(m.l1, m.l2))];
    }
    return out;
}

std::array<Vec3, 6> tensor_jet2(const TensorSplineSpace& space, const Matrix& coefs, double u,
                                double v) {
    static constexpr int orders[6][2] = {{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
    const auto& s = space.s;
    const auto t1 = s.eval_basis(u, 2);
    const auto t2 = s.eval_basis(v, 2);
    std::array<Vec3, 6> out;
    for (int d = 0; d < 6; ++d) {
        Vec3 acc = Vec3::Zero();
        const int l1 = orders[d][0], l2 = orders[d][1];
        for (int i = 0; i <= s.degree(); ++i) {
            const double a = t1.values(l1, i);
            if (a == 0.0) continue;
            for (int j = 0; j <= s.degree(); ++j) {
                const double b = t2.values(l2, j);
                if (b == 0.0) continue;
                const auto row = coefs.row(space.index(t1.first + i, t2.first + j));
                acc += a * b * Vec3(row(0), row(1), row(2));
            }
        }
        out[static_cast<size_t>(d)] = acc;
    }
    return out;
}

Vec3 tensor_eval3(const TensorSplineSpace& space, const Matrix& coefs, double u, double v, int l1,
                  int l2) {
    const auto& s = space.s;
    const auto t1 = s.eval_basis(u, l1);
    const auto t2 = s.eval_basis(v, l2);
    Vec3 acc = Vec3::Zero();
    for (int i = 0; i <= s.degree(); ++i) {
        const double a = t1.values(l1, i);
        if (a == 0.0) continue;
        for (int j = 0; j <= s.degree(); ++j) {
            const double b = t2.values(l2, j);
            if (b == 0.0) continue;
            const auto row = coefs.row(space.index(t1.first + i, t2.first + j));
            acc += a * b * Vec3(row(0), row(1), row(2));
        }
    }
    return acc;
}

std::array<Vec3, 6> source_jet2_in_frame(const SurfaceSource& src, int patch, const Frame& f,
                                         double u, double v) {
    auto [x, y] = f.map_point(u, v);
    return transform_jet2(src.jet2(patch, x, y), f);
}

namespace {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(static_cast<size_t>(n)) {
        std::iota(parent.begin(), parent.end(), 0);
    }
    int find(int a) {
        while (parent[static_cast<size_t>(a)] != a) {
            parent[static_cast<size_t>(a)] = parent[static_cast<size_t>(parent[static_cast<size_t>(a)])];
            a = parent[static_cast<size_t>(a)];
        }
        return a;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[static_cast<size_t>(b)] = a;
    }
};

// The two patch sides meeting at a corner.
std::pair<Side, Side> corner_sides(int corner) {
    const Side su = corner / 2 ? Side::U1 : Side::U0;
    const Side sv = corner % 2 ? Side::V1 : Side::V0;
    return {su, sv};
}

int frame_corner(const Frame& f, double u, double v) {
    auto [x, y] = f.map_point(u, v);
    return 2 * (x > 0.5 ? 1 : 0) + (y > 0.5 ? 1 : 0);
}

}  // namespace

MultiPatchSpline::MultiPatchSpline(const TensorSplineSpace& space, std::vector<Matrix> patch_coefs,
                                   Topology topo)
    : space_(space), coefs_(std::move(patch_coefs)), topo_(std::move(topo)) {
    const int np = topo_.num_patches;
    if (static_cast<int>(coefs_.size()) != np)
        throw std::invalid_argument("MultiPatchSpline: patch count mismatch");
    const int n = space_.s.dim();
    for (const auto& c : coefs_)
        if (c.rows() != n * n || c.cols() != 3)
            throw std::invalid_argument("MultiPatchSpline: coefficient shape mismatch");

    UnionFind uf(np * n * n);
    auto gid = [&](int patch, int slot) { return patch * n * n + slot; };
    for (const auto& itf : topo_.interfaces) {
        for (int j = 0; j < n; ++j) {
            auto [a1, a2] = itf.frame[0].map_index(0, j, n);
            auto [b1, b2] = itf.frame[1].map_index(j, 0, n);
            uf.unite(gid(itf.patch[0], space_.index(a1, a2)),
                     gid(itf.patch[1], space_.index(b1, b2)));
        }
    }
    class_of_.assign(static_cast<size_t>(np), std::vector<int>(static_cast<size_t>(n * n), -1));
    std::map<int, int> root_to_class;
    for (int p = 0; p < np; ++p)
        for (int s = 0; s < n * n; ++s) {
            const int root = uf.find(gid(p, s));
            auto [it, inserted] = root_to_class.try_emplace(root, num_classes_);
            if (inserted) {
                class_rep_.emplace_back(p, s);
                class_members_.emplace_back();
                ++num_classes_;
            }
            class_of_[static_cast<size_t>(p)][static_cast<size_t>(s)] = it->second;
            class_members_[static_cast<size_t>(it->second)].emplace_back(p, s);
        }
}

void MultiPatchSpline::set_class_value(int cls, const Vec3& value) {
    for (const auto& [p, s] : class_members_[static_cast<size_t>(cls)])
        coefs_[static_cast<size_t>(p)].row(s) = value.transpose();
}

Vec3 MultiPatchSpline::class_value(int cls) const {
    const auto [p, s] = class_rep_[static_cast<size_t>(cls)];
    const auto row = coefs_[static_cast<size_t>(p)].row(s);
    return Vec3(row(0), row(1), row(2));
}

MultiPatchSpline MultiPatchSpline::refine_dyadic(int level) const {
    std::vector<Matrix> fine;
    fine.reserve(coefs_.size());
    for (int p = 0; p < topo_.num_patches; ++p) {
        SplinePatch sp(space_, coefs_[static_cast<size_t>(p)]);
        fine.push_back(sp.refine_dyadic(level).coefs());
    }
    MultiPatchSpline out(TensorSplineSpace(space_.s.refine_dyadic(level)), std::move(fine), topo_);
    // Snap shared classes to the representative so C0 stays bitwise.
    for (int c = 0; c < out.num_classes(); ++c) out.set_class_value(c, out.class_value(c));
    return out;
}

MultiPatchSpline canonicalize(const TensorSplineSpace& space, std::vector<Matrix> patch_coefs,
                              const std::vector<InterfaceRecord>& interfaces,
                              const std::vector<BoundaryRecord>& boundary, double c0_tol) {
    const int np = static_cast<int>(patch_coefs.size());
    const int n = space.s.dim();

    Topology topo;
    topo.num_patches = np;

    // Each patch side belongs to exactly one interface or boundary curve.
    std::map<std::pair<int, int>, std::pair<int, int>> side_use;  // (patch,side)->(kind,idx)
    auto claim = [&](int patch, Side s, int kind, int idx) {
        if (patch < 0 || patch >= np)
            throw TopologyError("record references unknown patch " + std::to_string(patch));
        auto key = std::make_pair(patch, static_cast<int>(s));
        if (!side_use.emplace(key, std::make_pair(kind, idx)).second)
            throw TopologyError("patch " + std::to_string(patch) + " side " + side_to_string(s) +
                                " referenced twice");
    };

    for (size_t i = 0; i < interfaces.size(); ++i) {
        const auto& rec = interfaces[i];
        if (rec.patch_a == rec.patch_b)
            throw TopologyError("interface " + std::to_string(rec.id) + " joins a patch to itself");
        claim(rec.patch_a, rec.side_a, 0, static_cast<int>(i));
        claim(rec.patch_b, rec.side_b, 0, static_cast<int>(i));
        Interface itf;
        itf.id = rec.id;
        itf.patch = {rec.patch_a, rec.patch_b};
        itf.frame = {side1_frame(rec.side_a, false), side2_frame(rec.side_b, rec.reversed)};
        topo.interfaces.push_back(itf);
    }
    for (const auto& rec : boundary) claim(rec.patch, rec.side, 1, 0);
    // Derive boundary curves for every unclaimed side.
    int bid = 0;
    topo.boundary.clear();
    for (int p = 0; p < np; ++p)
        for (Side s : {Side::U0, Side::U1, Side::V0, Side::V1}) {
            auto it = side_use.find({p, static_cast<int>(s)});
            if (it != side_use.end() && it->second.first == 0) continue;
            BoundaryCurve bc;
            bc.id = bid++;
            bc.patch = p;
            bc.frame = side1_frame(s, false);
            topo.boundary.push_back(bc);
        }

    // C0 conformity of identified edge coefficients.
    double scale = 1.0;
    for (const auto& c : patch_coefs) scale = std::max(scale, c.cwiseAbs().maxCoeff());
    for (const auto& itf : topo.interfaces) {
        double worst = 0.0;
        for (int j = 0; j < n; ++j) {
            auto [a1, a2] = itf.frame[0].map_index(0, j, n);
            auto [b1, b2] = itf.frame[1].map_index(j, 0, n);
            const auto da = patch_coefs[static_cast<size_t>(itf.patch[0])].row(space.index(a1, a2));
            const auto db = patch_coefs[static_cast<size_t>(itf.patch[1])].row(space.index(b1, b2));
            worst = std::max(worst, (da - db).norm());
        }
        if (worst > c0_tol * scale)
            throw TopologyError("interface " + std::to_string(itf.id) +
                                " is not C0-conforming (gap " + std::to_string(worst) + ")");
    }

    // Vertex classes from interface end identifications.
    UnionFind vc(np * 4);
    auto cid = [](int patch, int corner) { return patch * 4 + corner; };
    for (const auto& itf : topo.interfaces)
        for (int e = 0; e < 2; ++e) {
            const int ca = frame_corner(itf.frame[0], 0.0, e);
            const int cb = frame_corner(itf.frame[1], e, 0.0);
            vc.unite(cid(itf.patch[0], ca), cid(itf.patch[1], cb));
        }

    // Wedge links: (patch, corner, side) -> (interface idx, end, opposite wedge).
    struct Link {
        int iface, end;
        int patch, corner;
        Side side;
    };
    std::map<std::tuple<int, int, int>, Link> links;
    for (size_t i = 0; i < topo.interfaces.size(); ++i) {
        const auto& itf = topo.interfaces[i];
        const auto& rec = interfaces[i];
        for (int e = 0; e < 2; ++e) {
            const int ca = frame_corner(itf.frame[0], 0.0, e);
            const int cb = frame_corner(itf.frame[1], e, 0.0);
            links[{itf.patch[0], ca, static_cast<int>(rec.side_a)}] =
                Link{static_cast<int>(i), e, itf.patch[1], cb, rec.side_b};
            links[{itf.patch[1], cb, static_cast<int>(rec.side_b)}] =
                Link{static_cast<int>(i), e, itf.patch[0], ca, rec.side_a};
        }
    }
    auto is_interface_side = [&](int patch, Side s) {
        auto it = side_use.find({patch, static_cast<int>(s)});
        return it != side_use.end() && it->second.first == 0;
    };

    std::map<int, std::vector<std::pair<int, int>>> members;  // root -> wedges
    for (int p = 0; p < np; ++p)
        for (int c = 0; c < 4; ++c) members[vc.find(cid(p, c))].emplace_back(p, c);

    int vid = 0;
    for (auto& [root, wedges] : members) {
        Vertex v;
        v.id = vid++;
        // Start at a wedge with a boundary side when one exists.
        std::pair<int, int> start = wedges.front();
        Side out_side = corner_sides(start.second).first;
        bool has_boundary = false;
        for (const auto& w : wedges) {
            auto [s0, s1] = corner_sides(w.second);
            const bool b0 = !is_interface_side(w.first, s0);
            const bool b1 = !is_interface_side(w.first, s1);
            if (b0 || b1) {
                has_boundary = true;
                start = w;
                out_side = b0 ? s1 : s0;  // walk away from the boundary side
                if (b0 && b1) out_side = s0;
                break;
            }
        }
        v.boundary = has_boundary;
        std::pair<int, int> cur = start;
        Side out = out_side;
        for (size_t guard = 0; guard <= wedges.size(); ++guard) {
            v.patches_ccw.push_back(cur.first);
            v.corners.push_back(cur);
            if (!is_interface_side(cur.first, out)) break;  // boundary side ends the fan
            const auto lk = links.at({cur.first, cur.second, static_cast<int>(out)});
            v.interfaces.push_back({lk.iface, lk.end});
            cur = {lk.patch, lk.corner};
            if (cur == start) break;  // inner vertex: fan closed
            auto [s0, s1] = corner_sides(cur.second);
            out = (static_cast<int>(lk.side) == static_cast<int>(s0)) ? s1 : s0;
        }
        if (v.patches_ccw.size() != wedges.size())
            throw TopologyError("vertex " + std::to_string(v.id) +
                                " has a non-manifold or disconnected patch fan");
        topo.vertices.push_back(std::move(v));
    }

    return MultiPatchSpline(space, std::move(patch_coefs), std::move(topo));
}

namespace {

template <typename Body>
void for_each_quad_point_2d(const SplineSpace1D& s, int q, const Body& body) {
    const auto brk = s.breaks();
    std::vector<QuadratureRule> rules;
    for (size_t sp = 0; sp + 1 < brk.size(); ++sp)
        rules.push_back(gauss_legendre(q, brk[sp], brk[sp + 1]));
    for (const auto& ru : rules)
        for (size_t gu = 0; gu < ru.nodes.size(); ++gu)
            for (const auto& rv : rules)
                for (size_t gv = 0; gv < rv.nodes.size(); ++gv)
                    body(ru.nodes[gu], rv.nodes[gv], ru.weights[gu] * rv.weights[gv]);
}

}  // namespace

double weighted_h1_norm(const MultiPatchSpline& g, double sigma, int q) {
    if (!(sigma > 0)) throw std::invalid_argument("weighted_h1_norm: sigma must be positive");
    double acc = 0.0;
    for (int p = 0; p < g.num_patches(); ++p) {
        for_each_quad_point_2d(g.space().s, q, [&](double u, double v, double w) {
            const auto jet = g.jet2(p, u, v);
            acc += w * (jet[0].squaredNorm() +
                        sigma * (jet[1].squaredNorm() + jet[2].squaredNorm()));
        });
    }
    return std::sqrt(acc);
}

std::pair<double, double> relative_errors(const MultiPatchSpline& f, const SurfaceSource& s,
                                          double sigma, int q) {
    if (f.num_patches() != s.num_patches())
        throw std::invalid_argument("relative_errors: patch count mismatch");
    double err_l2 = 0.0, ref_l2 = 0.0, err_h1 = 0.0, ref_h1 = 0.0;
    for (int p = 0; p < f.num_patches(); ++p) {
        for_each_quad_point_2d(f.space().s, q, [&](double u, double v, double w) {
            const auto jf = f.jet2(p, u, v);
            const auto js = s.jet2(p, u, v);
            const double d0 = (jf[0] - js[0]).squaredNorm();
            const double d1 = (jf[1] - js[1]).squaredNorm() + (jf[2] - js[2]).squaredNorm();
            const double r0 = js[0].squaredNorm();
            const double r1 = js[1].squaredNorm() + js[2].squaredNorm();
            err_l2 += w * d0;
            ref_l2 += w * r0;
            err_h1 += w * (d0 + sigma * d1);
            ref_h1 += w * (r0 + sigma * r1);
        });
    }
    if (ref_l2 <= 0.0 || ref_h1 <= 0.0)
        throw std::domain_error("relative_errors: reference surface has zero norm");
    return {std::sqrt(err_l2 / ref_l2), std::sqrt(err_h1 / ref_h1)};
}

}  // namespace asg1
