#include "asg1/construct.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <thread>

namespace asg1 {

void check_admissible(const ConstructionParams& prm,
                      const std::optional<std::array<int, 3>>& input_space) {
    if (prm.p < 3) throw AdmissibilityError("degree p must be >= 3");
    if (prm.r < 1 || prm.r > prm.p - 2)
        throw AdmissibilityError("regularity must satisfy 1 <= r <= p-2");
    if (prm.k * (prm.p - prm.r - 1) < 5 - prm.p)
        throw AdmissibilityError("need k >= (5-p)/(p-r-1) inner knots for local solvability");
    if (input_space) {
        const auto [pt, rt, kt] = *input_space;
        if (prm.p < pt)
            throw AdmissibilityError("target degree must not be below the input degree");
        if (kt >= 1) {
            if (prm.r > rt)
                throw AdmissibilityError("target regularity must not exceed the input regularity");
            // k+1 = 2^l (k~+1): the input knots must be a dyadic subset.
            int q = prm.k + 1, d = kt + 1;
            if (q % d != 0 || (q / d) & ((q / d) - 1))
                throw AdmissibilityError("inner knots must satisfy k = 2^l (k~+1) - 1");
        }
    }
}

int tau(const Vertex& v) { return v.boundary ? 1 : 0; }

std::pair<int, int> f0_collocation_range(int side, int n) {
    return {3 * side, n - 3 * (side + 1) + 2};
}
std::pair<int, int> f1_collocation_range(int side, int n) {
    return {2 * side, n - 2 * (side + 1) + 1};
}

namespace {

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
    threads = std::max(1, std::min(threads, count));
    if (threads <= 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(static_cast<size_t>(count));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    body(i);
                } catch (...) {
                    errors[static_cast<size_t>(i)] = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// Stage assembly machinery.  Unknowns are control-point classes (one slot per
// physical control point) plus, for interface problems, the edge-function
// coefficients.  Objectives and constraints are identical for the three
// coordinates, so each problem is solved once with three right-hand sides.

struct FunBuf {
    std::vector<std::pair<int, double>> terms;
    Vec3 cst = Vec3::Zero();

    void clear() {
        terms.clear();
        cst.setZero();
    }
    void axpy(double a, const FunBuf& o) {
        for (const auto& [i, w] : o.terms) terms.emplace_back(i, a * w);
        cst += a * o.cst;
    }
};

struct ClassMap {
    const MultiPatchSpline* F = nullptr;
    std::vector<int> to_unknown;  // class -> unknown index, -1 when fixed
};

void add_point_functional(const ClassMap& cm, int patch, const Frame& fr, double u, double v,
                          int l1, int l2, double scale, FunBuf& out) {
    const auto& space = cm.F->space();
    const auto& s = space.s;
    const int n = s.dim();
    const auto t1 = s.eval_basis(u, l1);
    const auto t2 = s.eval_basis(v, l2);
    for (int i = 0; i <= s.degree(); ++i) {
        const double a = t1.values(l1, i);
        if (a == 0.0) continue;
        for (int j = 0; j <= s.degree(); ++j) {
            const double b = t2.values(l2, j);
            if (b == 0.0) continue;
            auto [j1, j2] = fr.map_index(t1.first + i, t2.first + j, n);
            const int cls = cm.F->class_of(patch, space.index(j1, j2));
            const double w = scale * a * b;
            const int idx = cm.to_unknown[static_cast<size_t>(cls)];
            if (idx >= 0)
                out.terms.emplace_back(idx, w);
            else
                out.cst += w * cm.F->class_value(cls);
        }
    }
}

struct StageProblem {
    int nu = 0;
    Matrix H;
    std::array<Vector, 3> c;
    double obj_const = 0.0;
    std::vector<FunBuf> rows;
    std::vector<Vec3> rhs;

    explicit StageProblem(int unknowns) : nu(unknowns) {
        H = Matrix::Zero(nu, nu);
        for (auto& v : c) v = Vector::Zero(nu);
    }

    /// Adds w * || L(d) - target ||^2 to the objective.
    void add_quadratic(const FunBuf& f, const Vec3& target, double w) {
        const Vec3 d = f.cst - target;
        for (const auto& [i, wi] : f.terms) {
            for (const auto& [j, wj] : f.terms) H(i, j) += 2.0 * w * wi * wj;
            for (int cc = 0; cc < 3; ++cc) c[static_cast<size_t>(cc)](i) += 2.0 * w * wi * d(cc);
        }
        obj_const += w * d.squaredNorm();
    }

    void add_constraint(FunBuf f, const Vec3& target = Vec3::Zero()) {
        rows.push_back(std::move(f));
        rhs.push_back(target);
    }

    struct Result {
        std::array<Vector, 3> x;
        double objective = 0.0;
        double constraint_residual = 0.0;
    };

    Result solve(const std::string& stage) const {
        Matrix A = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), nu);
        std::array<Vector, 3> b;
        for (auto& v : b) v = Vector::Zero(static_cast<Eigen::Index>(rows.size()));
        for (size_t r = 0; r < rows.size(); ++r) {
            for (const auto& [i, w] : rows[r].terms) A(static_cast<Eigen::Index>(r), i) += w;
            for (int cc = 0; cc < 3; ++cc)
                b[static_cast<size_t>(cc)](static_cast<Eigen::Index>(r)) =
                    rhs[r](cc) - rows[r].cst(cc);
        }
        auto sols = solve_saddle_multi(H, {c[0], c[1], c[2]}, A, {b[0], b[1], b[2]}, stage);
        Result res;
        res.objective = obj_const;
        for (int cc = 0; cc < 3; ++cc) {
            res.x[static_cast<size_t>(cc)] = sols[static_cast<size_t>(cc)].x;
            const Vector& x = res.x[static_cast<size_t>(cc)];
            res.objective += 0.5 * x.dot(H * x) + c[static_cast<size_t>(cc)].dot(x);
            if (rows.size() > 0)
                res.constraint_residual =
                    std::max(res.constraint_residual,
                             (A * x - b[static_cast<size_t>(cc)]).cwiseAbs().maxCoeff());
        }
        return res;
    }
};

struct Workspace {
    const SurfaceSource& S;
    MultiPatchSpline& F;
    const Topology& topo;
    const GluingData& gluing;
    const ConstructionParams& prm;
    std::vector<StageTag>& provenance;
};

Frame corner_frame(int corner) { return Frame{false, corner / 2 != 0, corner % 2 != 0}; }

// Local point on the canonical edge of a side, and the derivative slots of
// the transversal/tangential directions in that side's local frame.
std::pair<double, double> edge_point(int side, double xi) {
    return side == 0 ? std::make_pair(0.0, xi) : std::make_pair(xi, 0.0);
}

// N^(side)(xi): the denominator-cleared transversal combination; side 1
// carries the minus sign of Eq. (f1 on the second patch).
void edge_n_functional(const ClassMap& cm, const Interface& itf, const InterfaceGluing& g,
                       int side, double xi, double scale, FunBuf& out) {
    const double sgn = side == 0 ? 1.0 : -1.0;
    const auto [u, v] = edge_point(side, xi);
    const int patch = itf.patch[static_cast<size_t>(side)];
    const Frame& fr = itf.frame[static_cast<size_t>(side)];
    const int lt1 = side == 0 ? 1 : 0, lt2 = side == 0 ? 0 : 1;  // transversal derivative
    add_point_functional(cm, patch, fr, u, v, lt1, lt2, sgn * scale, out);
    add_point_functional(cm, patch, fr, u, v, lt2, lt1, sgn * scale * g.beta(side, xi), out);
}

// d/dxi of N^(side) at xi.
void edge_dn_functional(const ClassMap& cm, const Interface& itf, const InterfaceGluing& g,
                        int side, double xi, double scale, FunBuf& out) {
    const double sgn = side == 0 ? 1.0 : -1.0;
    const auto [u, v] = edge_point(side, xi);
    const int patch = itf.patch[static_cast<size_t>(side)];
    const Frame& fr = itf.frame[static_cast<size_t>(side)];
    add_point_functional(cm, patch, fr, u, v, 1, 1, sgn * scale, out);
    const int tg1 = side == 0 ? 0 : 1, tg2 = side == 0 ? 1 : 0;  // tangential derivative
    add_point_functional(cm, patch, fr, u, v, tg1, tg2, sgn * scale * g.dbeta(side), out);
    add_point_functional(cm, patch, fr, u, v, 2 * tg1, 2 * tg2, sgn * scale * g.beta(side, xi),
                         out);
}

StageReport solve_vertex_problem(Workspace& ws, const Vertex& v) {
    const auto& space = ws.F.space();
    const double sigma = ws.prm.sigma();

    // Pin the corner control point to the vertex of S.
    {
        const auto [p0, c0] = v.corners.front();
        const auto pc = corner_frame(c0).map_point(0.0, 0.0);
        const Vec3 x = ws.S.jet2(p0, pc.first, pc.second)[0];
        const Frame cf = corner_frame(c0);
        auto [j1, j2] = cf.map_index(0, 0, space.s.dim());
        const int cls = ws.F.class_of(p0, space.index(j1, j2));
        ws.F.set_class_value(cls, x);
        ws.provenance[static_cast<size_t>(cls)] = StageTag::VertexStage;
    }

    // Unknowns: the corner blocks {a+b <= 2} of every incident patch, minus
    // the pinned corner.
    ClassMap cm{&ws.F, std::vector<int>(static_cast<size_t>(ws.F.num_classes()), -1)};
    std::vector<int> unknown_classes;
    for (const auto& [patch, corner] : v.corners) {
        const Frame cf = corner_frame(corner);
        for (int a = 0; a <= 2; ++a)
            for (int b = 0; a + b <= 2; ++b) {
                if (a == 0 && b == 0) continue;
                auto [j1, j2] = cf.map_index(a, b, space.s.dim());
                const int cls = ws.F.class_of(patch, space.index(j1, j2));
                if (cm.to_unknown[static_cast<size_t>(cls)] < 0 &&
                    ws.provenance[static_cast<size_t>(cls)] == StageTag::Unset) {
                    cm.to_unknown[static_cast<size_t>(cls)] =
                        static_cast<int>(unknown_classes.size());
                    unknown_classes.push_back(cls);
                }
            }
    }

    StageProblem sp(static_cast<int>(unknown_classes.size()));
    static constexpr int kJetOrders[6][2] = {{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
    FunBuf f;
    for (const auto& [patch, corner] : v.corners) {
        const Frame cf = corner_frame(corner);
        const auto sjet = source_jet2_in_frame(ws.S, patch, cf, 0.0, 0.0);
        for (int d = 1; d < 6; ++d) {
            const int l1 = kJetOrders[d][0], l2 = kJetOrders[d][1];
            f.clear();
            add_point_functional(cm, patch, cf, 0.0, 0.0, l1, l2, 1.0, f);
            sp.add_quadratic(f, sjet[static_cast<size_t>(d)], std::pow(sigma, l1 + l2));
        }
    }

    for (const auto& inc : v.interfaces) {
        const Interface& itf = ws.topo.interfaces[static_cast<size_t>(inc.interface)];
        const InterfaceGluing& g = ws.gluing.interfaces[static_cast<size_t>(inc.interface)];
        const double t = static_cast<double>(inc.end);
        // f0 agreement, w = 0,1,2 (vacuous under shared edge classes, kept in
        // the printed form).
        for (int w = 0; w <= 2; ++w) {
            f.clear();
            const auto [u0, v0] = edge_point(0, t);
            add_point_functional(cm, itf.patch[0], itf.frame[0], u0, v0, 0, w,
                                 std::pow(sigma, w), f);
            const auto [u1, v1] = edge_point(1, t);
            add_point_functional(cm, itf.patch[1], itf.frame[1], u1, v1, w, 0,
                                 -std::pow(sigma, w), f);
            sp.add_constraint(std::move(f));
            f = FunBuf{};
        }
        // Denominator-cleared f1 agreement, w = 0,1.
        const double a1 = g.alpha(0, t), a2 = g.alpha(1, t);
        const double da1 = g.dalpha(0), da2 = g.dalpha(1);
        FunBuf n1, n2, dn1, dn2;
        edge_n_functional(cm, itf, g, 0, t, 1.0, n1);
        edge_n_functional(cm, itf, g, 1, t, 1.0, n2);
        edge_dn_functional(cm, itf, g, 0, t, 1.0, dn1);
        edge_dn_functional(cm, itf, g, 1, t, 1.0, dn2);
        f.clear();
        f.axpy(sigma * a2, n1);
        f.axpy(-sigma * a1, n2);
        sp.add_constraint(std::move(f));
        f = FunBuf{};
        const double s2 = sigma * sigma;
        f.clear();
        f.axpy(s2 * a2 * a2 * a1, dn1);
        f.axpy(-s2 * a2 * a2 * da1, n1);
        f.axpy(-s2 * a1 * a1 * a2, dn2);
        f.axpy(s2 * a1 * a1 * da2, n2);
        sp.add_constraint(std::move(f));
        f = FunBuf{};
    }

    auto res = sp.solve("vertex " + std::to_string(v.id));
    for (size_t i = 0; i < unknown_classes.size(); ++i) {
        ws.F.set_class_value(unknown_classes[i],
                             Vec3(res.x[0](static_cast<Eigen::Index>(i)),
                                  res.x[1](static_cast<Eigen::Index>(i)),
                                  res.x[2](static_cast<Eigen::Index>(i))));
        ws.provenance[static_cast<size_t>(unknown_classes[i])] = StageTag::VertexStage;
    }
    return {"vertex", v.id, res.objective, res.constraint_residual};
}

struct InterfaceUnknowns {
    std::vector<int> classes;
    int edge_offset = 0;  // first edge-function unknown
};

InterfaceUnknowns collect_interface_unknowns(Workspace& ws, const Interface& itf, ClassMap& cm) {
    const auto& space = ws.F.space();
    const int n = space.s.dim();
    InterfaceUnknowns iu;
    auto add = [&](int patch, int a, int b, const Frame& fr) {
        auto [j1, j2] = fr.map_index(a, b, n);
        const int cls = ws.F.class_of(patch, space.index(j1, j2));
        if (cm.to_unknown[static_cast<size_t>(cls)] < 0 &&
            ws.provenance[static_cast<size_t>(cls)] == StageTag::Unset) {
            cm.to_unknown[static_cast<size_t>(cls)] = static_cast<int>(iu.classes.size());
            iu.classes.push_back(cls);
        }
    };
    for (int j = 3; j <= n - 4; ++j) add(itf.patch[0], 0, j, itf.frame[0]);  // shared trace row
    for (int j = 2; j <= n - 3; ++j) add(itf.patch[0], 1, j, itf.frame[0]);
    for (int j = 2; j <= n - 3; ++j) add(itf.patch[1], j, 1, itf.frame[1]);
    iu.edge_offset = static_cast<int>(iu.classes.size());
    return iu;
}

StageReport solve_interface_problem(Workspace& ws, int m, EdgeFunctions& edge_out) {
    const auto& space = ws.F.space();
    const auto& s = space.s;
    const int n = s.dim();
    const Interface& itf = ws.topo.interfaces[static_cast<size_t>(m)];
    const InterfaceGluing& g = ws.gluing.interfaces[static_cast<size_t>(m)];
    const double sigma = ws.prm.sigma();

    ClassMap cm{&ws.F, std::vector<int>(static_cast<size_t>(ws.F.num_classes()), -1)};
    InterfaceUnknowns iu = collect_interface_unknowns(ws, itf, cm);
    const auto [trace_space, trans_space] = s.companion_spaces();
    const int n0 = trace_space.dim(), n1 = trans_space.dim();
    StageProblem sp(iu.edge_offset + n0 + n1);

    // Edge-restricted weighted-H1 fidelity of both sides.
    const auto brk = s.breaks();
    FunBuf f;
    for (size_t sp_i = 0; sp_i + 1 < brk.size(); ++sp_i) {
        const auto rule = gauss_legendre(ws.prm.quad_order(), brk[sp_i], brk[sp_i + 1]);
        for (size_t q = 0; q < rule.nodes.size(); ++q) {
            const double xi = rule.nodes[q], w = rule.weights[q];
            for (int side = 0; side < 2; ++side) {
                const auto [u, v] = edge_point(side, xi);
                const int patch = itf.patch[static_cast<size_t>(side)];
                const Frame& fr = itf.frame[static_cast<size_t>(side)];
                const auto sjet = source_jet2_in_frame(ws.S, patch, fr, u, v);
                static constexpr int kD[3][2] = {{0, 0}, {1, 0}, {0, 1}};
                static constexpr int kSlot[3] = {0, 1, 2};
                for (int d = 0; d < 3; ++d) {
                    f.clear();
                    add_point_functional(cm, patch, fr, u, v, kD[d][0], kD[d][1], 1.0, f);
                    sp.add_quadratic(f, sjet[static_cast<size_t>(kSlot[d])],
                                     w * std::pow(sigma, kD[d][0] + kD[d][1]));
                }
            }
        }
    }

    // Greville collocation of f0 and (denominator-cleared) f1.
    const auto grev = s.greville();
    for (int side = 0; side < 2; ++side) {
        const auto [f0_lo, f0_hi] = f0_collocation_range(side, n);
        for (int j = f0_lo; j <= f0_hi; ++j) {
            const double z = grev[static_cast<size_t>(j)];
            f.clear();
            const auto [u, v] = edge_point(side, z);
            add_point_functional(cm, itf.patch[static_cast<size_t>(side)],
                                 itf.frame[static_cast<size_t>(side)], u, v, 0, 0, 1.0, f);
            const auto t0 = trace_space.eval_basis(z, 0);
            for (int i = 0; i <= trace_space.degree(); ++i)
                f.terms.emplace_back(iu.edge_offset + t0.first + i, -t0.values(0, i));
            sp.add_constraint(std::move(f));
            f = FunBuf{};
        }
        const auto [f1_lo, f1_hi] = f1_collocation_range(side, n);
        for (int j = f1_lo; j <= f1_hi; ++j) {
            const double z = grev[static_cast<size_t>(j)];
            f.clear();
            edge_n_functional(cm, itf, g, side, z, sigma, f);
            const double a = g.alpha(side, z);
            const auto t1 = trans_space.eval_basis(z, 0);
            for (int i = 0; i <= trans_space.degree(); ++i)
                f.terms.emplace_back(iu.edge_offset + n0 + t1.first + i,
                                     -sigma * a * t1.values(0, i));
            sp.add_constraint(std::move(f));
            f = FunBuf{};
        }
    }

    auto res = sp.solve("interface " + std::to_string(itf.id));
    for (size_t i = 0; i < iu.classes.size(); ++i) {
        ws.F.set_class_value(iu.classes[i], Vec3(res.x[0](static_cast<Eigen::Index>(i)),
                                                 res.x[1](static_cast<Eigen::Index>(i)),
                                                 res.x[2](static_cast<Eigen::Index>(i))));
        ws.provenance[static_cast<size_t>(iu.classes[i])] = StageTag::InterfaceStage;
    }
    edge_out.d0 = Matrix(n0, 3);
    edge_out.d1 = Matrix(n1, 3);
    for (int i = 0; i < n0; ++i)
        for (int cc = 0; cc < 3; ++cc)
            edge_out.d0(i, cc) = res.x[static_cast<size_t>(cc)](iu.edge_offset + i);
    for (int i = 0; i < n1; ++i)
        for (int cc = 0; cc < 3; ++cc)
            edge_out.d1(i, cc) = res.x[static_cast<size_t>(cc)](iu.edge_offset + n0 + i);
    return {"interface", itf.id, res.objective, res.constraint_residual};
}

void add_patch_fidelity(Workspace& ws, const ClassMap& cm, int patch, StageProblem& sp) {
    const auto& s = ws.F.space().s;
    const double sigma = ws.prm.sigma();
    const auto brk = s.breaks();
    std::vector<QuadratureRule> rules;
    for (size_t i = 0; i + 1 < brk.size(); ++i)
        rules.push_back(gauss_legendre(ws.prm.quad_order(), brk[i], brk[i + 1]));
    const Frame id{};
    FunBuf f;
    for (const auto& ru : rules)
        for (size_t qu = 0; qu < ru.nodes.size(); ++qu)
            for (const auto& rv : rules)
                for (size_t qv = 0; qv < rv.nodes.size(); ++qv) {
                    const double u = ru.nodes[qu], v = rv.nodes[qv];
                    const double w = ru.weights[qu] * rv.weights[qv];
                    const auto sjet = ws.S.jet2(patch, u, v);
                    static constexpr int kD[3][2] = {{0, 0}, {1, 0}, {0, 1}};
                    for (int d = 0; d < 3; ++d) {
                        f.clear();
                        add_point_functional(cm, patch, id, u, v, kD[d][0], kD[d][1], 1.0, f);
                        sp.add_quadratic(f, sjet[static_cast<size_t>(d)],
                                         w * std::pow(sigma, kD[d][0] + kD[d][1]));
                    }
                }
}

StageReport solve_patch_problem(Workspace& ws, int patch) {
    const auto& space = ws.F.space();
    ClassMap cm{&ws.F, std::vector<int>(static_cast<size_t>(ws.F.num_classes()), -1)};
    std::vector<int> unknown_classes;
    for (int slot = 0; slot < space.dim(); ++slot) {
        const int cls = ws.F.class_of(patch, slot);
        if (ws.provenance[static_cast<size_t>(cls)] == StageTag::Unset &&
            cm.to_unknown[static_cast<size_t>(cls)] < 0) {
            cm.to_unknown[static_cast<size_t>(cls)] = static_cast<int>(unknown_classes.size());
            unknown_classes.push_back(cls);
        }
    }
    StageProblem sp(static_cast<int>(unknown_classes.size()));
    add_patch_fidelity(ws, cm, patch, sp);
    auto res = sp.solve("patch " + std::to_string(patch));
    for (size_t i = 0; i < unknown_classes.size(); ++i) {
        ws.F.set_class_value(unknown_classes[i], Vec3(res.x[0](static_cast<Eigen::Index>(i)),
                                                      res.x[1](static_cast<Eigen::Index>(i)),
                                                      res.x[2](static_cast<Eigen::Index>(i))));
        ws.provenance[static_cast<size_t>(unknown_classes[i])] = StageTag::PatchStage;
    }
    return {"patch", patch, res.objective, res.constraint_residual};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

ConstructionResult construct_local(const SurfaceSource& s, const Topology& topo,
                                   const ConstructionParams& params) {
    check_admissible(params, params.input_space);
    const TensorSplineSpace space((SplineSpace1D(params.p, params.r, params.k)));
    std::vector<Matrix> zeros(static_cast<size_t>(topo.num_patches),
                              Matrix::Zero(space.dim(), 3));
    MultiPatchSpline F(space, std::move(zeros), topo);
    GluingData gluing = estimate_gluing(s, topo);

    StageSolution stages;
    stages.provenance.assign(static_cast<size_t>(F.num_classes()), StageTag::Unset);
    stages.edges.resize(topo.interfaces.size());
    stages.input_g1_residual = sampled_g1_residual(s, topo, gluing, 33);

    Workspace ws{s, F, topo, gluing, params, stages.provenance};
    const auto t_start = std::chrono::steady_clock::now();

    std::vector<int> active_vertices;
    for (size_t i = 0; i < topo.vertices.size(); ++i)
        if (topo.vertices[i].valency() >= 2) active_vertices.push_back(static_cast<int>(i));
    std::vector<StageReport> vreports(active_vertices.size());
    parallel_for(static_cast<int>(active_vertices.size()), params.threads, [&](int i) {
        vreports[static_cast<size_t>(i)] = solve_vertex_problem(
            ws, topo.vertices[static_cast<size_t>(active_vertices[static_cast<size_t>(i)])]);
    });
    stages.seconds_vertex = seconds_since(t_start);

    const auto t_iface = std::chrono::steady_clock::now();
    std::vector<StageReport> ireports(topo.interfaces.size());
    parallel_for(static_cast<int>(topo.interfaces.size()), params.threads, [&](int m) {
        ireports[static_cast<size_t>(m)] =
            solve_interface_problem(ws, m, stages.edges[static_cast<size_t>(m)]);
    });
    stages.seconds_interface = seconds_since(t_iface);

    const auto t_patch = std::chrono::steady_clock::now();
    std::vector<StageReport> preports(static_cast<size_t>(topo.num_patches));
    parallel_for(topo.num_patches, params.threads,
                 [&](int p) { preports[static_cast<size_t>(p)] = solve_patch_problem(ws, p); });
    stages.seconds_patch = seconds_since(t_patch);
    stages.seconds_total = seconds_since(t_start);

    for (auto& r : vreports) stages.reports.push_back(std::move(r));
    for (auto& r : ireports) stages.reports.push_back(std::move(r));
    for (auto& r : preports) stages.reports.push_back(std::move(r));
    return {std::move(F), std::move(gluing), std::move(stages)};
}

ConstructionResult construct_global(const SurfaceSource& s, const Topology& topo,
                                    const ConstructionParams& params) {
    check_admissible(params, params.input_space);
    const TensorSplineSpace space((SplineSpace1D(params.p, params.r, params.k)));
    const auto [trace_space, trans_space] = space.s.companion_spaces();
    const int n = space.s.dim(), n0 = trace_space.dim(), n1 = trans_space.dim();
    std::vector<Matrix> zeros(static_cast<size_t>(topo.num_patches),
                              Matrix::Zero(space.dim(), 3));
    MultiPatchSpline F(space, std::move(zeros), topo);
    GluingData gluing = estimate_gluing(s, topo);

    StageSolution stages;
    stages.provenance.assign(static_cast<size_t>(F.num_classes()), StageTag::GlobalStage);
    stages.edges.resize(topo.interfaces.size());
    stages.input_g1_residual = sampled_g1_residual(s, topo, gluing, 33);
    const auto t_start = std::chrono::steady_clock::now();

    Workspace ws{s, F, topo, gluing, params, stages.provenance};
    ClassMap cm{&F, std::vector<int>(static_cast<size_t>(F.num_classes()))};
    for (int i = 0; i < F.num_classes(); ++i) cm.to_unknown[static_cast<size_t>(i)] = i;
    std::vector<int> edge_offsets(topo.interfaces.size());
    int nu = F.num_classes();
    for (size_t m = 0; m < topo.interfaces.size(); ++m) {
        edge_offsets[m] = nu;
        nu += n0 + n1;
    }
    StageProblem sp(nu);
    for (int p = 0; p < topo.num_patches; ++p) add_patch_fidelity(ws, cm, p, sp);

    const double sigma = params.sigma();
    FunBuf f;
    for (const auto& v : topo.vertices) {
        if (v.valency() < 2) continue;
        for (const auto& inc : v.interfaces) {
            const Interface& itf = topo.interfaces[static_cast<size_t>(inc.interface)];
            const InterfaceGluing& g = gluing.interfaces[static_cast<size_t>(inc.interface)];
            const double t = static_cast<double>(inc.end);
            for (int w = 0; w <= 2; ++w) {
                f.clear();
                const auto [u0, v0] = edge_point(0, t);
                add_point_functional(cm, itf.patch[0], itf.frame[0], u0, v0, 0, w,
                                     std::pow(sigma, w), f);
                const auto [u1, v1] = edge_point(1, t);
                add_point_functional(cm, itf.patch[1], itf.frame[1], u1, v1, w, 0,
                                     -std::pow(sigma, w), f);
                sp.add_constraint(std::move(f));
                f = FunBuf{};
            }
            const double a1 = g.alpha(0, t), a2 = g.alpha(1, t);
            FunBuf n1f, n2f, dn1, dn2;
            edge_n_functional(cm, itf, g, 0, t, 1.0, n1f);
            edge_n_functional(cm, itf, g, 1, t, 1.0, n2f);
            edge_dn_functional(cm, itf, g, 0, t, 1.0, dn1);
            edge_dn_functional(cm, itf, g, 1, t, 1.0, dn2);
            f.clear();
            f.axpy(sigma * a2, n1f);
            f.axpy(-sigma * a1, n2f);
            sp.add_constraint(std::move(f));
            f = FunBuf{};
            const double s2 = sigma * sigma;
            f.clear();
            f.axpy(s2 * a2 * a2 * a1, dn1);
            f.axpy(-s2 * a2 * a2 * g.dalpha(0), n1f);
            f.axpy(-s2 * a1 * a1 * a2, dn2);
            f.axpy(s2 * a1 * a1 * g.dalpha(1), n2f);
            sp.add_constraint(std::move(f));
            f = FunBuf{};
        }
    }
    const auto grev = space.s.greville();
    for (size_t m = 0; m < topo.interfaces.size(); ++m) {
        const Interface& itf = topo.interfaces[m];
        const InterfaceGluing& g = gluing.interfaces[m];
        for (int side = 0; side < 2; ++side) {
            const auto [f0_lo, f0_hi] = f0_collocation_range(side, n);
            for (int j = f0_lo; j <= f0_hi; ++j) {
                const double z = grev[static_cast<size_t>(j)];
                f.clear();
                const auto [u, v] = edge_point(side, z);
                add_point_functional(cm, itf.patch[static_cast<size_t>(side)],
                                     itf.frame[static_cast<size_t>(side)], u, v, 0, 0, 1.0, f);
                const auto t0 = trace_space.eval_basis(z, 0);
                for (int i = 0; i <= trace_space.degree(); ++i)
                    f.terms.emplace_back(edge_offsets[m] + t0.first + i, -t0.values(0, i));
                sp.add_constraint(std::move(f));
                f = FunBuf{};
            }
            const auto [f1_lo, f1_hi] = f1_collocation_range(side, n);
            for (int j = f1_lo; j <= f1_hi; ++j) {
                const double z = grev[static_cast<size_t>(j)];
                f.clear();
                edge_n_functional(cm, itf, g, side, z, sigma, f);
                const double a = g.alpha(side, z);
                const auto t1 = trans_space.eval_basis(z, 0);
                for (int i = 0; i <= trans_space.degree(); ++i)
                    f.terms.emplace_back(edge_offsets[m] + n0 + t1.first + i,
                                         -sigma * a * t1.values(0, i));
                sp.add_constraint(std::move(f));
                f = FunBuf{};
            }
        }
    }

    auto res = sp.solve("global");
    for (int cls = 0; cls < F.num_classes(); ++cls)
        F.set_class_value(cls, Vec3(res.x[0](cls), res.x[1](cls), res.x[2](cls)));
    for (size_t m = 0; m < topo.interfaces.size(); ++m) {
        auto& e = stages.edges[m];
        e.d0 = Matrix(n0, 3);
        e.d1 = Matrix(n1, 3);
        for (int i = 0; i < n0; ++i)
            for (int cc = 0; cc < 3; ++cc)
                e.d0(i, cc) = res.x[static_cast<size_t>(cc)](edge_offsets[m] + i);
        for (int i = 0; i < n1; ++i)
            for (int cc = 0; cc < 3; ++cc)
                e.d1(i, cc) = res.x[static_cast<size_t>(cc)](edge_offsets[m] + n0 + i);
    }
    stages.reports.push_back({"global", 0, res.objective, res.constraint_residual});
    stages.seconds_total = seconds_since(t_start);
    return {std::move(F), std::move(gluing), std::move(stages)};
}

namespace {

// G1 identity residual of one interface at xi for any jet provider.
template <typename Jet>
Vec3 g1_identity(const InterfaceGluing& g, double xi, const Jet& jet_side) {
    const auto j1 = jet_side(0, xi);  // local jet of side 1 at (0, xi)
    const auto j2 = jet_side(1, xi);  // local jet of side 2 at (xi, 0)
    return g.alpha(0, xi) * j2[2] + g.alpha(1, xi) * j1[1] + g.beta_composite(xi) * j1[2];
}

template <typename Jet>
double interface_scale(const InterfaceGluing& g, const Jet& jet_side) {
    double deriv = 0.0;
    for (int side = 0; side < 2; ++side)
        for (int end = 0; end < 2; ++end) {
            const auto j = jet_side(side, static_cast<double>(end));
            deriv = std::max({deriv, j[1].norm(), j[2].norm()});
        }
    double amax = 0.0;
    for (int side = 0; side < 2; ++side)
        amax = std::max({amax, std::abs(g.a0[static_cast<size_t>(side)]),
                         std::abs(g.a1[static_cast<size_t>(side)])});
    return std::max(1e-300, deriv * std::max(1.0, amax));
}

}  // namespace

double sampled_g1_residual(const SurfaceSource& s, const Topology& topo, const GluingData& gluing,
                           int samples) {
    double worst = 0.0;
    for (size_t m = 0; m < topo.interfaces.size(); ++m) {
        const Interface& itf = topo.interfaces[m];
        auto jet_side = [&](int side, double xi) {
            const auto [u, v] = edge_point(side, xi);
            return source_jet2_in_frame(s, itf.patch[static_cast<size_t>(side)],
                                        itf.frame[static_cast<size_t>(side)], u, v);
        };
        const double scale = interface_scale(gluing.interfaces[m], jet_side);
        for (int i = 0; i < samples; ++i) {
            const double xi = samples == 1 ? 0.5 : static_cast<double>(i) / (samples - 1);
            worst = std::max(worst,
                             g1_identity(gluing.interfaces[m], xi, jet_side).norm() / scale);
        }
    }
    return worst;
}

Asg1CheckReport check_asg1(const MultiPatchSpline& f, const GluingData& gluing, int samples) {
    Asg1CheckReport report;
    report.alpha_min_product = std::numeric_limits<double>::infinity();
    const auto& topo = f.topology();
    const auto& s = f.space().s;
    const int n = s.dim();
    const auto [trace_space, trans_space] = s.companion_spaces();
    const Matrix emb0 = embedding_matrix(trace_space, s);
    const Matrix mass = gram_matrix(s, s, 0, 0, s.degree() + 1);
    const auto grev = s.greville();

    for (size_t m = 0; m < topo.interfaces.size(); ++m) {
        const Interface& itf = topo.interfaces[m];
        const InterfaceGluing& g = gluing.interfaces[m];
        InterfaceResiduals res;
        res.id = itf.id;
        auto jet_side = [&](int side, double xi) {
            const auto [u, v] = edge_point(side, xi);
            return transform_jet2(f.jet2(itf.patch[static_cast<size_t>(side)],
                                         itf.frame[static_cast<size_t>(side)].map_point(u, v).first,
                                         itf.frame[static_cast<size_t>(side)].map_point(u, v).second),
                                  itf.frame[static_cast<size_t>(side)]);
        };
        const double scale = interface_scale(g, jet_side);
        for (int i = 0; i < samples; ++i) {
            const double xi = samples == 1 ? 0.5 : static_cast<double>(i) / (samples - 1);
            res.g1 = std::max(res.g1, g1_identity(g, xi, jet_side).norm() / scale);
            const auto j1 = jet_side(0, xi);
            const auto j2 = jet_side(1, xi);
            res.c0 = std::max(res.c0, (j1[0] - j2[0]).norm() / scale);
            report.alpha_min_product =
                std::min(report.alpha_min_product, g.alpha(0, xi) * g.alpha(1, xi));
        }

        // Trace membership: L2 distance of the side-1 trace to S^{p,r+1}.
        Matrix trace(n, 3);
        for (int j = 0; j < n; ++j) {
            auto [j1, j2] = itf.frame[0].map_index(0, j, n);
            trace.row(j) = f.patch_coefs(itf.patch[0]).row(f.space().index(j1, j2));
        }
        {
            const Matrix EME = emb0.transpose() * mass * emb0;
            const Matrix w = EME.ldlt().solve(emb0.transpose() * mass * trace);
            const Matrix diff = trace - emb0 * w;
            double num = 0.0, den = 0.0;
            for (int cc = 0; cc < 3; ++cc) {
                num += diff.col(cc).dot(mass * diff.col(cc));
                den += trace.col(cc).dot(mass * trace.col(cc));
            }
            res.f0_membership = std::sqrt(std::max(0.0, num) / std::max(den, 1e-300));
        }

        // Best common f1 in S^{p-1,r} against both cleared identities at the
        // Greville points.
        {
            const int n1 = trans_space.dim();
            Matrix A = Matrix::Zero(2 * n, n1);
            Matrix rhs(2 * n, 3);
            for (int j = 0; j < n; ++j) {
                const double z = grev[static_cast<size_t>(j)];
                for (int side = 0; side < 2; ++side) {
                    const auto jet = jet_side(side, z);
                    const double sgn = side == 0 ? 1.0 : -1.0;
                    const Vec3 nvec =
                        sgn * (side == 0 ? jet[1] + g.beta(0, z) * jet[2]
                                         : jet[2] + g.beta(1, z) * jet[1]);
                    const int row = side * n + j;
                    rhs.row(row) = nvec.transpose();
                    const auto tb = trans_space.eval_basis(z, 0);
                    for (int i = 0; i <= trans_space.degree(); ++i)
                        A(row, tb.first + i) = g.alpha(side, z) * tb.values(0, i);
                }
            }
            Matrix best(n1, 3);
            for (int cc = 0; cc < 3; ++cc) best.col(cc) = lsq_min_norm(A, rhs.col(cc));
            const Matrix resid = A * best - rhs;
            res.f1_identity = resid.cwiseAbs().maxCoeff() / scale;
        }

        report.max_residual = std::max({report.max_residual, res.g1, res.c0, res.f0_membership,
                                        res.f1_identity});
        report.interfaces.push_back(res);
    }
    if (topo.interfaces.empty()) report.alpha_min_product = 1.0;
    return report;
}

}  // namespace asg1
