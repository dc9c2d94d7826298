#include "asg1/iga.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <cmath>

namespace asg1 {

SurfacePoint surface_metrics(const MultiPatchSpline& f, int patch, double u, double v) {
    const auto jet = f.jet2(patch, u, v);
    SurfacePoint sp;
    sp.x = jet[0];
    sp.du = jet[1];
    sp.dv = jet[2];
    sp.g(0, 0) = jet[1].dot(jet[1]);
    sp.g(0, 1) = sp.g(1, 0) = jet[1].dot(jet[2]);
    sp.g(1, 1) = jet[2].dot(jet[2]);
    const Vec3 cr = jet[1].cross(jet[2]);
    sp.jac = cr.norm();
    if (!(sp.jac > 0.0))
        throw RegularityError("degenerate Jacobian on patch " + std::to_string(patch));
    sp.normal = cr / sp.jac;
    sp.ginv = sp.g.inverse();
    return sp;
}

BeltramiCoefs beltrami_coefs(const MultiPatchSpline& f, int patch, double u, double v) {
    const auto jet = f.jet2(patch, u, v);
    const Vec3 &fu = jet[1], &fv = jet[2], &fuu = jet[3], &fuv = jet[4], &fvv = jet[5];
    Eigen::Matrix2d g;
    g(0, 0) = fu.dot(fu);
    g(0, 1) = g(1, 0) = fu.dot(fv);
    g(1, 1) = fv.dot(fv);
    const Eigen::Matrix2d gi = g.inverse();
    const double det = g.determinant();
    const double sqrtg = std::sqrt(det);

    // dg[a] = derivative of the metric along parameter a.
    std::array<Eigen::Matrix2d, 2> dg;
    dg[0] << 2.0 * fuu.dot(fu), fuu.dot(fv) + fu.dot(fuv), fuu.dot(fv) + fu.dot(fuv),
        2.0 * fuv.dot(fv);
    dg[1] << 2.0 * fuv.dot(fu), fuv.dot(fv) + fu.dot(fvv), fuv.dot(fv) + fu.dot(fvv),
        2.0 * fvv.dot(fv);

    BeltramiCoefs c;
    c.c20 = gi(0, 0);
    c.c02 = gi(1, 1);
    c.c11 = 2.0 * gi(0, 1);
    for (int b = 0; b < 2; ++b) {
        double acc = 0.0;
        for (int a = 0; a < 2; ++a) {
            const double dsqrtg = 0.5 * sqrtg * (gi * dg[static_cast<size_t>(a)]).trace();
            const Eigen::Matrix2d dginv = -gi * dg[static_cast<size_t>(a)] * gi;
            acc += (dsqrtg / sqrtg) * gi(a, b) + dginv(a, b);
        }
        (b == 0 ? c.c10 : c.c01) = acc;
    }
    return c;
}

ManufacturedSolution manufactured_solution(const std::string& name) {
    ManufacturedSolution ms;
    ms.name = name;
    if (name == "cos4sin4") {
        ms.has_exact = true;
        ms.u = [](const Vec3& x) { return std::cos(4.0 * x(0)) * std::sin(4.0 * x(1)); };
        ms.grad_u = [](const Vec3& x) {
            return Vec3(-4.0 * std::sin(4.0 * x(0)) * std::sin(4.0 * x(1)),
                        4.0 * std::cos(4.0 * x(0)) * std::cos(4.0 * x(1)), 0.0);
        };
        ms.lap_u = [](const Vec3& x) {
            return -32.0 * std::cos(4.0 * x(0)) * std::sin(4.0 * x(1));
        };
        ms.f = [](const Vec3& x) {
            return 1024.0 * std::cos(4.0 * x(0)) * std::sin(4.0 * x(1));
        };
        return ms;
    }
    if (name == "coshalf") {
        ms.has_exact = false;
        ms.f = [](const Vec3& x) {
            return std::cos(0.5 * x(0)) * std::cos(0.5 * x(1)) * std::cos(0.5 * x(2));
        };
        return ms;
    }
    throw std::invalid_argument("unknown manufactured solution '" + name + "'");
}

ProblemSpec make_problem(ProblemKind kind, const ManufacturedSolution& ms, double lambda_r) {
    ProblemSpec ps;
    ps.kind = kind;
    ps.source = ms.f;
    ps.lambda_r = lambda_r;
    if (kind == ProblemKind::DirichletBiharmonic) {
        if (!ms.has_exact)
            throw std::invalid_argument("Dirichlet problem needs an exact manufactured solution");
        ps.g1 = ms.u;
        auto grad = ms.grad_u;
        ps.g2 = [grad](const Vec3& x, const Vec3& n) { return grad(x).dot(n); };
    }
    return ps;
}

namespace {

struct QuadTables {
    std::vector<double> nodes, weights;      // all points of one direction
    std::vector<SplineSpace1D::BasisTable> tables;  // basis values with 2 derivatives
    int per_span = 0;
};

QuadTables direction_tables(const SplineSpace1D& s, int q) {
    QuadTables t;
    t.per_span = q;
    const auto brk = s.breaks();
    for (size_t sp = 0; sp + 1 < brk.size(); ++sp) {
        const auto rule = gauss_legendre(q, brk[sp], brk[sp + 1]);
        for (size_t i = 0; i < rule.nodes.size(); ++i) {
            t.nodes.push_back(rule.nodes[i]);
            t.weights.push_back(rule.weights[i]);
            t.tables.push_back(s.eval_basis(rule.nodes[i], 2));
        }
    }
    return t;
}

}  // namespace

AssembledSystem assemble(const ProblemSpec& problem, const C1Space& space) {
    const auto& F = space.geometry();
    const auto& topo = F.topology();
    if (problem.kind == ProblemKind::ReactionBiharmonic && !topo.closed())
        throw std::invalid_argument("reaction problem requires a closed surface");
    if (problem.kind == ProblemKind::DirichletBiharmonic && topo.closed())
        throw std::invalid_argument("Dirichlet problem requires a nonempty boundary");

    const auto& s = F.space().s;
    const int p = s.degree();
    const int n = s.dim();
    const int n2 = n * n;
    const int total = topo.num_patches * n2;
    const int q = p + 2;
    const QuadTables qt = direction_tables(s, q);
    const int nloc = (p + 1) * (p + 1);

    std::vector<Eigen::Triplet<double>> at, mt;
    Vector load_t = Vector::Zero(total);
    Matrix ke(nloc, nloc), me(nloc, nloc);
    Vector fe(nloc), lap(nloc), val(nloc);
    std::vector<int> gids(static_cast<size_t>(nloc));

    for (int patch = 0; patch < topo.num_patches; ++patch) {
        for (size_t iu = 0; iu < qt.nodes.size(); iu += static_cast<size_t>(qt.per_span))
            for (size_t iv = 0; iv < qt.nodes.size(); iv += static_cast<size_t>(qt.per_span)) {
                ke.setZero();
                me.setZero();
                fe.setZero();
                bool gids_set = false;
                for (int a = 0; a < qt.per_span; ++a)
                    for (int b = 0; b < qt.per_span; ++b) {
                        const size_t gu = iu + static_cast<size_t>(a);
                        const size_t gv = iv + static_cast<size_t>(b);
                        const double u = qt.nodes[gu], v = qt.nodes[gv];
                        const double w = qt.weights[gu] * qt.weights[gv];
                        const auto& tu = qt.tables[gu];
                        const auto& tv = qt.tables[gv];
                        const auto met = surface_metrics(F, patch, u, v);
                        const auto bel = beltrami_coefs(F, patch, u, v);
                        int loc = 0;
                        for (int i = 0; i <= p; ++i)
                            for (int j = 0; j <= p; ++j, ++loc) {
                                if (!gids_set)
                                    gids[static_cast<size_t>(loc)] =
                                        patch * n2 +
                                        F.space().index(tu.first + i, tv.first + j);
                                val(loc) = tu.values(0, i) * tv.values(0, j);
                                lap(loc) = bel.apply(
                                    tu.values(1, i) * tv.values(0, j),
                                    tu.values(0, i) * tv.values(1, j),
                                    tu.values(2, i) * tv.values(0, j),
                                    tu.values(1, i) * tv.values(1, j),
                                    tu.values(0, i) * tv.values(2, j));
                            }
                        gids_set = true;
                        const double wj = w * met.jac;
                        ke.noalias() += wj * lap * lap.transpose();
                        me.noalias() += wj * val * val.transpose();
                        const double fv = problem.source ? problem.source(met.x) : 0.0;
                        fe.noalias() += wj * fv * val;
                    }
                for (int a = 0; a < nloc; ++a) {
                    load_t(gids[static_cast<size_t>(a)]) += fe(a);
                    for (int b = 0; b < nloc; ++b) {
                        at.emplace_back(gids[static_cast<size_t>(a)], gids[static_cast<size_t>(b)],
                                        ke(a, b));
                        mt.emplace_back(gids[static_cast<size_t>(a)], gids[static_cast<size_t>(b)],
                                        me(a, b));
                    }
                }
            }
    }
    SparseMatrix At(total, total), Mt(total, total);
    At.setFromTriplets(at.begin(), at.end());
    Mt.setFromTriplets(mt.begin(), mt.end());

    AssembledSystem sys;
    const SparseMatrix& B = space.basis();
    sys.stiffness = B.transpose() * At * B;
    sys.mass = B.transpose() * Mt * B;
    sys.load = B.transpose() * load_t;
    if (problem.kind == ProblemKind::ReactionBiharmonic)
        sys.stiffness = sys.stiffness + problem.lambda_r * sys.mass;
    return sys;
}

DirichletConstraints impose_dirichlet(const C1Space& space,
                                      const std::function<double(const Vec3&)>& g1,
                                      const std::function<double(const Vec3&, const Vec3&)>& g2) {
    const auto& F = space.geometry();
    const auto& topo = F.topology();
    if (topo.closed()) throw std::invalid_argument("impose_dirichlet: surface has no boundary");
    const auto& s = F.space().s;
    const int p = s.degree(), r = s.regularity(), k = s.inner_knots();
    const int n = s.dim();
    const int n2 = n * n;
    const int q = p + 2;

    const SplineSpace1D trace_space(p, r + 1, k);
    const SplineSpace1D trans_space(p - 1, r, k);
    const Matrix mass = gram_matrix(s, s, 0, 0, q);
    const Matrix E0 = embedding_matrix(trace_space, s);
    // Left inverses extracting edge-space coefficients from S^{p,r} data.
    const Matrix L0 =
        (E0.transpose() * mass * E0).ldlt().solve(Matrix(E0.transpose() * mass));
    const Matrix MW1 = gram_matrix(trans_space, trans_space, 0, 0, q);
    const Matrix L1 = MW1.ldlt().solve(gram_matrix(trans_space, s, 0, 0, q));

    const auto td = s.eval_basis(0.0, 1);
    const double w0 = td.values(1, 0), w1 = td.values(1, 1);

    std::vector<Eigen::Triplet<double>> rows_t;
    std::vector<double> values;
    int row = 0;
    for (const auto& bc : topo.boundary) {
        auto gid = [&](int a, int j) {
            auto [j1, j2] = bc.frame.map_index(a, j, n);
            return bc.patch * n2 + F.space().index(j1, j2);
        };
        // Edge geometry and boundary weights.
        auto edge_jet = [&](double xi) {
            return source_jet2_in_frame(SplineSurfaceSource(&F), bc.patch, bc.frame, 0.0, xi);
        };
        // Project trace data onto S^{p,r+1}.
        const Vector tstar = l2_project_1d(
            trace_space, [&](double xi) { return g1(edge_jet(xi)[0]); }, q);
        for (int i = 0; i < trace_space.dim(); ++i) {
            for (int j = 0; j < n; ++j)
                if (L0(i, j) != 0.0) rows_t.emplace_back(row, gid(0, j), L0(i, j));
            values.push_back(tstar(i));
            ++row;
        }
        // Transversal data: dn u = w1 * D + w2 * T'.
        auto dstar_fun = [&](double xi) {
            const auto jet = edge_jet(xi);
            const Eigen::Vector2d e(jet[1](0), jet[1](1));
            const Eigen::Vector2d t(jet[2](0), jet[2](1));
            Eigen::Vector2d nrm = e - (e.dot(t) / t.squaredNorm()) * t;
            nrm = -nrm.normalized();  // outward
            Eigen::Matrix2d J;
            J.col(0) = e;
            J.col(1) = t;
            const Eigen::Vector2d wvec = J.inverse() * nrm;
            // T' from the projected trace.
            const Vector db = trace_space.eval_all(xi, 1);
            const double tprime = tstar.dot(db);
            const double rhs = g2(jet[0], Vec3(nrm(0), nrm(1), 0.0)) - wvec(1) * tprime;
            return rhs / wvec(0);
        };
        const Vector dstar = l2_project_1d(trans_space, dstar_fun, q);
        for (int i = 0; i < trans_space.dim(); ++i) {
            for (int j = 0; j < n; ++j) {
                if (L1(i, j) == 0.0) continue;
                rows_t.emplace_back(row, gid(0, j), L1(i, j) * w0);
                rows_t.emplace_back(row, gid(1, j), L1(i, j) * w1);
            }
            values.push_back(dstar(i));
            ++row;
        }
    }
    SparseMatrix R(row, topo.num_patches * n2);
    R.setFromTriplets(rows_t.begin(), rows_t.end());
    DirichletConstraints out;
    out.rows = R * space.basis();
    out.values = Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
    return out;
}

SolveInfo solve(const ProblemSpec& problem, const C1Space& space) {
    AssembledSystem sys = assemble(problem, space);
    SolveInfo info;
    const Eigen::Index nd = sys.stiffness.rows();
    if (problem.kind == ProblemKind::ReactionBiharmonic) {
        Eigen::SimplicialLDLT<SparseMatrix> ldlt(sys.stiffness);
        if (ldlt.info() != Eigen::Success)
            throw DegenerateSystemError("reaction solve: factorization failed");
        info.u = ldlt.solve(sys.load);
        info.linear_residual =
            (sys.stiffness * info.u - sys.load).norm() / (1.0 + sys.load.norm());
        return info;
    }

    DirichletConstraints bc = impose_dirichlet(space, problem.g1, problem.g2);

    // Boundary rows are dependent where edges meet (corner functionals are
    // shared through the C1 coupling); keep an independent subset, found by
    // pivoted Cholesky on the row Gram matrix.
    std::vector<int> selected;
    {
        const Matrix gram = Matrix(bc.rows * bc.rows.transpose());
        const Eigen::Index m = gram.rows();
        Vector d = gram.diagonal();
        Matrix L = Matrix::Zero(m, m);
        const double tol = 1e-20 + 1e-12 * d.maxCoeff();
        std::vector<bool> used(static_cast<size_t>(m), false);
        for (Eigen::Index step = 0; step < m; ++step) {
            Eigen::Index piv = -1;
            double best = tol;
            for (Eigen::Index j = 0; j < m; ++j)
                if (!used[static_cast<size_t>(j)] && d(j) > best) {
                    best = d(j);
                    piv = j;
                }
            if (piv < 0) break;
            used[static_cast<size_t>(piv)] = true;
            const Eigen::Index rsel = static_cast<Eigen::Index>(selected.size());
            const double diag = std::sqrt(d(piv));
            for (Eigen::Index j = 0; j < m; ++j) {
                double val = gram(j, piv);
                for (Eigen::Index t = 0; t < rsel; ++t) val -= L(j, t) * L(piv, t);
                L(j, rsel) = val / diag;
            }
            for (Eigen::Index j = 0; j < m; ++j) d(j) -= L(j, rsel) * L(j, rsel);
            selected.push_back(static_cast<int>(piv));
        }
        std::sort(selected.begin(), selected.end());
    }
    const Eigen::Index m = static_cast<Eigen::Index>(selected.size());

    std::vector<Eigen::Triplet<double>> kt;
    for (int cc = 0; cc < sys.stiffness.outerSize(); ++cc)
        for (SparseMatrix::InnerIterator it(sys.stiffness, cc); it; ++it)
            kt.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    std::vector<int> row_slot(static_cast<size_t>(bc.rows.rows()), -1);
    for (size_t i = 0; i < selected.size(); ++i) row_slot[static_cast<size_t>(selected[i])] =
        static_cast<int>(i);
    for (int cc = 0; cc < bc.rows.outerSize(); ++cc)
        for (SparseMatrix::InnerIterator it(bc.rows, cc); it; ++it) {
            const int slot = row_slot[static_cast<size_t>(it.row())];
            if (slot < 0) continue;
            kt.emplace_back(static_cast<int>(nd) + slot, static_cast<int>(it.col()), it.value());
            kt.emplace_back(static_cast<int>(it.col()), static_cast<int>(nd) + slot, it.value());
        }
    SparseMatrix K(nd + m, nd + m);
    K.setFromTriplets(kt.begin(), kt.end());
    Vector rhs = Vector::Zero(nd + m);
    rhs.head(nd) = sys.load;
    for (Eigen::Index i = 0; i < m; ++i)
        rhs(nd + i) = bc.values(selected[static_cast<size_t>(i)]);
    Eigen::SparseLU<SparseMatrix> lu(K);
    if (lu.info() != Eigen::Success)
        throw DegenerateSystemError("dirichlet solve: factorization failed "
                                    "(possible C1 space deficiency)");
    Vector z = lu.solve(rhs);
    info.u = z.head(nd);
    info.linear_residual = (K * z - rhs).norm() / (1.0 + rhs.norm());
    info.constraint_residual =
        bc.rows.rows() > 0 ? (bc.rows * info.u - bc.values).cwiseAbs().maxCoeff() : 0.0;
    return info;
}

namespace {

struct FieldJets {
    double value, d10, d01, d20, d11, d02;
};

FieldJets tensor_scalar_jet(const TensorSplineSpace& space, const Vector& coefs, double u,
                            double v) {
    const auto& s = space.s;
    const auto t1 = s.eval_basis(u, 2);
    const auto t2 = s.eval_basis(v, 2);
    FieldJets out{};
    for (int a = 0; a <= s.degree(); ++a)
        for (int b = 0; b <= s.degree(); ++b) {
            const double c = coefs(space.index(t1.first + a, t2.first + b));
            if (c == 0.0) continue;
            out.value += c * t1.values(0, a) * t2.values(0, b);
            out.d10 += c * t1.values(1, a) * t2.values(0, b);
            out.d01 += c * t1.values(0, a) * t2.values(1, b);
            out.d20 += c * t1.values(2, a) * t2.values(0, b);
            out.d11 += c * t1.values(1, a) * t2.values(1, b);
            out.d02 += c * t1.values(0, a) * t2.values(2, b);
        }
    return out;
}

Vector refine_tensor_scalar(const SplineSpace1D& coarse, int level, const Vector& c) {
    const SplineSpace1D fine = coarse.refine_dyadic(level);
    const Matrix E = embedding_matrix(coarse, fine);
    const int nc = coarse.dim(), nf = fine.dim();
    Vector tmp = Vector::Zero(nf * nc), out = Vector::Zero(nf * nf);
    for (int j2 = 0; j2 < nc; ++j2)
        for (int i1 = 0; i1 < nf; ++i1) {
            double acc = 0.0;
            for (int j1 = 0; j1 < nc; ++j1)
                if (E(i1, j1) != 0.0) acc += E(i1, j1) * c(j1 * nc + j2);
            tmp(i1 * nc + j2) = acc;
        }
    for (int i1 = 0; i1 < nf; ++i1)
        for (int i2 = 0; i2 < nf; ++i2) {
            double acc = 0.0;
            for (int j2 = 0; j2 < nc; ++j2)
                if (E(i2, j2) != 0.0) acc += E(i2, j2) * tmp(i1 * nc + j2);
            out(i1 * nf + i2) = acc;
        }
    return out;
}

}  // namespace

ErrorNorms error_norms(const C1Space& space, const DiscreteField& u_h,
                       const ManufacturedSolution& exact) {
    if (!exact.has_exact)
        throw std::invalid_argument("error_norms: manufactured solution has no exact data");
    const auto& F = space.geometry();
    const auto& s = F.space().s;
    const int q = s.degree() + 2;
    const Vector tc = space.tensor_coefficients(u_h);
    const QuadTables qt = direction_tables(s, q);
    double e0 = 0.0, e1 = 0.0, e2 = 0.0;
    for (int patch = 0; patch < F.num_patches(); ++patch) {
        const Vector pc = space.patch_block(tc, patch);
        for (size_t gu = 0; gu < qt.nodes.size(); ++gu)
            for (size_t gv = 0; gv < qt.nodes.size(); ++gv) {
                const double u = qt.nodes[gu], v = qt.nodes[gv];
                const double w = qt.weights[gu] * qt.weights[gv];
                const auto met = surface_metrics(F, patch, u, v);
                const auto bel = beltrami_coefs(F, patch, u, v);
                const auto j = tensor_scalar_jet(F.space(), pc, u, v);
                const double dval = j.value - exact.u(met.x);
                const Vec3 gh = tangential_gradient(F, patch, u, v, j.d10, j.d01);
                Vec3 ge = exact.grad_u(met.x);
                ge -= ge.dot(met.normal) * met.normal;  // tangential part
                const double dlap =
                    bel.apply(j.d10, j.d01, j.d20, j.d11, j.d02) - exact.lap_u(met.x);
                e0 += w * met.jac * dval * dval;
                e1 += w * met.jac * (gh - ge).squaredNorm();
                e2 += w * met.jac * dlap * dlap;
            }
    }
    return {std::sqrt(e0), std::sqrt(e1), std::sqrt(e2)};
}

ErrorNorms estimators_h_h2(const C1Space& coarse, const DiscreteField& u_coarse,
                           const C1Space& fine, const DiscreteField& u_fine) {
    const auto& Fc = coarse.geometry();
    const auto& Ff = fine.geometry();
    const int kc = Fc.space().s.inner_knots(), kf = Ff.space().s.inner_knots();
    if (2 * (kc + 1) - 1 != kf)
        throw std::invalid_argument("estimators_h_h2: spaces are not one dyadic level apart");
    const auto& s = Ff.space().s;
    const int q = s.degree() + 2;
    const Vector tcc = coarse.tensor_coefficients(u_coarse);
    const Vector tcf = fine.tensor_coefficients(u_fine);
    const QuadTables qt = direction_tables(s, q);
    double e0 = 0.0, e1 = 0.0, e2 = 0.0;
    for (int patch = 0; patch < Ff.num_patches(); ++patch) {
        const Vector pc_coarse =
            refine_tensor_scalar(Fc.space().s, 1, coarse.patch_block(tcc, patch));
        const Vector pc_fine = fine.patch_block(tcf, patch);
        const Vector diff = pc_coarse - pc_fine;
        for (size_t gu = 0; gu < qt.nodes.size(); ++gu)
            for (size_t gv = 0; gv < qt.nodes.size(); ++gv) {
                const double u = qt.nodes[gu], v = qt.nodes[gv];
                const double w = qt.weights[gu] * qt.weights[gv];
                const auto met = surface_metrics(Ff, patch, u, v);
                const auto bel = beltrami_coefs(Ff, patch, u, v);
                const auto j = tensor_scalar_jet(Ff.space(), diff, u, v);
                const Vec3 gd = tangential_gradient(Ff, patch, u, v, j.d10, j.d01);
                const double dlap = bel.apply(j.d10, j.d01, j.d20, j.d11, j.d02);
                e0 += w * met.jac * j.value * j.value;
                e1 += w * met.jac * gd.squaredNorm();
                e2 += w * met.jac * dlap * dlap;
            }
    }
    return {std::sqrt(e0), std::sqrt(e1), std::sqrt(e2)};
}

ConvergenceLedger convergence_study(const ProblemSpec& problem, const MultiPatchSpline& geometry,
                                    const GluingData& gluing, int levels,
                                    const ManufacturedSolution& ms) {
    if (levels < 1) throw std::invalid_argument("convergence_study: need at least one level");
    ConvergenceLedger ledger;
    ledger.estimator_based = problem.kind == ProblemKind::ReactionBiharmonic;

    std::vector<C1Space> spaces;
    std::vector<DiscreteField> sols;
    MultiPatchSpline current = geometry;
    for (int lvl = 0; lvl < levels; ++lvl) {
        if (lvl > 0) current = current.refine_dyadic(1);
        C1Space space = C1Space::build(current, gluing);
        SolveInfo info = solve(problem, space);
        spaces.push_back(std::move(space));
        sols.push_back(std::move(info.u));
    }

    auto attach_orders = [](ConvergenceLedger& lg) {
        for (size_t i = 1; i < lg.rows.size(); ++i) {
            auto& r = lg.rows[i];
            const auto& prev = lg.rows[i - 1];
            if (prev.e_l2 > 0 && r.e_l2 > 0) r.ord_l2 = std::log2(prev.e_l2 / r.e_l2);
            if (prev.e_h1 > 0 && r.e_h1 > 0) r.ord_h1 = std::log2(prev.e_h1 / r.e_h1);
            if (prev.e_h2 > 0 && r.e_h2 > 0) r.ord_h2 = std::log2(prev.e_h2 / r.e_h2);
        }
    };

    if (!ledger.estimator_based) {
        for (int lvl = 0; lvl < levels; ++lvl) {
            const auto err = error_norms(spaces[static_cast<size_t>(lvl)],
                                         sols[static_cast<size_t>(lvl)], ms);
            ConvergenceRow row;
            row.level = lvl;
            row.h = 1.0 / (spaces[static_cast<size_t>(lvl)].geometry().space().s.inner_knots() + 1);
            row.dim = spaces[static_cast<size_t>(lvl)].dim();
            row.e_l2 = err.l2;
            row.e_h1 = err.h1;
            row.e_h2 = err.h2;
            ledger.rows.push_back(row);
        }
    } else {
        for (int lvl = 0; lvl + 1 < levels; ++lvl) {
            const auto est = estimators_h_h2(spaces[static_cast<size_t>(lvl)],
                                             sols[static_cast<size_t>(lvl)],
                                             spaces[static_cast<size_t>(lvl + 1)],
                                             sols[static_cast<size_t>(lvl + 1)]);
            ConvergenceRow row;
            row.level = lvl;
            row.h = 1.0 / (spaces[static_cast<size_t>(lvl)].geometry().space().s.inner_knots() + 1);
            row.dim = spaces[static_cast<size_t>(lvl)].dim();
            row.e_l2 = est.l2;
            row.e_h1 = est.h1;
            row.e_h2 = est.h2;
            ledger.rows.push_back(row);
        }
    }
    attach_orders(ledger);
    return ledger;
}

}  // namespace asg1
