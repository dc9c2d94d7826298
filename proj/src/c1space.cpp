#include "asg1/c1space.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <map>
#include <set>

namespace asg1 {

namespace {

Frame compose_swap(const Frame& f) { return Frame{!f.swap, f.flip1, f.flip2}; }

// Sparse scalar functional over stacked tensor dofs.
struct Row {
    std::vector<std::pair<int, double>> terms;
    void add(int gid, double w) { terms.emplace_back(gid, w); }
};

// One side of an interface or boundary curve, viewed so the edge is the
// local {u=0} line: trace T(xi) = phi(0,xi), transversal D(xi) = d1 phi(0,xi).
struct EdgeView {
    int patch;
    Frame frame;  // side-1 style
    const TensorSplineSpace* space;
    int base;  // patch * n^2

    int gid(int a, int j) const {
        auto [j1, j2] = frame.map_index(a, j, space->s.dim());
        return base + space->index(j1, j2);
    }
    // d^(l1,l2) phi_local(0, xi) as a functional over stacked dofs.
    void point_functional(double xi, int l1, int l2, double scale, Row& out) const {
        const auto& s = space->s;
        const auto t1 = s.eval_basis(0.0, l1);
        const auto t2 = s.eval_basis(xi, l2);
        for (int a = 0; a <= s.degree(); ++a) {
            const double wa = t1.values(l1, a);
            if (wa == 0.0) continue;
            for (int j = 0; j <= s.degree(); ++j) {
                const double wj = t2.values(l2, j);
                if (wj == 0.0) continue;
                out.add(gid(t1.first + a, t2.first + j), scale * wa * wj);
            }
        }
    }
    // Same, but accumulating into a local (a*n + j) edge-dof vector.
    void edge_local_functional(double xi, int l1, int l2, double scale, Vector& out) const {
        const auto& s = space->s;
        const int n = s.dim();
        const auto t1 = s.eval_basis(0.0, l1);
        const auto t2 = s.eval_basis(xi, l2);
        for (int a = 0; a <= s.degree(); ++a) {
            const double wa = t1.values(l1, a);
            if (wa == 0.0 || t1.first + a > 1) continue;
            for (int j = 0; j <= s.degree(); ++j)
                out((t1.first + a) * n + t2.first + j) += scale * wa * t2.values(l2, j);
        }
    }
};

// Nullspace basis of M (rows x cols) via full SVD.
Matrix kernel_of(const Matrix& M, double rel_tol) {
    if (M.rows() == 0 || M.cols() == 0) return Matrix::Identity(M.cols(), M.cols());
    Eigen::BDCSVD<Matrix> svd(M, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double cut = sv.size() ? rel_tol * sv(0) : 0.0;
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cut) ++rank;
    return svd.matrixV().rightCols(M.cols() - rank);
}

}  // namespace

Vec3 tangential_gradient(const MultiPatchSpline& f, int patch, double u, double v, double d10,
                         double d01) {
    const auto jet = f.jet2(patch, u, v);
    Eigen::Matrix2d g;
    g(0, 0) = jet[1].dot(jet[1]);
    g(0, 1) = g(1, 0) = jet[1].dot(jet[2]);
    g(1, 1) = jet[2].dot(jet[2]);
    const Eigen::Vector2d a = g.inverse() * Eigen::Vector2d(d10, d01);
    return a(0) * jet[1] + a(1) * jet[2];
}

C1Space C1Space::build(MultiPatchSpline geometry, GluingData gluing, const C1SpaceOptions& opts) {
    {
        auto chk = check_asg1(geometry, gluing, 33);
        if (chk.max_residual > opts.asg1_tol)
            throw std::invalid_argument(
                "C1Space: geometry is not AS-G1 within tolerance (residual " +
                std::to_string(chk.max_residual) + ")");
    }
    C1Space out(std::move(geometry), std::move(gluing));
    const MultiPatchSpline& F = out.f_;
    const GluingData& G = out.gluing_;
    const auto& topo = F.topology();
    const TensorSplineSpace& space = F.space();
    const auto& s = space.s;
    const int p = s.degree(), r = s.regularity(), k = s.inner_knots();
    const int n = s.dim();
    const int n2 = n * n;
    const int total = topo.num_patches * n2;
    const int q = opts.quad_order(p);

    const SplineSpace1D trace_space(p, r + 1, k);
    const SplineSpace1D trans_space(p - 1, r, k);
    const SplineSpace1D clear_space(p + 1, r - 1, k);  // holds the cleared identity
    const SplineSpace1D nspace(p, r - 1, k);           // holds N = D + beta T'

    const Matrix mass = gram_matrix(s, s, 0, 0, q);
    const Matrix E0 = embedding_matrix(trace_space, s);
    const Matrix C_trace = kernel_of(Matrix(E0.transpose() * mass), 1e-12);
    const Matrix MC_trace = mass * C_trace;  // rows act on trace coefficients
    const Matrix C_btrans = kernel_of(gram_matrix(trans_space, s, 0, 0, q), 1e-12);
    const Matrix MC_btrans = mass * C_btrans;

    const auto grev = s.greville();
    const auto grev_clear = clear_space.greville();
    const auto brk = s.breaks();

    auto edge_view = [&](int patch, const Frame& fr) {
        return EdgeView{patch, fr, &space, patch * n2};
    };

    std::vector<Row> rows;

    // ---- interface conditions ----
    for (size_t m = 0; m < topo.interfaces.size(); ++m) {
        const Interface& itf = topo.interfaces[m];
        const InterfaceGluing& g = G.interfaces[m];
        const EdgeView va = edge_view(itf.patch[0], itf.frame[0]);
        const EdgeView vb = edge_view(itf.patch[1], compose_swap(itf.frame[1]));

        // (a) trace agreement at the Greville points of S^{p,r}.
        for (double z : grev) {
            Row row;
            va.point_functional(z, 0, 0, 1.0, row);
            vb.point_functional(z, 0, 0, -1.0, row);
            rows.push_back(std::move(row));
        }
        // (a) cleared transversal identity alpha_B N_A + alpha_A N_B = 0 at
        // the Greville points of S^{p+1,r-1}.
        for (double z : grev_clear) {
            Row row;
            const double aA = g.alpha(0, z), aB = g.alpha(1, z);
            va.point_functional(z, 1, 0, aB, row);
            va.point_functional(z, 0, 1, aB * g.beta(0, z), row);
            vb.point_functional(z, 1, 0, aA, row);
            vb.point_functional(z, 0, 1, aA * g.beta(1, z), row);
            rows.push_back(std::move(row));
        }
        // (b) trace membership in S^{p,r+1} (side A suffices given (a)).
        for (Eigen::Index c = 0; c < MC_trace.cols(); ++c) {
            Row row;
            for (int j = 0; j < n; ++j)
                if (MC_trace(j, c) != 0.0) row.add(va.gid(0, j), MC_trace(j, c));
            rows.push_back(std::move(row));
        }
        // (b) transversal membership: N_A in alpha_A * S^{p-1,r} within
        // S^{p,r-1}, imposed against the orthogonal complement.
        {
            Matrix Mwv = Matrix::Zero(trans_space.dim(), nspace.dim());
            for (size_t sp = 0; sp + 1 < brk.size(); ++sp) {
                const auto rule = gauss_legendre(q, brk[sp], brk[sp + 1]);
                for (size_t gq = 0; gq < rule.nodes.size(); ++gq) {
                    const double z = rule.nodes[gq], w = rule.weights[gq];
                    const auto tw = trans_space.eval_basis(z, 0);
                    const auto tv = nspace.eval_basis(z, 0);
                    const double a = g.alpha(0, z);
                    for (int i = 0; i <= trans_space.degree(); ++i)
                        for (int j = 0; j <= nspace.degree(); ++j)
                            Mwv(tw.first + i, tv.first + j) +=
                                w * a * tw.values(0, i) * tv.values(0, j);
                }
            }
            const Matrix Cm = kernel_of(Mwv, 1e-12);
            if (Cm.cols() > 0) {
                Matrix g_iv = Matrix::Zero(nspace.dim(), 2 * n);  // <v_i, N_A> over edge dofs
                Vector nf = Vector::Zero(2 * n);
                for (size_t sp = 0; sp + 1 < brk.size(); ++sp) {
                    const auto rule = gauss_legendre(q, brk[sp], brk[sp + 1]);
                    for (size_t gq = 0; gq < rule.nodes.size(); ++gq) {
                        const double z = rule.nodes[gq], w = rule.weights[gq];
                        const auto tv = nspace.eval_basis(z, 0);
                        nf.setZero();
                        va.edge_local_functional(z, 1, 0, 1.0, nf);
                        va.edge_local_functional(z, 0, 1, g.beta(0, z), nf);
                        for (int i = 0; i <= nspace.degree(); ++i)
                            g_iv.row(tv.first + i) += w * tv.values(0, i) * nf.transpose();
                    }
                }
                const Matrix crows = Cm.transpose() * g_iv;
                for (Eigen::Index c = 0; c < crows.rows(); ++c) {
                    Row row;
                    for (int a = 0; a <= 1; ++a)
                        for (int j = 0; j < n; ++j) {
                            const double w = crows(c, a * n + j);
                            if (w != 0.0) row.add(va.gid(a, j), w);
                        }
                    rows.push_back(std::move(row));
                }
            }
        }
    }

    // ---- boundary memberships (alpha = 1, beta = 0) ----
    for (const auto& bc : topo.boundary) {
        const EdgeView v = edge_view(bc.patch, bc.frame);
        for (Eigen::Index c = 0; c < MC_trace.cols(); ++c) {
            Row row;
            for (int j = 0; j < n; ++j)
                if (MC_trace(j, c) != 0.0) row.add(v.gid(0, j), MC_trace(j, c));
            rows.push_back(std::move(row));
        }
        // D = d1 phi(0, xi): S^{p,r}-coefficients are dN_a(0) c(a, j).
        const auto td = s.eval_basis(0.0, 1);
        const double w0 = td.values(1, 0), w1 = td.values(1, 1);
        for (Eigen::Index c = 0; c < MC_btrans.cols(); ++c) {
            Row row;
            for (int j = 0; j < n; ++j) {
                const double mc = MC_btrans(j, c);
                if (mc == 0.0) continue;
                row.add(v.gid(0, j), mc * w0);
                row.add(v.gid(1, j), mc * w1);
            }
            rows.push_back(std::move(row));
        }
    }

    // ---- vertex C2_T conditions ----
    static constexpr int kJetOrders[6][2] = {{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
    for (const auto& v : topo.vertices) {
        if (v.valency() < 2) continue;
        const auto [p0, c0] = v.corners.front();
        const auto pc0 = Frame{false, c0 / 2 != 0, c0 % 2 != 0}.map_point(0.0, 0.0);
        const auto jet0 = F.jet2(p0, pc0.first, pc0.second);
        const Vec3 q1 = jet0[1].normalized();
        Vec3 q2 = jet0[2] - jet0[2].dot(q1) * q1;
        q2.normalize();

        struct CornerOps {
            Eigen::Matrix2d ji;
            std::array<Eigen::Matrix2d, 2> hu;
            std::array<Row, 6> phi;  // patch-coordinate jet functionals
        };
        std::vector<CornerOps> ops;
        for (const auto& [patch, corner] : v.corners) {
            const Frame cf{false, corner / 2 != 0, corner % 2 != 0};
            const auto pc = cf.map_point(0.0, 0.0);
            const auto jet = F.jet2(patch, pc.first, pc.second);
            CornerOps op;
            Eigen::Matrix2d ju;
            ju << q1.dot(jet[1]), q1.dot(jet[2]), q2.dot(jet[1]), q2.dot(jet[2]);
            op.ji = ju.inverse();
            for (int kk = 0; kk < 2; ++kk) {
                const Vec3& qk = kk == 0 ? q1 : q2;
                op.hu[static_cast<size_t>(kk)] << qk.dot(jet[3]), qk.dot(jet[4]), qk.dot(jet[4]),
                    qk.dot(jet[5]);
            }
            for (int d = 0; d < 6; ++d) {
                const auto t1 = s.eval_basis(pc.first, kJetOrders[d][0]);
                const auto t2 = s.eval_basis(pc.second, kJetOrders[d][1]);
                for (int a = 0; a <= s.degree(); ++a) {
                    const double wa = t1.values(kJetOrders[d][0], a);
                    if (wa == 0.0) continue;
                    for (int b = 0; b <= s.degree(); ++b) {
                        const double wb = t2.values(kJetOrders[d][1], b);
                        if (wb == 0.0) continue;
                        op.phi[static_cast<size_t>(d)].add(
                            patch * n2 + space.index(t1.first + a, t2.first + b), wa * wb);
                    }
                }
            }
            ops.push_back(std::move(op));
        }

        // value, tangent gradient (2), tangent Hessian (3) per corner;
        // equality across consecutive fan patches.
        auto tangent_rows = [&](const CornerOps& op, double sgn, std::array<Row, 6>& acc) {
            for (const auto& [gid, w] : op.phi[0].terms) acc[0].add(gid, sgn * w);
            for (int kk = 0; kk < 2; ++kk) {
                for (const auto& [gid, w] : op.phi[1].terms)
                    acc[static_cast<size_t>(1 + kk)].add(gid, sgn * op.ji(0, kk) * w);
                for (const auto& [gid, w] : op.phi[2].terms)
                    acc[static_cast<size_t>(1 + kk)].add(gid, sgn * op.ji(1, kk) * w);
            }
            static constexpr int hpair[3][2] = {{0, 0}, {0, 1}, {1, 1}};
            auto hxi_slot = [](int m, int l) {
                return (m == 0 && l == 0) ? 3 : (m == 1 && l == 1) ? 5 : 4;
            };
            for (int e = 0; e < 3; ++e) {
                const int a = hpair[e][0], b = hpair[e][1];
                for (int m2 = 0; m2 < 2; ++m2)
                    for (int l2 = 0; l2 < 2; ++l2) {
                        const double wml = op.ji(m2, a) * op.ji(l2, b);
                        if (wml == 0.0) continue;
                        for (const auto& [gid, w] :
                             op.phi[static_cast<size_t>(hxi_slot(m2, l2))].terms)
                            acc[static_cast<size_t>(3 + e)].add(gid, sgn * wml * w);
                        for (int kk = 0; kk < 2; ++kk) {
                            const double hk = op.hu[static_cast<size_t>(kk)](m2, l2);
                            if (hk == 0.0) continue;
                            for (const auto& [gid, w] : op.phi[1].terms)
                                acc[static_cast<size_t>(3 + e)].add(
                                    gid, -sgn * wml * hk * op.ji(0, kk) * w);
                            for (const auto& [gid, w] : op.phi[2].terms)
                                acc[static_cast<size_t>(3 + e)].add(
                                    gid, -sgn * wml * hk * op.ji(1, kk) * w);
                        }
                    }
            }
        };

        const int nu = v.valency();
        const int pairs = v.boundary ? nu - 1 : nu;
        for (int j = 0; j < pairs; ++j) {
            std::array<Row, 6> acc;
            tangent_rows(ops[static_cast<size_t>(j)], 1.0, acc);
            tangent_rows(ops[static_cast<size_t>((j + 1) % nu)], -1.0, acc);
            for (auto& row : acc) rows.push_back(std::move(row));
        }
    }

    // ---- normalize, collect involved dofs, kernel by SVD ----
    std::vector<Eigen::Triplet<double>> trips;
    std::set<int> involved_set;
    int kept = 0;
    for (auto& row : rows) {
        std::map<int, double> acc;
        for (const auto& [gid, w] : row.terms) acc[gid] += w;
        double nrm = 0.0;
        for (const auto& [gid, w] : acc) nrm += w * w;
        nrm = std::sqrt(nrm);
        if (nrm <= 1e-14) continue;  // structurally empty
        for (const auto& [gid, w] : acc) {
            trips.emplace_back(kept, gid, w / nrm);
            involved_set.insert(gid);
        }
        ++kept;
    }
    out.rows_ = SparseMatrix(kept, total);
    out.rows_.setFromTriplets(trips.begin(), trips.end());
    out.involved_count_ = static_cast<int>(involved_set.size());

    std::vector<int> involved(involved_set.begin(), involved_set.end());
    std::vector<int> inv_index(static_cast<size_t>(total), -1);
    for (size_t i = 0; i < involved.size(); ++i)
        inv_index[static_cast<size_t>(involved[i])] = static_cast<int>(i);

    Matrix kernel(0, 0);
    if (!involved.empty()) {
        Matrix Rd = Matrix::Zero(kept, static_cast<Eigen::Index>(involved.size()));
        for (int col = 0; col < out.rows_.outerSize(); ++col)
            for (SparseMatrix::InnerIterator it(out.rows_, col); it; ++it)
                Rd(it.row(), inv_index[static_cast<size_t>(col)]) = it.value();
        Eigen::BDCSVD<Matrix> svd(Rd, Eigen::ComputeFullV);
        const auto& sv = svd.singularValues();
        const double cut = sv.size() ? opts.svd_tol * sv(0) : 0.0;
        int rank = 0;
        for (Eigen::Index i = 0; i < sv.size(); ++i)
            if (sv(i) > cut) ++rank;
        kernel = svd.matrixV().rightCols(static_cast<Eigen::Index>(involved.size()) - rank);
    }

    const int n_interior = total - static_cast<int>(involved.size());
    const int dim = n_interior + static_cast<int>(kernel.cols());
    std::vector<Eigen::Triplet<double>> btrips;
    int col = 0;
    for (int gid = 0; gid < total; ++gid)
        if (inv_index[static_cast<size_t>(gid)] < 0) btrips.emplace_back(gid, col++, 1.0);
    for (Eigen::Index kc = 0; kc < kernel.cols(); ++kc, ++col)
        for (size_t i = 0; i < involved.size(); ++i)
            if (kernel(static_cast<Eigen::Index>(i), kc) != 0.0)
                btrips.emplace_back(involved[i], col, kernel(static_cast<Eigen::Index>(i), kc));
    out.basis_ = SparseMatrix(total, dim);
    out.basis_.setFromTriplets(btrips.begin(), btrips.end());
    return out;
}

Vector C1Space::tensor_coefficients(const DiscreteField& field) const { return basis_ * field; }

Vector C1Space::patch_block(const Vector& tensor_coefs, int patch) const {
    const int n2 = f_.space().dim();
    return tensor_coefs.segment(patch * n2, n2);
}

double C1Space::eval(const DiscreteField& field, int patch, double u, double v, int l1,
                     int l2) const {
    const Vector tc = tensor_coefficients(field);
    const auto& s = f_.space().s;
    const auto t1 = s.eval_basis(u, l1);
    const auto t2 = s.eval_basis(v, l2);
    const int n2 = f_.space().dim();
    double acc = 0.0;
    for (int a = 0; a <= s.degree(); ++a)
        for (int b = 0; b <= s.degree(); ++b)
            acc += t1.values(l1, a) * t2.values(l2, b) *
                   tc(patch * n2 + f_.space().index(t1.first + a, t2.first + b));
    return acc;
}

double C1Space::constraint_residual(const Vector& tensor_coefs) const {
    if (rows_.rows() == 0) return 0.0;
    return (rows_ * tensor_coefs).cwiseAbs().maxCoeff();
}

C1Space::JumpReport C1Space::verify_c1(int samples) const {
    JumpReport rep;
    const auto& topo = f_.topology();
    const auto& s = f_.space().s;
    const int n2 = f_.space().dim();
    const Matrix B = Matrix(basis_);
    double grad_scale = 0.0;
    for (const auto& itf : topo.interfaces) {
        for (int i = 0; i < samples; ++i) {
            const double xi = samples == 1 ? 0.5 : static_cast<double>(i) / (samples - 1);
            const auto pa = itf.frame[0].map_point(0.0, xi);
            const auto pb = itf.frame[1].map_point(xi, 0.0);
            auto sample_all = [&](int patch, double u, double v) {
                const auto t1 = s.eval_basis(u, 1);
                const auto t2 = s.eval_basis(v, 1);
                Matrix vals = Matrix::Zero(3, B.cols());  // value, d10, d01
                for (int a = 0; a <= s.degree(); ++a)
                    for (int b = 0; b <= s.degree(); ++b) {
                        const int gid = patch * n2 + f_.space().index(t1.first + a, t2.first + b);
                        vals.row(0) += t1.values(0, a) * t2.values(0, b) * B.row(gid);
                        vals.row(1) += t1.values(1, a) * t2.values(0, b) * B.row(gid);
                        vals.row(2) += t1.values(0, a) * t2.values(1, b) * B.row(gid);
                    }
                return vals;
            };
            const Matrix va = sample_all(itf.patch[0], pa.first, pa.second);
            const Matrix vb = sample_all(itf.patch[1], pb.first, pb.second);
            rep.max_value_jump =
                std::max(rep.max_value_jump, (va.row(0) - vb.row(0)).cwiseAbs().maxCoeff());
            for (Eigen::Index c = 0; c < B.cols(); ++c) {
                const Vec3 ga = tangential_gradient(f_, itf.patch[0], pa.first, pa.second,
                                                    va(1, c), va(2, c));
                const Vec3 gb = tangential_gradient(f_, itf.patch[1], pb.first, pb.second,
                                                    vb(1, c), vb(2, c));
                rep.max_gradient_jump = std::max(rep.max_gradient_jump, (ga - gb).norm());
                grad_scale = std::max({grad_scale, ga.norm(), gb.norm()});
            }
        }
    }
    if (grad_scale > 0.0) rep.max_gradient_jump /= grad_scale;
    return rep;
}

}  // namespace asg1
