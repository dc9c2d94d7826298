#include "asg1/splinespace.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>

namespace asg1 {

SplineSpace1D::SplineSpace1D(int degree, int regularity, int segments)
    : p_(degree), r_(regularity), k_(segments) {
    if (p_ < 1) throw std::invalid_argument("SplineSpace1D: degree must be >= 1");
    if (r_ < 0 || r_ > p_ - 1) throw std::invalid_argument("SplineSpace1D: need 0 <= r <= p-1");
    if (k_ < 0) throw std::invalid_argument("SplineSpace1D: segments must be >= 0");
    n_ = p_ + 1 + k_ * (p_ - r_);
    knots_.reserve(static_cast<size_t>(n_ + p_ + 1));
    for (int i = 0; i <= p_; ++i) knots_.push_back(0.0);
    const int mult = p_ - r_;
    for (int i = 1; i <= k_; ++i) {
        // The single place inner knots are computed; bit-identical everywhere.
        const double t = static_cast<double>(i) / static_cast<double>(k_ + 1);
        for (int m = 0; m < mult; ++m) knots_.push_back(t);
    }
    for (int i = 0; i <= p_; ++i) knots_.push_back(1.0);
}

std::vector<double> SplineSpace1D::breaks() const {
    std::vector<double> b;
    b.reserve(static_cast<size_t>(k_ + 2));
    b.push_back(0.0);
    for (int i = 1; i <= k_; ++i) b.push_back(static_cast<double>(i) / static_cast<double>(k_ + 1));
    b.push_back(1.0);
    return b;
}

int SplineSpace1D::find_span(double xi) const {
    if (xi < 0.0 || xi > 1.0) throw std::domain_error("SplineSpace1D: parameter outside [0,1]");
    if (xi >= 1.0) return n_ - 1;  // left-limit convention at 1
    int lo = p_, hi = n_;
    while (hi - lo > 1) {
        int mid = (lo + hi) / 2;
        if (xi < knots_[static_cast<size_t>(mid)])
            hi = mid;
        else
            lo = mid;
    }
    return lo;
}

SplineSpace1D::BasisTable SplineSpace1D::eval_basis(double xi, int max_deriv) const {
    const int span = find_span(xi);
    const int p = p_;
    BasisTable out;
    out.first = span - p;
    out.values = Matrix::Zero(max_deriv + 1, p + 1);

    // Cox-de Boor triangle with knot differences (NURBS book A2.3).
    Matrix ndu(p + 1, p + 1);
    std::vector<double> left(static_cast<size_t>(p + 1)), right(static_cast<size_t>(p + 1));
    ndu(0, 0) = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[static_cast<size_t>(j)] = xi - knots_[static_cast<size_t>(span + 1 - j)];
        right[static_cast<size_t>(j)] = knots_[static_cast<size_t>(span + j)] - xi;
        double saved = 0.0;
        for (int rr = 0; rr < j; ++rr) {
            ndu(j, rr) = right[static_cast<size_t>(rr + 1)] + left[static_cast<size_t>(j - rr)];
            const double temp = ndu(rr, j - 1) / ndu(j, rr);
            ndu(rr, j) = saved + right[static_cast<size_t>(rr + 1)] * temp;
            saved = left[static_cast<size_t>(j - rr)] * temp;
        }
        ndu(j, j) = saved;
    }
    for (int j = 0; j <= p; ++j) out.values(0, j) = ndu(j, p);

    const int nd = std::min(max_deriv, p);
    Matrix a(2, p + 1);
    for (int rr = 0; rr <= p; ++rr) {
        int s1 = 0, s2 = 1;
        a(0, 0) = 1.0;
        for (int kd = 1; kd <= nd; ++kd) {
            double d = 0.0;
            const int rk = rr - kd, pk = p - kd;
            if (rr >= kd) {
                a(s2, 0) = a(s1, 0) / ndu(pk + 1, rk);
                d = a(s2, 0) * ndu(rk, pk);
            }
            const int j1 = rk >= -1 ? 1 : -rk;
            const int j2 = rr - 1 <= pk ? kd - 1 : p - rr;
            for (int j = j1; j <= j2; ++j) {
                a(s2, j) = (a(s1, j) - a(s1, j - 1)) / ndu(pk + 1, rk + j);
                d += a(s2, j) * ndu(rk + j, pk);
            }
            if (rr <= pk) {
                a(s2, kd) = -a(s1, kd - 1) / ndu(pk + 1, rr);
                d += a(s2, kd) * ndu(rr, pk);
            }
            out.values(kd, rr) = d;
            std::swap(s1, s2);
        }
    }
    double fac = p;
    for (int kd = 1; kd <= nd; ++kd) {
        for (int j = 0; j <= p; ++j) out.values(kd, j) *= fac;
        fac *= (p - kd);
    }
    return out;
}

Vector SplineSpace1D::eval_all(double xi, int deriv) const {
    Vector v = Vector::Zero(n_);
    const BasisTable t = eval_basis(xi, deriv);
    for (int j = 0; j <= p_; ++j) v(t.first + j) = t.values(deriv, j);
    return v;
}

std::vector<double> SplineSpace1D::greville() const {
    std::vector<double> g(static_cast<size_t>(n_));
    for (int j = 0; j < n_; ++j) {
        double s = 0.0;
        for (int m = 1; m <= p_; ++m) s += knots_[static_cast<size_t>(j + m)];
        g[static_cast<size_t>(j)] = s / p_;
    }
    return g;
}

std::pair<SplineSpace1D, SplineSpace1D> SplineSpace1D::companion_spaces() const {
    if (r_ + 1 > p_ - 1)
        throw std::invalid_argument("companion_spaces: trace regularity would reach degree");
    return {SplineSpace1D(p_, r_ + 1, k_), SplineSpace1D(p_ - 1, r_, k_)};
}

SplineSpace1D SplineSpace1D::refine_dyadic(int level) const {
    if (level < 0) throw std::invalid_argument("refine_dyadic: level must be >= 0");
    int kk = k_;
    for (int l = 0; l < level; ++l) kk = 2 * (kk + 1) - 1;
    return SplineSpace1D(p_, r_, kk);
}

namespace {

// Boehm single-knot insertion applied to the columns of E.
void insert_knot(std::vector<double>& knots, int p, Matrix& E, double t) {
    const int n = static_cast<int>(knots.size()) - p - 1;
    int span = p;
    while (span + 1 < n && !(t < knots[static_cast<size_t>(span + 1)])) ++span;
    Matrix out(E.rows() + 1, E.cols());
    for (int i = 0; i <= span - p; ++i) out.row(i) = E.row(i);
    for (int i = span - p + 1; i <= span; ++i) {
        const double denom = knots[static_cast<size_t>(i + p)] - knots[static_cast<size_t>(i)];
        const double alpha = denom > 0 ? (t - knots[static_cast<size_t>(i)]) / denom : 0.0;
        out.row(i) = alpha * E.row(i) + (1.0 - alpha) * E.row(i - 1);
    }
    for (int i = span + 1; i <= n; ++i) out.row(i) = E.row(i - 1);
    E.swap(out);
    knots.insert(knots.begin() + span + 1, t);
}

}  // namespace

Matrix embedding_matrix(const SplineSpace1D& coarse, const SplineSpace1D& fine) {
    if (coarse.degree() != fine.degree())
        throw std::invalid_argument("embedding_matrix: degree mismatch");
    std::vector<double> work = coarse.knots();
    Matrix E = Matrix::Identity(coarse.dim(), coarse.dim());
    // Knots of fine missing from work, counting multiplicity.
    std::vector<double> missing;
    {
        const auto& fk = fine.knots();
        size_t i = 0, j = 0;
        while (j < fk.size()) {
            if (i < work.size() && work[i] == fk[j]) {
                ++i;
                ++j;
            } else {
                missing.push_back(fk[j]);
                ++j;
            }
        }
        if (i != work.size()) throw std::invalid_argument("embedding_matrix: knots not nested");
    }
    for (double t : missing) insert_knot(work, coarse.degree(), E, t);
    if (E.rows() != fine.dim()) throw std::logic_error("embedding_matrix: dimension mismatch");
    return E;
}

Matrix gram_matrix(const SplineSpace1D& row_space, const SplineSpace1D& col_space, int da, int db,
                   int q) {
    Matrix G = Matrix::Zero(row_space.dim(), col_space.dim());
    const auto brk = row_space.inner_knots() >= col_space.inner_knots() ? row_space.breaks()
                                                                        : col_space.breaks();
    for (size_t s = 0; s + 1 < brk.size(); ++s) {
        const auto rule = gauss_legendre(q, brk[s], brk[s + 1]);
        for (size_t g = 0; g < rule.nodes.size(); ++g) {
            const auto ta = row_space.eval_basis(rule.nodes[g], da);
            const auto tb = col_space.eval_basis(rule.nodes[g], db);
            for (int i = 0; i <= row_space.degree(); ++i)
                for (int j = 0; j <= col_space.degree(); ++j)
                    G(ta.first + i, tb.first + j) +=
                        rule.weights[g] * ta.values(da, i) * tb.values(db, j);
        }
    }
    return G;
}

Vector l2_project_1d(const SplineSpace1D& space, const std::function<double(double)>& f, int q) {
    Matrix M = gram_matrix(space, space, 0, 0, q);
    Vector rhs = Vector::Zero(space.dim());
    const auto brk = space.breaks();
    for (size_t s = 0; s + 1 < brk.size(); ++s) {
        const auto rule = gauss_legendre(q, brk[s], brk[s + 1]);
        for (size_t g = 0; g < rule.nodes.size(); ++g) {
            const auto t = space.eval_basis(rule.nodes[g], 0);
            const double fv = f(rule.nodes[g]);
            for (int i = 0; i <= space.degree(); ++i)
                rhs(t.first + i) += rule.weights[g] * t.values(0, i) * fv;
        }
    }
    return M.ldlt().solve(rhs);
}

Matrix collocation_matrix(const SplineSpace1D& space, const std::vector<double>& pts) {
    Matrix A = Matrix::Zero(static_cast<Eigen::Index>(pts.size()), space.dim());
    for (size_t i = 0; i < pts.size(); ++i) {
        const auto t = space.eval_basis(pts[i], 0);
        for (int j = 0; j <= space.degree(); ++j)
            A(static_cast<Eigen::Index>(i), t.first + j) = t.values(0, j);
    }
    return A;
}

SplinePatch::SplinePatch(const TensorSplineSpace& space, Matrix coefs)
    : space_(space), coefs_(std::move(coefs)) {
    if (coefs_.rows() != space_.dim())
        throw std::invalid_argument("SplinePatch: coefficient count does not match space dimension");
}

Eigen::RowVectorXd SplinePatch::eval(double xi1, double xi2, int l1, int l2) const {
    const auto& s = space_.s;
    const auto t1 = s.eval_basis(xi1, l1);
    const auto t2 = s.eval_basis(xi2, l2);
    Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(coefs_.cols());
    for (int i = 0; i <= s.degree(); ++i) {
        const double a = t1.values(l1, i);
        if (a == 0.0) continue;
        for (int j = 0; j <= s.degree(); ++j) {
            const double b = t2.values(l2, j);
            if (b == 0.0) continue;
            out += a * b * coefs_.row(space_.index(t1.first + i, t2.first + j));
        }
    }
    return out;
}

Vec3 SplinePatch::eval3(double xi1, double xi2, int l1, int l2) const {
    Eigen::RowVectorXd v = eval(xi1, xi2, l1, l2);
    Vec3 out = Vec3::Zero();
    for (int c = 0; c < std::min<Eigen::Index>(3, v.cols()); ++c) out(c) = v(c);
    return out;
}

std::array<Vec3, 6> SplinePatch::eval_jet2(double xi1, double xi2) const {
    static constexpr int orders[6][2] = {{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
    std::array<Vec3, 6> out;
    const auto& s = space_.s;
    const auto t1 = s.eval_basis(xi1, 2);
    const auto t2 = s.eval_basis(xi2, 2);
    for (int d = 0; d < 6; ++d) {
        Vec3 acc = Vec3::Zero();
        const int l1 = orders[d][0], l2 = orders[d][1];
        for (int i = 0; i <= s.degree(); ++i) {
            const double a = t1.values(l1, i);
            if (a == 0.0) continue;
            for (int j = 0; j <= s.degree(); ++j) {
                const double b = t2.values(l2, j);
                if (b == 0.0) continue;
                const auto row = coefs_.row(space_.index(t1.first + i, t2.first + j));
                for (int c = 0; c < 3; ++c) acc(c) += a * b * row(c);
            }
        }
        out[static_cast<size_t>(d)] = acc;
    }
    return out;
}

SplinePatch SplinePatch::refine_dyadic(int level) const {
    const SplineSpace1D fine = space_.s.refine_dyadic(level);
    const Matrix E = embedding_matrix(space_.s, fine);
    const int nc = space_.s.dim(), nf = fine.dim();
    Matrix out(nf * nf, coefs_.cols());
    // d_fine = (E kron E) d_coarse, applied factor by factor.
    Matrix tmp(nf * nc, coefs_.cols());
    for (int j2 = 0; j2 < nc; ++j2)
        for (int i1 = 0; i1 < nf; ++i1) {
            Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(coefs_.cols());
            for (int j1 = 0; j1 < nc; ++j1)
                if (E(i1, j1) != 0.0) acc += E(i1, j1) * coefs_.row(j1 * nc + j2);
            tmp.row(i1 * nc + j2) = acc;
        }
    for (int i1 = 0; i1 < nf; ++i1)
        for (int i2 = 0; i2 < nf; ++i2) {
            Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(coefs_.cols());
            for (int j2 = 0; j2 < nc; ++j2)
                if (E(i2, j2) != 0.0) acc += E(i2, j2) * tmp.row(i1 * nc + j2);
            out.row(i1 * nf + i2) = acc;
        }
    return SplinePatch(TensorSplineSpace(fine), std::move(out));
}

Matrix l2_project_2d(const TensorSplineSpace& space,
                     const std::function<Eigen::RowVectorXd(double, double)>& f, int cols, int q) {
    const auto& s = space.s;
    const int n = s.dim();
    Matrix M = gram_matrix(s, s, 0, 0, q);
    Matrix rhs = Matrix::Zero(n * n, cols);
    const auto brk = s.breaks();
    std::vector<QuadratureRule> rules;
    for (size_t sp = 0; sp + 1 < brk.size(); ++sp)
        rules.push_back(gauss_legendre(q, brk[sp], brk[sp + 1]));
    for (const auto& ru : rules)
        for (size_t gu = 0; gu < ru.nodes.size(); ++gu) {
            const auto tu = s.eval_basis(ru.nodes[gu], 0);
            for (const auto& rv : rules)
                for (size_t gv = 0; gv < rv.nodes.size(); ++gv) {
                    const auto tv = s.eval_basis(rv.nodes[gv], 0);
                    const Eigen::RowVectorXd fv = f(ru.nodes[gu], rv.nodes[gv]);
                    const double w = ru.weights[gu] * rv.weights[gv];
                    for (int i = 0; i <= s.degree(); ++i)
                        for (int j = 0; j <= s.degree(); ++j)
                            rhs.row(space.index(tu.first + i, tv.first + j)) +=
                                w * tu.values(0, i) * tv.values(0, j) * fv;
                }
        }
    // (M kron M)^{-1} rhs via two one-dimensional solves.
    Eigen::LDLT<Matrix> ldlt(M);
    Matrix out(n * n, cols);
    for (int c = 0; c < cols; ++c) {
        Matrix R(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) R(i, j) = rhs(i * n + j, c);
        Matrix X = ldlt.solve(ldlt.solve(R).transpose()).transpose();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) out(i * n + j, c) = X(i, j);
    }
    return out;
}

}  // namespace asg1
