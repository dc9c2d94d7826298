#include "asg1/numerics.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <memory>

namespace asg1 {

QuadratureRule gauss_legendre(int q, double a, double b) {
    if (q < 1) throw std::invalid_argument("gauss_legendre: point count must be >= 1");
    if (!(a < b)) throw std::invalid_argument("gauss_legendre: empty interval");

    QuadratureRule rule;
    rule.nodes.resize(static_cast<size_t>(q));
    rule.weights.resize(static_cast<size_t>(q));

    // Newton iteration on P_q over [-1,1]; symmetry gives the other half.
    const int half = (q + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (q + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int j = 2; j <= q; ++j) {
                double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            pp = q * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        double w = 2.0 / ((1.0 - x * x) * pp * pp);
        const double mid = 0.5 * (a + b), hw = 0.5 * (b - a);
        rule.nodes[static_cast<size_t>(i)] = mid - hw * x;
        rule.nodes[static_cast<size_t>(q - 1 - i)] = mid + hw * x;
        rule.weights[static_cast<size_t>(i)] = hw * w;
        rule.weights[static_cast<size_t>(q - 1 - i)] = hw * w;
    }
    return rule;
}

namespace {

constexpr double kRankTol = 1e-10;

Vector svd_min_norm_solve(const Matrix& M, const Vector& rhs) {
    Eigen::BDCSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(kRankTol);
    return svd.solve(rhs);
}

}  // namespace

std::vector<SaddleSolution> solve_saddle_multi(const Matrix& H, const std::vector<Vector>& cs,
                                               const Matrix& A, const std::vector<Vector>& bs,
                                               const std::string& stage) {
    const Eigen::Index n = H.rows();
    const Eigen::Index m = A.rows();
    if (H.cols() != n) throw std::invalid_argument(stage + ": H not square");
    if (n > 0) {
        const double scale = H.cwiseAbs().maxCoeff();
        if (scale > 0 && (H - H.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
            throw std::invalid_argument(stage + ": H not symmetric");
    }
    if (m > 0 && A.cols() != n) throw std::invalid_argument(stage + ": A column count mismatch");
    if (cs.size() != bs.size()) throw std::invalid_argument(stage + ": rhs count mismatch");

    Matrix K(n + m, n + m);
    K.setZero();
    K.topLeftCorner(n, n) = H;
    if (m > 0) {
        K.topRightCorner(n, m) = A.transpose();
        K.bottomLeftCorner(m, n) = A;
    }
    Eigen::BDCSVD<Matrix> kkt(K, Eigen::ComputeThinU | Eigen::ComputeThinV);
    kkt.setThreshold(kRankTol);

    // Feasibility of the constraint block, checked once per distinct b.
    std::unique_ptr<Eigen::BDCSVD<Matrix>> asvd;
    if (m > 0) {
        asvd = std::make_unique<Eigen::BDCSVD<Matrix>>(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
        asvd->setThreshold(kRankTol);
    }

    std::vector<SaddleSolution> out;
    out.reserve(cs.size());
    for (size_t k = 0; k < cs.size(); ++k) {
        const Vector& c = cs[k];
        const Vector& b = bs[k];
        if (c.size() != n || b.size() != m) throw std::invalid_argument(stage + ": rhs size mismatch");
        if (m > 0) {
            Vector xf = asvd->solve(b);
            const double feas = (A * xf - b).norm();
            if (feas > 1e-9 * (1.0 + b.norm()))
                throw InfeasibleError(stage + ": inconsistent constraints", feas);
        }
        Vector rhs(n + m);
        rhs.head(n) = -c;
        rhs.tail(m) = b;
        Vector z = kkt.solve(rhs);
        SaddleSolution sol;
        sol.x = z.head(n);
        sol.mult = z.tail(m);
        const double grad_res = m > 0 ? (H * sol.x + c + A.transpose() * sol.mult).norm()
                                      : (H * sol.x + c).norm();
        const double con_res = m > 0 ? (A * sol.x - b).norm() : 0.0;
        const double scale = 1.0 + rhs.norm();
        if (!(grad_res <= 1e-9 * scale) || !(con_res <= 1e-9 * (1.0 + b.norm())))
            throw DegenerateSystemError(stage + ": singular KKT system (residual " +
                                        std::to_string(grad_res + con_res) + ")");
        out.push_back(std::move(sol));
    }
    return out;
}

SaddleSolution solve_saddle(const QuadraticProgram& qp, const std::string& stage) {
    Vector c = qp.c.size() == 0 && qp.H.rows() > 0 ? Vector::Zero(qp.H.rows()) : qp.c;
    Vector b = qp.b.size() == 0 && qp.A.rows() > 0 ? Vector::Zero(qp.A.rows()) : qp.b;
    auto sols = solve_saddle_multi(qp.H, {c}, qp.A, {b}, stage);
    return sols.front();
}

Vector lsq_min_norm(const Matrix& A, const Vector& b) {
    if (A.rows() == 0) return Vector::Zero(A.cols());
    return svd_min_norm_solve(A, b);
}

}  // namespace asg1
