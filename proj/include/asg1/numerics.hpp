#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace asg1 {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Vec3 = Eigen::Vector3d;

/// Equality-constrained quadratic program: minimize 1/2 x^T H x + c^T x
/// subject to A x = b.  H must be symmetric positive semidefinite.
struct QuadraticProgram {
    Matrix H;
    Vector c;
    Matrix A;  // one row per scalar constraint; may have zero rows
    Vector b;
};

struct SaddleSolution {
    Vector x;
    Vector mult;
};

/// Constraints have no solution; carries the least-squares residual of Ax=b.
class InfeasibleError : public std::runtime_error {
  public:
    InfeasibleError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const { return residual_; }

  private:
    double residual_;
};

/// A linear solve produced an unusable factorization; names the stage.
class DegenerateSystemError : public std::runtime_error {
  public:
    explicit DegenerateSystemError(const std::string& what) : std::runtime_error(what) {}
};

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// q-point Gauss-Legendre rule on [a,b]; exact through degree 2q-1.
QuadratureRule gauss_legendre(int q, double a, double b);

/// Stationary point of the QP via the bordered KKT system, solved with a
/// rank-revealing factorization (SVD, threshold 1e-10 relative to the largest
/// singular value) and minimal-norm completion.  Throws InfeasibleError when
/// b is not in the range of A, DegenerateSystemError when the KKT residual
/// of the computed solution is not small.
SaddleSolution solve_saddle(const QuadraticProgram& qp, const std::string& stage = "solve_saddle");

/// Same factorization path, several right-hand sides (shared H, A).
std::vector<SaddleSolution> solve_saddle_multi(const Matrix& H, const std::vector<Vector>& cs,
                                               const Matrix& A, const std::vector<Vector>& bs,
                                               const std::string& stage = "solve_saddle");

/// Minimal-norm least-squares solution of A x = b.
Vector lsq_min_norm(const Matrix& A, const Vector& b);

}  // namespace asg1
