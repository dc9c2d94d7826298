#pragma once

#include "asg1/numerics.hpp"

#include <array>
#include <functional>
#include <utility>
#include <vector>

namespace asg1 {

/// Univariate spline space of degree p and regularity r on [0,1] with k
/// uniform inner knots of multiplicity p-r (open knot vector).
/// dim = p + 1 + k(p - r).
class SplineSpace1D {
  public:
    SplineSpace1D(int degree, int regularity, int segments);

    int degree() const { return p_; }
    int regularity() const { return r_; }
    int inner_knots() const { return k_; }
    int dim() const { return n_; }
    const std::vector<double>& knots() const { return knots_; }

    /// Knot span index such that knots[s] <= xi < knots[s+1]; xi = 1 uses the
    /// last nonempty span (left-limit convention).
    int find_span(double xi) const;

    /// Values and derivatives of the at most p+1 B-splines that are nonzero
    /// at xi.  table(d, j) = d-th derivative of basis function first+j.
    struct BasisTable {
        int first = 0;  // index of the first nonzero basis function
        Matrix values;  // (max_deriv+1) x (p+1)
    };
    BasisTable eval_basis(double xi, int max_deriv) const;

    /// Dense evaluation of one derivative order of the whole basis at xi.
    Vector eval_all(double xi, int deriv) const;

    /// Greville abscissae, one per basis function.
    std::vector<double> greville() const;

    /// Trace space S^{p,r+1} and transversal space S^{p-1,r}.
    /// Requires r <= p-2.
    std::pair<SplineSpace1D, SplineSpace1D> companion_spaces() const;

    /// Space with k' = 2^L (k+1) - 1 inner knots (same p, r).
    SplineSpace1D refine_dyadic(int level) const;

    /// Number of (nonempty) knot spans, = k+1.
    int spans() const { return k_ + 1; }
    /// Break points 0, 1/(k+1), ..., 1.
    std::vector<double> breaks() const;

    bool operator==(const SplineSpace1D& o) const {
        return p_ == o.p_ && r_ == o.r_ && k_ == o.k_;
    }

  private:
    int p_, r_, k_, n_;
    std::vector<double> knots_;
};

/// Coefficients of each coarse basis function in the fine space: an
/// n_fine x n_coarse matrix E with N^c_j = sum_i E(i,j) N^f_i.  The fine
/// space's knots must be a superset (counting multiplicity) of the coarse
/// space's, with equal degree.
Matrix embedding_matrix(const SplineSpace1D& coarse, const SplineSpace1D& fine);

/// Gram matrix \int N_i^(da) M_j^(db) over [0,1], Gauss order q per span.
Matrix gram_matrix(const SplineSpace1D& row_space, const SplineSpace1D& col_space, int da, int db,
                   int q);

/// L2 projection of a scalar function onto the space (Gauss order q per span).
Vector l2_project_1d(const SplineSpace1D& space, const std::function<double(double)>& f, int q);

/// Collocation matrix A(i,j) = N_j(pts[i]).
Matrix collocation_matrix(const SplineSpace1D& space, const std::vector<double>& pts);

struct TensorSplineSpace {
    SplineSpace1D s;  // both factors equal by construction
    explicit TensorSplineSpace(const SplineSpace1D& space) : s(space) {}
    int dim() const { return s.dim() * s.dim(); }
    /// Flat index with the second parameter fastest: j1 * n + j2.
    int index(int j1, int j2) const { return j1 * s.dim() + j2; }
};

/// Point-valued tensor-product spline patch.  Coefficients are rows of an
/// (n*n) x dim matrix in the j1*n+j2 convention (dim = 3 for surfaces).
class SplinePatch {
  public:
    SplinePatch(const TensorSplineSpace& space, Matrix coefs);

    const TensorSplineSpace& space() const { return space_; }
    const Matrix& coefs() const { return coefs_; }
    Matrix& coefs() { return coefs_; }

    /// d^{l1}_1 d^{l2}_2 F(xi1, xi2); one row per coefficient column.
    Eigen::RowVectorXd eval(double xi1, double xi2, int l1, int l2) const;
    Vec3 eval3(double xi1, double xi2, int l1, int l2) const;

    /// All derivatives with l1+l2 <= 2 (order: 00,10,01,20,11,02).
    std::array<Vec3, 6> eval_jet2(double xi1, double xi2) const;

    SplinePatch refine_dyadic(int level) const;

  private:
    TensorSplineSpace space_;
    Matrix coefs_;
};

/// L2 projection of a vector-valued function on [0,1]^2 onto the tensor
/// space; f(u,v) returns one row of values.
Matrix l2_project_2d(const TensorSplineSpace& space,
                     const std::function<Eigen::RowVectorXd(double, double)>& f, int cols, int q);

}  // namespace asg1
