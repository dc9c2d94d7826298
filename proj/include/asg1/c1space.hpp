#pragma once

#include "asg1/construct.hpp"

#include <Eigen/Sparse>

namespace asg1 {

using SparseMatrix = Eigen::SparseMatrix<double>;
/// Coefficient vector over the C1 basis.
using DiscreteField = Vector;

struct C1SpaceOptions {
    double svd_tol = 1e-9;   // relative singular-value threshold for the kernel
    double asg1_tol = 1e-6;  // refuse geometries whose AS-G1 residual exceeds this
    int quad_order(int p) const { return p + 2; }
};

/// C1-smooth isogeometric space over an AS-G1 multi-patch surface: the
/// kernel of the stacked interface/membership/vertex constraints, plus the
/// unconstrained interior tensor B-splines.  Basis columns are orthonormal
/// coefficient vectors over the stacked patch-local tensor dofs
/// (dof id = patch * n^2 + j1 * n + j2).
class C1Space {
  public:
    static C1Space build(MultiPatchSpline geometry, GluingData gluing,
                         const C1SpaceOptions& opts = {});

    int dim() const { return static_cast<int>(basis_.cols()); }
    int tensor_dofs() const { return static_cast<int>(basis_.rows()); }
    const MultiPatchSpline& geometry() const { return f_; }
    const GluingData& gluing() const { return gluing_; }
    const SparseMatrix& basis() const { return basis_; }
    const SparseMatrix& constraint_rows() const { return rows_; }
    int involved_count() const { return involved_count_; }

    /// Stacked tensor coefficients of a field (all patches).
    Vector tensor_coefficients(const DiscreteField& field) const;
    Vector patch_block(const Vector& tensor_coefs, int patch) const;

    /// Pullback evaluation of a field; derivative orders l1 + l2 <= 2.
    double eval(const DiscreteField& field, int patch, double u, double v, int l1, int l2) const;

    /// Max residual of the assembled constraint rows on stacked coefficients
    /// (rows are unit-normalized).
    double constraint_residual(const Vector& tensor_coefs) const;

    struct JumpReport {
        double max_value_jump = 0.0;
        double max_gradient_jump = 0.0;  // surface-tangential gradient, relative
    };
    /// Value and tangential-gradient jumps of every basis member across all
    /// interfaces.
    JumpReport verify_c1(int samples) const;

  private:
    C1Space(MultiPatchSpline f, GluingData g) : f_(std::move(f)), gluing_(std::move(g)) {}
    MultiPatchSpline f_;
    GluingData gluing_;
    SparseMatrix basis_;  // tensor_dofs x dim
    SparseMatrix rows_;   // constraints x tensor_dofs, unit rows
    int involved_count_ = 0;
};

/// Surface-tangential gradient of a scalar pullback at a patch point.
Vec3 tangential_gradient(const MultiPatchSpline& f, int patch, double u, double v, double d10,
                         double d01);

}  // namespace asg1
