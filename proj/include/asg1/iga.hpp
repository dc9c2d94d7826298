#pragma once

#include "asg1/c1space.hpp"

namespace asg1 {

struct SurfacePoint {
    Vec3 x;
    Vec3 du, dv;
    Eigen::Matrix2d g;     // first fundamental form
    Eigen::Matrix2d ginv;
    double jac = 0.0;      // area element |du x dv|
    Vec3 normal;           // unit normal
};
SurfacePoint surface_metrics(const MultiPatchSpline& f, int patch, double u, double v);

/// Laplace-Beltrami of a pullback: Delta phi = c20 d20 + c11 d11 + c02 d02
/// + c10 d10 + c01 d01, from first and second derivatives of the geometry.
struct BeltramiCoefs {
    double c10 = 0, c01 = 0, c20 = 0, c11 = 0, c02 = 0;
    double apply(double d10, double d01, double d20, double d11, double d02) const {
        return c10 * d10 + c01 * d01 + c20 * d20 + c11 * d11 + c02 * d02;
    }
};
BeltramiCoefs beltrami_coefs(const MultiPatchSpline& f, int patch, double u, double v);

enum class ProblemKind { DirichletBiharmonic, ReactionBiharmonic };

struct ProblemSpec {
    ProblemKind kind = ProblemKind::DirichletBiharmonic;
    std::function<double(const Vec3&)> source;
    std::function<double(const Vec3&)> g1;               // Dirichlet trace
    std::function<double(const Vec3&, const Vec3&)> g2;  // (x, outward unit normal)
    double lambda_r = 1.0;                               // reaction coefficient
};

/// Registered manufactured data: "cos4sin4" (planar Dirichlet with exact
/// solution) and "coshalf" (closed-surface reaction source).
struct ManufacturedSolution {
    std::string name;
    bool has_exact = false;
    std::function<double(const Vec3&)> u;
    std::function<Vec3(const Vec3&)> grad_u;
    std::function<double(const Vec3&)> lap_u;
    std::function<double(const Vec3&)> f;
};
ManufacturedSolution manufactured_solution(const std::string& name);
ProblemSpec make_problem(ProblemKind kind, const ManufacturedSolution& ms, double lambda_r);

struct AssembledSystem {
    SparseMatrix stiffness;  // int Delta phi_i Delta phi_j (+ lambda mass)
    Vector load;
    SparseMatrix mass;  // L2 mass in the C1 basis
};
AssembledSystem assemble(const ProblemSpec& problem, const C1Space& space);

struct DirichletConstraints {
    SparseMatrix rows;  // functionals over the C1 basis
    Vector values;
};
DirichletConstraints impose_dirichlet(const C1Space& space,
                                      const std::function<double(const Vec3&)>& g1,
                                      const std::function<double(const Vec3&, const Vec3&)>& g2);

struct SolveInfo {
    DiscreteField u;
    double linear_residual = 0.0;
    double constraint_residual = 0.0;
};
SolveInfo solve(const ProblemSpec& problem, const C1Space& space);

struct ErrorNorms {
    double l2 = 0.0, h1 = 0.0, h2 = 0.0;
};
/// Surface-geometric error norms against a manufactured exact solution.
ErrorNorms error_norms(const C1Space& space, const DiscreteField& u_h,
                       const ManufacturedSolution& exact);

/// h-h/2 differences: the coarse solution is prolonged into the fine space by
/// knot insertion and the differences integrated over the fine geometry.
ErrorNorms estimators_h_h2(const C1Space& coarse, const DiscreteField& u_coarse,
                           const C1Space& fine, const DiscreteField& u_fine);

struct ConvergenceRow {
    int level = 0;
    double h = 0.0;
    int dim = 0;
    double e_l2 = 0.0, e_h1 = 0.0, e_h2 = 0.0;
    std::optional<double> ord_l2, ord_h1, ord_h2;
};
struct ConvergenceLedger {
    std::vector<ConvergenceRow> rows;
    bool estimator_based = false;  // reaction problems: rows hold h-h/2 values
};

/// Solves on levels L = 0..levels-1 over dyadic refinements of the geometry.
/// Dirichlet problems report true errors per level; reaction problems report
/// h-h/2 estimators between consecutive levels (levels-1 rows).
ConvergenceLedger convergence_study(const ProblemSpec& problem, const MultiPatchSpline& geometry,
                                    const GluingData& gluing, int levels,
                                    const ManufacturedSolution& ms);

}  // namespace asg1
