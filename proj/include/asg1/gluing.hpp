#pragma once

#include "asg1/multipatch.hpp"

namespace asg1 {

class RegularityError : public std::runtime_error {
  public:
    explicit RegularityError(const std::string& what) : std::runtime_error(what) {}
};

/// Linear gluing functions of one interface, Bezier coefficients per side.
/// alpha is the interpolated corner cross-product norm (determinant in the
/// planar-bilinear variant); beta interpolates the tangential projection
/// ratio of the transversal derivative, signed so that the G1 identity
///   alpha1 * d2F2 + alpha2 * d1F1 + beta * d2F1 = 0,
/// with beta = alpha1*beta2 + alpha2*beta1, holds exactly whenever exact
/// linear gluing exists.
struct InterfaceGluing {
    std::array<double, 2> a0{}, a1{}, b0{}, b1{};

    double alpha(int side, double xi) const {
        return a0[static_cast<size_t>(side)] * (1.0 - xi) + a1[static_cast<size_t>(side)] * xi;
    }
    double beta(int side, double xi) const {
        return b0[static_cast<size_t>(side)] * (1.0 - xi) + b1[static_cast<size_t>(side)] * xi;
    }
    double dalpha(int side) const {
        return a1[static_cast<size_t>(side)] - a0[static_cast<size_t>(side)];
    }
    double dbeta(int side) const {
        return b1[static_cast<size_t>(side)] - b0[static_cast<size_t>(side)];
    }
    /// beta^(i)(xi) = alpha^(i,i1) beta^(i,i2) + alpha^(i,i2) beta^(i,i1).
    double beta_composite(double xi) const {
        return alpha(0, xi) * beta(1, xi) + alpha(1, xi) * beta(0, xi);
    }
};

struct GluingData {
    std::vector<InterfaceGluing> interfaces;  // aligned with Topology::interfaces
};

/// Surface variant: a-coefficients are corner cross-product norms, hence
/// positive for regular surfaces.
InterfaceGluing estimate_gluing_surface(const SurfaceSource& s, const Interface& itf);

/// Planar-bilinear variant: signed 2x2 determinants in the (x,y)-plane.
/// Serves as a validation oracle for z=0 embeddings.
InterfaceGluing estimate_gluing_planar_bilinear(const SurfaceSource& s, const Interface& itf);

GluingData estimate_gluing(const SurfaceSource& s, const Topology& topo);

}  // namespace asg1
