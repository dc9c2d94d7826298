#include "asg1/gluing.hpp"

namespace asg1 {

namespace {

struct CornerDerivs {
    Vec3 transversal;
    Vec3 tangent;
};

// Transversal/tangent derivatives of the source at the interface corner,
// in the canonical frame of the given side (end = 0 or 1 along the curve).
CornerDerivs corner_derivs(const SurfaceSource& s, const Interface& itf, int side, int end) {
    const double u = side == 0 ? 0.0 : static_cast<double>(end);
    const double v = side == 0 ? static_cast<double>(end) : 0.0;
    const auto jet = source_jet2_in_frame(s, itf.patch[static_cast<size_t>(side)],
                                          itf.frame[static_cast<size_t>(side)], u, v);
    CornerDerivs d;
    if (side == 0) {
        d.transversal = jet[1];  // d1
        d.tangent = jet[2];      // d2 along the curve
    } else {
        d.transversal = jet[2];  // d2
        d.tangent = jet[1];      // d1 along the curve
    }
    return d;
}

}  // namespace

InterfaceGluing estimate_gluing_surface(const SurfaceSource& s, const Interface& itf) {
    InterfaceGluing g;
    for (int side = 0; side < 2; ++side)
        for (int end = 0; end < 2; ++end) {
            const auto d = corner_derivs(s, itf, side, end);
            const Vec3 cross = side == 0 ? d.transversal.cross(d.tangent)
                                         : d.tangent.cross(d.transversal);
            const double a = cross.norm();
            const double t2 = d.tangent.squaredNorm();
            if (!(a > 1e-14 * (1.0 + d.transversal.norm() * d.tangent.norm())) || !(t2 > 0.0))
                throw RegularityError("vanishing corner cross product on interface " +
                                      std::to_string(itf.id) + ", patch " +
                                      std::to_string(itf.patch[static_cast<size_t>(side)]) +
                                      ", end " + std::to_string(end));
            const double b = -d.transversal.dot(d.tangent) / t2;
            auto& ac = end == 0 ? g.a0 : g.a1;
            auto& bc = end == 0 ? g.b0 : g.b1;
            ac[static_cast<size_t>(side)] = a;
            bc[static_cast<size_t>(side)] = b;
        }
    return g;
}

InterfaceGluing estimate_gluing_planar_bilinear(const SurfaceSource& s, const Interface& itf) {
    InterfaceGluing g;
    for (int side = 0; side < 2; ++side)
        for (int end = 0; end < 2; ++end) {
            const auto d = corner_derivs(s, itf, side, end);
            const Vec3& d1 = side == 0 ? d.transversal : d.tangent;
            const Vec3& d2 = side == 0 ? d.tangent : d.transversal;
            const double det = d1.x() * d2.y() - d1.y() * d2.x();
            const double t2 = d.tangent.squaredNorm();
            if (det == 0.0 || !(t2 > 0.0))
                throw RegularityError("degenerate corner determinant on interface " +
                                      std::to_string(itf.id) + ", patch " +
                                      std::to_string(itf.patch[static_cast<size_t>(side)]) +
                                      ", end " + std::to_string(end));
            const double b = -d.transversal.dot(d.tangent) / t2;
            auto& ac = end == 0 ? g.a0 : g.a1;
            auto& bc = end == 0 ? g.b0 : g.b1;
            ac[static_cast<size_t>(side)] = det;
            bc[static_cast<size_t>(side)] = b;
        }
    return g;
}

GluingData estimate_gluing(const SurfaceSource& s, const Topology& topo) {
    GluingData data;
    data.interfaces.reserve(topo.interfaces.size());
    for (const auto& itf : topo.interfaces) data.interfaces.push_back(estimate_gluing_surface(s, itf));
    return data;
}

}  // namespace asg1
