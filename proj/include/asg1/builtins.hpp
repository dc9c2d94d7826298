#pragma once

#include "asg1/multipatch.hpp"

#include <memory>
#include <optional>

namespace asg1 {

/// A bundled input surface: a spline multi-patch geometry or an analytic
/// source, with its canonical topology.
struct BuiltinInput {
    std::string name;
    std::shared_ptr<const MultiPatchSpline> spline;  // null for analytic inputs
    std::shared_ptr<const SurfaceSource> source;
    Topology topology;
    std::optional<std::array<int, 3>> spline_space;  // (p~, r~, k~) when spline
};

/// Names: quad_grid_2x2 (planar bilinear 2x2 grid, AS-G1 via construction),
/// plate16 (planar 4x4 bicubic grid with curved interior interfaces, G1 but
/// not AS-G1), sphere6 (closed 6-patch cube-to-sphere projection, analytic).
BuiltinInput make_builtin_input(const std::string& name);
std::vector<std::string> builtin_input_names();

/// Raw multi-patch record set of a spline builtin (for file export).
struct BuiltinGeometryRecords {
    int p = 1, r = 0, k = 0;
    std::vector<Matrix> coefs;
    std::vector<InterfaceRecord> interfaces;
    std::vector<BoundaryRecord> boundary;
};
BuiltinGeometryRecords builtin_geometry_records(const std::string& name);

}  // namespace asg1
