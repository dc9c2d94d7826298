#pragma once

#include "asg1/splinespace.hpp"

#include <array>
#include <memory>
#include <string>
#include <vector>

namespace asg1 {

class TopologyError : public std::runtime_error {
  public:
    explicit TopologyError(const std::string& what) : std::runtime_error(what) {}
};

enum class Side { U0, U1, V0, V1 };

Side side_from_string(const std::string& s);
std::string side_to_string(Side s);

/// One of the 8 symmetries of the parameter square, mapping local (u,v) to
/// patch coordinates.  Knot vectors are symmetric, so a frame acts on basis
/// indices exactly: a patch viewed through a frame is again a tensor spline
/// whose coefficients are a permutation of the patch coefficients.
struct Frame {
    bool swap = false;   // local u drives patch coordinate 2
    bool flip1 = false;  // patch coordinate 1 reversed
    bool flip2 = false;  // patch coordinate 2 reversed

    std::pair<double, double> map_point(double u, double v) const;
    /// Local coefficient (a,b) -> patch tensor indices (j1,j2).
    std::pair<int, int> map_index(int a, int b, int n) const;
    /// Local derivative (a,b) -> patch derivative orders and sign.
    struct DerivMap {
        int l1, l2;
        double sign;
    };
    DerivMap map_deriv(int a, int b) const;
    /// Patch corner at local (0,0), encoded as 2*(u==1) + (v==1).
    int corner_at_origin() const;
};

/// The unique frame presenting `side` of a patch as the local edge {u=0}
/// (side-1 convention: u transversal into the patch, v along the edge) with
/// the edge parameter running in the side's natural direction (or reversed).
Frame side1_frame(Side side, bool reversed);
/// Same for the side-2 convention, local edge {v=0} with u along the edge.
Frame side2_frame(Side side, bool reversed);

/// Transforms a patch-coordinate 2-jet (order 00,10,01,20,11,02) into the
/// local coordinates of a frame.
std::array<Vec3, 6> transform_jet2(const std::array<Vec3, 6>& patch_jet, const Frame& f);

/// 2-jet of a tensor spline patch given by a coefficient matrix.
std::array<Vec3, 6> tensor_jet2(const TensorSplineSpace& space, const Matrix& coefs, double u,
                                double v);
Vec3 tensor_eval3(const TensorSplineSpace& space, const Matrix& coefs, double u, double v, int l1,
                  int l2);

struct InterfaceRecord {
    int id = 0;
    int patch_a = 0, patch_b = 0;
    Side side_a = Side::U0, side_b = Side::V0;
    bool reversed = false;
};
struct BoundaryRecord {
    int patch = 0;
    Side side = Side::U0;
};

/// Canonicalized interface: side 1 presents the curve as F(0, xi), side 2 as
/// F(xi, 0), with a common parameter xi in [0,1].
struct Interface {
    int id = 0;
    std::array<int, 2> patch{};
    std::array<Frame, 2> frame{};
};

struct BoundaryCurve {
    int id = 0;
    int patch = 0;
    Frame frame;  // side-1 convention: curve is F(0, xi)
};

struct Vertex {
    int id = 0;
    bool boundary = false;
    std::vector<int> patches_ccw;                 // fan order around the vertex
    std::vector<std::pair<int, int>> corners;     // (patch, corner code), fan order
    struct Incidence {
        int interface;  // index into Topology::interfaces
        int end;        // 0/1: vertex sits at canonical parameter 0 or 1
    };
    std::vector<Incidence> interfaces;  // between consecutive fan patches
    int valency() const { return static_cast<int>(patches_ccw.size()); }
};

struct Topology {
    int num_patches = 0;
    std::vector<Interface> interfaces;
    std::vector<BoundaryCurve> boundary;
    std::vector<Vertex> vertices;
    bool closed() const { return boundary.empty(); }
};

/// Multi-patch spline surface with canonical topology and a control-point
/// identification table (one class per physical control point; interface
/// edge rows share classes, which keeps C0 conformity structural).
class MultiPatchSpline {
  public:
    MultiPatchSpline(const TensorSplineSpace& space, std::vector<Matrix> patch_coefs,
                     Topology topo);

    const TensorSplineSpace& space() const { return space_; }
    const Topology& topology() const { return topo_; }
    int num_patches() const { return topo_.num_patches; }
    const Matrix& patch_coefs(int i) const { return coefs_[static_cast<size_t>(i)]; }
    Matrix& patch_coefs(int i) { return coefs_[static_cast<size_t>(i)]; }

    int num_classes() const { return num_classes_; }
    int class_of(int patch, int slot) const {
        return class_of_[static_cast<size_t>(patch)][static_cast<size_t>(slot)];
    }
    /// Representative (patch, slot) per class.
    const std::vector<std::pair<int, int>>& class_rep() const { return class_rep_; }
    /// All (patch, slot) members of a class.
    const std::vector<std::pair<int, int>>& class_members(int cls) const {
        return class_members_[static_cast<size_t>(cls)];
    }

    /// Writes per-class values into every member slot (bitwise C0).
    void set_class_value(int cls, const Vec3& value);
    Vec3 class_value(int cls) const;

    std::array<Vec3, 6> jet2(int patch, double u, double v) const {
        return tensor_jet2(space_, coefs_[static_cast<size_t>(patch)], u, v);
    }
    Vec3 eval(int patch, double u, double v, int l1 = 0, int l2 = 0) const {
        return tensor_eval3(space_, coefs_[static_cast<size_t>(patch)], u, v, l1, l2);
    }

    MultiPatchSpline refine_dyadic(int level) const;

  private:
    TensorSplineSpace space_;
    std::vector<Matrix> coefs_;
    Topology topo_;
    std::vector<std::vector<int>> class_of_;
    std::vector<std::pair<int, int>> class_rep_;
    std::vector<std::vector<std::pair<int, int>>> class_members_;
    int num_classes_ = 0;
};

/// Builds canonical frames from raw interface/boundary records, validates C0
/// conformity (tolerance relative to the coefficient scale), derives vertex
/// fans, and identifies shared edge coefficients.
MultiPatchSpline canonicalize(const TensorSplineSpace& space, std::vector<Matrix> patch_coefs,
                              const std::vector<InterfaceRecord>& interfaces,
                              const std::vector<BoundaryRecord>& boundary,
                              double c0_tol = 1e-9);

/// Abstract evaluator of the input surface: all derivatives up to total
/// order 2, per patch, in patch coordinates.
class SurfaceSource {
  public:
    virtual ~SurfaceSource() = default;
    virtual int num_patches() const = 0;
    virtual std::array<Vec3, 6> jet2(int patch, double u, double v) const = 0;
    Vec3 value(int patch, double u, double v) const { return jet2(patch, u, v)[0]; }
};

class SplineSurfaceSource : public SurfaceSource {
  public:
    explicit SplineSurfaceSource(const MultiPatchSpline* surface) : surface_(surface) {}
    int num_patches() const override { return surface_->num_patches(); }
    std::array<Vec3, 6> jet2(int patch, double u, double v) const override {
        return surface_->jet2(patch, u, v);
    }

  private:
    const MultiPatchSpline* surface_;
};

/// 2-jet of a source through a frame (local coordinates).
std::array<Vec3, 6> source_jet2_in_frame(const SurfaceSource& src, int patch, const Frame& f,
                                         double u, double v);

/// sqrt( sum_i sum_{l1+l2<=1} sigma^{l1+l2} int ||d^{l1,l2} G^{(i)}||^2 ),
/// Gauss order q per knot span, parameter-domain integrals.
double weighted_h1_norm(const MultiPatchSpline& g, double sigma, int q);

/// Same norm for the difference F - S and for S itself; returns
/// (eps_L2, eps_H1) = relative L2 and weighted-H1 errors.
std::pair<double, double> relative_errors(const MultiPatchSpline& f, const SurfaceSource& s,
                                          double sigma, int q);

}  // namespace asg1
