#pragma once

#include "toricflow/polytope.hpp"

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace toricflow {

// Grid values are held in extended precision: second differences of
// |t|-sized numbers must resolve curvatures of order e^{-R}.
using Real = long double;
using SmallVec = Eigen::Matrix<Real, Eigen::Dynamic, 1, 0, 3, 1>;
using SmallMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;

inline constexpr int kMaxDim = 3;
using Index3 = std::array<int, kMaxDim>;

// Geometry of the uniform grid on [-R, R]^m plus everything that only depends on
// (polytope, R, N): exact support-function values and the ghost-ring map.
//
// Node i has coordinate t = (h/2) * z with the odd/even integer z = 2i - N + 1,
// so v̄(t) = (h/2) * K with K = max_k <p^(k), z> an exact integer.
class GridLayout {
public:
    GridLayout(std::shared_ptr<const LatticePolytope> polytope, double box_radius, int n_per_axis);

    struct Ghost {
        std::size_t node;  // ring node
        std::size_t edge;  // interior source node; ψ(node) = ψ(edge)
    };

    const LatticePolytope& polytope() const { return *polytope_; }
    const std::shared_ptr<const LatticePolytope>& polytope_ptr() const { return polytope_; }
    int dim() const { return dim_; }
    int n() const { return n_; }
    double radius() const { return radius_; }
    double spacing() const { return static_cast<double>(h_); }
    Real h() const { return h_; }
    std::size_t size() const { return size_; }
    std::size_t stride(int j) const { return stride_[j]; }

    Index3 unravel(std::size_t flat) const;
    std::size_t ravel(const Index3& idx) const;
    int z(int i) const { return 2 * i - n_ + 1; }
    Real coord(std::size_t flat, int j) const { return h_ / 2 * z(unravel(flat)[j]); }
    Eigen::VectorXd node(std::size_t flat) const;

    bool is_interior(std::size_t flat) const { return unknown_[flat] >= 0; }
    const std::vector<std::size_t>& interior() const { return interior_; }
    std::int64_t unknown_index(std::size_t flat) const { return unknown_[flat]; }
    const std::vector<Ghost>& ghosts() const { return ghosts_; }

    std::int64_t support_units(std::size_t flat) const { return K_[flat]; }
    Real support_value(std::size_t flat) const { return h_ / 2 * K_[flat]; }
    std::size_t vertex_at(std::size_t flat) const { return vertex_[flat]; }
    // <p^(k), z> for node index (possibly outside the box).
    std::int64_t vertex_units(std::size_t k, const Index3& idx) const;

    // Variant of the mixed difference for axes k < j at a node: the sign of
    // d_j d_k for the edge direction d = p(best) − p(second) of the two
    // dominant vertices (see cross_taps).
    int cross_variant(std::size_t flat, int j, int k) const {
        return cross_[flat * npairs_ + static_cast<std::size_t>(j * (j - 1) / 2 + k)];
    }

    // Multilinear interpolation stencil of the origin (nodes and weights).
    const std::vector<std::pair<std::size_t, Real>>& origin_stencil() const { return origin_; }

private:
    std::shared_ptr<const LatticePolytope> polytope_;
    int dim_, n_;
    double radius_;
    Real h_;
    std::size_t size_;
    std::array<std::size_t, kMaxDim> stride_{};
    std::vector<std::int64_t> K_;
    std::vector<std::size_t> vertex_;
    std::vector<std::int64_t> unknown_;
    std::vector<std::size_t> interior_;
    std::vector<Ghost> ghosts_;
    std::vector<std::pair<std::size_t, Real>> origin_;
    std::size_t npairs_ = 0;
    std::vector<std::int8_t> cross_;
};

// Taps (offset along axis j, offset along axis k, weight × h²) of the mixed
// second difference ∂_j∂_k. Variant 0 is the four-corner cross. Variant −1
// combines the (1,1) diagonal with the axis differences and is exact — rank
// one — for ridge functions of t_j − t_k; variant +1 likewise for t_j + t_k.
// Far along a wall of the fan the potential is such a ridge plus an
// exponentially small transverse part, which the plain cross would swamp
// with O(h²) errors of the wrong sign.
struct StencilTap {
    int dj, dk;
    Real w;
};
const std::vector<StencilTap>& cross_taps(int variant);

// A convex potential u sampled on a GridLayout, stored as the offset ψ = u − v̄.
class PotentialGrid {
public:
    PotentialGrid() = default;
    PotentialGrid(std::shared_ptr<const GridLayout> layout, std::vector<Real> offsets);

    using Function = std::function<Real(const Eigen::VectorXd&)>;
    // Sample u at every node (the ring included).
    static PotentialGrid sample(std::shared_ptr<const GridLayout> layout, const Function& u);
    // Sample u − v̄ directly (avoids cancellation for asymptotically conical u).
    static PotentialGrid sample_offset(std::shared_ptr<const GridLayout> layout, const Function& psi);
    static PotentialGrid from_values(std::shared_ptr<const GridLayout> layout, const std::vector<Real>& u);

    const GridLayout& layout() const { return *layout_; }
    const std::shared_ptr<const GridLayout>& layout_ptr() const { return layout_; }
    const LatticePolytope& polytope() const { return layout_->polytope(); }
    double box_radius() const { return layout_->radius(); }
    int n_per_axis() const { return layout_->n(); }
    int dim() const { return layout_->dim(); }
    std::size_t size() const { return offsets_.size(); }

    Real value(std::size_t flat) const { return layout_->support_value(flat) + offsets_[flat]; }
    Real offset(std::size_t flat) const { return offsets_[flat]; }
    std::vector<Real>& offsets() { return offsets_; }
    const std::vector<Real>& offsets() const { return offsets_; }
    std::vector<Real> values() const;

    // Overwrite the ring with v̄ + ψ(source), the source being the nearest
    // interior node along a direction parallel to a wall edge: affine inside
    // each cone of the fan, and it keeps the kink of v̄ where a wall leaves the box.
    void apply_affine_cap();
    void add_constant(Real c) {
        for (auto& v : offsets_) v += c;
    }

private:
    std::shared_ptr<const GridLayout> layout_;
    std::vector<Real> offsets_;
};

// Centered second-order differences at an interior node.
struct NodeDerivatives {
    SmallVec gradient;
    SmallMat hessian;
};
NodeDerivatives node_derivatives(const PotentialGrid& u, std::size_t flat);

// Piecewise-cubic (4-point Lagrange, tensor product) evaluation of u at an
// arbitrary point. The interpolated quantity is u − v⁰, which is smooth across
// the walls of the fan; outside the box it is continued linearly.
Real interpolate(const PotentialGrid& u, const Eigen::VectorXd& s);

// u'(t) = u(t + p) − shift at every node, by the same interpolation.
PotentialGrid translate(const PotentialGrid& u, const Eigen::VectorXd& p, Real shift);

}  // namespace toricflow
