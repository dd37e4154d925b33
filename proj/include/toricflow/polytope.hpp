#pragma once

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <vector>

namespace toricflow {

using Rational = boost::multiprecision::cpp_rational;
using RationalPoint = std::vector<Rational>;
using IntPoint = std::vector<std::int64_t>;

struct Facet {
    IntPoint normal;  // λ_r; the facet is {x : <x, λ_r> + 1 = 0}
};

// Reflexive Delzant polytope Δ = {x : <x, λ_r> + 1 >= 0 for all r} with 0 in its interior.
// Construction is exact; queries take and return doubles.
class LatticePolytope {
public:
    static LatticePolytope from_vertices(const std::vector<RationalPoint>& points);
    static LatticePolytope from_vertices(const std::vector<std::vector<double>>& points);

    int dim() const { return dim_; }
    std::size_t num_vertices() const { return vertices_int_.size(); }
    std::size_t num_facets() const { return facets_.size(); }
    std::size_t num_lattice_points() const { return lattice_int_.size(); }

    const std::vector<IntPoint>& vertices_int() const { return vertices_int_; }
    const std::vector<Facet>& facets() const { return facets_; }
    const std::vector<IntPoint>& lattice_points_int() const { return lattice_int_; }

    // Row k = vertex p^(k); row r = λ_r; row j = lattice point.
    const Eigen::MatrixXd& vertices() const { return vertices_; }
    const Eigen::MatrixXd& normals() const { return normals_; }
    const Eigen::MatrixXd& lattice_points() const { return lattice_; }

    // Facet indices active at vertex k (exactly dim() of them).
    const std::vector<int>& vertex_facets(std::size_t k) const { return vertex_facets_[k]; }
    // Determinant of the active normals at vertex k (±1 by construction).
    std::int64_t delzant_determinant(std::size_t k) const { return delzant_det_[k]; }

    double support_function(const Eigen::VectorXd& t) const;
    std::size_t active_vertex(const Eigen::VectorXd& t) const;
    Eigen::VectorXd facet_values(const Eigen::VectorXd& x) const;  // l_r(x)
    double distance_to_boundary(const Eigen::VectorXd& x) const;
    bool contains(const Eigen::VectorXd& x, double tol = 0.0) const;

    Rational volume_exact() const { return volume_; }
    double volume() const { return volume_.convert_to<double>(); }
    double diameter() const;

    // Simplices (dim()+1 rows each) coned from the origin; they tile Δ.
    const std::vector<Eigen::MatrixXd>& simplices() const { return simplices_; }

private:
    int dim_ = 0;
    std::vector<IntPoint> vertices_int_;
    std::vector<Facet> facets_;
    std::vector<IntPoint> lattice_int_;
    std::vector<std::vector<int>> vertex_facets_;
    std::vector<std::int64_t> delzant_det_;
    Eigen::MatrixXd vertices_, normals_, lattice_;
    Rational volume_;
    std::vector<Eigen::MatrixXd> simplices_;
};

}  // namespace toricflow
