#pragma once

#include "toricflow/grid.hpp"
#include "toricflow/polytope.hpp"

#include <Eigen/Dense>
#include <memory>
#include <vector>

namespace toricflow {

// v⁰(t) = log Σ_k exp<p^(k), t> over all lattice points.
double v0_eval(const LatticePolytope& P, const Eigen::VectorXd& t);
// v⁰(t) − v̄(t), evaluated without cancellation.
double fact1_gap(const LatticePolytope& P, const Eigen::VectorXd& t);
Real fact1_gap_ext(const LatticePolytope& P, const Eigen::VectorXd& t);

// G₀(x) = Σ_r l_r(x) log l_r(x); throws BoundaryPoint unless x is interior.
double guillemin_potential(const LatticePolytope& P, const Eigen::VectorXd& x);
Eigen::VectorXd guillemin_gradient(const LatticePolytope& P, const Eigen::VectorXd& x);
// Hess G₀ = Σ_r λ_r λ_rᵀ / l_r(x).
Eigen::MatrixXd guillemin_hessian(const LatticePolytope& P, const Eigen::VectorXd& x);
// (det Hess G₀(x))⁻¹.
double hessian_det_dual(const LatticePolytope& P, const Eigen::VectorXd& x);

// Legendre dual of G₀, u(t) = sup_x <x, t> − G₀(x), by damped Newton in
// extended precision. Returns u(t) − v̄(t).
Real guillemin_dual_offset(const LatticePolytope& P, const Eigen::VectorXd& t);
PotentialGrid guillemin_dual(std::shared_ptr<const GridLayout> layout);

// Centered-difference gradient / Hessian determinant at an interior node.
Eigen::VectorXd gradient(const PotentialGrid& u, std::size_t flat);
double hessian_det(const PotentialGrid& u, std::size_t flat);  // throws NonPositiveDefinite

// max over interior nodes of |log det D²u + u|.
double fact3_residual(const PotentialGrid& u);

// Numerical convex conjugate on a uniform grid over the bounding box of Δ.
// Only nodes strictly inside Δ whose maximiser is resolved by the primal grid
// (not on or next to the ring) are marked valid.
struct SymplecticPotential {
    std::shared_ptr<const LatticePolytope> polytope;
    int dim = 0;
    int n = 0;
    Eigen::VectorXd lower, upper, spacing;
    std::vector<Real> values;          // G(x)
    std::vector<Eigen::VectorXd> argmax;  // t with Du(t) = x (refined)
    std::vector<char> valid;

    std::size_t size() const { return values.size(); }
    Eigen::VectorXd node(std::size_t flat) const;
    std::size_t stride(int j) const;
    // G₀, the closed-form singular part; G − G₀ stays bounded up to ∂Δ.
    double singular_part(std::size_t flat) const;
    // Centered-difference Hessian of G at a node whose neighbours are all valid.
    bool hessian(std::size_t flat, Eigen::MatrixXd& H) const;
};

// Conjugate at a single moment point: direct sup over the grid, one Newton
// step from the best node, value read off the cubic interpolant.
struct ConjugatePoint {
    Real value = 0;
    Eigen::VectorXd t;     // maximiser
    bool resolved = false; // false when the sup sits on or next to the ring
};
ConjugatePoint conjugate_at(const PotentialGrid& u, const Eigen::VectorXd& x);

// Throws NonConvexInput when the difference Hessian of u is not PD somewhere.
SymplecticPotential legendre_transform(const PotentialGrid& u, int dual_n = 0);

// Conjugate back onto a primal layout; nodes with no valid dual maximiser keep NaN.
PotentialGrid legendre_inverse(const SymplecticPotential& G, std::shared_ptr<const GridLayout> layout);

}  // namespace toricflow
