#pragma once

#include "toricflow/polytope.hpp"

#include <Eigen/Dense>
#include <functional>

namespace toricflow {

// Gauss–Legendre rule on [0, 1].
struct GaussRule {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
};
GaussRule gauss_legendre(int n);

using VectorIntegrand = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Tensor Gauss rule with n points per axis in collapsed (Duffy) coordinates.
// `simplex` holds the dim+1 vertices as rows.
Eigen::VectorXd integrate_simplex(const Eigen::MatrixXd& simplex, int n, const VectorIntegrand& f,
                                  Eigen::Index out_size);

// ∫_Δ f over the polytope's triangulation, doubling the rule until the
// result is stable to `rtol` (relative to its ∞-norm). Throws QuadratureUnstable.
Eigen::VectorXd integrate_polytope(const LatticePolytope& P, const VectorIntegrand& f, Eigen::Index out_size,
                                   double rtol = 1e-14, int n0 = 8, int n_max = 256);

}  // namespace toricflow
