#pragma once

#include "toricflow/bundle_weights.hpp"
#include "toricflow/grid.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <memory>
#include <vector>

namespace toricflow {

// Nodal quantities of log det D²u + u − log 𝒜(Du) on the interior nodes
// (indexed like GridLayout::interior()).
struct OperatorEvaluation {
    std::vector<Real> rhs;
    std::vector<Real> det;
    std::vector<Real> a_inv;        // 𝒜⁻¹(Du)
    std::vector<SmallVec> grad;
    std::vector<SmallMat> hess_inv;
    std::vector<Real> noise;        // rounding bound of rhs at the node
};

// Discrete operator plus the bordered Newton solver used by both the flow and
// the soliton solver. The unknowns are the interior offsets, a frame velocity
// β ∈ ℝ^m and a gauge rate κ; the equations are
//     a·(u − u_old) − s·(rhs(u) + <β, Du> − κ) = 0   at interior nodes,
//     Du(0) = 0,  u(0) = 0                            (multilinear at the origin).
class MongeAmpereOperator {
public:
    MongeAmpereOperator(std::shared_ptr<const GridLayout> layout, WeightData weights);

    const GridLayout& layout() const { return *layout_; }
    const WeightData& weights() const { return weights_; }

    // Throws NonPositiveDefinite / NonPositiveFactor.
    OperatorEvaluation evaluate(const PotentialGrid& u) const;

    struct Options {
        Real tol = 1e-10L;
        int max_iterations = 50;
    };
    struct Solution {
        PotentialGrid u;
        SmallVec beta;
        Real kappa = 0;
        int iterations = 0;
        Real residual = 0;  // ∞-norm of the nodal equations at exit
    };
    // u_old may be null when a == 0. Throws NewtonDivergence, ConvexityLoss.
    Solution solve(const PotentialGrid* u_old, PotentialGrid guess, SmallVec beta, Real kappa, Real a, Real s,
                   const Options& opt);

    // The nodal + constraint equations and their Newton matrix at a point
    // (exposed for consistency checks).
    std::vector<Real> equations(const PotentialGrid* u_old, PotentialGrid u, const SmallVec& beta, Real kappa, Real a,
                                Real s) const;
    const Eigen::SparseMatrix<double>& jacobian(PotentialGrid u, const SmallVec& beta, Real a, Real s);

    // Value and gradient of the multilinear interpolant at the origin.
    Real origin_value(const PotentialGrid& u) const;
    SmallVec origin_gradient(const PotentialGrid& u) const;

private:
    struct Residual {
        std::vector<Real> F;   // n + m + 1 entries
        Real excess = 0;       // merit: max over rows of |F| beyond its rounding bound
        Real max_abs = 0;
    };
    Residual residual(const PotentialGrid* u_old, const PotentialGrid& u, const OperatorEvaluation& ev,
                      const SmallVec& beta, Real kappa, Real a, Real s) const;
    void assemble(const PotentialGrid& u, const OperatorEvaluation& ev, const SmallVec& beta, Real a, Real s);

    std::shared_ptr<const GridLayout> layout_;
    WeightData weights_;
    std::vector<std::int64_t> column_of_;  // flat node -> unknown (ghosts map to their edge node)
    Eigen::SparseMatrix<double> J_;
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
    bool analyzed_ = false;
};

}  // namespace toricflow
