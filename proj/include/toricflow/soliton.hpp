#pragma once

#include "toricflow/bundle_weights.hpp"
#include "toricflow/grid.hpp"

#include <Eigen/Dense>
#include <memory>

namespace toricflow {

// Normalised weighted barycenter ∫ x e^{<b,x>} 𝒜⁻¹ / ∫ e^{<b,x>} 𝒜⁻¹ over Δ.
Eigen::VectorXd weighted_barycenter(const WeightData& W, const Eigen::VectorXd& b);

// The unique b with vanishing weighted barycenter (Newton on the log-partition
// function; gradient norm < 1e-12). Throws QuadratureUnstable.
Eigen::VectorXd drift_vector(const LatticePolytope& P, const WeightData& W,
                             const Eigen::VectorXd& start = Eigen::VectorXd());

struct SolitonSolution {
    Eigen::VectorXd drift;           // b passed in (continuum drift)
    Eigen::VectorXd discrete_drift;  // β solved together with w on the grid
    PotentialGrid potential;         // recentred: min 0 at the origin
    double gauge = 0;                // c in  log det D²w + w − log 𝒜(Dw) + <β, Dw> = c
    double barycenter_norm = 0;
    double ma_residual_inf = 0;
    int continuation_steps = 0;
};

// Steady state of the co-moving flow equation on `layout` by pseudo-transient
// continuation followed by Newton. Throws NewtonDivergence, GaugeInconsistency.
SolitonSolution soliton_potential(std::shared_ptr<const GridLayout> layout, const WeightData& W,
                                  const Eigen::VectorXd& b);

struct Comparison {
    double distance = 0;          // min over τ, c of ‖limit(· + τ) − c − reference‖∞
    Eigen::VectorXd translation;  // optimal τ
    double offset = 0;            // optimal c
};

// Modulo-translation sup distance on the nodes common to both boxes.
Comparison compare_potentials(const PotentialGrid& limit, const PotentialGrid& reference);
double compare_to_flow(const PotentialGrid& limit, const SolitonSolution& sol);

}  // namespace toricflow
