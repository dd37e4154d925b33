#pragma once

#include "toricflow/bundle_weights.hpp"
#include "toricflow/discrete_operator.hpp"
#include "toricflow/errors.hpp"
#include "toricflow/grid.hpp"
#include "toricflow/run_config.hpp"

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <vector>

namespace toricflow {

struct MonitorSnapshot {
    double grad_bound = 0;       // max |Du|
    double vol_weighted = 0;     // Σ det D²u 𝒜⁻¹(Du) h^m
    double vol_unweighted = 0;   // Σ det D²u h^m
    double m_t = 0;
    double sup_phi_bar = 0;      // sup (recentred u − u₀)
    double phi_bar_inf = 0;      // ‖recentred u − u₀‖∞
    double perelman_gap = 0;     // sup |−u̇ + c_t|
    double sublevel_vol = 0;     // Vol{v ≤ 1}, v = u − min u
    double sublevel_lambda = 0;  // min det D²v on that set
    double sublevel_ratio = 0;   // Vol · λ^{1/2}
    double stationarity_residual = 0;
};

// Flow state in the co-moving frame: `u` is the potential seen from the
// moving origin, pinned so that u(0) = 0 and Du(0) = 0 at every accepted step.
struct FlowState {
    double time = 0;
    PotentialGrid u;
    std::vector<Real> u_dot;        // rhs(u) on interior nodes
    double c_t = 0;
    Eigen::VectorXd p_t;            // lab-frame minimiser
    double m_t = 0;
    MonitorSnapshot monitors;

    Eigen::VectorXd frame_shift;    // lab position of the co-moving origin
    SmallVec frame_velocity;        // β
    Real gauge_rate = 0;            // κ
    std::shared_ptr<const PotentialGrid> initial;  // u₀ for φ̄
    Eigen::VectorXd fitted_drift;   // b̂ with u̇ ≈ ĉ − <b̂, Du>
    double fitted_constant = 0;     // ĉ
};

// log det D²u + u − log 𝒜(Du) on interior nodes.
std::vector<Real> rhs(const PotentialGrid& u, const WeightData& W);

// max over samples (snapped to the nearest interior node) of
// |rhs(t) − [−log det Hess G(x) + <x, t> − G(x) − log 𝒜(x)]| with x = Du(t)
// and G the numerical Legendre transform of u.
double dual_rhs_check(const PotentialGrid& u, const WeightData& W, const std::vector<Eigen::VectorXd>& samples,
                      int dual_n = 0);

// c_t = −log(Σ e^{−u̇} det D²u 𝒜⁻¹(Du) h^m / ∫_Δ 𝒜⁻¹); stores it in the state.
double normalize_c(FlowState& state, const WeightData& W);
// Same normalisation computed in the moment variable: ∫_Δ e^{−u̇(t(x))} 𝒜⁻¹(x) dx
// with t(x) from the numerical Legendre transform.
double normalize_c_dual(const PotentialGrid& u, const WeightData& W, int dual_n = 0);

// Builds a fully evaluated state (u_dot, c_t, p_t, m_t, monitors) from a potential.
FlowState make_state(PotentialGrid u, const WeightData& W, std::shared_ptr<const PotentialGrid> initial = nullptr);

// Backward-Euler step in the co-moving frame (see MongeAmpereOperator).
class FlowStepper {
public:
    FlowStepper(std::shared_ptr<const GridLayout> layout, const WeightData& W);
    FlowState step(const FlowState& state, double dt);
    MongeAmpereOperator& op() { return op_; }

private:
    MongeAmpereOperator op_;
};
FlowState step(const FlowState& state, const WeightData& W, double dt);

// Minimiser of u refined by one Newton step from the best interior node.
struct Minimum {
    Eigen::VectorXd point;
    Real value = 0;
    std::size_t node = 0;
};
Minimum locate_minimum(const PotentialGrid& u);  // throws MinimizerOnBoundary

// Translate so the minimiser sits at the origin (cubic resampling) and subtract the minimum.
FlowState recenter(const FlowState& state, const WeightData& W);

MonitorSnapshot monitors(const FlowState& state, const WeightData& W);

struct TrajectoryRow {
    double t = 0;
    double c_t = 0;
    double m_t = 0;
    Eigen::VectorXd p_t;
    MonitorSnapshot monitors;
    double dt = 0;
};

struct Trajectory {
    std::vector<TrajectoryRow> rows;
    PotentialGrid final_potential;  // limit, min 0 (Du(0) = 0 is held by the co-moving frame)
    Eigen::VectorXd fitted_drift;
    double fitted_constant = 0;
    Eigen::VectorXd frame_velocity;
    bool converged = false;
    int steps = 0;
};

struct MaxStepsExceeded : Error {
    MaxStepsExceeded(const std::string& what, std::shared_ptr<Trajectory> t) : Error(what), trajectory(std::move(t)) {}
    std::shared_ptr<Trajectory> trajectory;
};

// Initial potential u₀ described by the config, sampled on `layout` (ring included).
PotentialGrid initial_potential(const RunConfig& config, std::shared_ptr<const GridLayout> layout);

// Polytope and weights described by the config (not yet Fano-validated).
WeightData weight_data(const RunConfig& config);

Trajectory run(const RunConfig& config);

}  // namespace toricflow
