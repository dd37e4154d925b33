#pragma once

#include "toricflow/polytope.hpp"

#include <Eigen/Dense>
#include <memory>
#include <utility>
#include <vector>

namespace toricflow {

// One affine factor <a, x> + b of 𝒜⁻¹, already in the moment convention x = Du ∈ Δ.
struct WeightPair {
    Eigen::VectorXd a;
    double b = 1.0;
};

struct WeightData {
    std::shared_ptr<const LatticePolytope> polytope;
    std::vector<WeightPair> pairs;  // empty: 𝒜 ≡ 1

    WeightData() = default;
    WeightData(std::shared_ptr<const LatticePolytope> P, std::vector<WeightPair> p = {});

    double factor(std::size_t i, const Eigen::VectorXd& x) const { return pairs[i].a.dot(x) + pairs[i].b; }
};

// ∏ (<a, x> + b). Throws OutsidePolytope if x ∉ Δ.
double a_inverse(const WeightData& W, const Eigen::VectorXd& x);

// log 𝒜(x) = −Σ log(<a, x> + b). Throws OutsidePolytope, NonPositiveFactor.
double log_a(const WeightData& W, const Eigen::VectorXd& x);

// Certified bounds K1 <= 𝒜 <= K2 over Δ; throws FanoViolation on a vertex sign failure.
std::pair<double, double> validate_fano(const WeightData& W);

// ∫_Δ 𝒜⁻¹ dx.
double weighted_volume(const WeightData& W);

}  // namespace toricflow
