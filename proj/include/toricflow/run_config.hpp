#pragma once

#include <string>
#include <vector>

namespace toricflow {

struct FlowParams {
    double dt = 0.05;
    int max_steps = 2000;
    double stationarity_tol = 1e-6;  // <= 0: run exactly max_steps
    double min_dt = 1e-4;
};

// Optional Gaussian perturbation φ₀ = A exp(−|t − c|² / (2 w²)).
struct BumpSpec {
    double amplitude = 0.0;
    std::vector<double> center;
    double width = 1.0;
};

struct InitialSpec {
    std::string seed = "v0";         // "v0" or "guillemin"
    BumpSpec bump;
    std::vector<double> translate;   // u₀(t − τ); empty = no translation
};

struct WeightSpec {
    std::vector<double> a;
    double b = 1.0;
};

struct RunConfig {
    std::string name = "run";
    std::vector<std::vector<double>> vertices;
    std::vector<WeightSpec> weights;
    double box_radius = 12.0;
    int n_per_axis = 256;
    FlowParams flow;
    InitialSpec initial;
    std::string output_dir;
};

}  // namespace toricflow
