#include "toricflow/config.hpp"
#include "toricflow/errors.hpp"
#include "toricflow/flow.hpp"
#include "toricflow/io.hpp"
#include "toricflow/soliton.hpp"

#include <CLI11.hpp>
#include <iostream>
#include <sstream>

using namespace toricflow;

namespace {

std::string output_dir(const RunConfig& c, const std::string& override_dir) {
    if (!override_dir.empty()) return override_dir;
    if (!c.output_dir.empty()) return c.output_dir;
    return "out/" + c.name;
}

void write_flow(const Trajectory& traj, const std::string& dir) {
    std::ostringstream csv;
    write_trajectory_csv(csv, traj);
    write_file(dir + "/trajectory.csv", csv.str());
    write_file(dir + "/final.json", trajectory_summary(traj).dump(1) + "\n");
}

int polytope_info_cmd(const std::string& path) {
    const RunConfig c = load_config(path);
    const auto P = LatticePolytope::from_vertices(c.vertices);
    std::cout << polytope_info(P).dump(1) << "\n";
    return 0;
}

int flow_run_cmd(const std::string& path, const std::string& out) {
    const RunConfig c = load_config(path);
    const std::string dir = output_dir(c, out);
    try {
        const Trajectory traj = run(c);
        write_flow(traj, dir);
        std::cout << "converged after " << traj.steps << " steps; output in " << dir << "\n";
        return 0;
    } catch (const MaxStepsExceeded& e) {
        write_flow(*e.trajectory, dir);
        throw;
    }
}

SolitonSolution solve_soliton(const RunConfig& c, std::shared_ptr<const GridLayout> layout, const WeightData& W) {
    const Eigen::VectorXd b = drift_vector(*W.polytope, W);
    return soliton_potential(std::move(layout), W, b);
}

int soliton_cmd(const std::string& path, const std::string& out) {
    const RunConfig c = load_config(path);
    const WeightData W = weight_data(c);
    validate_fano(W);
    auto layout = std::make_shared<const GridLayout>(W.polytope, c.box_radius, c.n_per_axis);
    const SolitonSolution sol = solve_soliton(c, layout, W);
    const std::string dir = output_dir(c, out);
    write_file(dir + "/soliton.json", soliton_to_json(sol).dump(1) + "\n");
    std::cout << "drift";
    for (Eigen::Index j = 0; j < sol.drift.size(); ++j) std::cout << ' ' << sol.drift(j);
    std::cout << "; gauge " << sol.gauge << "; output in " << dir << "\n";
    return 0;
}

int cross_check_cmd(const std::string& path) {
    const RunConfig c = load_config(path);
    const WeightData W = weight_data(c);
    validate_fano(W);
    const Trajectory traj = run(c);
    const SolitonSolution sol = solve_soliton(c, traj.final_potential.layout_ptr(), W);
    const Comparison cmp = compare_potentials(traj.final_potential, sol.potential);
    nlohmann::json j;
    j["fitted_drift"] = std::vector<double>(traj.fitted_drift.data(), traj.fitted_drift.data() + traj.fitted_drift.size());
    j["drift"] = std::vector<double>(sol.drift.data(), sol.drift.data() + sol.drift.size());
    j["drift_difference"] = (traj.fitted_drift - sol.drift).lpNorm<Eigen::Infinity>();
    j["distance"] = cmp.distance;
    std::cout << j.dump(1) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Normalised Kähler-Ricci flow on toric Fano bundles, reduced to a real Monge-Ampère flow"};
    app.require_subcommand(1);
    std::string config, out;

    auto* info = app.add_subcommand("polytope-info", "print vertices, facets, lattice points and volume");
    info->add_option("config", config, "run config JSON")->required();
    auto* flow = app.add_subcommand("flow-run", "run the flow; writes trajectory.csv and final.json");
    flow->add_option("config", config, "run config JSON")->required();
    flow->add_option("-o,--out", out, "output directory (overrides the config)");
    auto* sol = app.add_subcommand("soliton-solve", "solve for the drift and soliton potential; writes soliton.json");
    sol->add_option("config", config, "run config JSON")->required();
    sol->add_option("-o,--out", out, "output directory (overrides the config)");
    auto* cross = app.add_subcommand("cross-check", "run flow and soliton solver and compare the limits");
    cross->add_option("config", config, "run config JSON")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*info) return polytope_info_cmd(config);
        if (*flow) return flow_run_cmd(config, out);
        if (*sol) return soliton_cmd(config, out);
        if (*cross) return cross_check_cmd(config);
    } catch (const FanoViolation& e) {
        std::cerr << "Fano violation: " << e.what() << "\n";
        return 3;
    } catch (const SchemaError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const ValueError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const NotFullDimensional& e) {
        std::cerr << "polytope error: " << e.what() << "\n";
        return 1;
    } catch (const OriginNotInterior& e) {
        std::cerr << "polytope error: " << e.what() << "\n";
        return 1;
    } catch (const DelzantViolation& e) {
        std::cerr << "polytope error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
