#include "toricflow/io.hpp"

#include "toricflow/errors.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>

namespace toricflow {
namespace {

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string exact(Real v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.21Lg", v);
    return buf;
}

nlohmann::json vec(const Eigen::VectorXd& v) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

}  // namespace

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    const int m = traj.rows.empty() ? 0 : static_cast<int>(traj.rows.front().p_t.size());
    os << "t,c_t,m_t";
    for (int j = 1; j <= m; ++j) os << ",p_t_" << j;
    os << ",vol_weighted,vol_unweighted,grad_bound,perelman_gap,sublevel_ratio,stationarity_residual\n";
    for (const auto& r : traj.rows) {
        os << g17(r.t) << ',' << g17(r.c_t) << ',' << g17(r.m_t);
        for (int j = 0; j < m; ++j) os << ',' << g17(r.p_t(j));
        const auto& M = r.monitors;
        os << ',' << g17(M.vol_weighted) << ',' << g17(M.vol_unweighted) << ',' << g17(M.grad_bound) << ','
           << g17(M.perelman_gap) << ',' << g17(M.sublevel_ratio) << ',' << g17(M.stationarity_residual) << '\n';
    }
}

nlohmann::json potential_to_json(const PotentialGrid& u) {
    nlohmann::json j;
    j["dim"] = u.dim();
    j["box_radius"] = u.box_radius();
    j["n_per_axis"] = u.n_per_axis();
    nlohmann::json values = nlohmann::json::array(), offsets = nlohmann::json::array();
    for (std::size_t f = 0; f < u.size(); ++f) {
        values.push_back(static_cast<double>(u.value(f)));
        offsets.push_back(exact(u.offset(f)));
    }
    j["values"] = std::move(values);
    j["offsets"] = std::move(offsets);
    return j;
}

PotentialGrid potential_from_json(const nlohmann::json& j, std::shared_ptr<const LatticePolytope> P) {
    for (const char* k : {"box_radius", "n_per_axis", "values"})
        if (!j.contains(k)) throw SchemaError(std::string("/") + k, "missing required key");
    const double R = j["box_radius"].get<double>();
    const int n = j["n_per_axis"].get<int>();
    auto layout = std::make_shared<const GridLayout>(std::move(P), R, n);
    if (j["values"].size() != layout->size()) throw ValueError("values", "length does not match n_per_axis^dim");
    if (j.contains("offsets")) {
        const auto& o = j["offsets"];
        if (o.size() != layout->size()) throw ValueError("offsets", "length does not match n_per_axis^dim");
        std::vector<Real> psi(layout->size());
        for (std::size_t f = 0; f < psi.size(); ++f) psi[f] = std::strtold(o[f].get<std::string>().c_str(), nullptr);
        return PotentialGrid(layout, std::move(psi));
    }
    std::vector<Real> vals(layout->size());
    for (std::size_t f = 0; f < vals.size(); ++f) vals[f] = j["values"][f].get<double>();
    return PotentialGrid::from_values(layout, vals);
}

nlohmann::json polytope_info(const LatticePolytope& P) {
    nlohmann::json j;
    j["dim"] = P.dim();
    j["vertices"] = P.vertices_int();
    nlohmann::json facets = nlohmann::json::array();
    for (const auto& f : P.facets()) facets.push_back(f.normal);
    j["facet_normals"] = std::move(facets);
    j["lattice_points"] = P.lattice_points_int();
    j["num_lattice_points"] = P.num_lattice_points();
    j["volume_exact"] = P.volume_exact().str();
    j["volume"] = P.volume();
    return j;
}

nlohmann::json soliton_to_json(const SolitonSolution& sol) {
    nlohmann::json j;
    j["drift"] = vec(sol.drift);
    j["discrete_drift"] = vec(sol.discrete_drift);
    j["gauge"] = sol.gauge;
    j["residuals"] = {{"barycenter_norm", sol.barycenter_norm}, {"ma_residual_inf", sol.ma_residual_inf}};
    j["continuation_steps"] = sol.continuation_steps;
    j["potential"] = potential_to_json(sol.potential);
    return j;
}

nlohmann::json trajectory_summary(const Trajectory& traj) {
    nlohmann::json j;
    j["converged"] = traj.converged;
    j["steps"] = traj.steps;
    j["fitted_drift"] = vec(traj.fitted_drift);
    j["fitted_constant"] = traj.fitted_constant;
    j["frame_velocity"] = vec(traj.frame_velocity);
    if (!traj.rows.empty()) {
        j["final_time"] = traj.rows.back().t;
        j["final_c_t"] = traj.rows.back().c_t;
    }
    j["potential"] = potential_to_json(traj.final_potential);
    return j;
}

void write_file(const std::string& path, const std::string& contents) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ValueError("output_dir", "cannot write " + path);
    out << contents;
}

}  // namespace toricflow
