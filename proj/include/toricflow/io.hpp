#pragma once

#include "toricflow/flow.hpp"
#include "toricflow/polytope.hpp"
#include "toricflow/soliton.hpp"

#include <iosfwd>
#include <json.hpp>
#include <memory>
#include <string>

namespace toricflow {

// One row per accepted step; every number printed with %.17g.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

// {dim, box_radius, n_per_axis, values[], offsets[]}: `values` are u at the
// nodes (row-major, double); `offsets` are u − v̄ as exact long-double decimal
// strings and take precedence when reading back.
nlohmann::json potential_to_json(const PotentialGrid& u);
PotentialGrid potential_from_json(const nlohmann::json& j, std::shared_ptr<const LatticePolytope> P);

nlohmann::json polytope_info(const LatticePolytope& P);
nlohmann::json soliton_to_json(const SolitonSolution& sol);
nlohmann::json trajectory_summary(const Trajectory& traj);

void write_file(const std::string& path, const std::string& contents);

}  // namespace toricflow
