#include "toricflow/config.hpp"

#include "toricflow/errors.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

namespace toricflow {
namespace {

using nlohmann::json;

std::string ptr(const std::string& base, const std::string& key) { return base + "/" + key; }
std::string ptr(const std::string& base, std::size_t i) { return base + "/" + std::to_string(i); }

void check_keys(const json& j, const std::string& at, const std::set<std::string>& allowed) {
    if (!j.is_object()) throw SchemaError(at.empty() ? "/" : at, "expected an object");
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k)) throw SchemaError(ptr(at, k), "unknown key");
}

double number(const json& j, const std::string& at, const std::string& field) {
    if (!j.is_number()) throw SchemaError(at, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ValueError(field, "must be finite");
    return v;
}

int integer(const json& j, const std::string& at) {
    if (!j.is_number_integer()) throw SchemaError(at, "expected an integer");
    return j.get<int>();
}

std::vector<double> vector_of(const json& j, const std::string& at, const std::string& field) {
    if (!j.is_array()) throw SchemaError(at, "expected an array");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], ptr(at, i), field));
    return out;
}

}  // namespace

RunConfig parse_config(std::string_view text) {
    json j;
    try {
        j = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw SchemaError("", std::string("invalid JSON: ") + e.what());
    }
    check_keys(j, "", {"name", "vertices", "weights", "grid", "flow", "initial", "output_dir"});

    RunConfig c;
    if (j.contains("name")) {
        if (!j["name"].is_string()) throw SchemaError("/name", "expected a string");
        c.name = j["name"].get<std::string>();
    }
    if (!j.contains("vertices")) throw SchemaError("/vertices", "missing required key");
    const json& V = j["vertices"];
    if (!V.is_array() || V.empty()) throw SchemaError("/vertices", "expected a non-empty array");
    for (std::size_t i = 0; i < V.size(); ++i) {
        c.vertices.push_back(vector_of(V[i], ptr("/vertices", i), "vertices"));
        if (c.vertices.back().size() != c.vertices.front().size() || c.vertices.back().empty())
            throw ValueError("vertices", "all vertices must share one positive dimension");
    }
    const std::size_t m = c.vertices.front().size();

    if (j.contains("weights")) {
        const json& Wj = j["weights"];
        if (!Wj.is_array()) throw SchemaError("/weights", "expected an array");
        for (std::size_t i = 0; i < Wj.size(); ++i) {
            const std::string at = ptr("/weights", i);
            check_keys(Wj[i], at, {"a", "b"});
            if (!Wj[i].contains("a") || !Wj[i].contains("b")) throw SchemaError(at, "weight needs both a and b");
            WeightSpec w;
            w.a = vector_of(Wj[i]["a"], ptr(at, "a"), "weights.a");
            w.b = number(Wj[i]["b"], ptr(at, "b"), "weights.b");
            if (w.a.size() != m) throw ValueError("weights.a", "dimension does not match the vertices");
            c.weights.push_back(std::move(w));
        }
    }

    if (j.contains("grid")) {
        const json& g = j["grid"];
        check_keys(g, "/grid", {"box_radius", "n_per_axis"});
        if (g.contains("box_radius")) c.box_radius = number(g["box_radius"], "/grid/box_radius", "box_radius");
        if (g.contains("n_per_axis")) c.n_per_axis = integer(g["n_per_axis"], "/grid/n_per_axis");
    }
    if (c.n_per_axis < 16) throw ValueError("n_per_axis", "must be at least 16");
    double vmax = 0;
    for (const auto& v : c.vertices) {
        double s = 0;
        for (double x : v) s += x * x;
        vmax = std::max(vmax, std::sqrt(s));
    }
    if (!(c.box_radius >= 2 * vmax)) throw ValueError("box_radius", "must be at least twice the largest vertex norm");

    if (j.contains("flow")) {
        const json& f = j["flow"];
        check_keys(f, "/flow", {"dt", "max_steps", "stationarity_tol", "min_dt"});
        if (f.contains("dt")) c.flow.dt = number(f["dt"], "/flow/dt", "dt");
        if (f.contains("max_steps")) c.flow.max_steps = integer(f["max_steps"], "/flow/max_steps");
        if (f.contains("stationarity_tol"))
            c.flow.stationarity_tol = number(f["stationarity_tol"], "/flow/stationarity_tol", "stationarity_tol");
        if (f.contains("min_dt")) c.flow.min_dt = number(f["min_dt"], "/flow/min_dt", "min_dt");
    }
    if (!(c.flow.dt > 0)) throw ValueError("dt", "must be positive");
    if (c.flow.max_steps < 1) throw ValueError("max_steps", "must be at least 1");
    if (!(c.flow.min_dt > 0) || c.flow.min_dt > c.flow.dt) throw ValueError("min_dt", "must lie in (0, dt]");

    if (j.contains("initial")) {
        const json& s = j["initial"];
        check_keys(s, "/initial", {"seed", "bump", "translate"});
        if (s.contains("seed")) {
            if (!s["seed"].is_string()) throw SchemaError("/initial/seed", "expected a string");
            c.initial.seed = s["seed"].get<std::string>();
            if (c.initial.seed != "v0" && c.initial.seed != "guillemin")
                throw ValueError("initial.seed", "must be \"v0\" or \"guillemin\"");
        }
        if (s.contains("bump")) {
            const json& b = s["bump"];
            check_keys(b, "/initial/bump", {"amplitude", "center", "width"});
            if (b.contains("amplitude")) c.initial.bump.amplitude = number(b["amplitude"], "/initial/bump/amplitude", "bump.amplitude");
            if (b.contains("center")) c.initial.bump.center = vector_of(b["center"], "/initial/bump/center", "bump.center");
            if (b.contains("width")) c.initial.bump.width = number(b["width"], "/initial/bump/width", "bump.width");
            if (c.initial.bump.center.empty()) c.initial.bump.center.assign(m, 0.0);
            if (c.initial.bump.center.size() != m) throw ValueError("bump.center", "dimension does not match the vertices");
            if (!(c.initial.bump.width > 0)) throw ValueError("bump.width", "must be positive");
        }
        if (s.contains("translate")) {
            c.initial.translate = vector_of(s["translate"], "/initial/translate", "translate");
            if (c.initial.translate.size() != m) throw ValueError("translate", "dimension does not match the vertices");
        }
    }
    if (c.initial.bump.center.empty()) c.initial.bump.center.assign(m, 0.0);

    if (j.contains("output_dir")) {
        if (!j["output_dir"].is_string()) throw SchemaError("/output_dir", "expected a string");
        c.output_dir = j["output_dir"].get<std::string>();
    }
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValueError("config", "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace toricflow
