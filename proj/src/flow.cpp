#include "toricflow/flow.hpp"

#include "toricflow/potentials.hpp"
#include "toricflow/simplex_quadrature.hpp"
#include "toricflow/summation.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>

namespace toricflow {
namespace {

struct DriftFit {
    Eigen::VectorXd b;
    double c = 0;
    double residual = 0;
};

// Least squares u̇ ≈ c − <b, Du> over interior nodes, each weighted by its
// inverse squared rounding bound (floored, so resolved nodes weigh equally).
DriftFit fit_drift(const OperatorEvaluation& ev, int m) {
    using LMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
    using LVec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
    constexpr Real kFloor = 1e-10L;
    LMat A = LMat::Zero(m + 1, m + 1);
    LVec y = LVec::Zero(m + 1);
    LVec row(m + 1);
    for (std::size_t i = 0; i < ev.rhs.size(); ++i) {
        for (int j = 0; j < m; ++j) row(j) = -ev.grad[i](j);
        row(m) = 1;
        const Real sigma = std::max(ev.noise[i], kFloor) / kFloor;
        const Real w = 1 / (sigma * sigma);
        A += w * row * row.transpose();
        y += w * row * ev.rhs[i];
    }
    const LVec coef = A.ldlt().solve(y);
    DriftFit fit;
    fit.b = coef.head(m).cast<double>();
    fit.c = static_cast<double>(coef(m));
    // Only the misfit beyond each node's rounding bound counts: far out det D²u
    // is a few ulps of u / h², and log det there carries no information.
    Real worst = 0;
    for (std::size_t i = 0; i < ev.rhs.size(); ++i) {
        Real pred = coef(m);
        for (int j = 0; j < m; ++j) pred -= coef(j) * ev.grad[i](j);
        worst = std::max(worst, std::abs(ev.rhs[i] - pred) - ev.noise[i]);
    }
    fit.residual = static_cast<double>(worst);
    return fit;
}

double cell_volume(const GridLayout& L) { return std::pow(L.spacing(), L.dim()); }

double compute_c(const OperatorEvaluation& ev, const GridLayout& L, const std::vector<Real>& u_dot, double V_W) {
    std::vector<Real> mass(ev.det.size()), raw(ev.det.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        raw[i] = ev.det[i] * ev.a_inv[i];
        mass[i] = std::exp(-u_dot[i]) * raw[i];
    }
    const Real hv = cell_volume(L);
    const double raw_total = static_cast<double>(pairwise_sum(raw) * hv);
    if (raw_total < 0.999 * V_W)
        throw QuadratureUnderflow("weighted mass " + std::to_string(raw_total) + " is below 99.9% of " +
                                  std::to_string(V_W) + "; enlarge box_radius");
    return -static_cast<double>(std::log(pairwise_sum(mass) * hv / V_W));
}

MonitorSnapshot compute_monitors(const FlowState& s, const OperatorEvaluation& ev) {
    const GridLayout& L = s.u.layout();
    const int m = L.dim();
    const auto& interior = L.interior();
    const Real hv = cell_volume(L);
    MonitorSnapshot mon;
    std::vector<Real> w(ev.det.size()), uw(ev.det.size());
    Real umin = std::numeric_limits<Real>::infinity();
    double gb = 0, gap = 0;
    for (std::size_t i = 0; i < interior.size(); ++i) {
        w[i] = ev.det[i] * ev.a_inv[i];
        uw[i] = ev.det[i];
        umin = std::min(umin, s.u.value(interior[i]));
        gb = std::max(gb, static_cast<double>(ev.grad[i].norm()));
        gap = std::max(gap, std::abs(static_cast<double>(-s.u_dot[i]) + s.c_t));
    }
    mon.grad_bound = gb;
    mon.vol_weighted = static_cast<double>(pairwise_sum(w) * hv);
    mon.vol_unweighted = static_cast<double>(pairwise_sum(uw) * hv);
    mon.m_t = s.m_t;
    mon.perelman_gap = gap;

    Real sup_phi = -std::numeric_limits<Real>::infinity(), inf_phi = 0, lam = std::numeric_limits<Real>::infinity();
    std::size_t count = 0;
    for (std::size_t i = 0; i < interior.size(); ++i) {
        const std::size_t f = interior[i];
        const Real v = s.u.value(f) - umin;
        if (s.initial) {
            const Real phi = s.u.offset(f) - umin - s.initial->offset(f);
            sup_phi = std::max(sup_phi, phi);
            inf_phi = std::max(inf_phi, std::abs(phi));
        }
        if (v <= 1) {
            ++count;
            lam = std::min(lam, ev.det[i]);
        }
    }
    mon.sup_phi_bar = s.initial ? static_cast<double>(sup_phi) : 0.0;
    mon.phi_bar_inf = static_cast<double>(inf_phi);
    mon.sublevel_vol = static_cast<double>(count * hv);
    mon.sublevel_lambda = count ? static_cast<double>(lam) : 0.0;
    mon.sublevel_ratio = mon.sublevel_vol * std::sqrt(mon.sublevel_lambda);
    mon.stationarity_residual = fit_drift(ev, m).residual;
    return mon;
}

void fill_state(FlowState& s, const OperatorEvaluation& ev, const WeightData& W) {
    s.u_dot = ev.rhs;
    s.c_t = compute_c(ev, s.u.layout(), s.u_dot, weighted_volume(W));
    const Minimum mn = locate_minimum(s.u);
    s.p_t = s.frame_shift + mn.point;
    s.m_t = static_cast<double>(mn.value) - s.c_t;
    const DriftFit fit = fit_drift(ev, s.u.dim());
    s.fitted_drift = fit.b;
    s.fitted_constant = fit.c;
    s.monitors = compute_monitors(s, ev);
}

// Multilinear interpolation of an interior-node field, clamped to the interior.
Real interpolate_field(const GridLayout& L, const std::vector<Real>& field, const Eigen::VectorXd& t) {
    const int m = L.dim();
    int base[kMaxDim];
    Real frac[kMaxDim];
    for (int j = 0; j < m; ++j) {
        Real x = (static_cast<Real>(t(j)) + static_cast<Real>(L.radius())) / L.h();
        x = std::clamp<Real>(x, 1, L.n() - 2);
        base[j] = std::min(static_cast<int>(std::floor(x)), L.n() - 3);
        frac[j] = x - base[j];
    }
    Real acc = 0;
    for (int corner = 0; corner < (1 << m); ++corner) {
        Index3 idx{};
        Real w = 1;
        for (int j = 0; j < m; ++j) {
            const int bit = (corner >> j) & 1;
            idx[j] = base[j] + bit;
            w *= bit ? frac[j] : 1 - frac[j];
        }
        acc += w * field[L.unknown_index(L.ravel(idx))];
    }
    return acc;
}

}  // namespace

std::vector<Real> rhs(const PotentialGrid& u, const WeightData& W) {
    MongeAmpereOperator op(u.layout_ptr(), W);
    return op.evaluate(u).rhs;
}

double dual_rhs_check(const PotentialGrid& u, const WeightData& W, const std::vector<Eigen::VectorXd>& samples,
                      int dual_n) {
    (void)dual_n;
    const GridLayout& L = u.layout();
    const LatticePolytope& P = L.polytope();
    const int m = L.dim();
    MongeAmpereOperator op(u.layout_ptr(), W);
    const OperatorEvaluation ev = op.evaluate(u);
    double worst = 0;
    for (const auto& s : samples) {
        Index3 idx{};
        for (int j = 0; j < m; ++j)
            idx[j] = std::clamp(static_cast<int>(std::lround((s(j) + L.radius()) / L.spacing())), 1, L.n() - 2);
        const std::size_t f = L.ravel(idx);
        const std::size_t i = static_cast<std::size_t>(L.unknown_index(f));
        const Eigen::VectorXd x = ev.grad[i].cast<double>();
        const Eigen::VectorXd t = L.node(f);
        const ConjugatePoint c0 = conjugate_at(u, x);
        if (!c0.resolved) throw OutsidePolytope("sample's moment point is not resolved by the grid");
        // Hessian of G by central differences with an x-step matching one grid step in t.
        const double k = std::min(L.spacing() * static_cast<double>(ev.det[i] > 0 ? 1.0 / ev.hess_inv[i].norm() : 1.0),
                                  0.25 * P.distance_to_boundary(x));
        Eigen::MatrixXd HG(m, m);
        auto Gat = [&](const Eigen::VectorXd& y) { return conjugate_at(u, y).value; };
        for (int j = 0; j < m; ++j) {
            Eigen::VectorXd ej = Eigen::VectorXd::Unit(m, j) * k;
            HG(j, j) = static_cast<double>((Gat(x + ej) - 2 * c0.value + Gat(x - ej)) / static_cast<Real>(k * k));
            for (int l = 0; l < j; ++l) {
                Eigen::VectorXd el = Eigen::VectorXd::Unit(m, l) * k;
                HG(j, l) = HG(l, j) = static_cast<double>(
                    (Gat(x + ej + el) - Gat(x + ej - el) - Gat(x - ej + el) + Gat(x - ej - el)) /
                    static_cast<Real>(4 * k * k));
            }
        }
        const Real dual = -std::log(static_cast<Real>(HG.determinant())) + static_cast<Real>(x.dot(t)) - c0.value -
                          static_cast<Real>(log_a(W, x));
        worst = std::max(worst, static_cast<double>(std::abs(ev.rhs[i] - dual)));
    }
    return worst;
}

double normalize_c(FlowState& state, const WeightData& W) {
    MongeAmpereOperator op(state.u.layout_ptr(), W);
    const OperatorEvaluation ev = op.evaluate(state.u);
    state.c_t = compute_c(ev, state.u.layout(), state.u_dot.empty() ? ev.rhs : state.u_dot, weighted_volume(W));
    return state.c_t;
}

double normalize_c_dual(const PotentialGrid& u, const WeightData& W, int dual_n) {
    const GridLayout& L = u.layout();
    MongeAmpereOperator op(u.layout_ptr(), W);
    const OperatorEvaluation ev = op.evaluate(u);
    const int n = dual_n > 0 ? dual_n : 24;
    Eigen::VectorXd out(1);
    const double V_W = weighted_volume(W);
    Eigen::VectorXd total = Eigen::VectorXd::Zero(1);
    for (const auto& S : L.polytope().simplices()) {
        total += integrate_simplex(
            S, n,
            [&](const Eigen::VectorXd& x) {
                const ConjugatePoint cp = conjugate_at(u, x);
                const Real ud = interpolate_field(L, ev.rhs, cp.t);
                double ainv = 1.0;
                for (std::size_t a = 0; a < W.pairs.size(); ++a) ainv *= W.factor(a, x);
                out(0) = static_cast<double>(std::exp(-ud)) * ainv;
                return out;
            },
            1);
    }
    return -std::log(total(0) / V_W);
}

Minimum locate_minimum(const PotentialGrid& u) {
    const GridLayout& L = u.layout();
    const int m = L.dim();
    std::size_t best = L.interior().front();
    Real bv = u.value(best);
    for (std::size_t f : L.interior()) {
        const Real v = u.value(f);
        if (v < bv) { bv = v; best = f; }
    }
    const Index3 idx = L.unravel(best);
    for (int j = 0; j < m; ++j)
        if (idx[j] <= 1 || idx[j] >= L.n() - 2)
            throw MinimizerOnBoundary("minimiser at the edge of the box; enlarge box_radius");
    const NodeDerivatives nd = node_derivatives(u, best);
    SmallVec delta = -nd.hessian.ldlt().solve(nd.gradient);
    if (!(delta.lpNorm<Eigen::Infinity>() <= L.h())) delta.setZero();
    Minimum mn;
    mn.node = best;
    mn.point.resize(m);
    for (int j = 0; j < m; ++j) mn.point(j) = static_cast<double>(L.coord(best, j) + delta(j));
    mn.value = bv + nd.gradient.dot(delta) / 2;
    return mn;
}

FlowState make_state(PotentialGrid u, const WeightData& W, std::shared_ptr<const PotentialGrid> initial) {
    FlowState s;
    const int m = u.dim();
    s.frame_shift = Eigen::VectorXd::Zero(m);
    s.frame_velocity = SmallVec::Zero(m);
    s.initial = initial ? std::move(initial) : std::make_shared<const PotentialGrid>(u);
    s.u = std::move(u);
    MongeAmpereOperator op(s.u.layout_ptr(), W);
    fill_state(s, op.evaluate(s.u), W);
    return s;
}

FlowStepper::FlowStepper(std::shared_ptr<const GridLayout> layout, const WeightData& W) : op_(std::move(layout), W) {}

FlowState FlowStepper::step(const FlowState& state, double dt) {
    if (!(dt > 0)) throw ValueError("dt", "must be positive");
    MongeAmpereOperator::Solution sol =
        op_.solve(&state.u, state.u, state.frame_velocity, state.gauge_rate, 1, static_cast<Real>(dt), {});
    FlowState next;
    next.time = state.time + dt;
    next.u = std::move(sol.u);
    next.frame_velocity = sol.beta;
    next.gauge_rate = sol.kappa;
    next.frame_shift = state.frame_shift + dt * sol.beta.cast<double>();
    next.initial = state.initial;
    fill_state(next, op_.evaluate(next.u), op_.weights());
    return next;
}

FlowState step(const FlowState& state, const WeightData& W, double dt) {
    FlowStepper stepper(state.u.layout_ptr(), W);
    return stepper.step(state, dt);
}

FlowState recenter(const FlowState& state, const WeightData& W) {
    const Minimum mn = locate_minimum(state.u);
    FlowState s;
    s.time = state.time;
    s.u = translate(state.u, mn.point, mn.value);
    s.u.apply_affine_cap();
    s.frame_shift = state.frame_shift + mn.point;
    s.frame_velocity = state.frame_velocity;
    s.gauge_rate = state.gauge_rate;
    s.initial = state.initial;
    MongeAmpereOperator op(s.u.layout_ptr(), W);
    fill_state(s, op.evaluate(s.u), W);
    return s;
}

MonitorSnapshot monitors(const FlowState& state, const WeightData& W) {
    MongeAmpereOperator op(state.u.layout_ptr(), W);
    const OperatorEvaluation ev = op.evaluate(state.u);
    FlowState s = state;
    if (s.u_dot.size() != ev.rhs.size()) s.u_dot = ev.rhs;
    return compute_monitors(s, ev);
}

PotentialGrid initial_potential(const RunConfig& config, std::shared_ptr<const GridLayout> layout) {
    const LatticePolytope& P = layout->polytope();
    const int m = P.dim();
    Eigen::VectorXd tau = Eigen::VectorXd::Zero(m);
    if (!config.initial.translate.empty())
        for (int j = 0; j < m; ++j) tau(j) = config.initial.translate[j];
    Eigen::VectorXd bc = Eigen::VectorXd::Zero(m);
    if (!config.initial.bump.center.empty())
        for (int j = 0; j < m; ++j) bc(j) = config.initial.bump.center[j];
    const bool guillemin = config.initial.seed == "guillemin";
    const BumpSpec& bump = config.initial.bump;

    std::vector<Real> psi(layout->size());
    Eigen::VectorXd s(m);
    for (std::size_t f = 0; f < layout->size(); ++f) {
        Real sl[kMaxDim];
        for (int j = 0; j < m; ++j) {
            sl[j] = layout->coord(f, j) - static_cast<Real>(tau(j));
            s(j) = static_cast<double>(sl[j]);
        }
        // v̄(t − τ) − v̄(t) in extended precision
        Real vs = -std::numeric_limits<Real>::infinity();
        for (const auto& p : P.vertices_int()) {
            Real d = 0;
            for (int j = 0; j < m; ++j) d += static_cast<Real>(p[j]) * sl[j];
            vs = std::max(vs, d);
        }
        Real v = (vs - layout->support_value(f)) + (guillemin ? guillemin_dual_offset(P, s) : fact1_gap_ext(P, s));
        if (bump.amplitude != 0.0)
            v += static_cast<Real>(bump.amplitude * std::exp(-(s - bc).squaredNorm() / (2 * bump.width * bump.width)));
        psi[f] = v;
    }
    PotentialGrid u(std::move(layout), std::move(psi));
    u.apply_affine_cap();
    return u;
}

WeightData weight_data(const RunConfig& config) {
    auto P = std::make_shared<const LatticePolytope>(LatticePolytope::from_vertices(config.vertices));
    std::vector<WeightPair> pairs;
    for (const auto& w : config.weights)
        pairs.push_back({Eigen::Map<const Eigen::VectorXd>(w.a.data(), static_cast<Eigen::Index>(w.a.size())), w.b});
    return WeightData(P, pairs);
}

Trajectory run(const RunConfig& config) {
    const WeightData W = weight_data(config);
    const auto& P = W.polytope;
    validate_fano(W);
    auto layout = std::make_shared<const GridLayout>(P, config.box_radius, config.n_per_axis);

    // Recentre u₀ by resampling it analytically (cubic resampling would spoil
    // the exponentially small curvatures far out); the flow keeps Du(0) = 0
    // from then on, so later states are never resampled.
    RunConfig shifted = config;
    shifted.initial.translate.assign(P->dim(), 0.0);
    for (std::size_t j = 0; j < config.initial.translate.size(); ++j) shifted.initial.translate[j] = config.initial.translate[j];
    Eigen::VectorXd shift = Eigen::VectorXd::Zero(P->dim());
    PotentialGrid u0 = initial_potential(shifted, layout);
    for (int pass = 0; pass < 3; ++pass) {
        const Minimum mn = locate_minimum(u0);
        if (mn.point.lpNorm<Eigen::Infinity>() < 1e-13) break;
        shift += mn.point;
        for (int j = 0; j < P->dim(); ++j) shifted.initial.translate[j] -= mn.point(j);
        u0 = initial_potential(shifted, layout);
    }
    u0.add_constant(-locate_minimum(u0).value);
    auto ref = std::make_shared<const PotentialGrid>(u0);
    FlowState st = make_state(u0, W, ref);
    st.frame_shift = shift;
    st.p_t += shift;

    auto traj = std::make_shared<Trajectory>();
    auto record = [&](const FlowState& s, double dt) {
        traj->rows.push_back({s.time, s.c_t, s.m_t, s.p_t, s.monitors, dt});
    };
    record(st, 0.0);

    FlowStepper stepper(layout, W);
    double dt = config.flow.dt;
    const double tol = config.flow.stationarity_tol;
    int steps = 0;
    while (steps < config.flow.max_steps) {
        FlowState next;
        try {
            next = stepper.step(st, dt);
        } catch (const NewtonDivergence&) {
            if (dt / 2 < config.flow.min_dt) throw;
            dt /= 2;
            continue;
        }
        st = std::move(next);
        ++steps;
        record(st, dt);
        if (tol > 0 && st.monitors.stationarity_residual < tol) {
            traj->converged = true;
            break;
        }
    }
    traj->steps = steps;
    traj->final_potential = st.u;
    traj->final_potential.add_constant(-locate_minimum(st.u).value);
    traj->fitted_drift = st.fitted_drift;
    traj->fitted_constant = st.fitted_constant;
    traj->frame_velocity = st.frame_velocity.cast<double>();
    if (tol > 0 && !traj->converged)
        throw MaxStepsExceeded("stationarity residual " + std::to_string(st.monitors.stationarity_residual) +
                                   " above tolerance after " + std::to_string(steps) + " steps",
                               traj);
    return *traj;
}

}  // namespace toricflow
