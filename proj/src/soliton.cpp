#include "toricflow/soliton.hpp"

#include "toricflow/discrete_operator.hpp"
#include "toricflow/errors.hpp"
#include "toricflow/flow.hpp"
#include "toricflow/potentials.hpp"
#include "toricflow/simplex_quadrature.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>

namespace toricflow {
namespace {

// Moments [M0, M1 (m), M2 (m×m, column-major)] of e^{<b,x>} 𝒜⁻¹ over Δ.
Eigen::VectorXd moments(const WeightData& W, const Eigen::VectorXd& b) {
    const int m = W.polytope->dim();
    Eigen::VectorXd out(1 + m + m * m);
    return integrate_polytope(
        *W.polytope,
        [&](const Eigen::VectorXd& x) {
            double w = std::exp(b.dot(x));
            for (std::size_t i = 0; i < W.pairs.size(); ++i) w *= W.factor(i, x);
            out(0) = w;
            out.segment(1, m) = w * x;
            Eigen::Map<Eigen::MatrixXd>(out.data() + 1 + m, m, m) = w * x * x.transpose();
            return out;
        },
        out.size());
}

}  // namespace

Eigen::VectorXd weighted_barycenter(const WeightData& W, const Eigen::VectorXd& b) {
    const int m = W.polytope->dim();
    const Eigen::VectorXd M = moments(W, b);
    return M.segment(1, m) / M(0);
}

Eigen::VectorXd drift_vector(const LatticePolytope& P, const WeightData& W, const Eigen::VectorXd& start) {
    const int m = P.dim();
    Eigen::VectorXd b = start.size() == m ? start : Eigen::VectorXd::Zero(m);
    for (int it = 0; it < 100; ++it) {
        const Eigen::VectorXd M = moments(W, b);
        const Eigen::VectorXd mean = M.segment(1, m) / M(0);
        if (mean.norm() < 1e-12) return b;
        const Eigen::MatrixXd cov =
            Eigen::Map<const Eigen::MatrixXd>(M.data() + 1 + m, m, m) / M(0) - mean * mean.transpose();
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() != Eigen::Success) throw QuadratureUnstable("weighted covariance is not positive definite");
        const Eigen::VectorXd d = -llt.solve(mean);
        // Backtracking on the convex log-partition function.
        const double f0 = std::log(M(0));
        double a = 1.0;
        for (int k = 0; k < 40; ++k, a /= 2) {
            const double f1 = std::log(moments(W, b + a * d)(0));
            if (f1 <= f0 + 1e-4 * a * mean.dot(d) || a * d.norm() < 1e-14) break;
        }
        b += a * d;
    }
    throw QuadratureUnstable("drift Newton iteration did not reach gradient norm 1e-12");
}

SolitonSolution soliton_potential(std::shared_ptr<const GridLayout> layout, const WeightData& W,
                                  const Eigen::VectorXd& b) {
    const LatticePolytope& P = layout->polytope();
    MongeAmpereOperator op(layout, W);
    PotentialGrid u = PotentialGrid::sample_offset(layout, [&](const Eigen::VectorXd& t) { return fact1_gap_ext(P, t); });
    u.apply_affine_cap();
    u.add_constant(-op.origin_value(u));
    SmallVec beta = b.cast<Real>();
    Real kappa = 0;

    auto steady_residual = [&](const PotentialGrid& w, const SmallVec& bt, Real kt) {
        const OperatorEvaluation ev = op.evaluate(w);
        Real r = 0;
        for (std::size_t i = 0; i < ev.rhs.size(); ++i)
            r = std::max(r, std::abs(ev.rhs[i] + bt.dot(ev.grad[i]) - kt) - ev.noise[i]);
        return static_cast<double>(r);
    };

    SolitonSolution sol;
    MongeAmpereOperator::Options opt;
    double dtau = 0.05, r_prev = std::numeric_limits<double>::infinity();
    bool newton_done = false;
    for (int k = 0; k < 2000 && !newton_done; ++k) {
        if (r_prev < 1e-6) {
            try {
                auto s = op.solve(nullptr, u, beta, kappa, 0, 1, opt);
                u = std::move(s.u);
                beta = s.beta;
                kappa = s.kappa;
                newton_done = true;
                break;
            } catch (const NewtonDivergence&) {
                // fall back to more continuation
            }
        }
        auto s = op.solve(&u, u, beta, kappa, 1, static_cast<Real>(dtau), opt);
        u = std::move(s.u);
        beta = s.beta;
        kappa = s.kappa;
        const double r = steady_residual(u, beta, kappa);
        if (std::isfinite(r_prev)) dtau *= std::clamp(r_prev / std::max(r, 1e-300), 0.5, 10.0);
        dtau = std::min(dtau, 1e12);
        r_prev = r;
        sol.continuation_steps = k + 1;
    }
    if (!newton_done) throw NewtonDivergence("pseudo-transient continuation did not reach the Newton basin");

    // Second sweep at a tighter tolerance: the gauge must not move.
    MongeAmpereOperator::Options tight = opt;
    tight.tol = 1e-12L;
    auto s2 = op.solve(nullptr, u, beta, kappa, 0, 1, tight);
    if (std::abs(static_cast<double>(s2.kappa - kappa)) > 1e-8)
        throw GaugeInconsistency("gauge constant moved by " + std::to_string(static_cast<double>(s2.kappa - kappa)) +
                                 " between Newton sweeps");
    u = std::move(s2.u);
    beta = s2.beta;
    kappa = s2.kappa;

    // Du(0) = 0 is already imposed on the grid, so recentring only removes the
    // minimum value; resampling would spoil the discrete residual.
    const Minimum mn = locate_minimum(u);
    PotentialGrid w = u;
    w.add_constant(-mn.value);
    const Real gauge = kappa - mn.value;
    const OperatorEvaluation ev = op.evaluate(w);
    Real res = 0;
    for (std::size_t i = 0; i < ev.rhs.size(); ++i) res = std::max(res, std::abs(ev.rhs[i] + beta.dot(ev.grad[i]) - gauge));

    sol.drift = b;
    sol.discrete_drift = beta.cast<double>();
    sol.potential = std::move(w);
    sol.gauge = static_cast<double>(gauge);
    sol.barycenter_norm = weighted_barycenter(W, b).norm();
    sol.ma_residual_inf = static_cast<double>(res);
    return sol;
}

Comparison compare_potentials(const PotentialGrid& limit, const PotentialGrid& reference) {
    const GridLayout& L = reference.layout();
    const int m = L.dim();
    const double margin_ref = L.radius() - 2 * L.spacing();
    const double margin_lim = limit.box_radius() - 2 * limit.layout().spacing();

    auto eval = [&](const Eigen::VectorXd& tau, double* offset) {
        Real lo = std::numeric_limits<Real>::infinity(), hi = -lo;
        for (std::size_t f : L.interior()) {
            const Eigen::VectorXd t = L.node(f);
            if (t.lpNorm<Eigen::Infinity>() > margin_ref) continue;
            const Eigen::VectorXd s = t + tau;
            if (s.lpNorm<Eigen::Infinity>() > margin_lim) continue;
            const Real d = interpolate(limit, s) - reference.value(f);
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
        if (offset) *offset = static_cast<double>((hi + lo) / 2);
        return static_cast<double>((hi - lo) / 2);
    };

    Comparison c;
    c.translation = Eigen::VectorXd::Zero(m);
    double best = eval(c.translation, nullptr);
    double step = L.spacing();
    while (step > 1e-10) {
        bool improved = false;
        for (int j = 0; j < m && !improved; ++j)
            for (double sgn : {1.0, -1.0}) {
                Eigen::VectorXd trial = c.translation;
                trial(j) += sgn * step;
                const double v = eval(trial, nullptr);
                if (v < best) {
                    best = v;
                    c.translation = trial;
                    improved = true;
                    break;
                }
            }
        if (!improved) step /= 2;
    }
    c.distance = eval(c.translation, &c.offset);
    return c;
}

double compare_to_flow(const PotentialGrid& limit, const SolitonSolution& sol) {
    return compare_potentials(limit, sol.potential).distance;
}

}  // namespace toricflow
