#include "toricflow/discrete_operator.hpp"

#include "toricflow/errors.hpp"

#include <Eigen/Cholesky>
#include <cfloat>
#include <cmath>

namespace toricflow {
namespace {
constexpr Real kEps = LDBL_EPSILON;
}

MongeAmpereOperator::MongeAmpereOperator(std::shared_ptr<const GridLayout> layout, WeightData weights)
    : layout_(std::move(layout)), weights_(std::move(weights)) {
    column_of_.assign(layout_->size(), -1);
    for (std::size_t f : layout_->interior()) column_of_[f] = layout_->unknown_index(f);
    for (const auto& g : layout_->ghosts()) column_of_[g.node] = layout_->unknown_index(g.edge);
}

OperatorEvaluation MongeAmpereOperator::evaluate(const PotentialGrid& u) const {
    const GridLayout& L = *layout_;
    const int m = L.dim();
    const Real h2 = L.h() * L.h();
    const auto& psi = u.offsets();
    const std::size_t n = L.interior().size();
    OperatorEvaluation ev;
    ev.rhs.resize(n);
    ev.det.resize(n);
    ev.a_inv.resize(n);
    ev.grad.resize(n);
    ev.hess_inv.resize(n);
    ev.noise.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t f = L.interior()[i];
        NodeDerivatives nd = node_derivatives(u, f);
        Eigen::LLT<SmallMat> llt(nd.hessian);
        if (llt.info() != Eigen::Success)
            throw NonPositiveDefinite("difference Hessian not positive definite at node " + std::to_string(f));
        const Real det = nd.hessian.determinant();
        if (!(det > 0)) throw NonPositiveDefinite("difference Hessian determinant vanishes at node " + std::to_string(f));
        Real log_fac = 0, prod = 1;
        for (std::size_t a = 0; a < weights_.pairs.size(); ++a) {
            Real fa = static_cast<Real>(weights_.pairs[a].b);
            for (int j = 0; j < m; ++j) fa += static_cast<Real>(weights_.pairs[a].a(j)) * nd.gradient(j);
            if (!(fa > 0)) throw NonPositiveFactor("weight factor " + std::to_string(a) + " not positive at node " + std::to_string(f));
            log_fac += std::log(fa);
            prod *= fa;
        }
        const Real uf = u.value(f);
        ev.rhs[i] = std::log(det) + uf + log_fac;
        ev.det[i] = det;
        ev.a_inv[i] = prod;
        ev.hess_inv[i] = nd.hessian.inverse();

        Real M = std::abs(psi[f]);
        for (int j = 0; j < m; ++j) {
            const std::size_t sj = L.stride(j);
            M = std::max({M, std::abs(psi[f + sj]), std::abs(psi[f - sj])});
            for (int k = 0; k < j; ++k) {
                const std::size_t sk = L.stride(k);
                M = std::max({M, std::abs(psi[f + sj + sk]), std::abs(psi[f + sj - sk]), std::abs(psi[f - sj + sk]),
                              std::abs(psi[f - sj - sk])});
            }
        }
        Real bound = 0;
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < m; ++k)
                bound += std::abs(ev.hess_inv[i](j, k)) * (M / h2 + std::abs(nd.hessian(j, k)));
        ev.noise[i] = 8 * kEps * (bound + std::abs(uf) + std::abs(log_fac) + 1);
        ev.grad[i] = std::move(nd.gradient);
    }
    return ev;
}

Real MongeAmpereOperator::origin_value(const PotentialGrid& u) const {
    Real v = 0;
    for (const auto& [f, w] : layout_->origin_stencil()) v += w * u.value(f);
    return v;
}

SmallVec MongeAmpereOperator::origin_gradient(const PotentialGrid& u) const {
    const GridLayout& L = *layout_;
    SmallVec g = SmallVec::Zero(L.dim());
    for (const auto& [f, w] : L.origin_stencil()) {
        for (int j = 0; j < L.dim(); ++j) {
            const std::size_t p = f + L.stride(j), q = f - L.stride(j);
            g(j) += w * (static_cast<Real>(L.support_units(p) - L.support_units(q)) / 4 +
                         (u.offset(p) - u.offset(q)) / (2 * L.h()));
        }
    }
    return g;
}

MongeAmpereOperator::Residual MongeAmpereOperator::residual(const PotentialGrid* u_old, const PotentialGrid& u,
                                                            const OperatorEvaluation& ev, const SmallVec& beta,
                                                            Real kappa, Real a, Real s) const {
    const GridLayout& L = *layout_;
    const int m = L.dim();
    const std::size_t n = L.interior().size();
    Residual r;
    r.F.resize(n + m + 1);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t f = L.interior()[i];
        const Real drift = beta.dot(ev.grad[i]);
        Real Fi = -s * (ev.rhs[i] + drift - kappa);
        Real bound = s * (ev.noise[i] + 8 * kEps * (std::abs(drift) + std::abs(kappa)));
        if (a != 0) {
            Fi += a * (u.offset(f) - u_old->offset(f));
            bound += a * 4 * kEps * (std::abs(u.offset(f)) + std::abs(u_old->offset(f)));
        }
        r.F[i] = Fi;
        r.max_abs = std::max(r.max_abs, std::abs(Fi));
        r.excess = std::max(r.excess, std::abs(Fi) - bound);
    }
    const SmallVec g0 = origin_gradient(u);
    for (int j = 0; j < m; ++j) r.F[n + j] = g0(j);
    r.F[n + m] = origin_value(u);
    for (int j = 0; j <= m; ++j) {
        r.max_abs = std::max(r.max_abs, std::abs(r.F[n + j]));
        r.excess = std::max(r.excess, std::abs(r.F[n + j]));
    }
    return r;
}

void MongeAmpereOperator::assemble(const PotentialGrid& u, const OperatorEvaluation& ev, const SmallVec& beta,
                                   Real a, Real s) {
    (void)u;
    const GridLayout& L = *layout_;
    const int m = L.dim();
    const std::size_t n = L.interior().size();
    const double h = static_cast<double>(L.h());
    const double h2 = h * h;
    const double sd = static_cast<double>(s);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(n * (1 + 2 * m + 4 * m * (m - 1) + m + 1) + 8 * (m + 1));
    auto col = [&](std::size_t flat) { return static_cast<int>(column_of_[flat]); };

    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t f = L.interior()[i];
        const int row = static_cast<int>(i);
        const SmallMat& Hi = ev.hess_inv[i];
        Eigen::VectorXd c(m);  // coefficient of ∂g
        for (int j = 0; j < m; ++j) c(j) = static_cast<double>(beta(j));
        for (const auto& w : weights_.pairs) {
            Real fa = static_cast<Real>(w.b);
            for (int j = 0; j < m; ++j) fa += static_cast<Real>(w.a(j)) * ev.grad[i](j);
            for (int j = 0; j < m; ++j) c(j) += static_cast<double>(static_cast<Real>(w.a(j)) / fa);
        }
        double center = static_cast<double>(a) - sd;
        for (int j = 0; j < m; ++j) {
            const double hjj = static_cast<double>(Hi(j, j));
            center += sd * 2.0 * hjj / h2;
            const std::size_t sj = L.stride(j);
            trip.emplace_back(row, col(f + sj), -sd * (hjj / h2 + c(j) / (2 * h)));
            trip.emplace_back(row, col(f - sj), -sd * (hjj / h2 - c(j) / (2 * h)));
            for (int k = 0; k < j; ++k) {
                const std::ptrdiff_t sk = static_cast<std::ptrdiff_t>(L.stride(k));
                const double v = sd * 2.0 * static_cast<double>(Hi(j, k)) / h2;
                for (const auto& t : cross_taps(L.cross_variant(f, j, k)))
                    trip.emplace_back(row, col(f + t.dj * static_cast<std::ptrdiff_t>(sj) + t.dk * sk),
                                      -v * static_cast<double>(t.w));
            }
            trip.emplace_back(row, static_cast<int>(n) + j, -sd * static_cast<double>(ev.grad[i](j)));
        }
        trip.emplace_back(row, col(f), center);
        trip.emplace_back(row, static_cast<int>(n + m), sd);
    }
    for (const auto& [f, w] : L.origin_stencil()) {
        const double wd = static_cast<double>(w);
        for (int j = 0; j < m; ++j) {
            trip.emplace_back(static_cast<int>(n) + j, col(f + L.stride(j)), wd / (2 * h));
            trip.emplace_back(static_cast<int>(n) + j, col(f - L.stride(j)), -wd / (2 * h));
        }
        trip.emplace_back(static_cast<int>(n + m), col(f), wd);
    }
    const int N = static_cast<int>(n + m + 1);
    J_.resize(N, N);
    J_.setFromTriplets(trip.begin(), trip.end());
    J_.makeCompressed();
}

std::vector<Real> MongeAmpereOperator::equations(const PotentialGrid* u_old, PotentialGrid u, const SmallVec& beta,
                                                 Real kappa, Real a, Real s) const {
    u.apply_affine_cap();
    return residual(u_old, u, evaluate(u), beta, kappa, a, s).F;
}

const Eigen::SparseMatrix<double>& MongeAmpereOperator::jacobian(PotentialGrid u, const SmallVec& beta, Real a,
                                                                 Real s) {
    u.apply_affine_cap();
    assemble(u, evaluate(u), beta, a, s);
    return J_;
}

MongeAmpereOperator::Solution MongeAmpereOperator::solve(const PotentialGrid* u_old, PotentialGrid guess,
                                                         SmallVec beta, Real kappa, Real a, Real s,
                                                         const Options& opt) {
    const GridLayout& L = *layout_;
    const int m = L.dim();
    const std::size_t n = L.interior().size();
    guess.apply_affine_cap();

    OperatorEvaluation ev;
    try {
        ev = evaluate(guess);
    } catch (const NonPositiveDefinite& e) {
        throw ConvexityLoss(std::string("initial iterate: ") + e.what());
    }
    Residual res = residual(u_old, guess, ev, beta, kappa, a, s);

    Solution sol{std::move(guess), beta, kappa, 0, res.max_abs};
    for (int it = 0; it < opt.max_iterations; ++it) {
        if (res.excess <= opt.tol) {
            sol.iterations = it;
            sol.residual = res.max_abs;
            return sol;
        }
        assemble(sol.u, ev, beta, a, s);
        if (!analyzed_) {
            lu_.analyzePattern(J_);
            analyzed_ = true;
        }
        lu_.factorize(J_);
        if (lu_.info() != Eigen::Success) throw NewtonDivergence("singular Newton matrix");
        Eigen::VectorXd rhs(n + m + 1);
        for (Eigen::Index i = 0; i < rhs.size(); ++i) rhs(i) = -static_cast<double>(res.F[i]);
        const Eigen::VectorXd delta = lu_.solve(rhs);
        if (!delta.allFinite()) throw NewtonDivergence("non-finite Newton direction");

        Real alpha = 1;
        bool accepted = false;
        for (int ls = 0; ls < 30; ++ls, alpha /= 2) {
            PotentialGrid trial = sol.u;
            auto& psi = trial.offsets();
            for (std::size_t i = 0; i < n; ++i) psi[L.interior()[i]] += alpha * static_cast<Real>(delta(i));
            trial.apply_affine_cap();
            SmallVec bt = beta;
            for (int j = 0; j < m; ++j) bt(j) += alpha * static_cast<Real>(delta(n + j));
            const Real kt = kappa + alpha * static_cast<Real>(delta(n + m));
            OperatorEvaluation evt;
            try {
                evt = evaluate(trial);
            } catch (const NonPositiveDefinite&) {
                continue;
            } catch (const NonPositiveFactor&) {
                continue;
            }
            Residual rt = residual(u_old, trial, evt, bt, kt, a, s);
            if (rt.excess <= (1 - 1e-4L * alpha) * res.excess || rt.excess <= opt.tol) {
                sol.u = std::move(trial);
                beta = bt;
                kappa = kt;
                ev = std::move(evt);
                res = std::move(rt);
                accepted = true;
                break;
            }
        }
        if (!accepted)
            throw NewtonDivergence("line search failed (residual " + std::to_string(static_cast<double>(res.max_abs)) + ")");
        sol.beta = beta;
        sol.kappa = kappa;
    }
    if (res.excess <= opt.tol) {
        sol.iterations = opt.max_iterations;
        sol.residual = res.max_abs;
        return sol;
    }
    throw NewtonDivergence("no convergence in " + std::to_string(opt.max_iterations) + " Newton iterations (residual " +
                           std::to_string(static_cast<double>(res.max_abs)) + ")");
}

}  // namespace toricflow
