#include "toricflow/potentials.hpp"

#include "toricflow/errors.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>

namespace toricflow {

using LVec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
using LMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

Real fact1_gap_ext(const LatticePolytope& P, const Eigen::VectorXd& t) {
    const Eigen::VectorXd s = P.lattice_points() * t;
    const double mx = s.maxCoeff();
    // The maximum over lattice points equals v̄(t): linear functionals peak at vertices.
    // Terms attaining it contribute exactly 1 each; log1p keeps the tiny rest.
    Real rest = -1;
    for (Eigen::Index k = 0; k < s.size(); ++k) rest += s(k) == mx ? 1 : std::exp(static_cast<Real>(s(k)) - mx);
    return std::log1p(rest);
}

double fact1_gap(const LatticePolytope& P, const Eigen::VectorXd& t) {
    return static_cast<double>(fact1_gap_ext(P, t));
}

double v0_eval(const LatticePolytope& P, const Eigen::VectorXd& t) {
    return P.support_function(t) + fact1_gap(P, t);
}

namespace {

Eigen::VectorXd interior_values(const LatticePolytope& P, const Eigen::VectorXd& x) {
    Eigen::VectorXd l = P.facet_values(x);
    if (!(l.minCoeff() > 0.0)) throw BoundaryPoint("point is not in the interior of the polytope");
    return l;
}

}  // namespace

double guillemin_potential(const LatticePolytope& P, const Eigen::VectorXd& x) {
    const Eigen::VectorXd l = interior_values(P, x);
    return (l.array() * l.array().log()).sum();
}

Eigen::VectorXd guillemin_gradient(const LatticePolytope& P, const Eigen::VectorXd& x) {
    const Eigen::VectorXd l = interior_values(P, x);
    return P.normals().transpose() * (l.array().log() + 1.0).matrix();
}

Eigen::MatrixXd guillemin_hessian(const LatticePolytope& P, const Eigen::VectorXd& x) {
    const Eigen::VectorXd l = interior_values(P, x);
    const Eigen::MatrixXd& N = P.normals();
    return N.transpose() * l.cwiseInverse().asDiagonal() * N;
}

double hessian_det_dual(const LatticePolytope& P, const Eigen::VectorXd& x) {
    return 1.0 / guillemin_hessian(P, x).determinant();
}

Real guillemin_dual_offset(const LatticePolytope& P, const Eigen::VectorXd& td) {
    const int m = P.dim();
    const LMat N = P.normals().cast<Real>();
    const LVec t = td.cast<Real>();
    auto facet = [&](const LVec& y) { return LVec((N * y).array() + 1.0L); };
    auto phi = [&](const LVec& y, const LVec& l) { return t.dot(y) - (l.array() * l.array().log()).sum(); };
    LVec x = LVec::Zero(m);
    LVec l = facet(x);
    for (int it = 0; it < 500; ++it) {
        const LVec g = t - N.transpose() * LVec(l.array().log() + 1.0L);
        const LMat H = N.transpose() * l.cwiseInverse().asDiagonal() * N;
        const LVec d = H.ldlt().solve(g);
        const Real f0 = phi(x, l);
        Real a = 1;
        LVec xn = x, ln = l;
        for (int k = 0; k < 200; ++k, a /= 2) {
            xn = x + a * d;
            ln = facet(xn);
            if (ln.minCoeff() > 0 && phi(xn, ln) >= f0 - 1e-18L * (1 + std::abs(f0))) break;
        }
        x = xn;
        l = ln;
        if (a == 1 && d.lpNorm<Eigen::Infinity>() < 1e-17L) break;
    }
    const std::size_t k = P.active_vertex(td);
    LVec pk(m);
    for (int j = 0; j < m; ++j) pk(j) = static_cast<Real>(P.vertices_int()[k][j]);
    // u − v̄ = <x − p_k, t> − G₀(x)
    return (x - pk).dot(t) - (l.array() * l.array().log()).sum();
}

PotentialGrid guillemin_dual(std::shared_ptr<const GridLayout> layout) {
    const LatticePolytope& P = layout->polytope();
    std::vector<Real> psi(layout->size());
    for (std::size_t f = 0; f < layout->size(); ++f) {
        Eigen::VectorXd t(P.dim());
        for (int j = 0; j < P.dim(); ++j) t(j) = static_cast<double>(layout->coord(f, j));
        psi[f] = guillemin_dual_offset(P, t);
    }
    return PotentialGrid(std::move(layout), std::move(psi));
}

Eigen::VectorXd gradient(const PotentialGrid& u, std::size_t flat) {
    if (!u.layout().is_interior(flat)) throw ValueError("node", "gradient requires an interior node");
    return node_derivatives(u, flat).gradient.cast<double>();
}

double hessian_det(const PotentialGrid& u, std::size_t flat) {
    if (!u.layout().is_interior(flat)) throw ValueError("node", "hessian_det requires an interior node");
    const SmallMat H = node_derivatives(u, flat).hessian;
    Eigen::LLT<SmallMat> llt(H);
    if (llt.info() != Eigen::Success) throw NonPositiveDefinite("difference Hessian is not positive definite");
    return static_cast<double>(H.determinant());
}

double fact3_residual(const PotentialGrid& u) {
    double worst = 0.0;
    for (std::size_t f : u.layout().interior()) {
        const double d = hessian_det(u, f);
        worst = std::max(worst, static_cast<double>(std::abs(std::log(static_cast<Real>(d)) + u.value(f))));
    }
    return worst;
}

// ---------------------------------------------------------------------------

Eigen::VectorXd SymplecticPotential::node(std::size_t flat) const {
    Eigen::VectorXd x(dim);
    for (int j = dim - 1; j >= 0; --j) {
        const int i = static_cast<int>(flat % n);
        flat /= n;
        x(j) = lower(j) + spacing(j) * i;
    }
    return x;
}

std::size_t SymplecticPotential::stride(int j) const {
    std::size_t s = 1;
    for (int k = dim - 1; k > j; --k) s *= n;
    return s;
}

double SymplecticPotential::singular_part(std::size_t flat) const {
    return guillemin_potential(*polytope, node(flat));
}

bool SymplecticPotential::hessian(std::size_t f, Eigen::MatrixXd& H) const {
    H.resize(dim, dim);
    auto ok = [&](std::size_t g) { return g < size() && valid[g]; };
    if (!ok(f)) return false;
    for (int j = 0; j < dim; ++j) {
        const std::size_t sj = stride(j);
        const int ij = static_cast<int>((f / sj) % n);
        if (ij == 0 || ij == n - 1 || !ok(f + sj) || !ok(f - sj)) return false;
        H(j, j) = static_cast<double>((values[f + sj] - 2 * values[f] + values[f - sj]) /
                                      static_cast<Real>(spacing(j) * spacing(j)));
        for (int k = 0; k < j; ++k) {
            const std::size_t sk = stride(k);
            const std::size_t pp = f + sj + sk, pm = f + sj - sk, mp = f - sj + sk, mm = f - sj - sk;
            if (!ok(pp) || !ok(pm) || !ok(mp) || !ok(mm)) return false;
            H(j, k) = H(k, j) = static_cast<double>((values[pp] - values[pm] - values[mp] + values[mm]) /
                                                    static_cast<Real>(4 * spacing(j) * spacing(k)));
        }
    }
    return true;
}

ConjugatePoint conjugate_at(const PotentialGrid& u, const Eigen::VectorXd& x) {
    const GridLayout& L = u.layout();
    const int m = L.dim();
    ConjugatePoint cp;
    std::size_t best = 0;
    Real bv = -std::numeric_limits<Real>::infinity();
    for (std::size_t f = 0; f < L.size(); ++f) {
        Real v = -u.value(f);
        for (int j = 0; j < m; ++j) v += static_cast<Real>(x(j)) * L.coord(f, j);
        if (v > bv) { bv = v; best = f; }
    }
    const Index3 idx = L.unravel(best);
    cp.resolved = true;
    for (int j = 0; j < m; ++j) cp.resolved = cp.resolved && idx[j] >= 2 && idx[j] <= L.n() - 3;
    cp.value = bv;
    cp.t = L.node(best);
    if (!cp.resolved) return cp;
    const NodeDerivatives nd = node_derivatives(u, best);
    const SmallVec r = x.cast<Real>() - nd.gradient;
    const SmallVec delta = nd.hessian.ldlt().solve(r);
    if (delta.lpNorm<Eigen::Infinity>() > 2 * L.h()) return cp;  // keep the node value
    Eigen::VectorXd t1(m);
    Real xt = 0;
    for (int j = 0; j < m; ++j) {
        const Real tj = L.coord(best, j) + delta(j);
        t1(j) = static_cast<double>(tj);
        xt += static_cast<Real>(x(j)) * tj;
    }
    cp.t = t1;
    cp.value = xt - interpolate(u, t1);
    return cp;
}

SymplecticPotential legendre_transform(const PotentialGrid& u, int dual_n) {
    const GridLayout& L = u.layout();
    const LatticePolytope& P = L.polytope();
    const int m = L.dim();
    for (std::size_t f : L.interior()) {
        Eigen::LLT<SmallMat> llt(node_derivatives(u, f).hessian);
        if (llt.info() != Eigen::Success) throw NonConvexInput("potential is not discretely convex");
    }

    SymplecticPotential G;
    G.polytope = L.polytope_ptr();
    G.dim = m;
    G.n = dual_n > 0 ? dual_n : L.n();
    G.lower = P.vertices().colwise().minCoeff().transpose();
    G.upper = P.vertices().colwise().maxCoeff().transpose();
    G.spacing = (G.upper - G.lower) / (G.n - 1.0);
    std::size_t total = 1;
    for (int j = 0; j < m; ++j) total *= G.n;
    G.values.assign(total, std::numeric_limits<Real>::quiet_NaN());
    G.argmax.assign(total, Eigen::VectorXd::Constant(m, std::numeric_limits<double>::quiet_NaN()));
    G.valid.assign(total, 0);
    for (std::size_t d = 0; d < total; ++d) {
        const Eigen::VectorXd x = G.node(d);
        if (!(P.facet_values(x).minCoeff() > 1e-12)) continue;
        const ConjugatePoint cp = conjugate_at(u, x);
        if (!cp.resolved) continue;
        G.values[d] = cp.value;
        G.argmax[d] = cp.t;
        G.valid[d] = 1;
    }
    return G;
}

PotentialGrid legendre_inverse(const SymplecticPotential& G, std::shared_ptr<const GridLayout> layout) {
    const int m = G.dim;
    std::vector<std::size_t> ids;
    for (std::size_t d = 0; d < G.size(); ++d)
        if (G.valid[d]) ids.push_back(d);
    Eigen::MatrixXd X(m, ids.size());
    Eigen::VectorXd V(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        X.col(i) = G.node(ids[i]);
        V(i) = static_cast<double>(G.values[ids[i]]);
    }
    std::vector<Real> psi(layout->size(), std::numeric_limits<Real>::quiet_NaN());
    Eigen::MatrixXd H;
    for (std::size_t f = 0; f < layout->size(); ++f) {
        const Eigen::VectorXd t = layout->node(f);
        Eigen::Index best;
        (X.transpose() * t - V).maxCoeff(&best);
        const std::size_t d = ids[best];
        if (!G.hessian(d, H)) continue;
        Eigen::VectorXd g(m);
        for (int j = 0; j < m; ++j) {
            const std::size_t sj = G.stride(j);
            g(j) = static_cast<double>((G.values[d + sj] - G.values[d - sj]) / static_cast<Real>(2 * G.spacing(j)));
        }
        SmallVec tl(m);
        for (int j = 0; j < m; ++j) tl(j) = layout->coord(f, j);
        const SmallVec r = tl - g.cast<Real>();
        const SmallVec delta = H.cast<Real>().ldlt().solve(r);
        const Real value = G.node(d).cast<Real>().dot(tl) - G.values[d] + r.dot(delta) / 2;
        psi[f] = value - layout->support_value(f);
    }
    return PotentialGrid(std::move(layout), std::move(psi));
}

}  // namespace toricflow
