#include "toricflow/simplex_quadrature.hpp"

#include "toricflow/errors.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <map>
#include <mutex>

namespace toricflow {

GaussRule gauss_legendre(int n) {
    static std::map<int, GaussRule> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    if (auto it = cache.find(n); it != cache.end()) return it->second;

    // Golub–Welsch on the Legendre Jacobi matrix.
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double b = k / std::sqrt(4.0 * k * k - 1.0);
        J(k, k - 1) = J(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    GaussRule rule;
    rule.nodes = (es.eigenvalues().array() + 1.0) / 2.0;
    rule.weights = es.eigenvectors().row(0).transpose().array().square();  // sums to 1 on [0,1]
    cache.emplace(n, rule);
    return rule;
}

Eigen::VectorXd integrate_simplex(const Eigen::MatrixXd& simplex, int n, const VectorIntegrand& f,
                                  Eigen::Index out_size) {
    const int m = static_cast<int>(simplex.cols());
    const GaussRule g = gauss_legendre(n);
    Eigen::MatrixXd V(m, m);
    for (int i = 0; i < m; ++i) V.col(i) = (simplex.row(i + 1) - simplex.row(0)).transpose();
    const double vol_factor = std::abs(V.determinant());

    Eigen::VectorXd total = Eigen::VectorXd::Zero(out_size);
    std::vector<int> idx(m, 0);
    Eigen::VectorXd lam(m), x(m);
    while (true) {
        double w = vol_factor, rest = 1.0;
        for (int j = 0; j < m; ++j) {
            const double xi = g.nodes(idx[j]);
            lam(j) = rest * xi;
            w *= g.weights(idx[j]) * std::pow(1.0 - xi, m - 1 - j);
            rest *= 1.0 - xi;
        }
        x = simplex.row(0).transpose() + V * lam;
        total += w * f(x);
        int j = m - 1;
        while (j >= 0 && idx[j] == n - 1) { idx[j] = 0; --j; }
        if (j < 0) break;
        ++idx[j];
    }
    return total;
}

Eigen::VectorXd integrate_polytope(const LatticePolytope& P, const VectorIntegrand& f, Eigen::Index out_size,
                                   double rtol, int n0, int n_max) {
    auto at = [&](int n) {
        Eigen::VectorXd s = Eigen::VectorXd::Zero(out_size);
        for (const auto& S : P.simplices()) s += integrate_simplex(S, n, f, out_size);
        return s;
    };
    Eigen::VectorXd prev = at(n0);
    for (int n = 2 * n0; n <= n_max; n *= 2) {
        Eigen::VectorXd cur = at(n);
        const double scale = std::max(cur.lpNorm<Eigen::Infinity>(), 1e-300);
        if ((cur - prev).lpNorm<Eigen::Infinity>() <= rtol * scale) return cur;
        prev = std::move(cur);
    }
    throw QuadratureUnstable("simplex quadrature did not stabilise to " + std::to_string(rtol) + " by " +
                             std::to_string(n_max) + " points per axis");
}

}  // namespace toricflow
