#include "toricflow/bundle_weights.hpp"

#include "toricflow/errors.hpp"
#include "toricflow/simplex_quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace toricflow {
namespace {

constexpr double kContainTol = 1e-12;

void check_inside(const WeightData& W, const Eigen::VectorXd& x) {
    if (!W.polytope->contains(x, kContainTol)) throw OutsidePolytope("moment point lies outside the polytope");
}

double product(const WeightData& W, const Eigen::VectorXd& x) {
    double p = 1.0;
    for (std::size_t i = 0; i < W.pairs.size(); ++i) p *= W.factor(i, x);
    return p;
}

}  // namespace

WeightData::WeightData(std::shared_ptr<const LatticePolytope> P, std::vector<WeightPair> p)
    : polytope(std::move(P)), pairs(std::move(p)) {
    for (const auto& w : pairs)
        if (w.a.size() != polytope->dim()) throw ValueError("weights.a", "dimension does not match the polytope");
}

double a_inverse(const WeightData& W, const Eigen::VectorXd& x) {
    check_inside(W, x);
    return product(W, x);
}

double log_a(const WeightData& W, const Eigen::VectorXd& x) {
    check_inside(W, x);
    double s = 0.0;
    for (std::size_t i = 0; i < W.pairs.size(); ++i) {
        const double f = W.factor(i, x);
        if (!(f > 0.0)) throw NonPositiveFactor("weight factor " + std::to_string(i) + " is not positive");
        s -= std::log(f);
    }
    return s;
}

std::pair<double, double> validate_fano(const WeightData& W) {
    const LatticePolytope& P = *W.polytope;
    for (std::size_t k = 0; k < P.num_vertices(); ++k)
        for (std::size_t i = 0; i < W.pairs.size(); ++i) {
            const double f = W.factor(i, P.vertices().row(k).transpose());
            if (!(f > 0.0)) throw FanoViolation(k, i, f);
        }
    if (W.pairs.empty()) return {1.0, 1.0};

    const int m = P.dim();
    const Eigen::VectorXd lo = P.vertices().colwise().minCoeff().transpose();
    const Eigen::VectorXd hi = P.vertices().colwise().maxCoeff().transpose();
    auto sample = [&](int n) {
        double mx = 0.0, mn = std::numeric_limits<double>::infinity();
        for (Eigen::Index k = 0; k < P.vertices().rows(); ++k) {
            const double v = product(W, P.vertices().row(k).transpose());
            mx = std::max(mx, v);
            mn = std::min(mn, v);
        }
        std::vector<int> idx(m, 0);
        Eigen::VectorXd x(m);
        while (true) {
            for (int j = 0; j < m; ++j) x(j) = lo(j) + (hi(j) - lo(j)) * idx[j] / (n - 1.0);
            if (P.contains(x)) {
                const double v = product(W, x);
                mx = std::max(mx, v);
                mn = std::min(mn, v);
            }
            int j = m - 1;
            while (j >= 0 && idx[j] == n - 1) { idx[j] = 0; --j; }
            if (j < 0) break;
            ++idx[j];
        }
        return std::make_pair(mx, mn);
    };
    auto prev = sample(17);
    const int n_cap = m == 1 ? 1 << 20 : (m == 2 ? 4097 : 257);
    for (int n = 33; n <= n_cap; n = 2 * n - 1) {
        auto cur = sample(n);
        const bool stable = std::abs(cur.first - prev.first) <= 1e-3 * cur.first &&
                            std::abs(cur.second - prev.second) <= 1e-3 * cur.second;
        prev = cur;
        if (stable) break;
    }
    return {1.0 / prev.first, 1.0 / prev.second};
}

double weighted_volume(const WeightData& W) {
    Eigen::VectorXd out(1);
    const auto I = integrate_polytope(
        *W.polytope,
        [&](const Eigen::VectorXd& x) {
            out(0) = product(W, x);
            return out;
        },
        1);
    return I(0);
}

}  // namespace toricflow
