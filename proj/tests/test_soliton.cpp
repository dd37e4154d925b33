#include "toricflow/errors.hpp"
#include "toricflow/flow.hpp"
#include "toricflow/soliton.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace toricflow;

namespace {

std::shared_ptr<const LatticePolytope> poly(std::vector<std::vector<double>> v) {
    return std::make_shared<const LatticePolytope>(LatticePolytope::from_vertices(v));
}
const auto kCp1 = poly({{-1}, {1}});
const auto kSquare = poly({{-1, -1}, {1, -1}, {1, 1}, {-1, 1}});
const auto kBlp = poly({{1, 0}, {0, 1}, {-2, 1}, {1, -2}});

WeightPair pair1(double a, double b) { return {Eigen::VectorXd::Constant(1, a), b}; }

// Independent 1D oracle: ∫_{-1}^{1} x e^{bx} f(x) dx by composite Simpson, root by bisection.
template <class F>
double bisect_drift(F f) {
    auto moment = [&](double b) {
        const int n = 20000;
        const double h = 2.0 / n;
        double s = 0;
        for (int i = 0; i <= n; ++i) {
            const double x = -1 + i * h;
            const double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
            s += w * x * std::exp(b * x) * f(x);
        }
        return s * h / 3;
    };
    double lo = -5, hi = 5;
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = (lo + hi) / 2;
        (moment(mid) > 0 ? hi : lo) = mid;
    }
    return (lo + hi) / 2;
}

// Independent RK4 shooting solution of w'' = e^{c − w}, w(0) = w'(0) = 0, c = −log 2.
double shooting(double t) {
    const double c = -std::log(2.0);
    const int n = 20000;
    const double h = std::abs(t) / n;
    double w = 0, p = 0;
    for (int i = 0; i < n; ++i) {
        auto acc = [&](double ww) { return std::exp(c - ww); };
        const double k1w = p, k1p = acc(w);
        const double k2w = p + h / 2 * k1p, k2p = acc(w + h / 2 * k1w);
        const double k3w = p + h / 2 * k2p, k3p = acc(w + h / 2 * k2w);
        const double k4w = p + h * k3p, k4p = acc(w + h * k3w);
        w += h / 6 * (k1w + 2 * k2w + 2 * k3w + k4w);
        p += h / 6 * (k1p + 2 * k2p + 2 * k3p + k4p);
    }
    return w;
}

}  // namespace

TEST_CASE("test oracles agree with closed forms") {
    for (double t : {0.5, 3.0, 9.0}) CHECK(shooting(t) == doctest::Approx(2 * std::log(std::cosh(t / 2))).epsilon(1e-12));
    CHECK(bisect_drift([](double x) { return 1 + x / 2; }) ==
          doctest::Approx(-0.5276195198969628).epsilon(1e-12));
}

TEST_CASE("drift vector: frozen values") {
    CHECK(drift_vector(*kSquare, WeightData(kSquare)).norm() < 1e-14);
    CHECK(drift_vector(*kCp1, WeightData(kCp1)).norm() < 1e-14);

    const double b1 = drift_vector(*kCp1, WeightData(kCp1, {pair1(0.5, 1)}))(0);
    CHECK(std::abs(b1 - -0.5276195198969628248486) < 1e-10);
    CHECK(b1 < 0);
    CHECK(weighted_barycenter(WeightData(kCp1, {pair1(0.5, 1)}), Eigen::VectorXd::Zero(1))(0) > 0);

    const double b2 = drift_vector(*kCp1, WeightData(kCp1, {pair1(0.25, 1), pair1(0.25, 1)}))(0);
    CHECK(std::abs(b2 - -0.5063750656283446966) < 1e-10);
    CHECK(std::abs(b2 - bisect_drift([](double x) { return (1 + x / 4) * (1 + x / 4); })) < 1e-10);

    const Eigen::VectorXd bb = drift_vector(*kBlp, WeightData(kBlp));
    CHECK(std::abs(bb(0) - 0.5276195198969628248486) < 1e-10);
    CHECK(std::abs(bb(0) - bb(1)) < 1e-12);
}

TEST_CASE("property: drift Newton converges to one root from random starts") {
    const WeightData W(kBlp, {{Eigen::Vector2d(0.2, -0.1), 1.0}});
    const Eigen::VectorXd ref = drift_vector(*kBlp, W);
    CHECK(weighted_barycenter(W, ref).norm() < 1e-12);
    std::mt19937_64 rng(29);
    std::normal_distribution<double> nd(0, 1.5);
    for (int i = 0; i < 5; ++i) {
        const Eigen::VectorXd b = drift_vector(*kBlp, W, Eigen::Vector2d(nd(rng), nd(rng)));
        CHECK((b - ref).norm() < 1e-10);
    }
}

TEST_CASE("property: scaling 𝒜⁻¹ uniformly leaves the drift unchanged") {
    const double b = drift_vector(*kCp1, WeightData(kCp1, {pair1(0.5, 1)}))(0);
    const double b3 = drift_vector(*kCp1, WeightData(kCp1, {pair1(1.5, 3)}))(0);
    const double bc = drift_vector(*kCp1, WeightData(kCp1, {pair1(0.5, 1), pair1(0, 7)}))(0);
    CHECK(std::abs(b - b3) < 1e-12);
    CHECK(std::abs(b - bc) < 1e-12);
}

TEST_CASE("Kähler-Einstein limit on cp1 against the shooting oracle") {
    auto layout = std::make_shared<const GridLayout>(kCp1, 16.0, 4097);
    const WeightData W(kCp1);
    const SolitonSolution sol = soliton_potential(layout, W, Eigen::VectorXd::Zero(1));
    CHECK(sol.gauge == doctest::Approx(-std::log(2.0)).epsilon(1e-4));
    CHECK(sol.ma_residual_inf < 1e-6);
    CHECK(sol.barycenter_norm < 1e-10);
    double err = 0, asym = 0;
    for (std::size_t f : layout->interior()) {
        const double t = layout->node(f)(0);
        if (std::abs(t) > 12) continue;
        err = std::max(err, std::abs(static_cast<double>(sol.potential.value(f)) - shooting(t)));
    }
    for (int i = 1; i < 4096; ++i)
        asym = std::max(asym, std::abs(static_cast<double>(sol.potential.value(layout->ravel({i, 0, 0})) -
                                                           sol.potential.value(layout->ravel({4096 - i, 0, 0})))));
    CHECK(err < 1e-5);
    CHECK(asym < 1e-12);

    // Fed back to the flow operator: u̇ is the constant gauge.
    const auto r = rhs(sol.potential, W);
    Real lo = r.front(), hi = r.front();
    for (Real v : r) lo = std::min(lo, v), hi = std::max(hi, v);
    CHECK(static_cast<double>(hi - lo) < 1e-6);
}

TEST_CASE("weighted soliton on cp1 solves the drifted equation") {
    const WeightData W(kCp1, {pair1(0.5, 1)});
    const Eigen::VectorXd b = drift_vector(*kCp1, W);
    auto layout = std::make_shared<const GridLayout>(kCp1, 15.0, 512);
    const SolitonSolution sol = soliton_potential(layout, W, b);
    CHECK(sol.ma_residual_inf < 1e-6);
    CHECK(std::abs(sol.discrete_drift(0) - b(0)) < 1e-4);
    const OperatorEvaluation ev = MongeAmpereOperator(layout, W).evaluate(sol.potential);
    for (std::size_t i = 0; i < ev.rhs.size(); ++i)
        CHECK(std::abs(static_cast<double>(ev.rhs[i] + sol.discrete_drift(0) * ev.grad[i](0)) - sol.gauge) < 1e-6);
    const Minimum mn = locate_minimum(sol.potential);
    CHECK(std::abs(static_cast<double>(mn.value)) < 1e-12);
    CHECK(std::abs(mn.point(0)) < layout->spacing());
}

TEST_CASE("compare_potentials: self and a sub-grid translation") {
    auto layout = std::make_shared<const GridLayout>(kCp1, 16.0, 1025);
    const SolitonSolution sol = soliton_potential(layout, WeightData(kCp1), Eigen::VectorXd::Zero(1));
    CHECK(compare_to_flow(sol.potential, sol) < 1e-14);
    const double tau = 0.37 * layout->spacing();
    const PotentialGrid moved = translate(sol.potential, Eigen::VectorXd::Constant(1, tau), 0.25L);
    const Comparison c = compare_potentials(moved, sol.potential);
    CHECK(c.distance < 1e-6);
    CHECK(std::abs(c.translation(0) + tau) < 1e-6);
    CHECK(c.offset == doctest::Approx(-0.25).epsilon(1e-6));
}

TEST_CASE("weighted flow converges to the soliton") {
    RunConfig c;
    c.vertices = {{-1}, {1}};
    c.weights = {{{0.25}, 1}, {{0.25}, 1}};
    c.box_radius = 15;
    c.n_per_axis = 512;
    c.flow.dt = 0.1;
    const Trajectory tr = run(c);
    REQUIRE(tr.converged);
    const WeightData W = weight_data(c);
    const Eigen::VectorXd b = drift_vector(*W.polytope, W);
    const SolitonSolution sol = soliton_potential(tr.final_potential.layout_ptr(), W, b);
    CHECK(std::abs(tr.fitted_drift(0) - b(0)) < 1e-4);
    CHECK(compare_to_flow(tr.final_potential, sol) < 1e-4);
}
