#include "toricflow/bundle_weights.hpp"
#include "toricflow/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace toricflow;

namespace {

std::shared_ptr<const LatticePolytope> poly(std::vector<std::vector<double>> v) {
    return std::make_shared<const LatticePolytope>(LatticePolytope::from_vertices(v));
}
const auto kCp1 = poly({{-1}, {1}});
const auto kBlp = poly({{1, 0}, {0, 1}, {-2, 1}, {1, -2}});

WeightPair pair(std::initializer_list<double> a, double b) {
    WeightPair w;
    w.a = Eigen::VectorXd(static_cast<Eigen::Index>(a.size()));
    Eigen::Index i = 0;
    for (double d : a) w.a(i++) = d;
    w.b = b;
    return w;
}

Eigen::VectorXd x1(double x) { return Eigen::VectorXd::Constant(1, x); }

// Uniform point of Δ by rejection from its bounding box.
Eigen::VectorXd random_point(const LatticePolytope& P, std::mt19937_64& rng) {
    const Eigen::VectorXd lo = P.vertices().colwise().minCoeff().transpose();
    const Eigen::VectorXd hi = P.vertices().colwise().maxCoeff().transpose();
    std::uniform_real_distribution<double> u(0, 1);
    Eigen::VectorXd x(P.dim());
    do {
        for (int j = 0; j < P.dim(); ++j) x(j) = lo(j) + (hi(j) - lo(j)) * u(rng);
    } while (!P.contains(x));
    return x;
}

}  // namespace

TEST_CASE("a_inverse and log_a examples") {
    const WeightData none(kCp1);
    CHECK(a_inverse(none, x1(0.3)) == 1.0);
    CHECK(log_a(none, x1(0.3)) == 0.0);

    const WeightData W(kCp1, {pair({0.5}, 1)});
    CHECK(a_inverse(W, x1(0)) == 1.0);
    CHECK(a_inverse(W, x1(-1)) == 0.5);
    CHECK(a_inverse(W, x1(1)) == 1.5);
    CHECK(log_a(W, x1(0)) == 0.0);
    CHECK(log_a(W, x1(1)) == doctest::Approx(-std::log(1.5)).epsilon(1e-15));
    CHECK_THROWS_AS(a_inverse(W, x1(1.01)), OutsidePolytope);
    CHECK_THROWS_AS(log_a(W, x1(-2)), OutsidePolytope);

    const WeightData bad(kCp1, {pair({2}, 1)});
    CHECK_THROWS_AS(log_a(bad, x1(-0.75)), NonPositiveFactor);
    CHECK_THROWS_AS(WeightData(kCp1, {pair({1, 1}, 1)}), ValueError);
}

TEST_CASE("validate_fano examples") {
    const auto k0 = validate_fano(WeightData(kCp1));
    CHECK(k0.first == 1.0);
    CHECK(k0.second == 1.0);

    const auto k = validate_fano(WeightData(kCp1, {pair({0.5}, 1)}));
    CHECK(k.first == doctest::Approx(1 / 1.5).epsilon(1e-15));
    CHECK(k.second == doctest::Approx(2.0).epsilon(1e-15));

    try {
        validate_fano(WeightData(kCp1, {pair({0.5}, 1), pair({2}, 1)}));
        FAIL("expected FanoViolation");
    } catch (const FanoViolation& e) {
        CHECK(e.factor == 1);
        CHECK(kCp1->vertices()(static_cast<Eigen::Index>(e.vertex), 0) == -1.0);
    }
    // Zero at a vertex is not positive.
    CHECK_THROWS_AS(validate_fano(WeightData(kCp1, {pair({1}, 1)})), FanoViolation);
}

TEST_CASE("weighted volume") {
    CHECK(weighted_volume(WeightData(kCp1)) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(weighted_volume(WeightData(kCp1, {pair({0.5}, 1)})) == doctest::Approx(2.0).epsilon(1e-14));
    // ∫_{-1}^{1} (1 + x/4)² dx = 2 + 2/48.
    CHECK(weighted_volume(WeightData(kCp1, {pair({0.25}, 1), pair({0.25}, 1)})) ==
          doctest::Approx(2.0 + 1.0 / 24).epsilon(1e-14));
}

TEST_CASE("property: a_inverse · exp(log_a) = 1") {
    std::mt19937_64 rng(17);
    const WeightData W(kBlp, {pair({0.2, -0.1}, 1), pair({0.1, 0.3}, 1.5), pair({-0.25, 0}, 0.8)});
    for (int i = 0; i < 10000; ++i) {
        const auto x = random_point(*kBlp, rng);
        CHECK(std::abs(a_inverse(W, x) * std::exp(log_a(W, x)) - 1) < 1e-14);
    }
}

TEST_CASE("property: K1 <= 1/a_inverse <= K2 on random points") {
    std::mt19937_64 rng(19);
    for (const auto& W : {WeightData(kCp1, {pair({0.25}, 1), pair({0.25}, 1)}),
                          WeightData(kCp1, {pair({0.5}, 1), pair({-0.5}, 1)}),
                          WeightData(kBlp, {pair({0.2, -0.1}, 1), pair({0.1, 0.3}, 1.5), pair({-0.25, 0}, 0.8)})}) {
        const auto [K1, K2] = validate_fano(W);
        CHECK(K1 > 0);
        CHECK(K1 <= K2);
        int outside = 0;
        for (int i = 0; i < 100000; ++i) {
            const double A = 1 / a_inverse(W, random_point(*W.polytope, rng));
            outside += A < K1 * (1 - 1e-12) || A > K2 * (1 + 1e-12);
        }
        CHECK(outside == 0);
    }
}

TEST_CASE("property: vertex positivity is positivity on Δ") {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 300; ++trial) {
        const auto w = pair({nd(rng), nd(rng)}, nd(rng) + 1.5);
        bool vertex_ok = true;
        for (Eigen::Index k = 0; k < kBlp->vertices().rows(); ++k)
            vertex_ok = vertex_ok && w.a.dot(kBlp->vertices().row(k).transpose()) + w.b > 0;
        bool sampled_ok = true;
        for (int i = 0; i < 2000 && sampled_ok; ++i)
            sampled_ok = w.a.dot(random_point(*kBlp, rng)) + w.b > 0;
        if (vertex_ok) CHECK(sampled_ok);
        bool threw = false;
        try {
            validate_fano(WeightData(kBlp, {w}));
        } catch (const FanoViolation&) {
            threw = true;
        }
        CHECK(threw == !vertex_ok);
    }
}
