#include "toricflow/errors.hpp"
#include "toricflow/potentials.hpp"

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
const auto kCp2 = poly({{-1, -1}, {2, -1}, {-1, 2}});

Eigen::VectorXd vec(std::initializer_list<double> x) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(x.size()));
    Eigen::Index i = 0;
    for (double d : x) v(i++) = d;
    return v;
}

PotentialGrid v0_grid(std::shared_ptr<const LatticePolytope> P, double R, int N) {
    auto layout = std::make_shared<const GridLayout>(P, R, N);
    return PotentialGrid::sample_offset(layout, [P](const Eigen::VectorXd& t) { return fact1_gap_ext(*P, t); });
}

std::size_t node_near(const GridLayout& L, const Eigen::VectorXd& t) {
    Index3 idx{};
    for (int j = 0; j < L.dim(); ++j)
        idx[j] = static_cast<int>(std::lround((t(j) + L.radius()) / L.spacing()));
    return L.ravel(idx);
}

}  // namespace

TEST_CASE("v0 at the origin counts lattice points") {
    CHECK(v0_eval(*kCp1, vec({0})) == doctest::Approx(std::log(3.0)).epsilon(1e-15));
    CHECK(v0_eval(*kSquare, vec({0, 0})) == doctest::Approx(std::log(9.0)).epsilon(1e-15));
    CHECK(v0_eval(*kCp2, vec({0, 0})) == doctest::Approx(std::log(10.0)).epsilon(1e-15));
    const double far = v0_eval(*kCp1, vec({100}));
    CHECK(std::isfinite(far));
    CHECK(far == doctest::Approx(100.0).epsilon(1e-15));
    CHECK(std::isfinite(v0_eval(*kCp2, vec({800, -300}))));
}

TEST_CASE("fact1 gap: log N at 0, exponentially small along a vertex direction") {
    CHECK(fact1_gap(*kCp1, vec({0})) == doctest::Approx(std::log(3.0)).epsilon(1e-15));
    CHECK(fact1_gap(*kCp1, vec({50})) < 1e-20);
    CHECK(fact1_gap(*kCp1, vec({50})) == doctest::Approx(std::exp(-50.0)).epsilon(1e-12));
    CHECK(fact1_gap(*kSquare, vec({0, 0})) == doctest::Approx(std::log(9.0)).epsilon(1e-15));
}

TEST_CASE("property: v̄ <= v0 <= v̄ + log N") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-50, 50);
    for (const auto& P : {kCp1, kSquare, kCp2}) {
        const double logN = std::log(static_cast<double>(P->num_lattice_points()));
        for (int i = 0; i < 2000; ++i) {
            Eigen::VectorXd t(P->dim());
            for (int j = 0; j < P->dim(); ++j) t(j) = u(rng);
            const double g = fact1_gap(*P, t);
            CHECK(g >= 0);
            CHECK(g <= logN + 1e-15);
        }
    }
}

TEST_CASE("property: v0(s θ)/s decreases to v̄(θ)") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    for (int i = 0; i < 50; ++i) {
        const Eigen::VectorXd th = vec({nd(rng), nd(rng)}).normalized();
        double prev = INFINITY;
        for (double s = 1; s <= 1024; s *= 2) {
            const double q = v0_eval(*kCp2, s * th) / s;
            CHECK(q <= prev + 1e-14);
            CHECK(q >= kCp2->support_function(th) - 1e-14);
            prev = q;
        }
        CHECK(prev - kCp2->support_function(th) < std::log(10.0) / 1024 + 1e-14);
    }
}

TEST_CASE("Guillemin potential on cp1") {
    const double x = 0.5;
    CHECK(guillemin_potential(*kCp1, vec({x})) ==
          doctest::Approx(1.5 * std::log(1.5) + 0.5 * std::log(0.5)).epsilon(1e-15));
    CHECK(guillemin_potential(*kCp1, vec({0})) == 0.0);
    CHECK(hessian_det_dual(*kCp1, vec({0})) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(hessian_det_dual(*kCp1, vec({0.5})) == doctest::Approx(0.375).epsilon(1e-15));
    CHECK(guillemin_gradient(*kCp1, vec({0.5}))(0) == doctest::Approx(std::log(3.0)).epsilon(1e-15));
    CHECK_THROWS_AS(guillemin_potential(*kCp1, vec({1})), BoundaryPoint);
    CHECK_THROWS_AS(guillemin_potential(*kCp1, vec({1.5})), BoundaryPoint);
}

TEST_CASE("Guillemin Hessian matches finite differences of the gradient on cp2") {
    const Eigen::VectorXd x = vec({0.3, -0.4});
    const auto H = guillemin_hessian(*kCp2, x);
    const double e = 1e-6;
    for (int j = 0; j < 2; ++j) {
        Eigen::VectorXd d = Eigen::VectorXd::Zero(2);
        d(j) = e;
        const Eigen::VectorXd col = (guillemin_gradient(*kCp2, x + d) - guillemin_gradient(*kCp2, x - d)) / (2 * e);
        CHECK((col - H.col(j)).norm() < 1e-7);
    }
    CHECK(hessian_det_dual(*kCp2, x) == doctest::Approx(1 / H.determinant()).epsilon(1e-13));
}

TEST_CASE("Guillemin dual on cp1 against the explicit maximiser") {
    // G₀'(x) = log((1 + x)/(1 − x)), so the sup is attained at x = tanh(t/2).
    for (double t : {0.0, 0.7, -3.0, 25.0}) {
        const double x = std::tanh(t / 2);
        const double u = x * t - guillemin_potential(*kCp1, vec({x}));
        const double off = static_cast<double>(guillemin_dual_offset(*kCp1, vec({t})));
        CHECK(off + std::abs(t) == doctest::Approx(u).epsilon(1e-13));
    }
}

TEST_CASE("grid hessian_det of v0 at the origin is 2/3 with O(h^2) error") {
    double err[2];
    int i = 0;
    for (int N : {257, 513}) {
        const auto u = v0_grid(kCp1, 8, N);
        const auto k = node_near(u.layout(), vec({0}));
        REQUIRE(std::abs(u.layout().node(k)(0)) < 1e-12);
        err[i++] = std::abs(hessian_det(u, k) - 2.0 / 3.0);
    }
    CHECK(err[0] < 1e-3);
    CHECK(err[0] / err[1] == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("differences are exact on quadratics") {
    auto layout = std::make_shared<const GridLayout>(kCp2, 6, 33);
    Eigen::Matrix2d A;
    A << 2.0, 0.5, 0.5, 1.0;
    const auto u = PotentialGrid::sample(layout, [&](const Eigen::VectorXd& t) {
        return static_cast<Real>(0.5 * t.dot(A * t) + 0.3 * t(0) - 0.1 * t(1));
    });
    for (std::size_t k : layout->interior()) {
        if (layout->cross_variant(k, 1, 0) != 0) continue;
        CHECK(hessian_det(u, k) == doctest::Approx(A.determinant()).epsilon(1e-10));
        const Eigen::VectorXd t = layout->node(k);
        const auto g = gradient(u, k);
        CHECK(g(0) == doctest::Approx(2.0 * t(0) + 0.5 * t(1) + 0.3).epsilon(1e-10));
    }
    // Every variant of the mixed difference is exact on quadratics.
    for (int v : {-1, 0, 1}) {
        Real s = 0;
        for (const auto& tap : cross_taps(v)) s += tap.w * tap.dj * tap.dk;
        CHECK(static_cast<double>(s) == doctest::Approx(1.0));
    }
}

TEST_CASE("non-convex sample is rejected") {
    auto layout = std::make_shared<const GridLayout>(kCp1, 4, 33);
    const auto u = PotentialGrid::sample(layout, [](const Eigen::VectorXd& t) { return static_cast<Real>(-t(0) * t(0)); });
    CHECK_THROWS_AS(hessian_det(u, layout->interior()[16]), NonPositiveDefinite);
    CHECK_THROWS_AS(legendre_transform(u), NonConvexInput);
}

TEST_CASE("fact3 residual of v0 is insensitive to the box size") {
    const double r10 = fact3_residual(v0_grid(kCp1, 10, 1025));
    const double r20 = fact3_residual(v0_grid(kCp1, 20, 2049));
    CHECK(r10 > 0);
    CHECK(std::abs(r20 - r10) < 0.01 * r10);
}

TEST_CASE("Legendre transform of v0 on cp1") {
    const auto u = v0_grid(kCp1, 16, 2049);
    const auto c = conjugate_at(u, vec({0}));
    REQUIRE(c.resolved);
    CHECK(static_cast<double>(c.value) == doctest::Approx(-std::log(3.0)).epsilon(1e-9));
    CHECK(std::abs(c.t(0)) < 1e-9);

    // v0' = (e^t − e^{−t}) / (e^t + 1 + e^{−t}) = 1/2  ⇔  e^{2t} − e^t − 3 = 0.
    const double ts = std::log((1 + std::sqrt(13.0)) / 2);
    const auto c2 = conjugate_at(u, vec({0.5}));
    REQUIRE(c2.resolved);
    CHECK(std::abs(c2.t(0) - ts) < 1e-4);  // maximiser of the discrete potential: O(h²)
    CHECK(static_cast<double>(c2.value) == doctest::Approx(0.5 * ts - v0_eval(*kCp1, vec({ts}))).epsilon(1e-8));
}

TEST_CASE("property: biconjugation returns the potential with O(h^2) error") {
    double err[2];
    int i = 0;
    for (int N : {129, 257}) {
        const auto u = v0_grid(kCp1, 6, N);
        const auto G = legendre_transform(u);
        const auto uu = legendre_inverse(G, u.layout_ptr());
        double e = 0;
        for (std::size_t k : u.layout().interior()) {
            if (std::abs(u.layout().node(k)(0)) > 3) continue;
            const double d = static_cast<double>(uu.value(k) - u.value(k));
            REQUIRE(std::isfinite(d));
            e = std::max(e, std::abs(d));
        }
        err[i++] = e;
    }
    CHECK(err[0] < 1e-3);
    CHECK(err[0] / err[1] > 3.0);
}

TEST_CASE("change of variables: Σ det D²u h^m approaches |Δ|") {
    const auto u = v0_grid(kCp1, 30, 4096);
    double s = 0;
    for (std::size_t k : u.layout().interior()) s += hessian_det(u, k) * u.layout().spacing();
    CHECK(s == doctest::Approx(2.0).epsilon(5e-5));

    const auto w = v0_grid(kSquare, 20, 256);
    double s2 = 0;
    const double h = w.layout().spacing();
    for (std::size_t k : w.layout().interior()) s2 += hessian_det(w, k) * h * h;
    CHECK(s2 == doctest::Approx(4.0).epsilon(2e-3));
}
