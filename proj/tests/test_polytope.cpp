#include "toricflow/errors.hpp"
#include "toricflow/polytope.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace toricflow;

namespace {

LatticePolytope make(std::vector<std::vector<double>> v) { return LatticePolytope::from_vertices(v); }

// Independent lattice-point oracle for polygons: integer points of the bounding
// box inside the convex hull, by cross products against the angularly sorted vertices.
std::size_t polygon_lattice_count(std::vector<std::array<long, 2>> v) {
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
        return std::atan2(static_cast<double>(a[1]), static_cast<double>(a[0])) <
               std::atan2(static_cast<double>(b[1]), static_cast<double>(b[0]));
    });
    long lo0 = v[0][0], hi0 = v[0][0], lo1 = v[0][1], hi1 = v[0][1];
    for (const auto& p : v) {
        lo0 = std::min(lo0, p[0]), hi0 = std::max(hi0, p[0]);
        lo1 = std::min(lo1, p[1]), hi1 = std::max(hi1, p[1]);
    }
    std::size_t count = 0;
    for (long x = lo0; x <= hi0; ++x)
        for (long y = lo1; y <= hi1; ++y) {
            bool in = true;
            for (std::size_t i = 0; i < v.size() && in; ++i) {
                const auto& a = v[i];
                const auto& b = v[(i + 1) % v.size()];
                in = (b[0] - a[0]) * (y - a[1]) - (b[1] - a[1]) * (x - a[0]) >= 0;
            }
            count += in;
        }
    return count;
}

double shoelace(std::vector<std::array<double, 2>> v) {
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
        return std::atan2(a[1], a[0]) < std::atan2(b[1], b[0]);
    });
    double s = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const auto& a = v[i];
        const auto& b = v[(i + 1) % v.size()];
        s += a[0] * b[1] - a[1] * b[0];
    }
    return std::abs(s) / 2;
}

Eigen::VectorXd vec(std::initializer_list<double> x) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(x.size()));
    Eigen::Index i = 0;
    for (double d : x) v(i++) = d;
    return v;
}

}  // namespace

TEST_CASE("cp1 facets and lattice points") {
    const auto P = make({{-1}, {1}});
    CHECK(P.dim() == 1);
    REQUIRE(P.num_facets() == 2);
    std::vector<std::int64_t> normals;
    for (const auto& f : P.facets()) normals.push_back(f.normal[0]);
    std::sort(normals.begin(), normals.end());
    CHECK(normals == std::vector<std::int64_t>{-1, 1});
    REQUIRE(P.num_lattice_points() == 3);
    CHECK(P.lattice_points_int() == std::vector<IntPoint>{{-1}, {0}, {1}});
    CHECK(P.volume() == 2.0);
}

TEST_CASE("square and cp2 against brute-force oracles") {
    const auto sq = make({{-1, -1}, {1, -1}, {1, 1}, {-1, 1}});
    CHECK(sq.num_facets() == 4);
    CHECK(sq.num_lattice_points() == polygon_lattice_count({{-1, -1}, {1, -1}, {1, 1}, {-1, 1}}));
    CHECK(sq.num_lattice_points() == 9);
    CHECK(sq.volume() == 4.0);

    const auto cp2 = make({{-1, -1}, {2, -1}, {-1, 2}});
    CHECK(cp2.num_facets() == 3);
    CHECK(cp2.num_lattice_points() == polygon_lattice_count({{-1, -1}, {2, -1}, {-1, 2}}));
    CHECK(cp2.num_lattice_points() == 10);
    CHECK(cp2.volume() == doctest::Approx(shoelace({{-1, -1}, {2, -1}, {-1, 2}})).epsilon(1e-15));
    CHECK(cp2.volume() == 4.5);

    const auto blp = make({{1, 0}, {0, 1}, {-2, 1}, {1, -2}});
    CHECK(blp.num_facets() == 4);
    CHECK(blp.num_lattice_points() == polygon_lattice_count({{1, 0}, {0, 1}, {-2, 1}, {1, -2}}));
    CHECK(blp.volume() == doctest::Approx(shoelace({{1, 0}, {0, 1}, {-2, 1}, {1, -2}})).epsilon(1e-15));
}

TEST_CASE("support function, active vertex, distance to boundary") {
    const auto sq = make({{-1, -1}, {1, -1}, {1, 1}, {-1, 1}});
    const auto cp1 = make({{-1}, {1}});
    CHECK(sq.support_function(vec({1, 2})) == 3.0);
    CHECK(sq.support_function(vec({0, 0})) == 0.0);
    CHECK(cp1.support_function(vec({-5})) == 5.0);

    CHECK(cp1.vertices()(static_cast<Eigen::Index>(cp1.active_vertex(vec({3}))), 0) == 1.0);
    CHECK(cp1.active_vertex(vec({0})) == 0);
    const auto k = sq.active_vertex(vec({2, -1}));
    CHECK(sq.vertices()(static_cast<Eigen::Index>(k), 0) == 1.0);
    CHECK(sq.vertices()(static_cast<Eigen::Index>(k), 1) == -1.0);

    CHECK(cp1.distance_to_boundary(vec({0})) == doctest::Approx(1.0));
    CHECK(cp1.distance_to_boundary(vec({1})) == doctest::Approx(0.0));
    CHECK(sq.distance_to_boundary(vec({0.5, 0})) == doctest::Approx(0.5));
}

TEST_CASE("construction errors") {
    CHECK_THROWS_AS(make({{-1, -1}, {1, 1}}), NotFullDimensional);
    CHECK_THROWS_AS(make({{-1, -1}, {0, 0}, {1, 1}}), NotFullDimensional);
    CHECK_THROWS_AS(make({{0}, {1}}), OriginNotInterior);
    CHECK_THROWS_AS(make({{1, 0}, {0, 1}, {1, 1}}), OriginNotInterior);
    // Integral hull whose facets are not at lattice distance one.
    CHECK_THROWS_AS(make({{-2}, {2}}), DelzantViolation);
    // Reflexive but singular: the weighted projective plane P(1,1,2).
    CHECK_THROWS_AS(make({{-1, -1}, {3, -1}, {-1, 1}}), DelzantViolation);
}

TEST_CASE("property: lattice points satisfy every facet inequality") {
    for (const auto& V : std::vector<std::vector<std::vector<double>>>{
             {{-1}, {1}}, {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}}, {{-1, -1}, {2, -1}, {-1, 2}},
             {{1, 0}, {0, 1}, {-2, 1}, {1, -2}}, {{-1, -1, -1}, {3, -1, -1}, {-1, 3, -1}, {-1, -1, 3}}}) {
        const auto P = make(V);
        for (const auto& p : P.lattice_points_int())
            for (const auto& f : P.facets()) {
                std::int64_t s = 1;
                for (int j = 0; j < P.dim(); ++j) s += p[j] * f.normal[j];
                CHECK(s >= 0);
            }
        for (std::size_t k = 0; k < P.num_vertices(); ++k) CHECK(std::abs(P.delzant_determinant(k)) == 1);
    }
}

TEST_CASE("property: support function is convex and 1-homogeneous") {
    const auto P = make({{1, 0}, {0, 1}, {-2, 1}, {1, -2}});
    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd(0, 3);
    std::uniform_real_distribution<double> ud(0, 5);
    for (int i = 0; i < 1000; ++i) {
        const Eigen::VectorXd a = vec({nd(rng), nd(rng)}), b = vec({nd(rng), nd(rng)});
        const double s = ud(rng);
        CHECK(std::abs(P.support_function(s * a) - s * P.support_function(a)) <= 1e-12 * (1 + std::abs(s * P.support_function(a))));
        const double l = ud(rng) / 5;
        CHECK(P.support_function(l * a + (1 - l) * b) <= l * P.support_function(a) + (1 - l) * P.support_function(b) + 1e-12);
    }
}

TEST_CASE("property: volume agrees with Monte Carlo within 3 sigma") {
    const auto P = make({{1, 0}, {0, 1}, {-2, 1}, {1, -2}});
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-2, 1);
    const int n = 1000000;
    int hits = 0;
    Eigen::VectorXd x(2);
    for (int i = 0; i < n; ++i) {
        x << u(rng), u(rng);
        hits += P.contains(x);
    }
    const double box = 9.0, p = static_cast<double>(hits) / n;
    const double sigma = box * std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(box * p - P.volume()) <= 3 * sigma);
}

TEST_CASE("3D: cp3 simplex") {
    const auto P = make({{-1, -1, -1}, {3, -1, -1}, {-1, 3, -1}, {-1, -1, 3}});
    CHECK(P.num_facets() == 4);
    CHECK(P.num_lattice_points() == 35);
    CHECK(P.volume() == doctest::Approx(64.0 / 6.0));
}
