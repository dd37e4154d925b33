#include "toricflow/polytope.hpp"

#include "toricflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <string>

namespace toricflow {
namespace {

using RMatrix = std::vector<std::vector<Rational>>;

// Row-reduces in place; returns rank.
int row_reduce(RMatrix& a, std::vector<int>* pivots = nullptr) {
    const int rows = static_cast<int>(a.size());
    const int cols = rows ? static_cast<int>(a[0].size()) : 0;
    int rank = 0;
    for (int c = 0; c < cols && rank < rows; ++c) {
        int piv = -1;
        for (int r = rank; r < rows; ++r)
            if (a[r][c] != 0) { piv = r; break; }
        if (piv < 0) continue;
        std::swap(a[rank], a[piv]);
        const Rational inv = 1 / a[rank][c];
        for (auto& v : a[rank]) v *= inv;
        for (int r = 0; r < rows; ++r) {
            if (r == rank || a[r][c] == 0) continue;
            const Rational f = a[r][c];
            for (int k = 0; k < cols; ++k) a[r][k] -= f * a[rank][k];
        }
        if (pivots) pivots->push_back(c);
        ++rank;
    }
    return rank;
}

int affine_rank(const std::vector<RationalPoint>& pts) {
    if (pts.size() < 2) return 0;
    RMatrix d;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        RationalPoint row(pts[i].size());
        for (std::size_t j = 0; j < row.size(); ++j) row[j] = pts[i][j] - pts[0][j];
        d.push_back(std::move(row));
    }
    return row_reduce(d);
}

// One nullspace vector of a rank-(cols-1) matrix.
std::vector<Rational> null_vector(RMatrix a) {
    const int cols = static_cast<int>(a[0].size());
    std::vector<int> piv;
    row_reduce(a, &piv);
    int free_col = 0;
    while (std::find(piv.begin(), piv.end(), free_col) != piv.end()) ++free_col;
    std::vector<Rational> v(cols, Rational(0));
    v[free_col] = 1;
    for (std::size_t r = 0; r < piv.size(); ++r) v[piv[r]] = -a[r][free_col];
    return v;
}

Rational determinant(RMatrix a) {
    const int n = static_cast<int>(a.size());
    Rational det = 1;
    for (int c = 0; c < n; ++c) {
        int piv = -1;
        for (int r = c; r < n; ++r)
            if (a[r][c] != 0) { piv = r; break; }
        if (piv < 0) return Rational(0);
        if (piv != c) { std::swap(a[c], a[piv]); det = -det; }
        det *= a[c][c];
        for (int r = c + 1; r < n; ++r) {
            if (a[r][c] == 0) continue;
            const Rational f = a[r][c] / a[c][c];
            for (int k = c; k < n; ++k) a[r][k] -= f * a[c][k];
        }
    }
    return det;
}

void for_each_subset(int n, int k, const std::function<void(const std::vector<int>&)>& fn) {
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) idx[i] = i;
    if (k > n) return;
    while (true) {
        fn(idx);
        int i = k - 1;
        while (i >= 0 && idx[i] == n - k + i) --i;
        if (i < 0) return;
        ++idx[i];
        for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

std::string point_str(const RationalPoint& p) {
    std::string s = "(";
    for (std::size_t i = 0; i < p.size(); ++i) s += (i ? "," : "") + p[i].str();
    return s + ")";
}

}  // namespace

LatticePolytope LatticePolytope::from_vertices(const std::vector<std::vector<double>>& points) {
    std::vector<RationalPoint> exact;
    for (const auto& p : points) {
        RationalPoint q;
        for (double v : p) {
            if (!std::isfinite(v)) throw NotFullDimensional("non-finite vertex coordinate");
            q.emplace_back(v);  // exact binary value
        }
        exact.push_back(std::move(q));
    }
    return from_vertices(exact);
}

LatticePolytope LatticePolytope::from_vertices(const std::vector<RationalPoint>& input) {
    if (input.empty() || input[0].empty()) throw NotFullDimensional("no vertices given");
    const int m = static_cast<int>(input[0].size());
    for (const auto& p : input)
        if (static_cast<int>(p.size()) != m)
            throw NotFullDimensional("vertices have inconsistent dimensions");

    std::vector<RationalPoint> pts;
    for (const auto& p : input)
        if (std::find(pts.begin(), pts.end(), p) == pts.end()) pts.push_back(p);
    if (static_cast<int>(pts.size()) < m + 1 || affine_rank(pts) < m)
        throw NotFullDimensional("points do not span a " + std::to_string(m) + "-dimensional polytope");

    // Facets: supporting hyperplanes through m affinely independent points.
    std::vector<std::vector<Rational>> lambdas;
    const int n = static_cast<int>(pts.size());
    for_each_subset(n, m, [&](const std::vector<int>& idx) {
        RMatrix a;
        for (int i : idx) {
            std::vector<Rational> row(pts[i]);
            row.emplace_back(1);
            a.push_back(std::move(row));
        }
        RMatrix tmp = a;
        if (row_reduce(tmp) < m) return;
        std::vector<Rational> nv = null_vector(a);  // <n, p> + c = 0 on the subset
        int sign = 0;
        for (const auto& q : pts) {
            Rational s = nv[m];
            for (int j = 0; j < m; ++j) s += nv[j] * q[j];
            const int sg = s > 0 ? 1 : (s < 0 ? -1 : 0);
            if (sg == 0) continue;
            if (sign == 0) sign = sg;
            else if (sg != sign) return;  // not supporting
        }
        if (sign < 0)
            for (auto& v : nv) v = -v;
        const Rational c = nv[m];
        if (c <= 0)
            throw OriginNotInterior(c == 0 ? "origin lies on a facet" : "origin lies outside the polytope");
        std::vector<Rational> lam(m);
        for (int j = 0; j < m; ++j) lam[j] = nv[j] / c;
        if (std::find(lambdas.begin(), lambdas.end(), lam) == lambdas.end()) lambdas.push_back(lam);
    });

    LatticePolytope P;
    P.dim_ = m;
    for (const auto& lam : lambdas) {
        Facet f;
        for (const auto& v : lam) {
            if (denominator(v) != 1)
                throw DelzantViolation("facet normal " + point_str(lam) + " is not integral (polytope not reflexive)");
            f.normal.push_back(numerator(v).convert_to<std::int64_t>());
        }
        P.facets_.push_back(std::move(f));
    }

    auto lval = [&](const RationalPoint& x, std::size_t r) {
        Rational s = 1;
        for (int j = 0; j < m; ++j) s += x[j] * P.facets_[r].normal[j];
        return s;
    };

    // Vertices: points whose active normals have full rank; input order kept.
    std::vector<RationalPoint> verts;
    for (const auto& p : pts) {
        std::vector<int> active;
        for (std::size_t r = 0; r < P.facets_.size(); ++r)
            if (lval(p, r) == 0) active.push_back(static_cast<int>(r));
        RMatrix a;
        for (int r : active) {
            std::vector<Rational> row;
            for (auto v : P.facets_[r].normal) row.emplace_back(v);
            a.push_back(std::move(row));
        }
        if (static_cast<int>(active.size()) < m || row_reduce(a) < m) continue;
        if (static_cast<int>(active.size()) != m)
            throw DelzantViolation("vertex " + point_str(p) + " lies on " + std::to_string(active.size()) +
                                   " facets (polytope not simple)");
        RMatrix nm;
        for (int r : active) {
            std::vector<Rational> row;
            for (auto v : P.facets_[r].normal) row.emplace_back(v);
            nm.push_back(std::move(row));
        }
        const Rational det = determinant(nm);
        if (det != 1 && det != -1)
            throw DelzantViolation("normals at vertex " + point_str(p) + " have determinant " + det.str() +
                                   " (not a lattice basis)");
        IntPoint ip;
        for (const auto& v : p) {
            if (denominator(v) != 1) throw DelzantViolation("vertex " + point_str(p) + " is not integral");
            ip.push_back(numerator(v).convert_to<std::int64_t>());
        }
        verts.push_back(p);
        P.vertices_int_.push_back(ip);
        P.vertex_facets_.push_back(active);
        P.delzant_det_.push_back(det.convert_to<std::int64_t>());
    }

    // Lattice points by bounding-box scan (lexicographic order).
    IntPoint lo(m, std::numeric_limits<std::int64_t>::max()), hi(m, std::numeric_limits<std::int64_t>::min());
    for (const auto& v : P.vertices_int_)
        for (int j = 0; j < m; ++j) { lo[j] = std::min(lo[j], v[j]); hi[j] = std::max(hi[j], v[j]); }
    IntPoint cur = lo;
    while (true) {
        bool inside = true;
        for (const auto& f : P.facets_) {
            std::int64_t s = 1;
            for (int j = 0; j < m; ++j) s += cur[j] * f.normal[j];
            if (s < 0) { inside = false; break; }
        }
        if (inside) P.lattice_int_.push_back(cur);
        int j = m - 1;
        while (j >= 0 && cur[j] == hi[j]) { cur[j] = lo[j]; --j; }
        if (j < 0) break;
        ++cur[j];
    }

    auto to_matrix = [m](const std::vector<IntPoint>& rows) {
        Eigen::MatrixXd M(rows.size(), m);
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (int j = 0; j < m; ++j) M(i, j) = static_cast<double>(rows[i][j]);
        return M;
    };
    P.vertices_ = to_matrix(P.vertices_int_);
    std::vector<IntPoint> nrm;
    for (const auto& f : P.facets_) nrm.push_back(f.normal);
    P.normals_ = to_matrix(nrm);
    P.lattice_ = to_matrix(P.lattice_int_);

    // Triangulation of the boundary, coned from the origin.
    auto on_facet = [&](std::size_t k, std::size_t r) {
        const auto& a = P.vertex_facets_[k];
        return std::find(a.begin(), a.end(), static_cast<int>(r)) != a.end();
    };
    std::function<std::vector<std::vector<std::size_t>>(const std::vector<std::size_t>&, int)> tri;
    tri = [&](const std::vector<std::size_t>& face, int d) -> std::vector<std::vector<std::size_t>> {
        if (d == 0) return {{face[0]}};
        const std::size_t apex = face[0];
        std::vector<std::vector<std::size_t>> out;
        std::set<std::vector<std::size_t>> seen;
        for (std::size_t r = 0; r < P.facets_.size(); ++r) {
            if (on_facet(apex, r)) continue;
            std::vector<std::size_t> sub;
            for (auto k : face)
                if (on_facet(k, r)) sub.push_back(k);
            if (sub.empty() || sub.size() == face.size() || seen.count(sub)) continue;
            std::vector<RationalPoint> sp;
            for (auto k : sub) sp.push_back(verts[k]);
            if (affine_rank(sp) != d - 1) continue;
            seen.insert(sub);
            for (auto s : tri(sub, d - 1)) {
                s.push_back(apex);
                out.push_back(std::move(s));
            }
        }
        return out;
    };
    P.volume_ = 0;
    Rational fact = 1;
    for (int j = 2; j <= m; ++j) fact *= j;
    for (std::size_t r = 0; r < P.facets_.size(); ++r) {
        std::vector<std::size_t> face;
        for (std::size_t k = 0; k < verts.size(); ++k)
            if (on_facet(k, r)) face.push_back(k);
        for (const auto& s : tri(face, m - 1)) {
            RMatrix M;
            Eigen::MatrixXd S = Eigen::MatrixXd::Zero(m + 1, m);
            for (int i = 0; i < m; ++i) {
                M.push_back(verts[s[i]]);
                S.row(i + 1) = P.vertices_.row(static_cast<Eigen::Index>(s[i]));
            }
            P.volume_ += abs(determinant(M)) / fact;
            P.simplices_.push_back(std::move(S));
        }
    }
    return P;
}

double LatticePolytope::support_function(const Eigen::VectorXd& t) const {
    return (vertices_ * t).maxCoeff();
}

std::size_t LatticePolytope::active_vertex(const Eigen::VectorXd& t) const {
    std::size_t best = 0;
    double bv = vertices_.row(0).dot(t);
    for (Eigen::Index k = 1; k < vertices_.rows(); ++k) {
        const double v = vertices_.row(k).dot(t);
        if (v > bv) { bv = v; best = static_cast<std::size_t>(k); }
    }
    return best;
}

Eigen::VectorXd LatticePolytope::facet_values(const Eigen::VectorXd& x) const {
    return (normals_ * x).array() + 1.0;
}

double LatticePolytope::distance_to_boundary(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd l = facet_values(x);
    double d = std::numeric_limits<double>::infinity();
    for (Eigen::Index r = 0; r < l.size(); ++r) d = std::min(d, l(r) / normals_.row(r).norm());
    return d;
}

bool LatticePolytope::contains(const Eigen::VectorXd& x, double tol) const {
    return facet_values(x).minCoeff() >= -tol;
}

double LatticePolytope::diameter() const {
    double d = 0;
    for (Eigen::Index i = 0; i < vertices_.rows(); ++i)
        for (Eigen::Index j = i + 1; j < vertices_.rows(); ++j)
            d = std::max(d, (vertices_.row(i) - vertices_.row(j)).norm());
    return d;
}

}  // namespace toricflow
