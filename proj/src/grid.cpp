#include "toricflow/grid.hpp"

#include "toricflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace toricflow {

GridLayout::GridLayout(std::shared_ptr<const LatticePolytope> polytope, double box_radius, int n_per_axis)
    : polytope_(std::move(polytope)), dim_(polytope_->dim()), n_(n_per_axis), radius_(box_radius) {
    if (dim_ > kMaxDim) throw ValueError("vertices", "grid potentials support dimension <= 3");
    if (n_ < 16) throw ValueError("grid.n_per_axis", "must be >= 16");
    if (!(box_radius > 0) || !std::isfinite(box_radius)) throw ValueError("grid.box_radius", "must be positive");
    h_ = 2.0L * static_cast<Real>(box_radius) / (n_ - 1);
    size_ = 1;
    for (int j = dim_ - 1; j >= 0; --j) {
        stride_[j] = size_;
        size_ *= static_cast<std::size_t>(n_);
    }

    const auto& P = *polytope_;
    K_.resize(size_);
    vertex_.resize(size_);
    unknown_.assign(size_, -1);
    npairs_ = static_cast<std::size_t>(dim_ * (dim_ - 1) / 2);
    cross_.assign(size_ * npairs_, 0);
    const auto& V = P.vertices_int();
    // Inside the cone of vertex k the offset is dominated by exponentials along
    // the edge directions at k, so the mixed stencil follows those edges; when
    // they disagree (2 = undecided) the two dominant vertices break the tie.
    std::vector<std::vector<int>> cone_sign(P.num_vertices(), std::vector<int>(npairs_, 0));
    for (std::size_t k = 0; k < P.num_vertices(); ++k) {
        const auto& Fk = P.vertex_facets(k);
        for (std::size_t l = 0; l < P.num_vertices(); ++l) {
            if (l == k) continue;
            int shared = 0;
            for (int a : P.vertex_facets(l)) shared += static_cast<int>(std::count(Fk.begin(), Fk.end(), a));
            if (shared < dim_ - 1) continue;
            for (int j = 1; j < dim_; ++j)
                for (int i = 0; i < j; ++i) {
                    const std::int64_t prod = (V[l][j] - V[k][j]) * (V[l][i] - V[k][i]);
                    const int sg = prod > 0 ? 1 : prod < 0 ? -1 : 0;
                    int& c = cone_sign[k][static_cast<std::size_t>(j * (j - 1) / 2 + i)];
                    if (sg != 0 && c != sg) c = c == 0 ? sg : 2;
                }
        }
    }
    for (std::size_t f = 0; f < size_; ++f) {
        const Index3 idx = unravel(f);
        std::size_t best = 0, second = 1;
        std::int64_t bv = vertex_units(0, idx), sv = vertex_units(1, idx);
        if (sv > bv) {
            std::swap(bv, sv);
            std::swap(best, second);
        }
        for (std::size_t k = 2; k < P.num_vertices(); ++k) {
            const std::int64_t v = vertex_units(k, idx);
            if (v > bv) {
                sv = bv, second = best;
                bv = v, best = k;
            } else if (v > sv) {
                sv = v, second = k;
            }
        }
        K_[f] = bv;
        vertex_[f] = best;
        for (int j = 1; j < dim_; ++j)
            for (int k = 0; k < j; ++k) {
                int sign = cone_sign[best][static_cast<std::size_t>(j * (j - 1) / 2 + k)];
                if (sign == 2) {
                    const std::int64_t prod = (V[best][j] - V[second][j]) * (V[best][k] - V[second][k]);
                    sign = prod > 0 ? 1 : prod < 0 ? -1 : 0;
                }
                cross_[f * npairs_ + static_cast<std::size_t>(j * (j - 1) / 2 + k)] = static_cast<std::int8_t>(sign);
            }
        bool inner = true;
        for (int j = 0; j < dim_; ++j) inner = inner && idx[j] > 0 && idx[j] < n_ - 1;
        if (inner) {
            unknown_[f] = static_cast<std::int64_t>(interior_.size());
            interior_.push_back(f);
        }
    }
    // Ghost sources. Inside the cone of vertex k the offset is dominated by
    // exp<e, t> for the edge direction e at k maximising <e, t>: a ridge
    // profile in <e, t> (across a wall of the fan as well). The ghost copies
    // the nearest interior node reached along a direction orthogonal to that
    // e, or the clamped node when there is none.
    std::vector<std::vector<IntPoint>> edges(P.num_vertices());
    for (std::size_t k = 0; k < P.num_vertices(); ++k) {
        const auto& Fk = P.vertex_facets(k);
        for (std::size_t l = 0; l < P.num_vertices(); ++l) {
            if (l == k) continue;
            int shared = 0;
            for (int a : P.vertex_facets(l)) shared += static_cast<int>(std::count(Fk.begin(), Fk.end(), a));
            if (shared < dim_ - 1) continue;
            IntPoint e(static_cast<std::size_t>(dim_));
            std::int64_t g = 0;
            for (int j = 0; j < dim_; ++j) {
                e[j] = V[l][j] - V[k][j];
                g = std::gcd(g, e[j]);
            }
            for (auto& x : e) x /= g;
            edges[k].push_back(e);
        }
    }
    std::vector<Index3> dirs;
    for (int code = 0; code < 27; ++code) {
        Index3 v{};
        int c = code, nz = 0;
        bool ok = true;
        for (int j = 0; j < kMaxDim; ++j, c /= 3) {
            v[j] = c % 3 - 1;
            if (j >= dim_ && v[j] != 0) ok = false;
            nz += v[j] != 0;
        }
        if (ok && nz > 0) dirs.push_back(v);
    }
    std::stable_sort(dirs.begin(), dirs.end(), [](const Index3& a, const Index3& b) {
        return std::abs(a[0]) + std::abs(a[1]) + std::abs(a[2]) < std::abs(b[0]) + std::abs(b[1]) + std::abs(b[2]);
    });
    auto inside = [&](const Index3& e) {
        for (int j = 0; j < dim_; ++j)
            if (e[j] < 1 || e[j] > n_ - 2) return false;
        return true;
    };
    for (std::size_t f = 0; f < size_; ++f) {
        if (unknown_[f] >= 0) continue;
        const Index3 idx = unravel(f);
        const std::size_t k = vertex_[f];
        const IntPoint* d = nullptr;
        std::int64_t dv = 0;
        for (const auto& e : edges[k]) {
            std::int64_t v = 0;
            for (int j = 0; j < dim_; ++j) v += e[j] * z(idx[j]);
            if (!d || v > dv) d = &e, dv = v;
        }
        Index3 e = idx;
        for (int j = 0; j < dim_; ++j) e[j] = std::clamp(e[j], 1, n_ - 2);
        bool found = !d;
        for (int c = 1; c <= 2 && !found; ++c)
            for (const auto& v : dirs) {
                std::int64_t dot = 0;
                Index3 cand = idx;
                for (int j = 0; j < dim_; ++j) {
                    dot += (*d)[j] * v[j];
                    cand[j] += c * v[j];
                }
                if (dot == 0 && inside(cand)) {
                    e = cand;
                    found = true;
                    break;
                }
            }
        ghosts_.push_back({f, ravel(e)});
    }

    // Origin stencil.
    std::vector<std::vector<std::pair<int, Real>>> axis(dim_);
    for (int j = 0; j < dim_; ++j) {
        if (n_ % 2) axis[j] = {{(n_ - 1) / 2, 1.0L}};
        else axis[j] = {{n_ / 2 - 1, 0.5L}, {n_ / 2, 0.5L}};
    }
    std::vector<std::size_t> pos(dim_, 0);
    while (true) {
        Index3 idx{};
        Real w = 1;
        for (int j = 0; j < dim_; ++j) {
            idx[j] = axis[j][pos[j]].first;
            w *= axis[j][pos[j]].second;
        }
        origin_.emplace_back(ravel(idx), w);
        int j = dim_ - 1;
        while (j >= 0 && pos[j] + 1 == axis[j].size()) { pos[j] = 0; --j; }
        if (j < 0) break;
        ++pos[j];
    }
}

Index3 GridLayout::unravel(std::size_t flat) const {
    Index3 idx{};
    for (int j = 0; j < dim_; ++j) {
        idx[j] = static_cast<int>(flat / stride_[j]);
        flat %= stride_[j];
    }
    return idx;
}

std::size_t GridLayout::ravel(const Index3& idx) const {
    std::size_t f = 0;
    for (int j = 0; j < dim_; ++j) f += static_cast<std::size_t>(idx[j]) * stride_[j];
    return f;
}

Eigen::VectorXd GridLayout::node(std::size_t flat) const {
    Eigen::VectorXd t(dim_);
    const Index3 idx = unravel(flat);
    for (int j = 0; j < dim_; ++j) t(j) = static_cast<double>(h_ / 2 * z(idx[j]));
    return t;
}

std::int64_t GridLayout::vertex_units(std::size_t k, const Index3& idx) const {
    const auto& p = polytope_->vertices_int()[k];
    std::int64_t s = 0;
    for (int j = 0; j < dim_; ++j) s += p[j] * z(idx[j]);
    return s;
}

// ---------------------------------------------------------------------------

PotentialGrid::PotentialGrid(std::shared_ptr<const GridLayout> layout, std::vector<Real> offsets)
    : layout_(std::move(layout)), offsets_(std::move(offsets)) {
    if (offsets_.size() != layout_->size()) throw ValueError("values", "size does not match the grid");
}

PotentialGrid PotentialGrid::sample(std::shared_ptr<const GridLayout> layout, const Function& u) {
    std::vector<Real> psi(layout->size());
    for (std::size_t f = 0; f < psi.size(); ++f) psi[f] = u(layout->node(f)) - layout->support_value(f);
    return PotentialGrid(std::move(layout), std::move(psi));
}

PotentialGrid PotentialGrid::sample_offset(std::shared_ptr<const GridLayout> layout, const Function& psi_fn) {
    std::vector<Real> psi(layout->size());
    for (std::size_t f = 0; f < psi.size(); ++f) psi[f] = psi_fn(layout->node(f));
    return PotentialGrid(std::move(layout), std::move(psi));
}

PotentialGrid PotentialGrid::from_values(std::shared_ptr<const GridLayout> layout, const std::vector<Real>& u) {
    if (u.size() != layout->size()) throw ValueError("values", "expected " + std::to_string(layout->size()) + " values");
    std::vector<Real> psi(u.size());
    for (std::size_t f = 0; f < u.size(); ++f) psi[f] = u[f] - layout->support_value(f);
    return PotentialGrid(std::move(layout), std::move(psi));
}

std::vector<Real> PotentialGrid::values() const {
    std::vector<Real> v(offsets_.size());
    for (std::size_t f = 0; f < v.size(); ++f) v[f] = value(f);
    return v;
}

void PotentialGrid::apply_affine_cap() {
    for (const auto& g : layout_->ghosts()) offsets_[g.node] = offsets_[g.edge];
}

const std::vector<StencilTap>& cross_taps(int variant) {
    static const std::vector<StencilTap> plain{
        {1, 1, 0.25L}, {1, -1, -0.25L}, {-1, 1, -0.25L}, {-1, -1, 0.25L}};
    static const std::vector<StencilTap> minus{{1, 1, 0.5L},  {-1, -1, 0.5L}, {1, 0, -0.5L}, {-1, 0, -0.5L},
                                               {0, 1, -0.5L}, {0, -1, -0.5L}, {0, 0, 1.0L}};
    static const std::vector<StencilTap> plus{{1, 0, 0.5L},  {-1, 0, 0.5L}, {0, 1, 0.5L}, {0, -1, 0.5L},
                                              {0, 0, -1.0L}, {1, -1, -0.5L}, {-1, 1, -0.5L}};
    return variant < 0 ? minus : variant > 0 ? plus : plain;
}

NodeDerivatives node_derivatives(const PotentialGrid& u, std::size_t f) {
    const GridLayout& L = u.layout();
    const int m = L.dim();
    const Real h = L.h();
    const auto& psi = u.offsets();
    NodeDerivatives d;
    d.gradient.resize(m);
    d.hessian.resize(m, m);
    auto K = [&](std::size_t g) { return static_cast<Real>(L.support_units(g)); };
    for (int j = 0; j < m; ++j) {
        const std::size_t sj = L.stride(j);
        const std::size_t p = f + sj, q = f - sj;
        d.gradient(j) = (K(p) - K(q)) / 4 + (psi[p] - psi[q]) / (2 * h);
        d.hessian(j, j) = (K(p) - 2 * K(f) + K(q)) / (2 * h) + (psi[p] - 2 * psi[f] + psi[q]) / (h * h);
        for (int k = 0; k < j; ++k) {
            const std::ptrdiff_t sk = static_cast<std::ptrdiff_t>(L.stride(k));
            Real kv = 0, pv = 0;
            for (const auto& t : cross_taps(L.cross_variant(f, j, k))) {
                const std::size_t g = f + t.dj * static_cast<std::ptrdiff_t>(sj) + t.dk * sk;
                kv += t.w * K(g);
                pv += t.w * psi[g];
            }
            d.hessian(j, k) = d.hessian(k, j) = kv / (2 * h) + pv / (h * h);
        }
    }
    return d;
}

namespace {

struct Lagrange4 {
    int base;
    Real w[4];
};

Lagrange4 lagrange_weights(Real x) {  // x in grid units from node 0
    Lagrange4 l;
    l.base = static_cast<int>(std::floor(x));
    const Real s = x - l.base;
    l.w[0] = -s * (s - 1) * (s - 2) / 6;
    l.w[1] = (s + 1) * (s - 1) * (s - 2) / 2;
    l.w[2] = -(s + 1) * s * (s - 2) / 2;
    l.w[3] = (s + 1) * s * (s - 1) / 6;
    return l;
}

// log Σ_lattice e^{<p, s>} − v̄(s), and v̄(s), in extended precision.
struct Reference {
    Real support;
    Real gap;
};
Reference reference_at(const LatticePolytope& P, const Real* s) {
    const int m = P.dim();
    const auto& pts = P.lattice_points_int();
    Real vals[64];
    std::vector<Real> big;
    Real* v = vals;
    if (pts.size() > 64) {
        big.resize(pts.size());
        v = big.data();
    }
    Real mx = -std::numeric_limits<Real>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        Real d = 0;
        for (int j = 0; j < m; ++j) d += static_cast<Real>(pts[i][j]) * s[j];
        v[i] = d;
        mx = std::max(mx, d);
    }
    Real rest = -1;
    for (std::size_t i = 0; i < pts.size(); ++i) rest += v[i] == mx ? 1 : std::exp(v[i] - mx);
    return {mx, std::log1p(rest)};
}

// φ = u − v⁰ at a node index. Ring values are cap artefacts, so beyond the
// interior φ is continued linearly from the two outermost interior nodes and
// u keeps the curvature of v⁰ there.
Real phi_at(const PotentialGrid& u, const Index3& idx) {
    const GridLayout& L = u.layout();
    const int m = L.dim(), n = L.n();
    const Real half_h = L.h() / 2;
    auto phi_node = [&](const Index3& i) {
        Real s[kMaxDim];
        for (int j = 0; j < m; ++j) s[j] = half_h * L.z(i[j]);
        return u.offset(L.ravel(i)) - reference_at(L.polytope(), s).gap;
    };
    Index3 e = idx;
    bool inside = true;
    for (int j = 0; j < m; ++j) {
        e[j] = std::clamp(e[j], 1, n - 2);
        inside = inside && e[j] == idx[j];
    }
    const Real base = phi_node(e);
    if (inside) return base;
    Real val = base;
    for (int j = 0; j < m; ++j) {
        if (e[j] == idx[j]) continue;
        Index3 in = e;
        in[j] += idx[j] < e[j] ? 1 : -1;
        val += static_cast<Real>(std::abs(idx[j] - e[j])) * (base - phi_node(in));
    }
    return val;
}

// Σ w · φ over the 4^m Lagrange stencil around s.
Real interp_phi(const PotentialGrid& u, const Real* s) {
    const GridLayout& L = u.layout();
    const int m = L.dim();
    const Real h = L.h();
    Lagrange4 lw[kMaxDim];
    for (int j = 0; j < m; ++j) lw[j] = lagrange_weights((s[j] + static_cast<Real>(L.radius())) / h);
    Real acc = 0;
    int pos[kMaxDim] = {0, 0, 0};
    while (true) {
        Index3 idx{};
        Real w = 1;
        for (int j = 0; j < m; ++j) {
            idx[j] = lw[j].base - 1 + pos[j];
            w *= lw[j].w[pos[j]];
        }
        acc += w * phi_at(u, idx);
        int j = m - 1;
        while (j >= 0 && pos[j] == 3) { pos[j] = 0; --j; }
        if (j < 0) break;
        ++pos[j];
    }
    return acc;
}

}  // namespace

// u = v⁰ + φ with φ smooth and bounded: interpolating φ rather than u keeps
// the exponentially small far-field curvature of u intact.
Real interpolate(const PotentialGrid& u, const Eigen::VectorXd& s) {
    const int m = u.dim();
    Real sl[kMaxDim];
    for (int j = 0; j < m; ++j) sl[j] = s(j);
    const Reference r = reference_at(u.polytope(), sl);
    return interp_phi(u, sl) + r.support + r.gap;
}

PotentialGrid translate(const PotentialGrid& u, const Eigen::VectorXd& p, Real shift) {
    const GridLayout& L = u.layout();
    const int m = L.dim();
    const Real half_h = L.h() / 2;
    std::vector<Real> out(L.size());
    for (std::size_t f = 0; f < L.size(); ++f) {
        const Index3 idx = L.unravel(f);
        Real s[kMaxDim];
        for (int j = 0; j < m; ++j) s[j] = half_h * L.z(idx[j]) + static_cast<Real>(p(j));
        const Reference r = reference_at(L.polytope(), s);
        // u(s) − v̄(t) = φ(s) + gap(s) + (v̄(s) − v̄(t))
        out[f] = interp_phi(u, s) + r.gap + (r.support - L.support_value(f)) - shift;
    }
    return PotentialGrid(u.layout_ptr(), std::move(out));
}

}  // namespace toricflow
