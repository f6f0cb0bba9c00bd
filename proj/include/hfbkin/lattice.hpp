#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "parallel.hpp"

namespace hfbkin {

using cplx = std::complex<double>;
using IVec = std::array<int, 3>;
using RVec = std::array<double, 3>;

inline constexpr std::size_t npos = static_cast<std::size_t>(-1);

// Truncated dual lattice (2pi/L) Z^dim with |n_i| <= M, lexicographic in n
// (first axis slowest).
class LatticeGrid {
public:
    LatticeGrid(int dim, double L, int M) : dim_(dim), L_(L), M_(M)
    {
        if (dim < 1 || dim > 3)
            throw std::invalid_argument("lattice: dim must be in {1,2,3}, got " + std::to_string(dim));
        if (!(L > 0) || !std::isfinite(L))
            throw std::invalid_argument("lattice: L must be positive and finite");
        if (M < 0)
            throw std::invalid_argument("lattice: M must be nonnegative");
        side_ = 2 * M + 1;
        std::size_t n = 1;
        for (int a = 0; a < dim; ++a)
            n *= static_cast<std::size_t>(side_);
        spacing_ = 2.0 * std::numbers::pi / L;
        volume_ = std::pow(L, dim);
        n_.resize(n);
        p_.resize(n);
        energy_.resize(n);
        neg_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            IVec v{0, 0, 0};
            std::size_t rest = i;
            for (int a = dim - 1; a >= 0; --a) {
                v[a] = static_cast<int>(rest % side_) - M;
                rest /= side_;
            }
            n_[i] = v;
            double e = 0;
            for (int a = 0; a < 3; ++a) {
                p_[i][a] = spacing_ * v[a];
                e += p_[i][a] * p_[i][a];
            }
            energy_[i] = 0.5 * e;
        }
        for (std::size_t i = 0; i < n; ++i)
            neg_[i] = index_of({-n_[i][0], -n_[i][1], -n_[i][2]});
        zero_ = index_of({0, 0, 0});
    }

    int dim() const { return dim_; }
    double L() const { return L_; }
    int M() const { return M_; }
    int side() const { return side_; }
    std::size_t size() const { return n_.size(); }
    double volume() const { return volume_; }
    double spacing() const { return spacing_; }
    std::size_t zero() const { return zero_; }

    const IVec &n(std::size_t i) const { return n_[i]; }
    const RVec &p(std::size_t i) const { return p_[i]; }
    // free dispersion |p|^2/2
    double E(std::size_t i) const { return energy_[i]; }
    std::size_t neg(std::size_t i) const { return neg_[i]; }

    bool contains(const IVec &v) const
    {
        for (int a = 0; a < 3; ++a) {
            int lim = a < dim_ ? M_ : 0;
            if (v[a] < -lim || v[a] > lim)
                return false;
        }
        return true;
    }

    // npos when v lies outside the truncated box
    std::size_t index_of(const IVec &v) const
    {
        if (!contains(v))
            return npos;
        std::size_t idx = 0;
        for (int a = 0; a < dim_; ++a)
            idx = idx * side_ + static_cast<std::size_t>(v[a] + M_);
        return idx;
    }

    std::size_t sum(std::size_t i, std::size_t j) const
    {
        const IVec &a = n_[i], &b = n_[j];
        return index_of({a[0] + b[0], a[1] + b[1], a[2] + b[2]});
    }
    std::size_t diff(std::size_t i, std::size_t j) const
    {
        const IVec &a = n_[i], &b = n_[j];
        return index_of({a[0] - b[0], a[1] - b[1], a[2] - b[2]});
    }

    bool operator==(const LatticeGrid &o) const { return dim_ == o.dim_ && L_ == o.L_ && M_ == o.M_; }

private:
    int dim_;
    double L_;
    int M_;
    int side_ = 1;
    double spacing_ = 0;
    double volume_ = 0;
    std::size_t zero_ = 0;
    std::vector<IVec> n_;
    std::vector<RVec> p_;
    std::vector<double> energy_;
    std::vector<std::size_t> neg_;
};

using GridPtr = std::shared_ptr<const LatticeGrid>;

inline GridPtr build_lattice(int dim, double L, int M)
{
    return std::make_shared<const LatticeGrid>(dim, L, M);
}

template <class T>
struct LatticeField {
    static_assert(std::is_same_v<T, double> || std::is_same_v<T, cplx>);
    static constexpr bool is_complex = std::is_same_v<T, cplx>;

    GridPtr grid;
    std::vector<T> values;
    bool even = false;

    LatticeField() = default;
    explicit LatticeField(GridPtr g, T fill = T{}) : grid(std::move(g)), values(grid->size(), fill) {}
    LatticeField(GridPtr g, std::vector<T> v) : grid(std::move(g)), values(std::move(v))
    {
        if (values.size() != grid->size())
            throw std::invalid_argument("lattice field: value count does not match grid");
    }

    std::size_t size() const { return values.size(); }
    T &operator[](std::size_t i) { return values[i]; }
    const T &operator[](std::size_t i) const { return values[i]; }

    bool is_even(double tol = 0.0) const
    {
        for (std::size_t i = 0; i < size(); ++i)
            if (std::abs(values[i] - values[grid->neg(i)]) > tol)
                return false;
        return true;
    }
};

using RealField = LatticeField<double>;
using ComplexField = LatticeField<cplx>;

inline void require_same_grid(const GridPtr &a, const GridPtr &b, const char *what)
{
    if (!a || !b || !(*a == *b))
        throw std::invalid_argument(std::string(what) + ": fields live on different grids");
}

template <class T>
LatticeField<T> map_field(const GridPtr &g, auto &&fn)
{
    LatticeField<T> out(g);
    for (std::size_t i = 0; i < g->size(); ++i)
        out[i] = fn(i);
    return out;
}

inline RealField energy_field(const GridPtr &g)
{
    auto f = map_field<double>(g, [&](std::size_t i) { return g->E(i); });
    f.even = true;
    return f;
}

// (1/|Lambda|) sum_p f(p)
template <class T>
T integrate(const LatticeField<T> &f)
{
    T s{};
    for (const T &v : f.values)
        s += v;
    return s / f.grid->volume();
}

// (int w |f|^a)^(1/a); a = inf gives max|f| and ignores the weight
template <class T>
double lp_norm(const LatticeField<T> &f, double a, const RealField *weight = nullptr)
{
    if (!(a >= 1))
        throw std::invalid_argument("lp_norm: exponent must be >= 1");
    if (std::isinf(a)) {
        double m = 0;
        for (const T &v : f.values)
            m = std::max(m, std::abs(v));
        return m;
    }
    if (weight)
        require_same_grid(f.grid, weight->grid, "lp_norm");
    double s = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        double w = weight ? (*weight)[i] : 1.0;
        if (w < 0)
            throw std::invalid_argument("lp_norm: weight must be nonnegative");
        s += w * std::pow(std::abs(f[i]), a);
    }
    return std::pow(s / f.grid->volume(), 1.0 / a);
}

// |Lambda| at p = 0, so that integrate(delta * g) = g(0)
inline RealField delta_field(const GridPtr &g)
{
    RealField d(g, 0.0);
    d[g->zero()] = g->volume();
    d.even = true;
    return d;
}

// (f*g)(p) = (1/|Lambda|) sum_q f(p-q) g(q), zero-padded outside the box.
// Fixed summation order in q per output point.
template <class A, class B>
auto convolve(const LatticeField<A> &f, const LatticeField<B> &g)
{
    using R = std::conditional_t<std::is_same_v<A, cplx> || std::is_same_v<B, cplx>, cplx, double>;
    require_same_grid(f.grid, g.grid, "convolve");
    const LatticeGrid &grid = *f.grid;
    const int M = grid.M(), S = grid.side(), d = grid.dim();
    LatticeField<R> out(f.grid);
    std::array<int, 3> ext{1, 1, 1};
    for (int a = 0; a < d; ++a)
        ext[a] = S;
    const double inv = 1.0 / grid.volume();
    parallel_for(grid.size(), [&](std::size_t ip) {
        const IVec &np = grid.n(ip);
        std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 0};
        for (int a = 0; a < d; ++a) {
            lo[a] = std::max(-M, np[a] - M);
            hi[a] = std::min(M, np[a] + M);
        }
        R acc{};
        for (int q0 = lo[0]; q0 <= hi[0]; ++q0)
            for (int q1 = lo[1]; q1 <= hi[1]; ++q1)
                for (int q2 = lo[2]; q2 <= hi[2]; ++q2) {
                    int qq[3] = {q0, q1, q2};
                    int rr[3] = {np[0] - q0, np[1] - q1, np[2] - q2};
                    std::size_t iq = 0, ir = 0;
                    for (int a = 0; a < d; ++a) {
                        iq = iq * ext[a] + static_cast<std::size_t>(qq[a] + M);
                        ir = ir * ext[a] + static_cast<std::size_t>(rr[a] + M);
                    }
                    acc += R(f[ir]) * R(g[iq]);
                }
        out[ip] = acc * inv;
    });
    out.even = f.even && g.even;
    return out;
}

} // namespace hfbkin
