#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "hfb.hpp"

namespace hfbkin {

struct UVFields {
    RealField u;
    ComplexField v;
    cplx phi;

    const GridPtr &grid() const { return u.grid; }
};

inline UVFields bogoliubov_uv(const HFBState &s, double neg_tol = 1e-12)
{
    const GridPtr &g = s.grid();
    UVFields uv{RealField(g), ComplexField(g), s.phi};
    for (std::size_t i = 0; i < g->size(); ++i) {
        if (s.gamma[i] < -neg_tol)
            throw std::domain_error("bogoliubov_uv: gamma < 0 at lattice point " + std::to_string(i));
        double u = std::sqrt(1.0 + std::max(s.gamma[i], 0.0));
        uv.u[i] = u;
        uv.v[i] = s.sigma[i] / u;
    }
    uv.u.even = s.gamma.even;
    uv.v.even = s.sigma.even;
    return uv;
}

enum class CubicKernel { B03, B12 };
enum class QuarticKernel { B04, B13, B22 };

inline const char *to_string(CubicKernel k) { return k == CubicKernel::B03 ? "B03" : "B12"; }
inline const char *to_string(QuarticKernel k)
{
    return k == QuarticKernel::B04 ? "B04" : k == QuarticKernel::B13 ? "B13" : "B22";
}

namespace detail {

inline void check_index(const LatticeGrid &g, std::size_t i, const char *what)
{
    if (i >= g.size())
        throw std::out_of_range(std::string(what) + ": momentum index " + std::to_string(i) + " is off the grid");
}

inline double vsum(const Potential &pot, const LatticeGrid &g, std::size_t a, std::size_t b, int sign)
{
    const IVec &x = g.n(a), &y = g.n(b);
    return pot.at({x[0] + sign * y[0], x[1] + sign * y[1], x[2] + sign * y[2]});
}

} // namespace detail

inline cplx eval_cubic_kernel(CubicKernel kind, const UVFields &uv, const Potential &pot, std::size_t i1,
                              std::size_t i2, std::size_t i3)
{
    const LatticeGrid &g = *uv.grid();
    detail::check_index(g, i1, "cubic kernel");
    detail::check_index(g, i2, "cubic kernel");
    detail::check_index(g, i3, "cubic kernel");
    const double u1 = uv.u[i1], u2 = uv.u[i2], u3 = uv.u[i3];
    const cplx v1 = uv.v[i1], v2 = uv.v[i2], v3 = uv.v[i3];
    const cplx ph = uv.phi, pb = std::conj(uv.phi);
    const double w12 = pot[i1] + pot[i2], w23 = pot[i2] + pot[i3], w13 = pot[i1] + pot[i3];
    cplx b;
    if (kind == CubicKernel::B03) {
        b = (u1 * u2 * v3 * ph + v1 * v2 * u3 * pb) * w12 + (v1 * u2 * u3 * ph + u1 * v2 * v3 * pb) * w23 +
            (u1 * v2 * u3 * ph + v1 * u2 * v3 * pb) * w13;
    } else {
        const cplx v3b = std::conj(v3);
        b = (u1 * u2 * u3 * ph + v1 * v2 * v3b * pb) * w12 + (v1 * u2 * v3b * ph + u1 * v2 * u3 * pb) * w23 +
            (u1 * v2 * v3b * ph + v1 * u2 * u3 * pb) * w13;
    }
    return std::sqrt(g.volume()) * b;
}

// B22 uses conj(v(p3)) conj(v(p4)) in its first term.
inline cplx eval_quartic_kernel(QuarticKernel kind, const UVFields &uv, const Potential &pot, std::size_t i1,
                                std::size_t i2, std::size_t i3, std::size_t i4)
{
    const LatticeGrid &g = *uv.grid();
    for (std::size_t i : {i1, i2, i3, i4})
        detail::check_index(g, i, "quartic kernel");
    const double u1 = uv.u[i1], u2 = uv.u[i2], u3 = uv.u[i3], u4 = uv.u[i4];
    const cplx v1 = uv.v[i1], v2 = uv.v[i2], v3 = uv.v[i3], v4 = uv.v[i4];
    const double s12 = detail::vsum(pot, g, i1, i2, +1);
    switch (kind) {
    case QuarticKernel::B04: {
        const double s13 = detail::vsum(pot, g, i1, i3, +1), s23 = detail::vsum(pot, g, i2, i3, +1);
        return (u1 * u2 * v3 * v4 + v1 * v2 * u3 * u4) * (s13 + s23) +
               (u1 * v2 * u3 * v4 + v1 * u2 * v3 * u4) * (s12 + s23) +
               (u1 * v2 * v3 * u4 + v1 * u2 * u3 * v4) * (s12 + s13);
    }
    case QuarticKernel::B13: {
        const double s13 = detail::vsum(pot, g, i1, i3, +1), s23 = detail::vsum(pot, g, i2, i3, +1);
        const cplx v4b = std::conj(v4);
        return (u1 * u2 * v3 * u4 + v1 * v2 * u3 * v4b) * (s13 + s23) +
               (u1 * v2 * u3 * u4 + v1 * u2 * v3 * v4b) * (s12 + s23) +
               (v1 * u2 * u3 * u4 + u1 * v2 * v3 * v4b) * (s12 + s13);
    }
    case QuarticKernel::B22: {
        const double d13 = detail::vsum(pot, g, i1, i3, -1), d23 = detail::vsum(pot, g, i2, i3, -1);
        const cplx v3b = std::conj(v3), v4b = std::conj(v4);
        return (u1 * u2 * u3 * u4 + v1 * v2 * v3b * v4b) * (d13 + d23) +
               (u1 * v2 * v3b * u4 + v1 * u2 * u3 * v4b) * (s12 + d23) +
               (v1 * u2 * v3b * u4 + u1 * v2 * u3 * v4b) * (s12 + d13);
    }
    }
    return 0.0;
}

} // namespace hfbkin
