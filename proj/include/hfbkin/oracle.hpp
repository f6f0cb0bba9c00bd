#pragma once

// Brute-force references. Nothing here calls the optimized convolution, RHS,
// kernels or collision engine; only the data types are shared.

#include <cmath>
#include <complex>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "dispersion.hpp"
#include "hfb.hpp"

namespace hfbkin::oracle {

struct OracleReport {
    double max_rel_err = 0;
    double max_abs_err = 0;
    std::size_t worst_index = 0;
    bool pass(double tol) const { return max_rel_err <= tol; }
};

// Relative error is taken against the field-wide scale max(|oracle|, 1e-30).
template <class A, class B>
OracleReport compare(const std::vector<A> &got, const std::vector<B> &want)
{
    if (got.size() != want.size())
        throw std::invalid_argument("oracle compare: size mismatch");
    OracleReport r;
    double scale = 0;
    for (const B &w : want)
        scale = std::max(scale, std::abs(w));
    scale = std::max(scale, 1e-30);
    for (std::size_t i = 0; i < got.size(); ++i) {
        double e = std::abs(cplx(got[i]) - cplx(want[i]));
        if (e > r.max_abs_err) {
            r.max_abs_err = e;
            r.worst_index = i;
        }
    }
    r.max_rel_err = r.max_abs_err / scale;
    return r;
}

inline OracleReport compare_scalar(cplx got, cplx want)
{
    return compare(std::vector<cplx>{got}, std::vector<cplx>{want});
}

namespace detail {

inline std::map<IVec, std::size_t> index_map(const LatticeGrid &g)
{
    std::map<IVec, std::size_t> m;
    for (std::size_t i = 0; i < g.size(); ++i)
        m[g.n(i)] = i;
    return m;
}

inline IVec add(const IVec &a, const IVec &b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline IVec sub(const IVec &a, const IVec &b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline IVec neg(const IVec &a) { return {-a[0], -a[1], -a[2]}; }
inline bool is_zero(const IVec &a) { return a[0] == 0 && a[1] == 0 && a[2] == 0; }

inline double vhat(const Potential &pot, const IVec &n)
{
    const PotentialParams &pp = pot.params();
    switch (pot.kind()) {
    case PotentialKind::zero: return 0.0;
    case PotentialKind::constant: return pp.amplitude;
    case PotentialKind::gaussian: {
        const double k = 2.0 * M_PI / pot.grid()->L();
        double q2 = 0;
        for (int a = 0; a < 3; ++a)
            q2 += (k * n[a]) * (k * n[a]);
        return pp.amplitude * std::exp(-0.5 * q2 / (pp.width * pp.width));
    }
    }
    return 0.0;
}

// literal Kronecker-delta-scaled field: delta(p) = |Lambda| at p = 0
inline double delta(const LatticeGrid &g, const IVec &n) { return is_zero(n) ? g.volume() : 0.0; }

struct Coeffs {
    std::vector<double> u;
    std::vector<cplx> v;
    cplx phi;
};

inline Coeffs coeffs(const HFBState &s)
{
    Coeffs c;
    c.phi = s.phi;
    for (std::size_t i = 0; i < s.gamma.size(); ++i) {
        double g = s.gamma[i] < 0 ? 0.0 : s.gamma[i];
        c.u.push_back(std::sqrt(1 + g));
        c.v.push_back(s.sigma[i] / std::sqrt(1 + g));
    }
    return c;
}

// Kernels written out as symmetrized term tables: each row lists which slots
// carry v (others carry u), which v's are conjugated, and the v-hat pair.
struct KernelCtx {
    const LatticeGrid &g;
    const Potential &pot;
    const Coeffs &c;

    double vp(std::size_t i) const { return vhat(pot, g.n(i)); }
    cplx U(std::size_t i) const { return c.u[i]; }
    cplx Vv(std::size_t i, bool conj) const { return conj ? std::conj(c.v[i]) : c.v[i]; }

    cplx b03(std::size_t a, std::size_t b, std::size_t d) const
    {
        std::size_t p[3] = {a, b, d};
        // rows: (v-slot for the phi term), (u-slot for the phi-bar term), v-hat pair
        const int phi_v[3] = {2, 0, 1};
        const int pair[3][2] = {{0, 1}, {1, 2}, {0, 2}};
        cplx total = 0;
        for (int r = 0; r < 3; ++r) {
            cplx t1 = c.phi, t2 = std::conj(c.phi);
            for (int s = 0; s < 3; ++s) {
                t1 *= (s == phi_v[r]) ? Vv(p[s], false) : U(p[s]);
                t2 *= (s == phi_v[r]) ? U(p[s]) : Vv(p[s], false);
            }
            total += (t1 + t2) * (vp(p[pair[r][0]]) + vp(p[pair[r][1]]));
        }
        return std::sqrt(g.volume()) * total;
    }

    cplx b12(std::size_t a, std::size_t b, std::size_t d) const
    {
        const cplx u1 = U(a), u2 = U(b), u3 = U(d);
        const cplx v1 = Vv(a, false), v2 = Vv(b, false), w3 = Vv(d, true);
        const cplx ph = c.phi, pb = std::conj(c.phi);
        cplx r1 = (ph * u1 * u2 * u3 + pb * v1 * v2 * w3) * (vp(a) + vp(b));
        cplx r2 = (ph * v1 * u2 * w3 + pb * u1 * v2 * u3) * (vp(b) + vp(d));
        cplx r3 = (ph * u1 * v2 * w3 + pb * v1 * u2 * u3) * (vp(a) + vp(d));
        return std::sqrt(g.volume()) * (r1 + r2 + r3);
    }

    double vs(std::size_t a, std::size_t b, int sign) const
    {
        return vhat(pot, sign > 0 ? add(g.n(a), g.n(b)) : sub(g.n(a), g.n(b)));
    }

    cplx b04(std::size_t a, std::size_t b, std::size_t d, std::size_t e) const
    {
        auto w = [&](std::size_t i) { return Vv(i, false); };
        return (U(a) * U(b) * w(d) * w(e) + w(a) * w(b) * U(d) * U(e)) * (vs(a, d, 1) + vs(b, d, 1)) +
               (U(a) * w(b) * U(d) * w(e) + w(a) * U(b) * w(d) * U(e)) * (vs(a, b, 1) + vs(b, d, 1)) +
               (U(a) * w(b) * w(d) * U(e) + w(a) * U(b) * U(d) * w(e)) * (vs(a, b, 1) + vs(a, d, 1));
    }

    cplx b13(std::size_t a, std::size_t b, std::size_t d, std::size_t e) const
    {
        auto w = [&](std::size_t i) { return Vv(i, false); };
        const cplx we = Vv(e, true);
        return (U(a) * U(b) * w(d) * U(e) + w(a) * w(b) * U(d) * we) * (vs(a, d, 1) + vs(b, d, 1)) +
               (U(a) * w(b) * U(d) * U(e) + w(a) * U(b) * w(d) * we) * (vs(a, b, 1) + vs(b, d, 1)) +
               (w(a) * U(b) * U(d) * U(e) + U(a) * w(b) * w(d) * we) * (vs(a, b, 1) + vs(a, d, 1));
    }

    cplx b22(std::size_t a, std::size_t b, std::size_t d, std::size_t e) const
    {
        auto w = [&](std::size_t i) { return Vv(i, false); };
        const cplx wd = Vv(d, true), we = Vv(e, true);
        return (U(a) * U(b) * U(d) * U(e) + w(a) * w(b) * wd * we) * (vs(a, d, -1) + vs(b, d, -1)) +
               (U(a) * w(b) * wd * U(e) + w(a) * U(b) * U(d) * we) * (vs(a, b, 1) + vs(b, d, -1)) +
               (w(a) * U(b) * wd * U(e) + U(a) * w(b) * U(d) * we) * (vs(a, b, 1) + vs(a, d, -1));
    }
};

inline std::vector<double> trapezoid_weights(std::size_t k, double dt)
{
    std::vector<double> w(k + 1, dt);
    if (k == 0) {
        w[0] = 0;
        return w;
    }
    w.front() = w.back() = 0.5 * dt;
    return w;
}

inline void guard(const LatticeGrid &g, int max_M, const char *what)
{
    if (g.dim() != 1 || g.M() > max_M)
        throw std::invalid_argument(std::string(what) + ": size guard requires dim = 1 and M <= " +
                                    std::to_string(max_M));
}

struct Context {
    const HFBHistory &hist;
    const DispersionHistory &disp;
    const std::vector<RealField> &h;
    const LatticeGrid &g;
    std::vector<Coeffs> coeffs;

    Context(const HFBHistory &hi, const DispersionHistory &d, const std::vector<RealField> &hh)
        : hist(hi), disp(d), h(hh), g(*hi.grid())
    {
        for (const HFBState &s : hist.states)
            coeffs.push_back(detail::coeffs(s));
        if (h.size() != 1 && h.size() != hist.size())
            throw std::invalid_argument("oracle: h must have 1 or history-size entries");
    }
    KernelCtx at(std::size_t k) const { return {g, *hist.pot, coeffs[k]}; }
    double hv(std::size_t k, std::size_t i) const { return h.size() == 1 ? h[0][i] : h[k][i]; }
    double th(std::size_t k, std::size_t i) const { return disp.theta[k][i]; }
};

} // namespace detail

inline ComplexField naive_convolve(const ComplexField &f, const ComplexField &g)
{
    require_same_grid(f.grid, g.grid, "naive_convolve");
    const LatticeGrid &G = *f.grid;
    auto idx = detail::index_map(G);
    ComplexField out(f.grid, 0.0);
    for (std::size_t p = 0; p < G.size(); ++p) {
        cplx s = 0;
        for (std::size_t q = 0; q < G.size(); ++q) {
            auto it = idx.find(detail::sub(G.n(p), G.n(q)));
            if (it != idx.end())
                s += f[it->second] * g[q];
        }
        out[p] = s / G.volume();
    }
    return out;
}

inline ComplexField to_complex(const RealField &f)
{
    ComplexField c(f.grid);
    for (std::size_t i = 0; i < f.size(); ++i)
        c[i] = f[i];
    return c;
}

namespace detail {

struct LiteralFields {
    ComplexField Gamma, Sigma, vh, vh_plus;
};

// totals with the delta mass as an explicit field entry
inline LiteralFields literal_fields(const HFBState &s, const HFBConfig &cfg, const Potential &pot)
{
    const LatticeGrid &G = *s.grid();
    LiteralFields L{ComplexField(s.grid()), ComplexField(s.grid()), ComplexField(s.grid()), ComplexField(s.grid())};
    for (std::size_t i = 0; i < G.size(); ++i) {
        double fp = (cfg.order == Order::second && !cfg.f_plus.values.empty()) ? cfg.f_plus[i] : 0.0;
        double d = delta(G, G.n(i));
        L.Gamma[i] = (1 + 2 * fp) * s.gamma[i] + fp + cfg.N * G.volume() * std::norm(s.phi) * d;
        L.Sigma[i] = (1 + 2 * fp) * s.sigma[i] + cfg.N * G.volume() * s.phi * s.phi * d;
        L.vh[i] = vhat(pot, G.n(i));
    }
    return L;
}

inline cplx integral(const ComplexField &f)
{
    cplx s = 0;
    for (std::size_t i = 0; i < f.size(); ++i)
        s += f[i];
    return s / f.grid->volume();
}

// Gamma*(v + v(0)) with the constant part convolved exactly
inline ComplexField hartree(const LiteralFields &L, const Potential &pot)
{
    ComplexField c = naive_convolve(L.Gamma, L.vh);
    const cplx m = integral(L.Gamma);
    const double v0 = vhat(pot, {0, 0, 0});
    for (std::size_t i = 0; i < c.size(); ++i)
        c[i] += v0 * m;
    return c;
}

} // namespace detail

inline double naive_energy(const HFBState &s, const HFBConfig &cfg, const Potential &pot)
{
    const LatticeGrid &G = *s.grid();
    auto L = detail::literal_fields(s, cfg, pot);
    ComplexField hg = detail::hartree(L, pot);
    ComplexField sb(s.grid());
    for (std::size_t i = 0; i < G.size(); ++i)
        sb[i] = std::conj(L.Sigma[i]);
    ComplexField ps = naive_convolve(sb, L.vh);
    cplx e = 0;
    const double k = cfg.lambda / (2 * cfg.N);
    for (std::size_t i = 0; i < G.size(); ++i) {
        e += G.E(i) * L.Gamma[i] + k * hg[i] * L.Gamma[i] + k * ps[i] * L.Sigma[i] -
             cfg.N * G.volume() * G.volume() * cfg.lambda * std::pow(std::abs(s.phi), 4) * L.vh[i] *
                 detail::delta(G, G.n(i));
    }
    return (e / G.volume()).real();
}

inline RealField naive_omega(const HFBState &s, const HFBConfig &cfg, const Potential &pot)
{
    const LatticeGrid &G = *s.grid();
    auto L = detail::literal_fields(s, cfg, pot);
    ComplexField hg = detail::hartree(L, pot);
    ComplexField sb(s.grid());
    for (std::size_t i = 0; i < G.size(); ++i)
        sb[i] = std::conj(L.Sigma[i]);
    ComplexField ps = naive_convolve(sb, L.vh);
    RealField w(s.grid());
    const double k = cfg.lambda / cfg.N;
    for (std::size_t i = 0; i < G.size(); ++i)
        w[i] = G.E(i) + k * hg[i].real() + k * std::real(ps[i] * s.sigma[i]) / (1 + s.gamma[i]);
    return w;
}

namespace detail {

struct Deriv {
    cplx phi;
    std::vector<cplx> g, s;
};

inline Deriv literal_rhs(const HFBState &s, const HFBConfig &cfg, const Potential &pot)
{
    const LatticeGrid &G = *s.grid();
    auto L = literal_fields(s, cfg, pot);
    ComplexField hg = hartree(L, pot);
    ComplexField hs = naive_convolve(L.Sigma, L.vh);
    const double k = cfg.lambda / cfg.N;
    const std::size_t z = G.index_of({0, 0, 0});
    const cplx I(0, 1);
    Deriv d;
    d.phi = -I * (k * hg[z] * s.phi + k * hs[z] * std::conj(s.phi) -
                  2.0 * cfg.lambda * G.volume() * vhat(pot, {0, 0, 0}) * std::norm(s.phi) * s.phi);
    for (std::size_t i = 0; i < G.size(); ++i) {
        cplx hsig = k * hs[i];
        d.g.push_back(2.0 * std::imag(hsig * std::conj(s.sigma[i])));
        d.s.push_back(-I * (2.0 * (G.E(i) + k * hg[i]) * s.sigma[i] + hsig * (1.0 + 2.0 * s.gamma[i])));
    }
    return d;
}

inline HFBState shifted(const HFBState &s, const Deriv &d, double h)
{
    HFBState r = s;
    r.phi += h * d.phi;
    for (std::size_t i = 0; i < s.gamma.size(); ++i) {
        r.gamma[i] += h * d.g[i].real();
        r.sigma[i] += h * d.s[i];
    }
    return r;
}

} // namespace detail

// Classical RK4 on the literal equations at dt/64.
inline HFBState fine_step_reference(const HFBState &state0, double T, const HFBConfig &cfg, const Potential &pot)
{
    const LatticeGrid &G = *state0.grid();
    if (G.size() > 125)
        throw std::invalid_argument("fine_step_reference: size guard requires at most 125 lattice points");
    const double h = cfg.dt / 64.0;
    const double steps_d = std::round(T / h);
    if (steps_d > 2e6)
        throw std::invalid_argument("fine_step_reference: size guard requires T/(dt/64) <= 2e6");
    const long steps = static_cast<long>(steps_d);
    HFBState s = state0;
    for (long n = 0; n < steps; ++n) {
        auto k1 = detail::literal_rhs(s, cfg, pot);
        auto k2 = detail::literal_rhs(detail::shifted(s, k1, h / 2), cfg, pot);
        auto k3 = detail::literal_rhs(detail::shifted(s, k2, h / 2), cfg, pot);
        auto k4 = detail::literal_rhs(detail::shifted(s, k3, h), cfg, pot);
        s.phi += h / 6 * (k1.phi + 2.0 * k2.phi + 2.0 * k3.phi + k4.phi);
        for (std::size_t i = 0; i < G.size(); ++i) {
            s.gamma[i] += h / 6 * (k1.g[i] + 2.0 * k2.g[i] + 2.0 * k3.g[i] + k4.g[i]).real();
            s.sigma[i] += h / 6 * (k1.s[i] + 2.0 * k2.s[i] + 2.0 * k3.s[i] + k4.s[i]);
        }
        s.t = double(n + 1) * h;
    }
    return s;
}

namespace detail {

// Q3(t_k, p) by explicit inner time loop and full triple momentum sum.
inline std::vector<double> q3_rate(const Context &C, std::size_t k, std::size_t p, double lam)
{
    const LatticeGrid &g = C.g;
    const double V = g.volume();
    const double dt = C.hist.sample_dt;
    auto w = trapezoid_weights(k, dt);
    auto outer = C.at(k);
    const std::size_t n = g.size();
    double ch[2] = {0, 0};
    for (std::size_t j = 0; j <= k; ++j) {
        if (w[j] == 0)
            continue;
        auto inner = C.at(j);
        cplx acc1 = 0, acc2 = 0;
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b)
                for (std::size_t d = 0; d < n; ++d) {
                    const IVec &na = g.n(a), &nb = g.n(b), &nd = g.n(d);
                    auto f = [&](std::size_t i) { return C.hv(j, i); };
                    auto ft = [&](std::size_t i) { return C.hv(j, i) + 1.0; };
                    double dp = (a == p) + (b == p);
                    double d1 = delta(g, sub(add(na, nb), nd));
                    if (d1 != 0) {
                        double wgt = dp - (d == p);
                        if (wgt != 0) {
                            double ph = (C.th(k, a) - C.th(j, a)) + (C.th(k, b) - C.th(j, b)) - (C.th(k, d) - C.th(j, d));
                            acc1 += 0.5 * wgt * d1 * V * outer.b12(a, b, d) *
                                    std::conj(inner.b12(a, b, d)) * std::polar(1.0, ph) *
                                    (ft(a) * ft(b) * f(d) - f(a) * f(b) * ft(d));
                        }
                    }
                    double d2 = delta(g, add(add(na, nb), nd));
                    if (d2 != 0) {
                        double wgt = dp + (d == p);
                        if (wgt != 0) {
                            double ph = (C.th(k, a) - C.th(j, a)) + (C.th(k, b) - C.th(j, b)) + (C.th(k, d) - C.th(j, d));
                            acc2 += wgt / 6.0 * d2 * V * outer.b03(a, b, d) *
                                    std::conj(inner.b03(a, b, d)) * std::polar(1.0, ph) *
                                    (ft(a) * ft(b) * ft(d) - f(a) * f(b) * f(d));
                        }
                    }
                }
        // the delta(p_i - p) factor contributes |Lambda| (folded in above), the
        // measure int dp_3 contributes |Lambda|^-3
        ch[0] += w[j] * 2 * lam * lam * std::real(acc1) / (V * V * V);
        ch[1] += w[j] * 2 * lam * lam * std::real(acc2) / (V * V * V);
    }
    return {ch[0], ch[1]};
}

inline cplx q3g_rate(const Context &C, std::size_t k, std::size_t p, double lam)
{
    const LatticeGrid &g = C.g;
    const double V = g.volume();
    auto w = trapezoid_weights(k, C.hist.sample_dt);
    auto outer = C.at(k);
    const std::size_t n = g.size();
    auto idx = index_map(g);
    cplx total = 0;
    for (std::size_t j = 0; j <= k; ++j) {
        if (w[j] == 0)
            continue;
        auto inner = C.at(j);
        auto f = [&](std::size_t i) { return C.hv(j, i); };
        auto ft = [&](std::size_t i) { return C.hv(j, i) + 1.0; };
        cplx acc = 0;
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b)
                for (std::size_t d = 0; d < n; ++d) {
                    const IVec &na = g.n(a), &nb = g.n(b), &nd = g.n(d);
                    const std::size_t dn = idx.at(neg(nd));
                    auto dth = [&](std::size_t i) { return C.th(k, i) - C.th(j, i); };
                    const double c1 = dth(a) + dth(b) - dth(d);
                    const double c2 = dth(a) + dth(b) + dth(d);
                    const double br1 = f(a) * f(b) * ft(d) - ft(a) * ft(b) * f(d);
                    const double dd1 = delta(g, sub(add(na, nb), nd));
                    if (dd1 != 0) {
                        if (d == p)
                            acc += dd1 * V * std::polar(1.0, 2 * C.th(k, d)) * std::polar(1.0, c1) *
                                   outer.b03(a, b, dn) * std::conj(inner.b12(a, b, d)) * br1;
                        if (a == p)
                            acc -= 2.0 * dd1 * V * std::polar(1.0, -2 * C.th(k, a)) * std::polar(1.0, -c1) *
                                   std::conj(outer.b12(a, b, dn)) * inner.b12(a, b, d) * br1;
                    }
                    const double dd2 = delta(g, add(add(na, nb), nd));
                    if (dd2 != 0 && d == p)
                        acc += dd2 * V * std::polar(1.0, 2 * C.th(k, d)) * std::polar(1.0, -c2) *
                               std::conj(outer.b12(a, b, dn)) * inner.b03(a, b, d) *
                               (ft(a) * ft(b) * ft(d) - f(a) * f(b) * f(d));
                }
        total += w[j] * lam * lam * acc / (V * V * V);
    }
    return total;
}

inline cplx q3phi_rate(const Context &C, std::size_t k, double lam)
{
    const LatticeGrid &g = C.g;
    const double V = g.volume();
    auto w = trapezoid_weights(k, C.hist.sample_dt);
    auto outer = C.at(k);
    const std::size_t n = g.size();
    const std::size_t z = index_map(g).at({0, 0, 0});
    cplx total = 0;
    for (std::size_t j = 0; j <= k; ++j) {
        if (w[j] == 0)
            continue;
        auto inner = C.at(j);
        auto f = [&](std::size_t i) { return C.hv(j, i); };
        auto ft = [&](std::size_t i) { return C.hv(j, i) + 1.0; };
        cplx acc = 0;
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b)
                for (std::size_t d = 0; d < n; ++d) {
                    const IVec &na = g.n(a), &nb = g.n(b), &nd = g.n(d);
                    auto dth = [&](std::size_t i) { return C.th(k, i) - C.th(j, i); };
                    const double c1 = dth(a) + dth(b) - dth(d);
                    const double c2 = dth(a) + dth(b) + dth(d);
                    const double dd1 = delta(g, sub(add(na, nb), nd));
                    if (dd1 != 0) {
                        cplx t = std::polar(1.0, c1) * outer.b13(z, a, b, d) * std::conj(inner.b12(a, b, d)) -
                                 std::polar(1.0, -c1) * outer.b22(z, d, b, a) * inner.b12(d, b, a);
                        acc += 0.5 * dd1 * t * (f(a) * f(b) * ft(d) - ft(a) * ft(b) * f(d));
                    }
                    const double dd2 = delta(g, add(add(na, nb), nd));
                    if (dd2 != 0) {
                        cplx t = outer.b04(z, a, b, d) * std::conj(inner.b03(a, b, d)) * std::polar(1.0, c2) -
                                 std::conj(outer.b13(a, b, d, z)) * inner.b03(a, b, d) * std::polar(1.0, -c2);
                        acc += dd2 / 6.0 * t * (f(a) * f(b) * f(d) - ft(a) * ft(b) * ft(d));
                    }
                }
        total += w[j] * lam * lam * std::polar(1.0, C.th(k, z)) * acc / (V * V * V);
    }
    return total;
}

inline double q4_rate(const Context &C, std::size_t k, std::size_t p, double lam)
{
    const LatticeGrid &g = C.g;
    const double V = g.volume();
    auto w = trapezoid_weights(k, C.hist.sample_dt);
    auto outer = C.at(k);
    const std::size_t n = g.size();
    double total = 0;
    for (std::size_t j = 0; j <= k; ++j) {
        if (w[j] == 0)
            continue;
        auto inner = C.at(j);
        auto f = [&](std::size_t i) { return C.hv(j, i); };
        auto ft = [&](std::size_t i) { return C.hv(j, i) + 1.0; };
        auto dth = [&](std::size_t i) { return C.th(k, i) - C.th(j, i); };
        cplx acc = 0;
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b)
                for (std::size_t d = 0; d < n; ++d)
                    for (std::size_t e = 0; e < n; ++e) {
                        const IVec &na = g.n(a), &nb = g.n(b), &nd = g.n(d), &ne = g.n(e);
                        const double s1 = (a == p) + (b == p);
                        double d1 = delta(g, sub(sub(add(na, nb), nd), ne));
                        if (d1 != 0) {
                            double wt = s1 - (d == p) - (e == p);
                            if (wt != 0)
                                acc += 0.25 * wt * V * d1 * outer.b22(a, b, d, e) * std::conj(inner.b22(a, b, d, e)) *
                                       std::polar(1.0, dth(a) + dth(b) - dth(d) - dth(e)) *
                                       (ft(a) * ft(b) * f(d) * f(e) - f(a) * f(b) * ft(d) * ft(e));
                        }
                        double d2 = delta(g, sub(add(add(na, nb), nd), ne));
                        if (d2 != 0) {
                            double wt = s1 + (d == p) - (e == p);
                            if (wt != 0)
                                acc += wt / 6.0 * V * d2 * outer.b13(a, b, d, e) * std::conj(inner.b13(a, b, d, e)) *
                                       std::polar(1.0, dth(a) + dth(b) + dth(d) - dth(e)) *
                                       (ft(a) * ft(b) * ft(d) * f(e) - f(a) * f(b) * f(d) * ft(e));
                        }
                        double d3 = delta(g, add(add(add(na, nb), nd), ne));
                        if (d3 != 0) {
                            double wt = s1 + (d == p) + (e == p);
                            if (wt != 0)
                                acc += wt / 24.0 * V * d3 * outer.b04(a, b, d, e) * std::conj(inner.b04(a, b, d, e)) *
                                       std::polar(1.0, dth(a) + dth(b) + dth(d) + dth(e)) *
                                       (ft(a) * ft(b) * ft(d) * ft(e) - f(a) * f(b) * f(d) * f(e));
                        }
                    }
        total += w[j] * 2 * lam * lam * std::real(acc) / (V * V * V * V);
    }
    return total;
}

} // namespace detail

inline RealField naive_q3(const HFBHistory &hist, const DispersionHistory &disp, const std::vector<RealField> &h,
                          std::size_t K)
{
    detail::guard(*hist.grid(), 4, "naive_q3");
    detail::Context C(hist, disp, h);
    auto W = detail::trapezoid_weights(K, hist.sample_dt);
    RealField out(hist.grid(), 0.0);
    for (std::size_t p = 0; p < C.g.size(); ++p)
        for (std::size_t k = 0; k <= K; ++k)
            if (W[k] != 0) {
                auto r = detail::q3_rate(C, k, p, hist.config.lambda);
                out[p] += W[k] * (r[0] + r[1]);
            }
    return out;
}

inline ComplexField naive_q3g(const HFBHistory &hist, const DispersionHistory &disp,
                              const std::vector<RealField> &h, std::size_t K)
{
    detail::guard(*hist.grid(), 3, "naive_q3g");
    detail::Context C(hist, disp, h);
    auto W = detail::trapezoid_weights(K, hist.sample_dt);
    ComplexField out(hist.grid(), 0.0);
    for (std::size_t p = 0; p < C.g.size(); ++p)
        for (std::size_t k = 0; k <= K; ++k)
            if (W[k] != 0)
                out[p] += W[k] * detail::q3g_rate(C, k, p, hist.config.lambda);
    return out;
}

inline cplx naive_q3phi(const HFBHistory &hist, const DispersionHistory &disp, const std::vector<RealField> &h,
                        std::size_t K)
{
    detail::guard(*hist.grid(), 3, "naive_q3phi");
    detail::Context C(hist, disp, h);
    auto W = detail::trapezoid_weights(K, hist.sample_dt);
    cplx out = 0;
    for (std::size_t k = 0; k <= K; ++k)
        if (W[k] != 0)
            out += W[k] * detail::q3phi_rate(C, k, hist.config.lambda);
    return out;
}

// Composition of the naive instantaneous Q3 and Q3g rates.
inline cplx naive_q33phi(const HFBHistory &hist, const DispersionHistory &disp, const std::vector<RealField> &h,
                         std::size_t K)
{
    detail::guard(*hist.grid(), 3, "naive_q33phi");
    detail::Context C(hist, disp, h);
    const double lam = hist.config.lambda;
    const double V = C.g.volume();
    const std::size_t z = detail::index_map(C.g).at({0, 0, 0});
    auto W = detail::trapezoid_weights(K, hist.sample_dt);
    cplx out = 0;
    for (std::size_t k = 0; k <= K; ++k) {
        if (W[k] == 0)
            continue;
        auto kc = C.at(k);
        cplx s = 0;
        for (std::size_t p = 0; p < C.g.size(); ++p) {
            auto r = detail::q3_rate(C, k, p, lam);
            cplx g = detail::q3g_rate(C, k, p, lam);
            s += kc.b12(z, p, p) * (r[0] + r[1]) + std::conj(kc.b12(p, p, z)) * g + kc.b03(p, p, z) * std::conj(g);
        }
        out += W[k] * lam * std::polar(1.0, C.th(k, z)) * s / V;
    }
    return out;
}

inline RealField naive_q4(const HFBHistory &hist, const DispersionHistory &disp, const std::vector<RealField> &h,
                          std::size_t K)
{
    detail::guard(*hist.grid(), 3, "naive_q4");
    detail::Context C(hist, disp, h);
    auto W = detail::trapezoid_weights(K, hist.sample_dt);
    RealField out(hist.grid(), 0.0);
    for (std::size_t p = 0; p < C.g.size(); ++p)
        for (std::size_t k = 0; k <= K; ++k)
            if (W[k] != 0)
                out[p] += W[k] * detail::q4_rate(C, k, p, hist.config.lambda);
    return out;
}

} // namespace hfbkin::oracle
