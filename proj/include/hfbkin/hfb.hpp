#pragma once

#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lattice.hpp"
#include "potential.hpp"

namespace hfbkin {

enum class Order { first, second };
enum class Integrator { rk4, lawson_rk4 };

inline Order parse_order(const std::string &s)
{
    if (s == "first")
        return Order::first;
    if (s == "second")
        return Order::second;
    throw std::invalid_argument("physics.order must be first|second, got '" + s + "'");
}
inline const char *to_string(Order o) { return o == Order::first ? "first" : "second"; }

inline Integrator parse_integrator(const std::string &s)
{
    if (s == "rk4")
        return Integrator::rk4;
    if (s == "lawson_rk4")
        return Integrator::lawson_rk4;
    throw std::invalid_argument("time.integrator must be rk4|lawson_rk4, got '" + s + "'");
}
inline const char *to_string(Integrator i) { return i == Integrator::rk4 ? "rk4" : "lawson_rk4"; }

struct HFBConfig {
    double lambda = 0.1;
    double N = 100.0;
    Order order = Order::second;
    RealField f_plus; // frozen; ignored for first order
    double dt = 1e-3;
    Integrator integrator = Integrator::lawson_rk4;
};

struct HFBState {
    double t = 0;
    cplx phi{0, 0};
    RealField gamma;
    ComplexField sigma;

    const GridPtr &grid() const { return gamma.grid; }
};

struct AssembledFields {
    RealField Gamma, GammaT;
    ComplexField Sigma, SigmaT;
};

inline double fplus_at(const HFBConfig &cfg, std::size_t i)
{
    if (cfg.order == Order::first || cfg.f_plus.values.empty())
        return 0.0;
    return cfg.f_plus[i];
}

inline void validate_config(const HFBConfig &cfg, const GridPtr &grid)
{
    if (!(cfg.lambda >= 0) || !std::isfinite(cfg.lambda))
        throw std::invalid_argument("hfb: lambda must be finite and >= 0");
    if (!(cfg.N > 0) || !std::isfinite(cfg.N))
        throw std::invalid_argument("hfb: N must be finite and > 0");
    if (!cfg.f_plus.values.empty()) {
        require_same_grid(cfg.f_plus.grid, grid, "hfb f_plus");
        for (std::size_t i = 0; i < grid->size(); ++i) {
            if (!(cfg.f_plus[i] >= 0))
                throw std::invalid_argument("hfb: f_plus must be >= 0");
            if (cfg.f_plus[i] != cfg.f_plus[grid->neg(i)])
                throw std::invalid_argument("hfb: f_plus must be even");
        }
    }
}

// Condensate weights of the delta mass: Gamma gets c*delta, Sigma gets cs*delta,
// with delta(0) = |Lambda|.
inline double condensate_c(const HFBState &s, const HFBConfig &cfg)
{
    return cfg.N * s.grid()->volume() * std::norm(s.phi);
}
inline cplx condensate_cs(const HFBState &s, const HFBConfig &cfg)
{
    return cfg.N * s.grid()->volume() * s.phi * s.phi;
}

inline AssembledFields assemble_totals(const HFBState &s, const HFBConfig &cfg)
{
    const GridPtr &g = s.grid();
    AssembledFields a;
    a.GammaT = RealField(g);
    a.SigmaT = ComplexField(g);
    for (std::size_t i = 0; i < g->size(); ++i) {
        double fp = fplus_at(cfg, i);
        a.GammaT[i] = (1 + 2 * fp) * s.gamma[i] + fp;
        a.SigmaT[i] = (1 + 2 * fp) * s.sigma[i];
    }
    a.Gamma = a.GammaT;
    a.Sigma = a.SigmaT;
    a.Gamma[g->zero()] += condensate_c(s, cfg) * g->volume();
    a.Sigma[g->zero()] += condensate_cs(s, cfg) * g->volume();
    return a;
}

// h_Gamma = E + (lambda/N) Gamma*(v + v(0)),  h_Sigma = (lambda/N) Sigma*v.
// The delta mass enters analytically.
struct MeanFields {
    RealField h_gamma;
    ComplexField h_sigma;
};

inline MeanFields mean_fields(const HFBState &s, const HFBConfig &cfg, const Potential &pot)
{
    const GridPtr &g = s.grid();
    AssembledFields a = assemble_totals(s, cfg);
    const double c = condensate_c(s, cfg);
    const cplx cs = condensate_cs(s, cfg);
    const double k = cfg.lambda / cfg.N;
    const double v0 = pot.v0();
    RealField cg = convolve(a.GammaT, pot.vhat());
    ComplexField csg = convolve(a.SigmaT, pot.vhat());
    const double mass_t = integrate(a.GammaT);
    MeanFields m{RealField(g), ComplexField(g)};
    for (std::size_t i = 0; i < g->size(); ++i) {
        m.h_gamma[i] = g->E(i) + k * (cg[i] + v0 * mass_t + c * (pot[i] + v0));
        m.h_sigma[i] = k * (csg[i] + cs * pot[i]);
    }
    return m;
}

// flat arithmetic for the integrators
struct Flat {
    cplx phi;
    std::vector<double> g;
    std::vector<cplx> s;
};

inline Flat to_flat(const HFBState &st) { return {st.phi, st.gamma.values, st.sigma.values}; }

inline HFBState from_flat(const Flat &f, const GridPtr &grid, double t)
{
    HFBState s;
    s.t = t;
    s.phi = f.phi;
    s.gamma = RealField(grid, f.g);
    s.sigma = ComplexField(grid, f.s);
    return s;
}

// y + sum_j c_j k_j
inline Flat lincomb(const Flat &y, std::initializer_list<std::pair<double, const Flat *>> terms)
{
    Flat r = y;
    for (auto [c, k] : terms) {
        r.phi += c * k->phi;
        for (std::size_t i = 0; i < r.g.size(); ++i) {
            r.g[i] += c * k->g[i];
            r.s[i] += c * k->s[i];
        }
    }
    return r;
}

// With `linear_part` false the free rotation -2iE sigma is left out (Lawson's N).
inline Flat rhs_flat(const HFBState &s, const HFBConfig &cfg, const Potential &pot, bool linear_part)
{
    const GridPtr &g = s.grid();
    MeanFields m = mean_fields(s, cfg, pot);
    const std::size_t z = g->zero();
    const double V = g->volume();
    const cplx I(0, 1);
    Flat d;
    d.phi = -I * (m.h_gamma[z] * s.phi + m.h_sigma[z] * std::conj(s.phi) -
                  2.0 * cfg.lambda * V * pot.v0() * std::norm(s.phi) * s.phi);
    d.g.resize(g->size());
    d.s.resize(g->size());
    for (std::size_t i = 0; i < g->size(); ++i) {
        const cplx hs = m.h_sigma[i];
        d.g[i] = 2.0 * std::imag(hs * std::conj(s.sigma[i]));
        double hg = linear_part ? m.h_gamma[i] : m.h_gamma[i] - g->E(i);
        d.s[i] = -I * (2.0 * hg * s.sigma[i] + hs * (1.0 + 2.0 * s.gamma[i]));
    }
    return d;
}

inline HFBState hfb_rhs(const HFBState &s, const HFBConfig &cfg, const Potential &pot)
{
    return from_flat(rhs_flat(s, cfg, pot, true), s.grid(), s.t);
}

namespace detail {

inline void check_finite(const HFBState &s, const char *where)
{
    auto fail = [&](const std::string &what, std::size_t i) {
        std::ostringstream os;
        os << where << ": non-finite " << what;
        if (i != npos) {
            const IVec &n = s.grid()->n(i);
            os << " at lattice point " << i << " n=(" << n[0];
            for (int a = 1; a < s.grid()->dim(); ++a)
                os << "," << n[a];
            os << ")";
        }
        os << " t=" << s.t;
        throw std::runtime_error(os.str());
    };
    if (!std::isfinite(s.phi.real()) || !std::isfinite(s.phi.imag()))
        fail("phi", npos);
    for (std::size_t i = 0; i < s.gamma.size(); ++i) {
        if (!std::isfinite(s.gamma[i]))
            fail("gamma", i);
        if (!std::isfinite(s.sigma[i].real()) || !std::isfinite(s.sigma[i].imag()))
            fail("sigma", i);
    }
}

// e^{-2iE h} on sigma only
inline void free_rotate(Flat &y, const LatticeGrid &g, double h)
{
    for (std::size_t i = 0; i < y.s.size(); ++i)
        y.s[i] *= std::polar(1.0, -2.0 * g.E(i) * h);
}

} // namespace detail

inline HFBState step(const HFBState &s, const HFBConfig &cfg, const Potential &pot)
{
    if (!(cfg.dt >= 0))
        throw std::invalid_argument("hfb step: dt must be >= 0");
    if (cfg.dt == 0)
        return s;
    const GridPtr &grid = s.grid();
    const double h = cfg.dt;
    const Flat y = to_flat(s);
    auto F = [&](const Flat &x, double t, bool lin) { return rhs_flat(from_flat(x, grid, t), cfg, pot, lin); };
    Flat out;
    if (cfg.integrator == Integrator::rk4) {
        Flat k1 = F(y, s.t, true);
        Flat k2 = F(lincomb(y, {{h / 2, &k1}}), s.t + h / 2, true);
        Flat k3 = F(lincomb(y, {{h / 2, &k2}}), s.t + h / 2, true);
        Flat k4 = F(lincomb(y, {{h, &k3}}), s.t + h, true);
        out = lincomb(y, {{h / 6, &k1}, {h / 3, &k2}, {h / 3, &k3}, {h / 6, &k4}});
    } else {
        // Lawson RK4 with integrating factor e^{-2iE t} on sigma
        auto rot = [&](Flat x, double tau) {
            detail::free_rotate(x, *grid, tau);
            return x;
        };
        Flat k1 = F(y, s.t, false);
        Flat y2 = rot(lincomb(y, {{h / 2, &k1}}), h / 2);
        Flat k2 = F(y2, s.t + h / 2, false);
        Flat yh = rot(y, h / 2);
        Flat y3 = lincomb(yh, {{h / 2, &k2}});
        Flat k3 = F(y3, s.t + h / 2, false);
        Flat k3r = rot(k3, h / 2);
        Flat yf = rot(y, h);
        Flat y4 = lincomb(yf, {{h, &k3r}});
        Flat k4 = F(y4, s.t + h, false);
        Flat k1r = rot(k1, h);
        Flat k23 = rot(lincomb(k2, {{1.0, &k3}}), h / 2);
        out = lincomb(yf, {{h / 6, &k1r}, {h / 3, &k23}, {h / 6, &k4}});
    }
    HFBState next = from_flat(out, grid, s.t + h);
    detail::check_finite(next, "hfb step");
    return next;
}

struct InitialData {
    HFBState state;
    RealField f0;
};

inline InitialData initial_data(const GridPtr &grid, double beta, double kappa0, double gamma_scale,
                                double phi0 = 1.0)
{
    if (!(kappa0 > 0))
        throw std::invalid_argument("initial.kappa0 must be > 0");
    if (!(beta >= 0))
        throw std::invalid_argument("initial.beta must be >= 0");
    if (!(gamma_scale >= 0))
        throw std::invalid_argument("initial.gamma_scale must be >= 0");
    InitialData d;
    RealField raw(grid);
    for (std::size_t i = 0; i < grid->size(); ++i)
        raw[i] = 1.0 / std::expm1(beta * grid->E(i) + kappa0);
    d.f0 = RealField(grid);
    for (std::size_t i = 0; i < grid->size(); ++i)
        d.f0[i] = 0.5 * (raw[i] + raw[grid->neg(i)]);
    d.f0.even = true;
    d.state.t = 0;
    d.state.phi = cplx(phi0 / std::sqrt(grid->volume()), 0.0);
    d.state.gamma = RealField(grid);
    d.state.sigma = ComplexField(grid);
    for (std::size_t i = 0; i < grid->size(); ++i) {
        double gm = gamma_scale * d.f0[i];
        d.state.gamma[i] = gm;
        d.state.sigma[i] = std::sqrt(gm * (1 + gm));
    }
    d.state.gamma.even = d.state.sigma.even = true;
    return d;
}

// int Gamma = int Gamma^T + N|Lambda||phi|^2
inline double mass(const HFBState &s, const HFBConfig &cfg)
{
    return integrate(assemble_totals(s, cfg).GammaT) + condensate_c(s, cfg);
}

struct EnergyParts {
    double kinetic = 0;     // int E Gamma
    double hartree = 0;     // (lambda/2N) int (Gamma*(v+v0)) Gamma
    double pairing = 0;     // (lambda/2N) int (conj(Sigma)*v) Sigma
    double condensate = 0;  // -N|Lambda|^2 lambda |phi|^4 v0
    double pairing_imag = 0;
    double total() const { return kinetic + hartree + pairing + condensate; }
};

inline EnergyParts energy_parts(const HFBState &s, const HFBConfig &cfg, const Potential &pot)
{
    const GridPtr &g = s.grid();
    AssembledFields a = assemble_totals(s, cfg);
    const double c = condensate_c(s, cfg);
    const cplx cs = condensate_cs(s, cfg);
    const double v0 = pot.v0();
    const double k = cfg.lambda / (2 * cfg.N);
    const std::size_t z = g->zero();

    EnergyParts e;
    RealField eg(g);
    for (std::size_t i = 0; i < g->size(); ++i)
        eg[i] = g->E(i) * a.GammaT[i];
    e.kinetic = integrate(eg);

    RealField cg = convolve(a.GammaT, pot.vhat());
    RealField prod(g), vg(g);
    for (std::size_t i = 0; i < g->size(); ++i) {
        prod[i] = cg[i] * a.GammaT[i];
        vg[i] = pot[i] * a.GammaT[i];
    }
    const double m = integrate(a.GammaT) + c;
    e.hartree = k * (integrate(prod) + c * cg[z] + c * integrate(vg) + c * c * v0 + v0 * m * m);

    ComplexField sbar(g);
    for (std::size_t i = 0; i < g->size(); ++i)
        sbar[i] = std::conj(a.SigmaT[i]);
    ComplexField cs_conv = convolve(sbar, pot.vhat());
    ComplexField sp(g), vs(g);
    for (std::size_t i = 0; i < g->size(); ++i) {
        sp[i] = cs_conv[i] * a.SigmaT[i];
        vs[i] = pot[i] * a.SigmaT[i];
    }
    cplx pair = integrate(sp) + cs * cs_conv[z] + std::conj(cs) * integrate(vs) + std::norm(cs) * v0;
    e.pairing = k * pair.real();
    e.pairing_imag = k * pair.imag();
    e.condensate = -cfg.N * g->volume() * g->volume() * cfg.lambda * std::norm(s.phi) * std::norm(s.phi) * v0;
    return e;
}

inline double energy(const HFBState &s, const HFBConfig &cfg, const Potential &pot)
{
    EnergyParts e = energy_parts(s, cfg, pot);
    double scale = std::abs(e.pairing) + std::abs(e.hartree) + 1e-300;
    if (std::abs(e.pairing_imag) > 1e-10 * scale + 1e-14)
        throw std::runtime_error("hfb energy: pairing term has non-negligible imaginary part " +
                                 std::to_string(e.pairing_imag));
    return e.total();
}

struct ConeReport {
    double min_gamma_t = 0;    // min Gamma^T
    double max_excess = 0;     // max |Sigma^T|^2 - (Gamma^T+1)Gamma^T
    double min_slack = 0;      // min (Gamma^T+1)Gamma^T - |Sigma^T|^2
    std::size_t worst = 0;
    bool ok(double neg_tol = 1e-12, double cone_tol = 1e-10) const
    {
        return min_gamma_t >= -neg_tol && max_excess <= cone_tol;
    }
};

inline ConeReport cone_check(const AssembledFields &a)
{
    ConeReport r;
    r.min_gamma_t = INFINITY;
    r.max_excess = -INFINITY;
    for (std::size_t i = 0; i < a.GammaT.size(); ++i) {
        double g = a.GammaT[i];
        double ex = std::norm(a.SigmaT[i]) - (g + 1) * g;
        r.min_gamma_t = std::min(r.min_gamma_t, g);
        if (ex > r.max_excess) {
            r.max_excess = ex;
            r.worst = i;
        }
    }
    r.min_slack = -r.max_excess;
    return r;
}

inline double relation_error(const HFBState &s)
{
    double m = 0;
    for (std::size_t i = 0; i < s.gamma.size(); ++i)
        m = std::max(m, std::abs(std::norm(s.sigma[i]) - s.gamma[i] * (1 + s.gamma[i])));
    return m;
}

// Stored states at t_k = k * stride * dt.
struct HFBHistory {
    HFBConfig config;
    std::shared_ptr<const Potential> pot;
    std::size_t stride = 1;
    double sample_dt = 0;
    std::vector<HFBState> states;

    const GridPtr &grid() const { return states.front().grid(); }
    std::size_t size() const { return states.size(); }
};

using StepObserver = std::function<void(const HFBState &, std::size_t)>;
using StepHook = std::function<void(HFBState &, std::size_t)>;

inline std::size_t step_count(double T, double dt)
{
    if (!(T >= 0))
        throw std::invalid_argument("time.T must be >= 0");
    if (T == 0)
        return 0;
    if (!(dt > 0))
        throw std::invalid_argument("time.dt must be > 0");
    double k = T / dt;
    double r = std::round(k);
    if (std::abs(k - r) > 1e-9 * std::max(1.0, k))
        throw std::invalid_argument("time.T must be an integer multiple of time.dt");
    return static_cast<std::size_t>(r);
}

// The hook runs before the observer and may alter the state (test injection).
inline HFBHistory evolve(const HFBState &state0, double T, const HFBConfig &cfg, const Potential &pot,
                         const StepObserver &observer = {}, std::size_t stride = 1,
                         const StepHook &hook = {})
{
    validate_config(cfg, state0.grid());
    require_same_grid(state0.grid(), pot.grid(), "evolve");
    if (stride == 0)
        throw std::invalid_argument("time.sample_stride must be >= 1");
    const std::size_t K = step_count(T, cfg.dt);
    if (K % stride != 0)
        throw std::invalid_argument("time.sample_stride must divide the step count T/dt = " + std::to_string(K));
    HFBHistory h;
    h.config = cfg;
    h.pot = std::make_shared<const Potential>(pot);
    h.stride = stride;
    h.sample_dt = cfg.dt * double(stride);
    h.states.reserve(K / stride + 1);
    HFBState s = state0;
    for (std::size_t k = 0;; ++k) {
        if (hook)
            hook(s, k);
        for (std::size_t i = 0; i < s.gamma.size(); ++i)
            if (s.gamma[i] < -1e-12)
                throw std::runtime_error("evolve: gamma < -1e-12 at lattice point " + std::to_string(i) +
                                         " step " + std::to_string(k));
        if (observer)
            observer(s, k);
        if (k % stride == 0)
            h.states.push_back(s);
        if (k == K)
            break;
        try {
            s = step(s, cfg, pot);
        } catch (const std::runtime_error &e) {
            throw std::runtime_error(std::string(e.what()) + " (step " + std::to_string(k + 1) + ")");
        }
        // keep the time label on the exact grid
        s.t = double(k + 1) * cfg.dt;
    }
    return h;
}

inline std::vector<double> mass_transfer_check(const HFBHistory &h)
{
    if (h.states.empty())
        throw std::invalid_argument("mass_transfer_check: empty history");
    const HFBConfig &cfg = h.config;
    const double NV = cfg.N * h.grid()->volume();
    const double p0 = std::norm(h.states.front().phi);
    const double m0 = lp_norm(assemble_totals(h.states.front(), cfg).GammaT, 1.0);
    std::vector<double> r;
    r.reserve(h.size());
    for (const HFBState &s : h.states) {
        double mt = lp_norm(assemble_totals(s, cfg).GammaT, 1.0);
        r.push_back(std::norm(s.phi) - p0 - (m0 - mt) / NV);
    }
    return r;
}

enum GronwallBound : int {
    gb_gamma_pointwise = 0, // Gamma^T_t <= e^{a2 t}(Gamma^T_0 + 1)
    gb_gamma_l1,            // |Gamma^T_t|_1 <= e^{a1 t}(|Gamma^T_0|_1 + 1)
    gb_kinetic,             // int E Gamma_t <= E_HFB(0)
    gb_u_inf,               // |u_t|_inf^2 <= 1 + e^{a2 t}(|Gamma^T_0|_inf + 1)
    gb_v_l2,                // |v_t|_2^2 <= e^{a1 t} |Gamma^T_0|_1
    gb_v_l2E,               // |v_t|_{L^2_E}^2 <= E_HFB(0)
    gb_count
};

inline const char *gronwall_name(int b)
{
    static const char *names[] = {"gamma_pointwise", "gamma_l1", "kinetic", "u_inf", "v_l2", "v_l2E"};
    return names[b];
}

struct GronwallSample {
    double t = 0;
    double slack[gb_count] = {};
    bool ok() const
    {
        for (double s : slack)
            if (!(s >= 0))
                return false;
        return true;
    }
};

inline std::vector<GronwallSample> gronwall_monitors(const HFBHistory &h)
{
    const HFBConfig &cfg = h.config;
    const Potential &pot = *h.pot;
    const GridPtr &g = h.grid();
    const HFBState &s0 = h.states.front();
    const RealField G0 = assemble_totals(s0, cfg).GammaT;
    const double l1_0 = lp_norm(G0, 1.0);
    const double inf_0 = lp_norm(G0, INFINITY);
    const double e0 = energy(s0, cfg, pot);
    const double vv = pot.weighted_norm();
    const double a2 = 2 * cfg.lambda * vv * (l1_0 / cfg.N + 2);
    const double a1 = 2 * cfg.lambda * vv * (l1_0 / cfg.N + 1);
    std::vector<GronwallSample> out;
    out.reserve(h.size());
    for (const HFBState &s : h.states) {
        GronwallSample m;
        m.t = s.t;
        AssembledFields a = assemble_totals(s, cfg);
        double e2 = std::exp(a2 * s.t), e1 = std::exp(a1 * s.t);
        double pw = INFINITY;
        for (std::size_t i = 0; i < g->size(); ++i)
            pw = std::min(pw, e2 * (G0[i] + 1) - a.GammaT[i]);
        m.slack[gb_gamma_pointwise] = pw;
        m.slack[gb_gamma_l1] = e1 * (l1_0 + 1) - lp_norm(a.GammaT, 1.0);
        RealField eg(g), egam(g);
        for (std::size_t i = 0; i < g->size(); ++i) {
            eg[i] = g->E(i) * a.Gamma[i];
            egam[i] = g->E(i) * s.gamma[i];
        }
        m.slack[gb_kinetic] = e0 - integrate(eg);
        m.slack[gb_u_inf] = e2 * (inf_0 + 1) - lp_norm(s.gamma, INFINITY);
        m.slack[gb_v_l2] = e1 * l1_0 - lp_norm(s.gamma, 1.0);
        m.slack[gb_v_l2E] = e0 - integrate(egam);
        out.push_back(m);
    }
    return out;
}

} // namespace hfbkin
