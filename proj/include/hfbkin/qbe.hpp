#pragma once

#include <array>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dispersion.hpp"
#include "kernels.hpp"
#include "parallel.hpp"

namespace hfbkin {

enum class QbeMode { frozen, selfconsistent };

inline QbeMode parse_qbe_mode(const std::string &s)
{
    if (s == "frozen")
        return QbeMode::frozen;
    if (s == "selfconsistent" || s == "self-consistent")
        return QbeMode::selfconsistent;
    throw std::invalid_argument("qbe.mode must be frozen|selfconsistent, got '" + s + "'");
}
inline const char *to_string(QbeMode m) { return m == QbeMode::frozen ? "frozen" : "selfconsistent"; }

struct QbeOptions {
    QbeMode mode = QbeMode::frozen;
    bool enable_q4 = false;
    double N = 100.0;              // only read in self-consistent mode
    double cubic_budget = 2e10;    // pair-steps
    double quartic_budget = 2e9;   // triple-steps
};

struct CollisionIntegrals {
    double t = 0;
    RealField q3;
    ComplexField q3g;
    cplx q3phi{0, 0};
    cplx q33phi{0, 0};
    RealField q4; // empty unless enabled
};

// rate[k] holds the integrands Q(t_k), integral[k] their trapezoid integral over [0, t_k].
struct CollisionHistory {
    std::vector<CollisionIntegrals> rate;
    std::vector<CollisionIntegrals> integral;
    std::vector<std::array<RealField, 2>> q3_channel_rate;
    std::vector<std::array<RealField, 3>> q4_channel_rate;
    std::vector<RealField> h;
};

namespace detail {

struct Pair {
    std::size_t i1, i2, i3, j3; // i3 = p1+p2, j3 = -(p1+p2)
};

struct Quad {
    std::size_t i1, i2, i3, i4;
};

inline std::vector<Pair> cubic_pairs(const LatticeGrid &g)
{
    std::vector<Pair> out;
    for (std::size_t a = 0; a < g.size(); ++a)
        for (std::size_t b = 0; b < g.size(); ++b) {
            std::size_t s = g.sum(a, b);
            if (s != npos)
                out.push_back({a, b, s, g.neg(s)});
        }
    return out;
}

// channel 0: p4 = p1+p2-p3, channel 1: p4 = p1+p2+p3, channel 2: p4 = -(p1+p2+p3)
inline std::vector<Quad> quartic_quads(const LatticeGrid &g, int channel)
{
    std::vector<Quad> out;
    for (std::size_t a = 0; a < g.size(); ++a)
        for (std::size_t b = 0; b < g.size(); ++b)
            for (std::size_t c = 0; c < g.size(); ++c) {
                const IVec &x = g.n(a), &y = g.n(b), &z = g.n(c);
                int sgn = channel == 0 ? -1 : 1;
                IVec w{x[0] + y[0] + sgn * z[0], x[1] + y[1] + sgn * z[1], x[2] + y[2] + sgn * z[2]};
                if (channel == 2)
                    w = {-w[0], -w[1], -w[2]};
                std::size_t d = g.index_of(w);
                if (d != npos)
                    out.push_back({a, b, c, d});
            }
    return out;
}

struct Running {
    cplx sum{0, 0}, first{0, 0};

    // adds a_k and returns the trapezoid integral over [t_0, t_k]
    cplx push(cplx a, std::size_t k, double dt)
    {
        if (k == 0)
            first = a;
        sum += a;
        return dt * (sum - 0.5 * (first + a));
    }
};

} // namespace detail

class CollisionEngine {
public:
    // h_series: empty means f0 (frozen) or the self-consistent update; size 1 is a
    // constant h; otherwise one field per history sample.
    CollisionEngine(const HFBHistory &hist, const DispersionHistory &disp, RealField f0, QbeOptions opt,
                    std::vector<RealField> h_series = {})
        : hist_(hist), disp_(disp), f0_(std::move(f0)), opt_(opt), h_series_(std::move(h_series))
    {
        if (hist.states.empty())
            throw std::invalid_argument("qbe: empty history");
        if (disp.theta.size() != hist.size())
            throw std::invalid_argument("qbe: dispersion history is not aligned with the HFB history");
        const GridPtr &g = hist.grid();
        require_same_grid(g, f0_.grid, "qbe f0");
        if (!h_series_.empty() && h_series_.size() != 1 && h_series_.size() != hist.size())
            throw std::invalid_argument("qbe: h series must have 1 or history-size entries");
        for (const RealField &h : h_series_)
            require_same_grid(g, h.grid, "qbe h");
        pairs_ = detail::cubic_pairs(*g);
        double cubic_ops = double(pairs_.size()) * double(hist.size());
        if (cubic_ops > opt_.cubic_budget) {
            std::ostringstream os;
            os << "qbe: cubic accumulation needs ~" << cubic_ops << " pair-steps, budget is " << opt_.cubic_budget;
            throw std::runtime_error(os.str());
        }
        if (opt_.enable_q4) {
            double n = double(g->size());
            double est = 3.0 * n * n * n * double(hist.size());
            if (est > opt_.quartic_budget) {
                std::ostringstream os;
                os << "qbe: quartic accumulation needs ~" << est << " triple-steps (3 channels x " << n << "^3 x "
                   << hist.size() << " samples), budget is " << opt_.quartic_budget << "; refusing";
                throw std::runtime_error(os.str());
            }
            for (int c = 0; c < 3; ++c)
                quads_[c] = detail::quartic_quads(*g, c);
        }
    }

    CollisionHistory run(std::size_t last = npos)
    {
        const GridPtr &g = hist_.grid();
        const LatticeGrid &G = *g;
        const std::size_t K = std::min(last == npos ? hist_.size() - 1 : last, hist_.size() - 1);
        const double dt = hist_.sample_dt;
        const double lam2 = hist_.config.lambda * hist_.config.lambda;
        const double V = G.volume();
        const std::size_t z = G.zero();
        const Potential &pot = *hist_.pot;

        std::vector<detail::Running> r1(pairs_.size()), r2(pairs_.size()), rj(pairs_.size());
        std::array<std::vector<detail::Running>, 3> rq;
        for (int c = 0; c < 3; ++c)
            rq[c].resize(quads_[c].size());

        // per-pair scratch written by workers, reduced sequentially
        std::vector<double> x1(pairs_.size()), x2(pairs_.size());
        std::vector<cplx> gs(pairs_.size()), gf(pairs_.size()), gn(pairs_.size()), gphi(pairs_.size());
        std::array<std::vector<double>, 3> xq;
        for (int c = 0; c < 3; ++c)
            xq[c].resize(quads_[c].size());

        CollisionHistory out;
        out.rate.reserve(K + 1);
        out.integral.reserve(K + 1);
        for (std::size_t k = 0; k <= K; ++k) {
            const HFBState &st = hist_.states[k];
            const RealField &th = disp_.theta[k];
            const RealField h = h_at(k, out);
            const UVFields uv = bogoliubov_uv(st);
            auto ht = [&](std::size_t i) { return h[i] + 1.0; };

            parallel_for(pairs_.size(), [&](std::size_t m) {
                const auto [i1, i2, i3, j3] = pairs_[m];
                const cplx e1 = std::polar(1.0, th[i1] + th[i2] - th[i3]);
                const cplx e2 = std::polar(1.0, th[i1] + th[i2] + th[j3]);
                const cplx A1 = eval_cubic_kernel(CubicKernel::B12, uv, pot, i1, i2, i3) * e1;
                const cplx A2 = eval_cubic_kernel(CubicKernel::B03, uv, pot, i1, i2, j3) * e2;
                const cplx R1 = eval_cubic_kernel(CubicKernel::B12, uv, pot, i3, i2, i1) * e1;
                const double b1 = ht(i1) * ht(i2) * h[i3] - h[i1] * h[i2] * ht(i3);
                const double b2 = ht(i1) * ht(i2) * ht(j3) - h[i1] * h[i2] * h[j3];
                const cplx I1 = r1[m].push(std::conj(A1) * b1, k, dt);
                const cplx I2 = r2[m].push(std::conj(A2) * b2, k, dt);
                const cplx J1 = rj[m].push(R1 * b1, k, dt);
                x1[m] = 0.5 * std::real(A1 * I1);
                x2[m] = std::real(A2 * I2) / 6.0;

                const cplx G1 = eval_cubic_kernel(CubicKernel::B03, uv, pot, i1, i2, j3) * e1;
                const cplx H1 = eval_cubic_kernel(CubicKernel::B12, uv, pot, i1, i2, j3) * e1;
                const cplx H2 = eval_cubic_kernel(CubicKernel::B12, uv, pot, i1, i2, i3) * e2;
                gs[m] = -std::polar(1.0, 2.0 * th[i3]) * G1 * I1;
                gf[m] = 2.0 * std::polar(1.0, -2.0 * th[i1]) * std::conj(H1 * I1);
                gn[m] = std::polar(1.0, 2.0 * th[j3]) * std::conj(H2 * I2);

                const cplx K1 = eval_quartic_kernel(QuarticKernel::B13, uv, pot, z, i1, i2, i3) * e1;
                const cplx L1 = eval_quartic_kernel(QuarticKernel::B22, uv, pot, z, i3, i2, i1) * std::conj(e1);
                const cplx K2 = eval_quartic_kernel(QuarticKernel::B04, uv, pot, z, i1, i2, j3) * e2;
                const cplx L2 = eval_quartic_kernel(QuarticKernel::B13, uv, pot, i1, i2, j3, z) * e2;
                gphi[m] = -0.5 * K1 * I1 + 0.5 * L1 * J1 - K2 * I2 / 6.0 + std::conj(L2 * I2) / 6.0;
            });

            CollisionIntegrals rate;
            rate.t = st.t;
            std::array<RealField, 2> ch{RealField(g, 0.0), RealField(g, 0.0)};
            rate.q3g = ComplexField(g, 0.0);
            cplx phi_sum = 0;
            for (std::size_t m = 0; m < pairs_.size(); ++m) {
                const auto &P = pairs_[m];
                ch[0][P.i1] += x1[m];
                ch[0][P.i2] += x1[m];
                ch[0][P.i3] -= x1[m];
                ch[1][P.i1] += x2[m];
                ch[1][P.i2] += x2[m];
                ch[1][P.j3] += x2[m];
                rate.q3g[P.i3] += gs[m];
                rate.q3g[P.i1] += gf[m];
                rate.q3g[P.j3] += gn[m];
                phi_sum += gphi[m];
            }
            const double pre3 = 2.0 * lam2 / V;
            rate.q3 = RealField(g, 0.0);
            for (std::size_t i = 0; i < G.size(); ++i) {
                ch[0][i] *= pre3;
                ch[1][i] *= pre3;
                rate.q3[i] = ch[0][i] + ch[1][i];
                rate.q3g[i] *= lam2 / V;
            }
            rate.q3phi = lam2 * std::polar(1.0, th[z]) * phi_sum / (V * V);

            cplx q33 = 0;
            for (std::size_t i = 0; i < G.size(); ++i) {
                q33 += eval_cubic_kernel(CubicKernel::B12, uv, pot, z, i, i) * rate.q3[i] +
                       std::conj(eval_cubic_kernel(CubicKernel::B12, uv, pot, i, i, z)) * rate.q3g[i] +
                       eval_cubic_kernel(CubicKernel::B03, uv, pot, i, i, z) * std::conj(rate.q3g[i]);
            }
            rate.q33phi = hist_.config.lambda * std::polar(1.0, th[z]) * q33 / V;

            std::array<RealField, 3> qch;
            if (opt_.enable_q4) {
                static constexpr QuarticKernel kinds[3] = {QuarticKernel::B22, QuarticKernel::B13, QuarticKernel::B04};
                static constexpr double weight[3] = {0.25, 1.0 / 6.0, 1.0 / 24.0};
                for (int c = 0; c < 3; ++c) {
                    const auto &Q = quads_[c];
                    parallel_for(Q.size(), [&](std::size_t m) {
                        const auto [a, b, d, e] = Q[m];
                        double ph;
                        double br;
                        if (c == 0) {
                            ph = th[a] + th[b] - th[d] - th[e];
                            br = ht(a) * ht(b) * h[d] * h[e] - h[a] * h[b] * ht(d) * ht(e);
                        } else if (c == 1) {
                            ph = th[a] + th[b] + th[d] - th[e];
                            br = ht(a) * ht(b) * ht(d) * h[e] - h[a] * h[b] * h[d] * ht(e);
                        } else {
                            ph = th[a] + th[b] + th[d] + th[e];
                            br = ht(a) * ht(b) * ht(d) * ht(e) - h[a] * h[b] * h[d] * h[e];
                        }
                        const cplx A = eval_quartic_kernel(kinds[c], uv, pot, a, b, d, e) * std::polar(1.0, ph);
                        const cplx I = rq[c][m].push(std::conj(A) * br, k, dt);
                        xq[c][m] = weight[c] * std::real(A * I);
                    });
                    qch[c] = RealField(g, 0.0);
                    for (std::size_t m = 0; m < Q.size(); ++m) {
                        const double x = xq[c][m];
                        qch[c][Q[m].i1] += x;
                        qch[c][Q[m].i2] += x;
                        if (c == 0) {
                            qch[c][Q[m].i3] -= x;
                            qch[c][Q[m].i4] -= x;
                        } else if (c == 1) {
                            qch[c][Q[m].i3] += x;
                            qch[c][Q[m].i4] -= x;
                        } else {
                            qch[c][Q[m].i3] += x;
                            qch[c][Q[m].i4] += x;
                        }
                    }
                }
                const double pre4 = 2.0 * lam2 / (V * V);
                rate.q4 = RealField(g, 0.0);
                for (int c = 0; c < 3; ++c)
                    for (std::size_t i = 0; i < G.size(); ++i) {
                        qch[c][i] *= pre4;
                        rate.q4[i] += qch[c][i];
                    }
            }

            CollisionIntegrals acc;
            if (k == 0) {
                acc.t = rate.t;
                acc.q3 = RealField(g, 0.0);
                acc.q3g = ComplexField(g, 0.0);
                if (opt_.enable_q4)
                    acc.q4 = RealField(g, 0.0);
            } else {
                const CollisionIntegrals &prev = out.integral.back();
                const CollisionIntegrals &rp = out.rate.back();
                acc.t = rate.t;
                acc.q3 = prev.q3;
                acc.q3g = prev.q3g;
                for (std::size_t i = 0; i < G.size(); ++i) {
                    acc.q3[i] += 0.5 * dt * (rp.q3[i] + rate.q3[i]);
                    acc.q3g[i] += 0.5 * dt * (rp.q3g[i] + rate.q3g[i]);
                }
                acc.q3phi = prev.q3phi + 0.5 * dt * (rp.q3phi + rate.q3phi);
                acc.q33phi = prev.q33phi + 0.5 * dt * (rp.q33phi + rate.q33phi);
                if (opt_.enable_q4) {
                    acc.q4 = prev.q4;
                    for (std::size_t i = 0; i < G.size(); ++i)
                        acc.q4[i] += 0.5 * dt * (rp.q4[i] + rate.q4[i]);
                }
            }
            out.h.push_back(h);
            out.q3_channel_rate.push_back(std::move(ch));
            if (opt_.enable_q4)
                out.q4_channel_rate.push_back(std::move(qch));
            out.rate.push_back(std::move(rate));
            out.integral.push_back(std::move(acc));
        }
        return out;
    }

private:
    // Self-consistent h_k = f0 + F_k / N, with F_k = int_0^{t_k} Q3 predicted from the
    // previous sample (F_{k-1} + dt Q3(t_{k-1})) because Q3(t_k) itself needs h_k.
    RealField h_at(std::size_t k, const CollisionHistory &done) const
    {
        if (!h_series_.empty())
            return h_series_.size() == 1 ? h_series_.front() : h_series_[k];
        if (opt_.mode == QbeMode::frozen || k == 0)
            return f0_;
        RealField h = f0_;
        const RealField &F = done.integral.back().q3;
        const RealField &Q = done.rate.back().q3;
        for (std::size_t i = 0; i < h.size(); ++i)
            h[i] += (F[i] + hist_.sample_dt * Q[i]) / opt_.N;
        return h;
    }

    const HFBHistory &hist_;
    const DispersionHistory &disp_;
    RealField f0_;
    QbeOptions opt_;
    std::vector<RealField> h_series_;
    std::vector<detail::Pair> pairs_;
    std::array<std::vector<detail::Quad>, 3> quads_;
};

inline CollisionHistory accumulate_collisions(const HFBHistory &hist, const DispersionHistory &disp,
                                              const RealField &f0, const QbeOptions &opt,
                                              std::vector<RealField> h_series = {})
{
    return CollisionEngine(hist, disp, f0, opt, std::move(h_series)).run();
}

// Single-quantity accessors; h holds one field (frozen) or one per history sample.
inline RealField q3_accumulate(const HFBHistory &hist, const DispersionHistory &disp,
                               const std::vector<RealField> &h, std::size_t k)
{
    QbeOptions o;
    return CollisionEngine(hist, disp, h.front(), o, h).run(k).integral.at(k).q3;
}

inline ComplexField q3g_accumulate(const HFBHistory &hist, const DispersionHistory &disp,
                                   const std::vector<RealField> &h, std::size_t k)
{
    QbeOptions o;
    return CollisionEngine(hist, disp, h.front(), o, h).run(k).integral.at(k).q3g;
}

inline cplx q3phi_accumulate(const HFBHistory &hist, const DispersionHistory &disp,
                             const std::vector<RealField> &h, std::size_t k)
{
    QbeOptions o;
    return CollisionEngine(hist, disp, h.front(), o, h).run(k).integral.at(k).q3phi;
}

// Uses the stored per-sample Q3 / Q3g integrands.
inline cplx q33phi_accumulate(const HFBHistory &hist, const DispersionHistory &disp,
                              const CollisionHistory &ch, std::size_t k)
{
    if (ch.rate.size() <= k)
        throw std::invalid_argument("q33phi_accumulate: missing per-step integrands");
    const LatticeGrid &G = *hist.grid();
    const Potential &pot = *hist.pot;
    const std::size_t z = G.zero();
    cplx acc = 0, prev = 0;
    for (std::size_t j = 0; j <= k; ++j) {
        const UVFields uv = bogoliubov_uv(hist.states[j]);
        const CollisionIntegrals &r = ch.rate[j];
        if (r.q3.values.empty() || r.q3g.values.empty())
            throw std::invalid_argument("q33phi_accumulate: missing per-step integrands");
        cplx s = 0;
        for (std::size_t i = 0; i < G.size(); ++i)
            s += eval_cubic_kernel(CubicKernel::B12, uv, pot, z, i, i) * r.q3[i] +
                 std::conj(eval_cubic_kernel(CubicKernel::B12, uv, pot, i, i, z)) * r.q3g[i] +
                 eval_cubic_kernel(CubicKernel::B03, uv, pot, i, i, z) * std::conj(r.q3g[i]);
        cplx cur = hist.config.lambda * std::polar(1.0, disp.theta[j][z]) * s / G.volume();
        if (j > 0)
            acc += 0.5 * hist.sample_dt * (prev + cur);
        prev = cur;
    }
    return acc;
}

inline RealField q4_accumulate(const HFBHistory &hist, const DispersionHistory &disp,
                               const std::vector<RealField> &h, std::size_t k, double budget = 2e9)
{
    QbeOptions o;
    o.enable_q4 = true;
    o.quartic_budget = budget;
    return CollisionEngine(hist, disp, h.front(), o, h).run(k).integral.at(k).q4;
}

struct MomentSet {
    cplx Phi{0, 0};
    RealField f;
    ComplexField g;
};

inline MomentSet corrected_moments(const CollisionIntegrals &ci, const RealField &f0, double N)
{
    MomentSet m;
    m.Phi = std::pow(N, -1.5) * (ci.q3phi + ci.q33phi);
    m.f = f0;
    m.g = ComplexField(f0.grid, 0.0);
    for (std::size_t i = 0; i < f0.size(); ++i) {
        m.f[i] += ci.q3[i] / N;
        m.g[i] = ci.q3g[i] / N;
    }
    return m;
}

struct Totals {
    RealField f_tot;
    ComplexField g_tot;
    cplx Phi_tot{0, 0};
};

inline Totals reconstruct_totals(const HFBState &s, const MomentSet &m, const RealField &theta, double N)
{
    const GridPtr &g = s.grid();
    const LatticeGrid &G = *g;
    const std::size_t z = G.zero();
    const UVFields uv = bogoliubov_uv(s);
    const double V = G.volume();
    const double sq = std::sqrt(N * V);
    const cplx e0 = std::polar(1.0, theta[z]);
    const double u0 = uv.u[z];
    const cplx v0 = uv.v[z];
    Totals t;
    t.f_tot = RealField(g);
    t.g_tot = ComplexField(g);
    for (std::size_t i = 0; i < G.size(); ++i) {
        const double gm = s.gamma[i];
        const cplx sg = s.sigma[i];
        const cplx e2 = std::polar(1.0, 2.0 * theta[i]);
        const double fm = m.f[G.neg(i)];
        t.f_tot[i] = gm + (1 + gm) * m.f[i] + gm * fm + 2.0 * std::real(e2 * sg * std::conj(m.g[i]));
        t.g_tot[i] = sg + sg * (m.f[i] + fm) + (1 + gm) * e2 * m.g[i] + sg * sg * std::conj(e2) * std::conj(m.g[i]) / (1 + gm);
    }
    const double fd = N * V * std::norm(s.phi) +
                      2.0 * std::real(sq * e0 * (s.phi * u0 + std::conj(s.phi) * v0) * std::conj(m.Phi));
    const cplx gd = N * V * s.phi * s.phi + 2.0 * sq * s.phi * (u0 * std::conj(e0) * m.Phi + v0 * e0 * std::conj(m.Phi));
    t.f_tot[z] += V * fd;
    t.g_tot[z] += V * gd;
    t.Phi_tot = sq * s.phi + u0 * std::conj(e0) * m.Phi + v0 * e0 * std::conj(m.Phi);
    return t;
}

// T = lambda^2 t, operator values scaled by lambda^{-2}
inline std::vector<CollisionIntegrals> mesoscopic_rescale(std::vector<CollisionIntegrals> series, double lambda)
{
    if (!(lambda > 0))
        throw std::invalid_argument("mesoscopic_rescale: lambda must be > 0");
    const double s = 1.0 / (lambda * lambda);
    for (CollisionIntegrals &c : series) {
        c.t *= lambda * lambda;
        for (double &x : c.q3.values)
            x *= s;
        for (cplx &x : c.q3g.values)
            x *= s;
        for (double &x : c.q4.values)
            x *= s;
        c.q3phi *= s;
        c.q33phi *= s;
    }
    return series;
}

} // namespace hfbkin
