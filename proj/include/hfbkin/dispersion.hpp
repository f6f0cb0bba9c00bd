#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "hfb.hpp"

namespace hfbkin {

// Omega = h_Gamma + Re(conj(h_Sigma) sigma) / (1 + gamma)
inline RealField omega(const HFBState &s, const HFBConfig &cfg, const Potential &pot)
{
    const GridPtr &g = s.grid();
    for (std::size_t i = 0; i < g->size(); ++i)
        if (!(1.0 + s.gamma[i] > 0))
            throw std::domain_error("omega: 1 + gamma <= 0 at lattice point " + std::to_string(i));
    MeanFields m = mean_fields(s, cfg, pot);
    RealField w(g);
    for (std::size_t i = 0; i < g->size(); ++i)
        w[i] = m.h_gamma[i] + std::real(std::conj(m.h_sigma[i]) * s.sigma[i]) / (1.0 + s.gamma[i]);
    w.even = s.gamma.even && s.sigma.even;
    return w;
}

// Diagnostic only: sqrt(E (E + 2 lambda v)).
inline RealField bogoliubov_dispersion(const Potential &pot, double lambda)
{
    const GridPtr &g = pot.grid();
    RealField w(g);
    for (std::size_t i = 0; i < g->size(); ++i)
        w[i] = std::sqrt(g->E(i) * (g->E(i) + 2 * lambda * pot[i]));
    w.even = true;
    return w;
}

struct DispersionHistory {
    double dt = 0;
    std::vector<RealField> omega;
    std::vector<RealField> theta;

    // Theta_{t_k} - Theta_{t_j} at lattice point i
    double between(std::size_t k, std::size_t j, std::size_t i) const { return theta[k][i] - theta[j][i]; }
};

// Composite trapezoid over uniformly spaced samples.
inline DispersionHistory accumulate_phase(std::vector<RealField> omegas, double dt)
{
    DispersionHistory d;
    d.dt = dt;
    d.omega = std::move(omegas);
    if (d.omega.empty())
        return d;
    const GridPtr &g = d.omega.front().grid;
    d.theta.reserve(d.omega.size());
    d.theta.emplace_back(g, 0.0);
    for (std::size_t k = 1; k < d.omega.size(); ++k) {
        RealField th = d.theta.back();
        for (std::size_t i = 0; i < g->size(); ++i)
            th[i] += 0.5 * dt * (d.omega[k - 1][i] + d.omega[k][i]);
        d.theta.push_back(std::move(th));
    }
    return d;
}

inline DispersionHistory accumulate_phase(const HFBHistory &h)
{
    std::vector<RealField> w;
    w.reserve(h.size());
    for (const HFBState &s : h.states)
        w.push_back(omega(s, h.config, *h.pot));
    return accumulate_phase(std::move(w), h.sample_dt);
}

} // namespace hfbkin
