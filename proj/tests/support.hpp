#pragma once

#include <random>

#include "hfbkin/dispersion.hpp"
#include "hfbkin/hfb.hpp"
#include "hfbkin/kernels.hpp"

namespace testing_support {

using namespace hfbkin;

struct Run {
    GridPtr grid;
    Potential pot;
    InitialData init;
    HFBConfig cfg;
};

// thermal data with the usual defaults; callers tweak cfg before evolving
inline Run thermal(int M, double lambda = 0.1, double N = 100, double dt = 1e-3, int dim = 1)
{
    GridPtr g = build_lattice(dim, 2 * M_PI, M);
    Run r{g, Potential(g, PotentialKind::gaussian, {1, 2}), initial_data(g, 1, 0.5, 0.5), {}};
    r.cfg.lambda = lambda;
    r.cfg.N = N;
    r.cfg.dt = dt;
    r.cfg.f_plus = r.init.f0;
    return r;
}

// admissible random state: gamma >= 0, |sigma|^2 = gamma (1 + gamma), even
inline HFBState random_state(const GridPtr &g, std::mt19937_64 &rng, double gmax = 2.0)
{
    std::uniform_real_distribution<double> U(0, 1);
    HFBState s;
    s.phi = std::polar(0.2 + U(rng), 6.28 * U(rng));
    s.gamma = RealField(g);
    s.sigma = ComplexField(g);
    for (std::size_t i = 0; i < g->size(); ++i) {
        std::size_t j = g->neg(i);
        if (j < i) {
            s.gamma[i] = s.gamma[j];
            s.sigma[i] = s.sigma[j];
            continue;
        }
        double gm = gmax * U(rng);
        s.gamma[i] = gm;
        s.sigma[i] = std::polar(std::sqrt(gm * (1 + gm)), 6.28 * U(rng));
    }
    s.gamma.even = s.sigma.even = true;
    return s;
}

template <class T>
LatticeField<T> random_field(const GridPtr &g, std::mt19937_64 &rng)
{
    std::normal_distribution<double> n;
    LatticeField<T> f(g);
    for (auto &x : f.values) {
        if constexpr (std::is_same_v<T, cplx>)
            x = cplx(n(rng), n(rng));
        else
            x = n(rng);
    }
    return f;
}

} // namespace testing_support
