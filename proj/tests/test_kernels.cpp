#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "hfbkin/kernels.hpp"
#include "support.hpp"

using namespace hfbkin;
using testing_support::random_state;

namespace {

HFBState vacuum(const GridPtr &g, cplx phi)
{
    HFBState s;
    s.phi = phi;
    s.gamma = RealField(g, 0.0);
    s.sigma = ComplexField(g, 0.0);
    return s;
}

double rel(cplx a, cplx b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

} // namespace

TEST(UV, Examples)
{
    auto g = build_lattice(1, 2 * M_PI, 1);
    UVFields a = bogoliubov_uv(vacuum(g, 1.0));
    for (std::size_t i = 0; i < g->size(); ++i) {
        EXPECT_EQ(a.u[i], 1.0);
        EXPECT_EQ(a.v[i], cplx(0));
    }
    HFBState s = vacuum(g, 1.0);
    s.gamma[0] = 3;
    s.sigma[0] = 2 * std::sqrt(3.0);
    UVFields b = bogoliubov_uv(s);
    EXPECT_DOUBLE_EQ(b.u[0], 2.0);
    EXPECT_NEAR(b.v[0].real(), std::sqrt(3.0), 1e-15);
}

TEST(UV, HyperbolicIdentityOnRandomStates)
{
    std::mt19937_64 rng(11);
    auto g = build_lattice(2, 2 * M_PI, 3);
    for (int t = 0; t < 20; ++t) {
        UVFields uv = bogoliubov_uv(random_state(g, rng, 10));
        for (std::size_t i = 0; i < g->size(); ++i)
            EXPECT_LT(std::abs(uv.u[i] * uv.u[i] - std::norm(uv.v[i]) - 1), 1e-13);
    }
}

TEST(UV, NegativeGammaRejected)
{
    auto g = build_lattice(1, 2 * M_PI, 1);
    HFBState s = vacuum(g, 1.0);
    s.gamma[2] = -1e-9;
    EXPECT_THROW(bogoliubov_uv(s), std::domain_error);
    s.gamma[2] = -1e-14; // clamped inside the square root only
    EXPECT_EQ(bogoliubov_uv(s).u[2], 1.0);
}

TEST(Cubic, VacuumValues)
{
    auto g = build_lattice(1, 2 * M_PI, 3);
    Potential pot(g, PotentialKind::gaussian, {1, 2});
    const cplx phi(0.4, 0.1);
    UVFields uv = bogoliubov_uv(vacuum(g, phi));
    for (std::size_t a = 0; a < g->size(); ++a)
        for (std::size_t b = 0; b < g->size(); ++b) {
            std::size_t c = (a + b) % g->size();
            cplx b12 = eval_cubic_kernel(CubicKernel::B12, uv, pot, a, b, c);
            EXPECT_LT(std::abs(b12 - std::sqrt(g->volume()) * phi * (pot[a] + pot[b])), 1e-14);
            EXPECT_EQ(eval_cubic_kernel(CubicKernel::B03, uv, pot, a, b, c), cplx(0));
        }
}

TEST(Cubic, VanishWithoutInteraction)
{
    std::mt19937_64 rng(12);
    auto g = build_lattice(1, 2 * M_PI, 3);
    Potential pot(g, PotentialKind::zero);
    UVFields uv = bogoliubov_uv(random_state(g, rng));
    for (CubicKernel k : {CubicKernel::B03, CubicKernel::B12})
        EXPECT_EQ(eval_cubic_kernel(k, uv, pot, 1, 2, 3), cplx(0));
    for (QuarticKernel k : {QuarticKernel::B04, QuarticKernel::B13, QuarticKernel::B22})
        EXPECT_EQ(eval_quartic_kernel(k, uv, pot, 1, 2, 3, 4), cplx(0));
}

TEST(Cubic, Symmetries)
{
    std::mt19937_64 rng(13);
    auto g = build_lattice(1, 2 * M_PI, 6);
    Potential pot(g, PotentialKind::gaussian, {1, 2});
    UVFields uv = bogoliubov_uv(random_state(g, rng));
    std::uniform_int_distribution<std::size_t> I(0, g->size() - 1);
    for (int t = 0; t < 100; ++t) {
        std::size_t a[3] = {I(rng), I(rng), I(rng)};
        cplx b12 = eval_cubic_kernel(CubicKernel::B12, uv, pot, a[0], a[1], a[2]);
        EXPECT_LT(rel(eval_cubic_kernel(CubicKernel::B12, uv, pot, a[1], a[0], a[2]), b12), 1e-13);
        cplx b03 = eval_cubic_kernel(CubicKernel::B03, uv, pot, a[0], a[1], a[2]);
        int p[3] = {0, 1, 2};
        do
            EXPECT_LT(rel(eval_cubic_kernel(CubicKernel::B03, uv, pot, a[p[0]], a[p[1]], a[p[2]]), b03), 1e-13);
        while (std::next_permutation(p, p + 3));
    }
}

TEST(Cubic, OffGridIndexRejected)
{
    auto g = build_lattice(1, 2 * M_PI, 2);
    Potential pot(g, PotentialKind::gaussian, {1, 2});
    UVFields uv = bogoliubov_uv(vacuum(g, 1.0));
    EXPECT_THROW(eval_cubic_kernel(CubicKernel::B12, uv, pot, 0, 1, 5), std::out_of_range);
    EXPECT_THROW(eval_quartic_kernel(QuarticKernel::B22, uv, pot, 0, 1, 2, 99), std::out_of_range);
}

TEST(Quartic, VacuumValues)
{
    auto g = build_lattice(1, 2 * M_PI, 3);
    Potential pot(g, PotentialKind::gaussian, {1, 2});
    UVFields uv = bogoliubov_uv(vacuum(g, 0.5));
    for (std::size_t a = 0; a < g->size(); a += 2)
        for (std::size_t b = 0; b < g->size(); ++b)
            for (std::size_t c = 0; c < g->size(); c += 3) {
                std::size_t d = (a + 2 * b + c) % g->size();
                const IVec &na = g->n(a), &nb = g->n(b), &nc = g->n(c);
                double want = pot.at({na[0] - nc[0], 0, 0}) + pot.at({nb[0] - nc[0], 0, 0});
                EXPECT_NEAR(eval_quartic_kernel(QuarticKernel::B22, uv, pot, a, b, c, d).real(), want, 1e-14);
                EXPECT_EQ(eval_quartic_kernel(QuarticKernel::B04, uv, pot, a, b, c, d), cplx(0));
                EXPECT_EQ(eval_quartic_kernel(QuarticKernel::B13, uv, pot, a, b, c, d), cplx(0));
            }
}

// B04 and B22 are symmetric on the momentum-conserving tuples they are summed over;
// B13 is symmetric in its first three slots everywhere.
TEST(Quartic, Symmetries)
{
    std::mt19937_64 rng(14);
    auto g = build_lattice(1, 2 * M_PI, 5);
    Potential pot(g, PotentialKind::gaussian, {1, 2});
    UVFields uv = bogoliubov_uv(random_state(g, rng));
    std::uniform_int_distribution<int> U(-5, 5);
    int tested = 0;
    while (tested < 100) {
        IVec n1{U(rng), 0, 0}, n2{U(rng), 0, 0}, n3{U(rng), 0, 0};
        IVec s04{-(n1[0] + n2[0] + n3[0]), 0, 0}, s13{n1[0] + n2[0] + n3[0], 0, 0}, s22{n1[0] + n2[0] - n3[0], 0, 0};
        if (!g->contains(s04) || !g->contains(s13) || !g->contains(s22))
            continue;
        ++tested;
        std::size_t a = g->index_of(n1), b = g->index_of(n2), c = g->index_of(n3);
        std::size_t q4[4] = {a, b, c, g->index_of(s04)};
        cplx ref = eval_quartic_kernel(QuarticKernel::B04, uv, pot, q4[0], q4[1], q4[2], q4[3]);
        int p[4] = {0, 1, 2, 3};
        do
            EXPECT_LT(rel(eval_quartic_kernel(QuarticKernel::B04, uv, pot, q4[p[0]], q4[p[1]], q4[p[2]], q4[p[3]]), ref),
                      1e-13);
        while (std::next_permutation(p, p + 4));

        std::size_t d13 = g->index_of(s13);
        std::size_t q3[3] = {a, b, c};
        cplx r13 = eval_quartic_kernel(QuarticKernel::B13, uv, pot, a, b, c, d13);
        int p3[3] = {0, 1, 2};
        do
            EXPECT_LT(rel(eval_quartic_kernel(QuarticKernel::B13, uv, pot, q3[p3[0]], q3[p3[1]], q3[p3[2]], d13), r13),
                      1e-13);
        while (std::next_permutation(p3, p3 + 3));

        std::size_t d22 = g->index_of(s22);
        cplx r22 = eval_quartic_kernel(QuarticKernel::B22, uv, pot, a, b, c, d22);
        EXPECT_LT(rel(eval_quartic_kernel(QuarticKernel::B22, uv, pot, b, a, c, d22), r22), 1e-13);
        EXPECT_LT(rel(eval_quartic_kernel(QuarticKernel::B22, uv, pot, a, b, d22, c), r22), 1e-13);
        EXPECT_LT(rel(eval_quartic_kernel(QuarticKernel::B22, uv, pot, b, a, d22, c), r22), 1e-13);
    }
}

TEST(Quartic, PairingTermUsesBothConjugatedSlots)
{
    // u = 1 except at one slot; only the v(p1) v(p2) conj(v(p3)) conj(v(p4)) product survives
    auto g = build_lattice(1, 2 * M_PI, 2);
    Potential pot(g, PotentialKind::constant, {1, 0});
    UVFields uv{RealField(g, 0.0), ComplexField(g, 0.0), 1.0};
    uv.v[0] = cplx(0, 1);
    uv.v[1] = cplx(2, 0);
    uv.v[3] = cplx(0, 3);
    uv.v[4] = cplx(1, 1);
    cplx got = eval_quartic_kernel(QuarticKernel::B22, uv, pot, 0, 1, 3, 4);
    cplx want = uv.v[0] * uv.v[1] * std::conj(uv.v[3]) * std::conj(uv.v[4]) * 2.0;
    EXPECT_LT(std::abs(got - want), 1e-14);
}
