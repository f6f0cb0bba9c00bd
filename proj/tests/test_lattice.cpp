#include <gtest/gtest.h>

#include <random>

#include "hfbkin/lattice.hpp"
#include "hfbkin/oracle.hpp"
#include "support.hpp"

using namespace hfbkin;

TEST(Lattice, OneDimensionalThreePoints)
{
    auto g = build_lattice(1, 2 * M_PI, 1);
    ASSERT_EQ(g->size(), 3u);
    EXPECT_EQ(g->n(0)[0], -1);
    EXPECT_EQ(g->n(1)[0], 0);
    EXPECT_EQ(g->n(2)[0], 1);
    EXPECT_DOUBLE_EQ(g->volume(), 2 * M_PI);
    EXPECT_EQ(g->zero(), 1u);
}

TEST(Lattice, ZeroCutoffIsSinglePoint)
{
    auto g = build_lattice(3, 2 * M_PI, 0);
    ASSERT_EQ(g->size(), 1u);
    EXPECT_EQ(g->n(0), (IVec{0, 0, 0}));
    EXPECT_NEAR(g->volume(), std::pow(2 * M_PI, 3), 1e-12);
}

TEST(Lattice, TwoDimensionalSpacingAndSymmetry)
{
    auto g = build_lattice(2, 4 * M_PI, 2);
    ASSERT_EQ(g->size(), 25u);
    EXPECT_DOUBLE_EQ(g->spacing(), 0.5);
    for (std::size_t i = 0; i < g->size(); ++i) {
        std::size_t j = g->neg(i);
        EXPECT_EQ(g->n(j)[0], -g->n(i)[0]);
        EXPECT_EQ(g->n(j)[1], -g->n(i)[1]);
        EXPECT_EQ(g->neg(j), i);
    }
}

TEST(Lattice, LexicographicOrderFirstAxisSlowest)
{
    auto g = build_lattice(2, 2 * M_PI, 1);
    EXPECT_EQ(g->n(0), (IVec{-1, -1, 0}));
    EXPECT_EQ(g->n(1), (IVec{-1, 0, 0}));
    EXPECT_EQ(g->n(3), (IVec{0, -1, 0}));
    for (std::size_t i = 0; i < g->size(); ++i)
        EXPECT_EQ(g->index_of(g->n(i)), i);
    EXPECT_EQ(g->index_of({2, 0, 0}), npos);
}

TEST(Lattice, RejectsBadArguments)
{
    EXPECT_THROW(build_lattice(0, 1, 1), std::invalid_argument);
    EXPECT_THROW(build_lattice(4, 1, 1), std::invalid_argument);
    EXPECT_THROW(build_lattice(1, 0, 1), std::invalid_argument);
    EXPECT_THROW(build_lattice(1, -1, 1), std::invalid_argument);
    EXPECT_THROW(build_lattice(1, 1, -1), std::invalid_argument);
}

TEST(Integrate, Examples)
{
    auto g = build_lattice(1, 2 * M_PI, 1);
    EXPECT_NEAR(integrate(RealField(g, 2 * M_PI)), 3.0, 1e-15);
    EXPECT_EQ(integrate(RealField(g, 0.0)), 0.0);
    EXPECT_NEAR(integrate(RealField(g, {1, 2, 3})), 6 / (2 * M_PI), 1e-15);
}

TEST(Integrate, Linear)
{
    std::mt19937_64 rng(3);
    auto g = build_lattice(2, 3.0, 3);
    auto f = testing_support::random_field<cplx>(g, rng), h = testing_support::random_field<cplx>(g, rng);
    const cplx a(0.3, -1.2), b(2.5, 0.1);
    ComplexField c(g);
    for (std::size_t i = 0; i < g->size(); ++i)
        c[i] = a * f[i] + b * h[i];
    EXPECT_LT(std::abs(integrate(c) - (a * integrate(f) + b * integrate(h))), 1e-14);
}

TEST(LpNorm, Examples)
{
    auto g = build_lattice(1, 2 * M_PI, 1);
    EXPECT_EQ(lp_norm(RealField(g, {1, 4, 2}), INFINITY), 4.0);
    EXPECT_NEAR(lp_norm(RealField(g, 1.0), 1.0), 3 / (2 * M_PI), 1e-15);
    RealField w = map_field<double>(g, [&](std::size_t i) { return 1 + g->E(i); });
    EXPECT_NEAR(lp_norm(RealField(g, 1.0), 1.0, &w), 4 / (2 * M_PI), 1e-15);
    EXPECT_THROW(lp_norm(RealField(g, 1.0), 0.5), std::invalid_argument);
}

TEST(LpNorm, OneNormBoundedByMax)
{
    std::mt19937_64 rng(4);
    auto g = build_lattice(1, 5.0, 6);
    auto f = testing_support::random_field<double>(g, rng);
    EXPECT_LE(lp_norm(f, 1.0), g->size() / g->volume() * lp_norm(f, INFINITY) * (1 + 1e-15));
}

TEST(Delta, ValuesAndSifting)
{
    auto g = build_lattice(1, 2 * M_PI, 1);
    RealField d = delta_field(g);
    EXPECT_EQ(d[0], 0.0);
    EXPECT_EQ(d[1], 2 * M_PI);
    EXPECT_EQ(d[2], 0.0);
    EXPECT_NEAR(integrate(d), 1.0, 1e-15);
    RealField e = energy_field(g);
    RealField de(g);
    for (std::size_t i = 0; i < g->size(); ++i)
        de[i] = d[i] * e[i];
    EXPECT_EQ(integrate(de), 0.0);

    std::mt19937_64 rng(5);
    auto g2 = build_lattice(2, 3.0, 2);
    auto h = testing_support::random_field<double>(g2, rng);
    RealField d2 = delta_field(g2), prod(g2);
    for (std::size_t i = 0; i < g2->size(); ++i)
        prod[i] = d2[i] * h[i];
    EXPECT_DOUBLE_EQ(integrate(prod), h[g2->zero()]);
}

TEST(Convolve, DeltaSifts)
{
    std::mt19937_64 rng(6);
    auto g = build_lattice(2, 2 * M_PI, 3);
    auto h = testing_support::random_field<cplx>(g, rng);
    ComplexField c = convolve(delta_field(g), h);
    for (std::size_t i = 0; i < g->size(); ++i)
        EXPECT_LT(std::abs(c[i] - h[i]), 1e-15 * std::abs(h[i]) + 1e-300);
    RealField dd = convolve(delta_field(g), delta_field(g));
    for (std::size_t i = 0; i < g->size(); ++i)
        EXPECT_DOUBLE_EQ(dd[i], delta_field(g)[i]);
}

TEST(Convolve, ConstantFieldsAtZero)
{
    auto g = build_lattice(1, 2 * M_PI, 1);
    RealField c = convolve(RealField(g, 1.5), RealField(g, -2.0));
    EXPECT_NEAR(c[g->zero()], 3 * 1.5 * -2.0 / (2 * M_PI), 1e-15);
    // zero padding: only two shifts are in range at the edge
    EXPECT_NEAR(c[0], 2 * 1.5 * -2.0 / (2 * M_PI), 1e-15);
}

TEST(Convolve, EvenFieldsCommuteAtZero)
{
    std::mt19937_64 rng(7);
    auto g = build_lattice(2, 2.0, 3);
    for (int t = 0; t < 20; ++t) {
        auto f = testing_support::random_field<double>(g, rng), h = testing_support::random_field<double>(g, rng);
        for (std::size_t i = 0; i < g->size(); ++i) {
            f[g->neg(i)] = f[i];
            h[g->neg(i)] = h[i];
        }
        EXPECT_NEAR(convolve(f, h)[g->zero()], convolve(h, f)[g->zero()], 1e-13);
    }
}

TEST(Convolve, MatchesBruteForce)
{
    std::mt19937_64 rng(8);
    for (int dim : {1, 2, 3}) {
        auto g = build_lattice(dim, 2 * M_PI, dim == 3 ? 2 : 4);
        for (int t = 0; t < 5; ++t) {
            auto f = testing_support::random_field<cplx>(g, rng), h = testing_support::random_field<cplx>(g, rng);
            auto r = oracle::compare(convolve(f, h).values, oracle::naive_convolve(f, h).values);
            EXPECT_LT(r.max_rel_err, 1e-14) << "dim " << dim;
        }
    }
}

TEST(Convolve, RejectsGridMismatch)
{
    auto a = build_lattice(1, 2 * M_PI, 2), b = build_lattice(1, 2 * M_PI, 3);
    EXPECT_THROW(convolve(RealField(a, 1.0), RealField(b, 1.0)), std::invalid_argument);
}

TEST(LatticeField, EvenFlagIsTestable)
{
    auto g = build_lattice(1, 1.0, 2);
    RealField e = energy_field(g);
    EXPECT_TRUE(e.even);
    EXPECT_TRUE(e.is_even());
    RealField odd = map_field<double>(g, [&](std::size_t i) { return g->p(i)[0]; });
    EXPECT_FALSE(odd.is_even());
}
