#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hfb.hpp"
#include "parallel.hpp"

namespace hfbkin {

// row-major 2x2
using Mat2 = std::array<cplx, 4>;

inline Mat2 mat2_identity() { return {1.0, 0.0, 0.0, 1.0}; }
inline Mat2 mat2_S() { return {1.0, 0.0, 0.0, -1.0}; }

inline Mat2 operator*(const Mat2 &a, const Mat2 &b)
{
    return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3], a[2] * b[0] + a[3] * b[2],
            a[2] * b[1] + a[3] * b[3]};
}

inline Mat2 operator+(const Mat2 &a, const Mat2 &b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]}; }
inline Mat2 operator*(cplx s, const Mat2 &a) { return {s * a[0], s * a[1], s * a[2], s * a[3]}; }

inline Mat2 adjoint(const Mat2 &a) { return {std::conj(a[0]), std::conj(a[2]), std::conj(a[1]), std::conj(a[3])}; }

inline double max_abs_diff(const Mat2 &a, const Mat2 &b)
{
    double m = 0;
    for (int i = 0; i < 4; ++i)
        m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// Eigenvalues of a hermitian 2x2 from trace and determinant, ascending.
inline std::array<double, 2> hermitian_eigenvalues(const Mat2 &a)
{
    const double tr = a[0].real() + a[3].real();
    const double half_gap = 0.5 * (a[0].real() - a[3].real());
    const double disc = std::sqrt(half_gap * half_gap + std::norm(a[1]));
    return {0.5 * tr - disc, 0.5 * tr + disc};
}

struct SymplecticFrame {
    double t = 0;
    GridPtr grid;
    std::vector<Mat2> R;
    std::vector<Mat2> V;
};

inline std::vector<Mat2> covariance_matrices(const AssembledFields &a)
{
    const LatticeGrid &g = *a.GammaT.grid;
    std::vector<Mat2> R(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double gt = a.GammaT[i];
        const cplx st = a.SigmaT[i];
        R[i] = {gt, st, std::conj(st), 1.0 + gt};
    }
    return R;
}

inline SymplecticFrame build_frame(const AssembledFields &a, double t = 0)
{
    SymplecticFrame f;
    f.t = t;
    f.grid = a.GammaT.grid;
    f.R = covariance_matrices(a);
    f.V.assign(f.grid->size(), mat2_identity());
    return f;
}

namespace detail {

// S H minus its free part diag(E, -E), rotated into the interaction picture
inline Mat2 interaction_generator(double hg_int, cplx hs, double E, double t)
{
    const cplx r = std::polar(1.0, 2.0 * E * t);
    return {hg_int, r * hs, -std::conj(r * hs), -hg_int};
}

} // namespace detail

using FrameObserver = std::function<void(const SymplecticFrame &, std::size_t)>;

// Integrates i d/dt V^dagger = S H V^dagger with Lawson RK4 (free part diag(E,-E)
// exact). Steps span two stored samples so the midpoint generator is a stored
// state; an odd trailing interval uses the linear midpoint.
inline SymplecticFrame propagate_V(const SymplecticFrame &frame, const HFBHistory &hist, const Potential &pot,
                                   const FrameObserver &observer = {})
{
    require_same_grid(frame.grid, hist.grid(), "propagate_V");
    const LatticeGrid &g = *frame.grid;
    const std::size_t n = g.size();
    const std::size_t K = hist.size() - 1;
    const double dt = hist.sample_dt;

    std::vector<MeanFields> mf;
    mf.reserve(hist.size());
    for (const HFBState &s : hist.states)
        mf.push_back(mean_fields(s, hist.config, pot));

    // W = V^dagger in the interaction picture: W = exp(-i diag(E,-E) t) Y
    std::vector<Mat2> Y(n);
    const double t0 = hist.states.front().t;
    for (std::size_t i = 0; i < n; ++i) {
        const double E = g.E(i);
        const Mat2 W = adjoint(frame.V[i]);
        Y[i] = Mat2{std::polar(1.0, E * t0), 0.0, 0.0, std::polar(1.0, -E * t0)} * W;
    }

    auto gen = [&](std::size_t i, std::size_t k, double t) {
        return detail::interaction_generator(mf[k].h_gamma[i] - g.E(i), mf[k].h_sigma[i], g.E(i), t);
    };
    auto gen_mid = [&](std::size_t i, std::size_t k, double t) {
        double hg = 0.5 * (mf[k].h_gamma[i] + mf[k + 1].h_gamma[i]) - g.E(i);
        cplx hs = 0.5 * (mf[k].h_sigma[i] + mf[k + 1].h_sigma[i]);
        return detail::interaction_generator(hg, hs, g.E(i), t);
    };

    SymplecticFrame out = frame;
    auto emit = [&](std::size_t k) {
        const double t = hist.states[k].t;
        parallel_for(n, [&](std::size_t i) {
            const double E = g.E(i);
            Mat2 W = Mat2{std::polar(1.0, -E * t), 0.0, 0.0, std::polar(1.0, E * t)} * Y[i];
            for (const cplx &x : W)
                if (!std::isfinite(x.real()) || !std::isfinite(x.imag()))
                    throw std::runtime_error("propagate_V: non-finite entry at lattice point " + std::to_string(i));
            out.V[i] = adjoint(W);
        });
        out.t = t;
        if (observer)
            observer(out, k);
    };

    const cplx mi(0, -1);
    std::size_t k = 0;
    while (k < K) {
        const bool pair = k + 2 <= K;
        const double h = pair ? 2 * dt : dt;
        const double ta = hist.states[k].t;
        parallel_for(n, [&](std::size_t i) {
            const Mat2 A0 = gen(i, k, ta);
            const Mat2 Am = pair ? gen(i, k + 1, ta + 0.5 * h) : gen_mid(i, k, ta + 0.5 * h);
            const Mat2 A1 = gen(i, pair ? k + 2 : k + 1, ta + h);
            const Mat2 &y = Y[i];
            Mat2 k1 = mi * (A0 * y);
            Mat2 k2 = mi * (Am * (y + cplx(0.5 * h) * k1));
            Mat2 k3 = mi * (Am * (y + cplx(0.5 * h) * k2));
            Mat2 k4 = mi * (A1 * (y + cplx(h) * k3));
            Y[i] = y + cplx(h / 6) * (k1 + cplx(2.0) * k2 + cplx(2.0) * k3 + k4);
        });
        k += pair ? 2 : 1;
        if (observer || k == K)
            emit(k);
    }
    if (K == 0)
        emit(0);
    return out;
}

struct SymplecticReport {
    double max_reconstruction_err = 0;
    double max_S_err = 0;
    double min_eigenvalue = INFINITY;
};

// R_t_direct against V^dagger R_0 V, and V S V^dagger against S.
inline SymplecticReport check_invariants(const SymplecticFrame &frame_t, const SymplecticFrame &frame_0,
                                         const std::vector<Mat2> &R_t_direct)
{
    require_same_grid(frame_t.grid, frame_0.grid, "check_invariants");
    if (R_t_direct.size() != frame_t.V.size())
        throw std::invalid_argument("check_invariants: R_t has the wrong size");
    SymplecticReport r;
    const Mat2 S = mat2_S();
    for (std::size_t i = 0; i < frame_t.V.size(); ++i) {
        const Mat2 &V = frame_t.V[i];
        const Mat2 Vd = adjoint(V);
        r.max_reconstruction_err = std::max(r.max_reconstruction_err, max_abs_diff(R_t_direct[i], Vd * frame_0.R[i] * V));
        r.max_S_err = std::max(r.max_S_err, max_abs_diff(V * S * Vd, S));
        r.min_eigenvalue = std::min(r.min_eigenvalue, hermitian_eigenvalues(R_t_direct[i])[0]);
    }
    return r;
}

} // namespace hfbkin
