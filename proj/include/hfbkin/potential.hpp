#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "lattice.hpp"

namespace hfbkin {

enum class PotentialKind { gaussian, constant, zero };

inline PotentialKind parse_potential_kind(const std::string &s)
{
    if (s == "gaussian")
        return PotentialKind::gaussian;
    if (s == "constant")
        return PotentialKind::constant;
    if (s == "zero")
        return PotentialKind::zero;
    throw std::invalid_argument("potential.kind must be one of gaussian|constant|zero, got '" + s + "'");
}

inline const char *to_string(PotentialKind k)
{
    switch (k) {
    case PotentialKind::gaussian: return "gaussian";
    case PotentialKind::constant: return "constant";
    case PotentialKind::zero: return "zero";
    }
    return "?";
}

struct PotentialParams {
    double amplitude = 1.0;
    double width = 2.0;
};

class Potential {
public:
    Potential(GridPtr grid, PotentialKind kind, PotentialParams params = {})
        : grid_(std::move(grid)), kind_(kind), params_(params)
    {
        if (!(params.amplitude >= 0) || !std::isfinite(params.amplitude))
            throw std::invalid_argument("potential.amplitude must be finite and >= 0");
        if (kind == PotentialKind::gaussian && !(params.width > 0 && std::isfinite(params.width)))
            throw std::invalid_argument("potential.width must be finite and > 0");
        vhat_ = RealField(grid_);
        for (std::size_t i = 0; i < grid_->size(); ++i) {
            double v = analytic(grid_->n(i));
            if (!(v >= 0))
                throw std::invalid_argument("potential: v^(p) < 0 at lattice index " + std::to_string(i));
            vhat_[i] = v;
        }
        vhat_.even = true;
        // sums of two grid momenta stay inside the doubled box
        ext_side_ = 4 * grid_->M() + 1;
        std::size_t ne = 1;
        for (int a = 0; a < grid_->dim(); ++a)
            ne *= static_cast<std::size_t>(ext_side_);
        ext_.resize(ne);
        for (std::size_t i = 0; i < ne; ++i) {
            IVec v{0, 0, 0};
            std::size_t rest = i;
            for (int a = grid_->dim() - 1; a >= 0; --a) {
                v[a] = static_cast<int>(rest % ext_side_) - 2 * grid_->M();
                rest /= ext_side_;
            }
            ext_[i] = analytic(v);
        }
        v0_ = vhat_[grid_->zero()];
        RealField w = map_field<double>(grid_, [&](std::size_t i) { return std::sqrt(1.0 + grid_->E(i)); });
        l1_ = lp_norm(vhat_, 1.0);
        linf_ = lp_norm(vhat_, INFINITY);
        l1_sqrtE_ = lp_norm(vhat_, 1.0, &w);
    }

    // value at any lattice vector, also outside the truncated box
    double at(const IVec &n) const
    {
        const int M2 = 2 * grid_->M();
        std::size_t idx = 0;
        for (int a = 0; a < 3; ++a) {
            if (a >= grid_->dim()) {
                if (n[a] != 0)
                    return analytic(n);
                continue;
            }
            if (n[a] < -M2 || n[a] > M2)
                return analytic(n);
            idx = idx * ext_side_ + static_cast<std::size_t>(n[a] + M2);
        }
        return ext_[idx];
    }

    double analytic(const IVec &n) const
    {
        switch (kind_) {
        case PotentialKind::zero: return 0.0;
        case PotentialKind::constant: return params_.amplitude;
        case PotentialKind::gaussian: {
            double k = grid_->spacing();
            double p2 = k * k * (double(n[0]) * n[0] + double(n[1]) * n[1] + double(n[2]) * n[2]);
            return params_.amplitude * std::exp(-p2 / (2.0 * params_.width * params_.width));
        }
        }
        return 0.0;
    }

    const GridPtr &grid() const { return grid_; }
    PotentialKind kind() const { return kind_; }
    const PotentialParams &params() const { return params_; }
    const RealField &vhat() const { return vhat_; }
    double operator[](std::size_t i) const { return vhat_[i]; }
    double v0() const { return v0_; }
    double norm_l1() const { return l1_; }
    double norm_inf() const { return linf_; }
    double norm_l1_sqrtE() const { return l1_sqrtE_; }
    // <<v>> = |v|_{L^1_{sqrt(1+E)}} + |v|_inf
    double weighted_norm() const { return l1_sqrtE_ + linf_; }

private:
    GridPtr grid_;
    PotentialKind kind_;
    PotentialParams params_;
    RealField vhat_;
    int ext_side_ = 1;
    std::vector<double> ext_;
    double v0_ = 0, l1_ = 0, linf_ = 0, l1_sqrtE_ = 0;
};

inline Potential build_potential(const GridPtr &grid, PotentialKind kind, PotentialParams params = {})
{
    return Potential(grid, kind, params);
}

} // namespace hfbkin
