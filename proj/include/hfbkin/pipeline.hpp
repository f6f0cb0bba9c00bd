#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "dispersion.hpp"
#include "hfb.hpp"
#include "io.hpp"
#include "kernels.hpp"
#include "oracle.hpp"
#include "qbe.hpp"
#include "symplectic.hpp"

namespace hfbkin {

using json = nlohmann::json;

enum class Stage { simulate, qbe, verify };

inline const char *to_string(Stage s)
{
    return s == Stage::simulate ? "simulate" : s == Stage::qbe ? "qbe" : "verify";
}

struct Tolerances {
    double mass_rel = 1e-8;
    double energy_rel = 1e-6;
    double gamma_neg = 1e-12;
    double cone = 1e-10;
    double relation = 1e-8;
    double mass_transfer = 1e-9;
    double annihilation_rel = 1e-12;
    double symplectic = 1e-8;
    double eigen_neg = 1e-10;
};

struct CheckResult {
    std::string name;
    bool ok = true;
    double value = 0;
    double tol = 0;
    std::string detail;
};

struct PipelineOptions {
    StepHook hook;     // test injection, runs before the per-step checks
    bool write = true; // write files under output.directory
    Tolerances tol;
};

struct PipelineReport {
    int exit_code = 0;
    std::string first_failure;
    std::vector<CheckResult> checks;
    json verify;
    std::vector<std::string> files;
    double seconds = 0;

    const CheckResult *find(const std::string &name) const
    {
        for (const CheckResult &c : checks)
            if (c.name == name)
                return &c;
        return nullptr;
    }
};

struct Setup {
    GridPtr grid;
    std::shared_ptr<const Potential> pot;
    InitialData init;
    HFBConfig hfb;
};

inline Setup make_setup(const RunConfig &rc)
{
    validate(rc);
    Setup s;
    s.grid = build_lattice(rc.grid.dim, rc.grid.L, rc.grid.M);
    s.pot = std::make_shared<const Potential>(s.grid, rc.potential.kind, rc.potential.params);
    s.init = initial_data(s.grid, rc.initial.beta, rc.initial.kappa0, rc.initial.gamma_scale, rc.initial.phi0);
    s.hfb.lambda = rc.physics.lambda;
    s.hfb.N = rc.physics.N;
    s.hfb.order = rc.physics.order;
    s.hfb.f_plus = s.init.f0;
    s.hfb.dt = rc.time.dt;
    s.hfb.integrator = rc.time.integrator;
    return s;
}

namespace detail {

inline double rel(double d, double scale) { return d == 0 ? 0.0 : std::abs(d) / std::max(std::abs(scale), 1e-300); }

inline json report_json(const oracle::OracleReport &r)
{
    return {{"max_rel_err", r.max_rel_err}, {"max_abs_err", r.max_abs_err}, {"worst_index", r.worst_index}};
}

// |int dp p_a Q(p)| over the scale int dp |p_a Q(p)|, worst axis
inline double annihilation_ratio(const RealField &q)
{
    const LatticeGrid &g = *q.grid;
    double worst = 0;
    for (int a = 0; a < g.dim(); ++a) {
        double s = 0, scale = 0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            s += g.p(i)[a] * q[i];
            scale += std::abs(g.p(i)[a] * q[i]);
        }
        if (scale > 0)
            worst = std::max(worst, std::abs(s) / scale);
    }
    return worst;
}

} // namespace detail

// simulate -> qbe -> verify; each stage includes the previous ones.
inline PipelineReport run_pipeline(const RunConfig &rc, Stage stage, const PipelineOptions &opt = {})
{
    namespace fs = std::filesystem;
    const auto t_start = std::chrono::steady_clock::now();
    const Tolerances &tol = opt.tol;
    PipelineReport rep;
    auto add = [&](CheckResult c) {
        if (!c.ok && rep.first_failure.empty())
            rep.first_failure = c.name;
        rep.checks.push_back(std::move(c));
    };
    auto finish = [&]() -> PipelineReport & {
        rep.exit_code = rep.first_failure.empty() ? 0 : 1;
        rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
        return rep;
    };

    Setup S = make_setup(rc);
    const LatticeGrid &g = *S.grid;
    const fs::path dir = rc.output.directory;
    const bool csv = opt.write && rc.wants("csv");
    if (opt.write)
        fs::create_directories(dir);
    auto file = [&](const std::string &name) {
        rep.files.push_back((dir / name).string());
        return dir / name;
    };

    // --- HFB evolution with per-step checks
    const HFBState &s0 = S.init.state;
    const double m0 = mass(s0, S.hfb), e0 = energy(s0, S.hfb, *S.pot);
    double mass_drift = 0, energy_drift = 0, worst_neg = INFINITY, worst_excess = -INFINITY;
    std::optional<std::pair<std::size_t, ConeReport>> cone_fail;
    auto observer = [&](const HFBState &s, std::size_t k) {
        const ConeReport c = cone_check(assemble_totals(s, S.hfb));
        worst_neg = std::min(worst_neg, c.min_gamma_t);
        worst_excess = std::max(worst_excess, c.max_excess);
        if (!c.ok(tol.gamma_neg, tol.cone) && !cone_fail)
            cone_fail = {k, c};
        if (cone_fail)
            return; // drift numbers past a violation are meaningless
        mass_drift = std::max(mass_drift, detail::rel(mass(s, S.hfb) - m0, m0));
        energy_drift = std::max(energy_drift, detail::rel(energy(s, S.hfb, *S.pot) - e0, e0));
    };
    HFBHistory hist;
    std::string evolve_error;
    try {
        hist = evolve(s0, rc.time.T, S.hfb, *S.pot, observer, rc.time.sample_stride, opt.hook);
    } catch (const std::exception &e) {
        evolve_error = e.what();
    }

    {
        CheckResult c{"cone", !cone_fail, std::max(-worst_neg, worst_excess), tol.cone, ""};
        if (cone_fail) {
            const auto &[k, cr] = *cone_fail;
            c.detail = "cone violated at step " + std::to_string(k) + ", lattice index " + std::to_string(cr.worst) +
                       ": min Gamma^T = " + io::num(cr.min_gamma_t) + ", max excess = " + io::num(cr.max_excess);
        }
        add(c);
    }
    if (!evolve_error.empty()) {
        add({"hfb_evolution", false, 0, 0, evolve_error});
        rep.verify = {{"error", evolve_error}, {"first_failure", rep.first_failure}};
        return finish();
    }
    add({"mass_conservation", mass_drift < tol.mass_rel, mass_drift, tol.mass_rel, "max relative drift of int Gamma"});
    add({"energy_conservation", energy_drift < tol.energy_rel, energy_drift, tol.energy_rel,
         "max relative drift of E_HFB"});
    double rel_err = 0;
    for (const HFBState &s : hist.states)
        rel_err = std::max(rel_err, relation_error(s));
    add({"relation", rel_err < tol.relation, rel_err, tol.relation, "max |sigma|^2 - gamma(1+gamma)"});

    const HFBState &sT = hist.states.back();
    if (csv) {
        io::CsvWriter w(file("observables.csv"));
        w.header({"t", "mass", "energy", "phi_re", "phi_im", "gamma_max", "cone_slack_min"});
        for (const HFBState &s : hist.states) {
            ConeReport c = cone_check(assemble_totals(s, S.hfb));
            w.row({s.t, mass(s, S.hfb), energy(s, S.hfb, *S.pot), s.phi.real(), s.phi.imag(),
                   lp_norm(s.gamma, INFINITY), c.min_slack});
        }
        io::write_field_csv(file("gamma_final.csv"), sT.gamma);
        io::write_field_csv(file("sigma_final.csv"), sT.sigma);
    }

    json J;
    J["config"] = serialize(rc);
    J["hfb"] = {{"steps", step_count(rc.time.T, rc.time.dt)},
                {"samples", hist.size()},
                {"mass_initial", m0},
                {"energy_initial", e0},
                {"mass_rel_drift", mass_drift},
                {"energy_rel_drift", energy_drift},
                {"relation_max_err", rel_err},
                {"cone_min_gamma_t", worst_neg},
                {"cone_max_excess", worst_excess}};

    std::vector<std::string> sections = {"config", "hfb"};
    if (stage != Stage::simulate) {
        sections.insert(sections.end(), {"dispersion", "qbe"});
        DispersionHistory disp = accumulate_phase(hist);
        QbeOptions qo;
        qo.mode = rc.qbe.mode;
        qo.enable_q4 = rc.qbe.enable_q4;
        qo.N = rc.physics.N;
        CollisionHistory ch = accumulate_collisions(hist, disp, S.init.f0, qo);

        double ann = 0;
        for (std::size_t k = 0; k < ch.rate.size(); ++k) {
            for (const RealField &q : ch.q3_channel_rate[k])
                ann = std::max(ann, detail::annihilation_ratio(q));
            if (rc.qbe.enable_q4)
                for (const RealField &q : ch.q4_channel_rate[k])
                    ann = std::max(ann, detail::annihilation_ratio(q));
        }
        add({"momentum_annihilation", ann < tol.annihilation_rel, ann, tol.annihilation_rel,
             "worst |int p Q| / int |p Q| over samples and channels"});

        double f_min_rel = INFINITY;
        std::vector<MomentSet> moments;
        moments.reserve(ch.integral.size());
        for (const CollisionIntegrals &ci : ch.integral) {
            moments.push_back(corrected_moments(ci, S.init.f0, rc.physics.N));
            for (std::size_t i = 0; i < g.size(); ++i)
                if (S.init.f0[i] > 0)
                    f_min_rel = std::min(f_min_rel, moments.back().f[i] / S.init.f0[i]);
        }
        const MomentSet &mT = moments.back();
        const std::vector<double> &wT = disp.omega.back().values;
        J["dispersion"] = {{"omega_min_final", *std::min_element(wT.begin(), wT.end())},
                           {"omega_max_final", *std::max_element(wT.begin(), wT.end())},
                           {"theta_zero_final", disp.theta.back()[g.zero()]}};
        J["qbe"] = {{"mode", to_string(rc.qbe.mode)},
                    {"enable_q4", rc.qbe.enable_q4},
                    {"momentum_annihilation_max", ann},
                    {"f_minus_f0_inf_final", [&] {
                         double m = 0;
                         for (std::size_t i = 0; i < g.size(); ++i)
                             m = std::max(m, std::abs(mT.f[i] - S.init.f0[i]));
                         return m;
                     }()},
                    {"Phi_abs_final", std::abs(mT.Phi)},
                    {"f_over_f0_min", f_min_rel}};

        if (csv) {
            auto cols = [&](std::vector<std::string> head, std::initializer_list<const char *> prefixes) {
                for (const char *p : prefixes) {
                    auto c = io::field_columns(g, p);
                    head.insert(head.end(), c.begin(), c.end());
                }
                return head;
            };
            io::CsvWriter wq(file("q3_t.csv")), wm(file("moments_t.csv")), wt(file("totals_t.csv")),
                wo(file("omega_t.csv"));
            wq.header(cols({"t"}, {"q3"}));
            wm.header(cols({"t", "Phi_re", "Phi_im"}, {"f", "g_re", "g_im"}));
            wt.header(cols({"t", "Phi_tot_re", "Phi_tot_im"}, {"f_tot", "g_tot_re", "g_tot_im"}));
            wo.header(cols({"t"}, {"omega", "theta"}));
            std::optional<io::CsvWriter> w4;
            if (rc.qbe.enable_q4) {
                w4.emplace(file("q4_t.csv"));
                w4->header(cols({"t"}, {"q4"}));
            }
            for (std::size_t k = 0; k < hist.size(); ++k) {
                const double t = hist.states[k].t;
                const CollisionIntegrals &ci = ch.integral[k];
                const MomentSet &m = moments[k];
                Totals tot = reconstruct_totals(hist.states[k], m, disp.theta[k], rc.physics.N);
                std::vector<double> rq{t}, rm{t, m.Phi.real(), m.Phi.imag()},
                    rt{t, tot.Phi_tot.real(), tot.Phi_tot.imag()}, ro{t};
                rq.insert(rq.end(), ci.q3.values.begin(), ci.q3.values.end());
                rm.insert(rm.end(), m.f.values.begin(), m.f.values.end());
                for (const cplx &x : m.g.values)
                    rm.push_back(x.real());
                for (const cplx &x : m.g.values)
                    rm.push_back(x.imag());
                rt.insert(rt.end(), tot.f_tot.values.begin(), tot.f_tot.values.end());
                for (const cplx &x : tot.g_tot.values)
                    rt.push_back(x.real());
                for (const cplx &x : tot.g_tot.values)
                    rt.push_back(x.imag());
                ro.insert(ro.end(), disp.omega[k].values.begin(), disp.omega[k].values.end());
                ro.insert(ro.end(), disp.theta[k].values.begin(), disp.theta[k].values.end());
                wq.row(rq);
                wm.row(rm);
                wt.row(rt);
                wo.row(ro);
                if (w4) {
                    std::vector<double> r4{t};
                    r4.insert(r4.end(), ci.q4.values.begin(), ci.q4.values.end());
                    w4->row(r4);
                }
            }
        }
    }

    if (stage == Stage::verify) {
        sections.insert(sections.end(), {"mass_transfer", "gronwall", "symplectic"});
        std::vector<double> r = mass_transfer_check(hist);
        double rmax = 0;
        for (double x : r)
            rmax = std::max(rmax, std::abs(x));
        add({"mass_transfer", rmax < tol.mass_transfer, rmax, tol.mass_transfer, "max |r(t)|"});
        J["mass_transfer"] = {{"max_abs_residual", rmax}};

        std::vector<GronwallSample> gs = gronwall_monitors(hist);
        json gj;
        bool gok = true;
        double gmin_all = INFINITY;
        for (int b = 0; b < gb_count; ++b) {
            double mn = INFINITY;
            for (const GronwallSample &x : gs)
                mn = std::min(mn, x.slack[b]);
            gj[gronwall_name(b)] = {{"min_slack", mn}};
            gok = gok && mn >= 0;
            gmin_all = std::min(gmin_all, mn);
        }
        add({"gronwall", gok, gmin_all, 0, "min slack over all bounds and samples"});
        J["gronwall"] = gj;

        SymplecticFrame f0 = build_frame(assemble_totals(hist.states.front(), S.hfb), hist.states.front().t);
        SymplecticReport sr;
        sr.min_eigenvalue = INFINITY;
        propagate_V(f0, hist, *S.pot, [&](const SymplecticFrame &f, std::size_t k) {
            SymplecticReport x = check_invariants(f, f0, covariance_matrices(assemble_totals(hist.states[k], S.hfb)));
            sr.max_reconstruction_err = std::max(sr.max_reconstruction_err, x.max_reconstruction_err);
            sr.max_S_err = std::max(sr.max_S_err, x.max_S_err);
            sr.min_eigenvalue = std::min(sr.min_eigenvalue, x.min_eigenvalue);
        });
        add({"symplectic_reconstruction", sr.max_reconstruction_err < tol.symplectic, sr.max_reconstruction_err,
             tol.symplectic, "max |R_t - V^dagger R_0 V|"});
        add({"symplectic_S", sr.max_S_err < tol.symplectic, sr.max_S_err, tol.symplectic, "max |V S V^dagger - S|"});
        add({"symplectic_eigenvalue", sr.min_eigenvalue >= -tol.eigen_neg, sr.min_eigenvalue, -tol.eigen_neg,
             "min eigenvalue of R_t"});
        J["symplectic"] = {{"max_reconstruction_err", sr.max_reconstruction_err},
                           {"max_S_err", sr.max_S_err},
                           {"min_eigenvalue", sr.min_eigenvalue}};
    }

    std::vector<std::string> missing;
    for (const std::string &s : sections)
        if (!J.contains(s))
            missing.push_back(s);
    add({"output_completeness", missing.empty(), double(missing.size()), 0,
         missing.empty() ? "" : "missing section " + missing.front()});

    json checks = json::array();
    for (const CheckResult &c : rep.checks)
        checks.push_back({{"name", c.name}, {"ok", c.ok}, {"value", c.value}, {"tol", c.tol}, {"detail", c.detail}});
    J["checks"] = checks;
    J["first_failure"] = rep.first_failure.empty() ? json(nullptr) : json(rep.first_failure);
    J["stage"] = to_string(stage);
    rep.verify = J;
    if (opt.write && stage == Stage::verify && rc.wants("json")) {
        std::ofstream out(file("verify.json"));
        out << J.dump(2) << "\n";
    }
    return finish();
}

// B12 / B03 on the full index set at t = 0, as i,j,k,re,im (grid indices).
inline std::vector<std::string> dump_kernels(const RunConfig &rc)
{
    Setup S = make_setup(rc);
    const LatticeGrid &g = *S.grid;
    if (g.dim() != 1 || g.M() > 4)
        throw std::invalid_argument("kernels: dump needs grid.dim = 1 and grid.M <= 4");
    namespace fs = std::filesystem;
    fs::create_directories(rc.output.directory);
    const UVFields uv = bogoliubov_uv(S.init.state);
    std::vector<std::string> files;
    for (CubicKernel kind : {CubicKernel::B12, CubicKernel::B03}) {
        fs::path p = fs::path(rc.output.directory) / (std::string("kernels_") + to_string(kind) + ".csv");
        io::CsvWriter w(p);
        w.header({"i", "j", "k", "re", "im"});
        for (std::size_t i = 0; i < g.size(); ++i)
            for (std::size_t j = 0; j < g.size(); ++j)
                for (std::size_t k = 0; k < g.size(); ++k) {
                    cplx b = eval_cubic_kernel(kind, uv, *S.pot, i, j, k);
                    w.row_strings({std::to_string(i), std::to_string(j), std::to_string(k), io::num(b.real()),
                                   io::num(b.imag())});
                }
        files.push_back(p.string());
    }
    return files;
}

// Optimized vs brute force on the configured run; the last sample is compared.
inline json oracle_diff(const RunConfig &rc)
{
    Setup S = make_setup(rc);
    const LatticeGrid &g = *S.grid;
    if (g.dim() != 1 || g.M() > 3)
        throw std::invalid_argument("oracle-diff: needs grid.dim = 1 and grid.M <= 3");
    HFBHistory hist = evolve(S.init.state, rc.time.T, S.hfb, *S.pot, {}, rc.time.sample_stride);
    if (hist.size() > 21)
        throw std::invalid_argument("oracle-diff: at most 20 sampled steps (got " + std::to_string(hist.size() - 1) +
                                    "); raise time.sample_stride or lower time.T");
    DispersionHistory disp = accumulate_phase(hist);
    QbeOptions qo;
    qo.mode = rc.qbe.mode;
    qo.enable_q4 = true;
    qo.N = rc.physics.N;
    CollisionHistory ch = accumulate_collisions(hist, disp, S.init.f0, qo);
    const std::size_t K = hist.size() - 1;
    std::vector<RealField> h = rc.qbe.mode == QbeMode::frozen ? std::vector<RealField>{S.init.f0} : ch.h;
    const CollisionIntegrals &I = ch.integral[K];

    json j;
    j["samples"] = hist.size();
    j["q3"] = detail::report_json(oracle::compare(I.q3.values, oracle::naive_q3(hist, disp, h, K).values));
    j["q3g"] = detail::report_json(oracle::compare(I.q3g.values, oracle::naive_q3g(hist, disp, h, K).values));
    j["q3phi"] = detail::report_json(oracle::compare_scalar(I.q3phi, oracle::naive_q3phi(hist, disp, h, K)));
    j["q33phi"] = detail::report_json(oracle::compare_scalar(I.q33phi, oracle::naive_q33phi(hist, disp, h, K)));
    j["q4"] = detail::report_json(oracle::compare(I.q4.values, oracle::naive_q4(hist, disp, h, K).values));

    // convolution on the final state's Gamma^T and Sigma^T
    AssembledFields a = assemble_totals(hist.states.back(), S.hfb);
    ComplexField G = oracle::to_complex(a.GammaT);
    j["convolve"] = detail::report_json(
        oracle::compare(convolve(G, a.SigmaT).values, oracle::naive_convolve(G, a.SigmaT).values));
    return j;
}

} // namespace hfbkin
