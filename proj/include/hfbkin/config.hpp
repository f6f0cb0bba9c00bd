#pragma once

#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include "hfb.hpp"
#include "qbe.hpp"

namespace hfbkin {

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct RunConfig {
    struct {
        int dim = 1;
        double L = 2 * M_PI;
        int M = 8;
    } grid;
    struct {
        PotentialKind kind = PotentialKind::gaussian;
        PotentialParams params;
    } potential;
    struct {
        double lambda = 0.1;
        double N = 100;
        Order order = Order::second;
    } physics;
    struct {
        double beta = 1.0;
        double kappa0 = 0.5;
        double gamma_scale = 0.5;
        double phi0 = 1.0;
    } initial;
    struct {
        double dt = 1e-3;
        double T = 10;
        Integrator integrator = Integrator::lawson_rk4;
        std::size_t sample_stride = 1;
    } time;
    struct {
        QbeMode mode = QbeMode::frozen;
        bool enable_q4 = false;
    } qbe;
    struct {
        std::string directory = "out";
        std::vector<std::string> formats = {"csv", "json"};
    } output;

    bool wants(const std::string &fmt) const
    {
        for (const std::string &f : output.formats)
            if (f == fmt)
                return true;
        return false;
    }
};

inline bool operator==(const RunConfig &a, const RunConfig &b)
{
    return a.grid.dim == b.grid.dim && a.grid.L == b.grid.L && a.grid.M == b.grid.M &&
           a.potential.kind == b.potential.kind && a.potential.params.amplitude == b.potential.params.amplitude &&
           a.potential.params.width == b.potential.params.width && a.physics.lambda == b.physics.lambda &&
           a.physics.N == b.physics.N && a.physics.order == b.physics.order && a.initial.beta == b.initial.beta &&
           a.initial.kappa0 == b.initial.kappa0 && a.initial.gamma_scale == b.initial.gamma_scale &&
           a.initial.phi0 == b.initial.phi0 && a.time.dt == b.time.dt && a.time.T == b.time.T &&
           a.time.integrator == b.time.integrator && a.time.sample_stride == b.time.sample_stride &&
           a.qbe.mode == b.qbe.mode && a.qbe.enable_q4 == b.qbe.enable_q4 &&
           a.output.directory == b.output.directory && a.output.formats == b.output.formats;
}

namespace detail {

inline std::string trim(const std::string &s)
{
    const char *ws = " \t\r\n";
    auto a = s.find_first_not_of(ws);
    if (a == std::string::npos)
        return "";
    auto b = s.find_last_not_of(ws);
    return s.substr(a, b - a + 1);
}

[[noreturn]] inline void bad(const std::string &key, const std::string &what)
{
    throw ConfigError(key + ": " + what);
}

// plain number, optionally followed by "pi" (e.g. "2pi", "0.5 pi", "pi")
inline double parse_real(const std::string &key, const std::string &v)
{
    std::string s = v;
    double mult = 1.0;
    if (s.size() >= 2 && s.compare(s.size() - 2, 2, "pi") == 0) {
        mult = M_PI;
        s = trim(s.substr(0, s.size() - 2));
        if (s.empty())
            return mult;
    }
    double x = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || p != s.data() + s.size())
        bad(key, "expected a real number, got '" + v + "'");
    if (!std::isfinite(x))
        bad(key, "must be finite, got '" + v + "'");
    return x * mult;
}

inline long long parse_int(const std::string &key, const std::string &v)
{
    long long x = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size())
        bad(key, "expected an integer, got '" + v + "'");
    return x;
}

inline bool parse_bool(const std::string &key, const std::string &v)
{
    if (v == "true" || v == "1" || v == "yes" || v == "on")
        return true;
    if (v == "false" || v == "0" || v == "no" || v == "off")
        return false;
    bad(key, "expected true|false, got '" + v + "'");
}

template <class Fn>
auto wrap(const std::string &key, Fn fn)
{
    try {
        return fn();
    } catch (const ConfigError &) {
        throw;
    } catch (const std::exception &e) {
        bad(key, e.what());
    }
}

inline std::string fmt_real(double x)
{
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

} // namespace detail

// Re-checks every numeric constraint; messages name the key.
inline void validate(const RunConfig &c)
{
    using detail::bad;
    if (c.grid.dim < 1 || c.grid.dim > 3)
        bad("grid.dim", "dim ∈ {1,2,3} required, got " + std::to_string(c.grid.dim));
    if (!(c.grid.L > 0))
        bad("grid.L", "L > 0 required");
    if (c.grid.M < 0)
        bad("grid.M", "M >= 0 required");
    if (!(c.potential.params.amplitude >= 0))
        bad("potential.amplitude", "amplitude >= 0 required");
    if (c.potential.kind == PotentialKind::gaussian && !(c.potential.params.width > 0))
        bad("potential.width", "width > 0 required");
    if (!(c.physics.lambda >= 0))
        bad("physics.lambda", "lambda >= 0 required");
    if (!(c.physics.N > 0))
        bad("physics.N", "N > 0 required");
    if (!(c.initial.beta >= 0))
        bad("initial.beta", "beta >= 0 required");
    if (!(c.initial.kappa0 > 0))
        bad("initial.kappa0", "kappa0 > 0 required");
    if (!(c.initial.gamma_scale >= 0))
        bad("initial.gamma_scale", "gamma_scale >= 0 required");
    if (!(c.time.dt > 0))
        bad("time.dt", "dt > 0 required");
    if (!(c.time.T >= 0))
        bad("time.T", "T >= 0 required");
    std::size_t K = detail::wrap("time.T", [&] { return step_count(c.time.T, c.time.dt); });
    if (c.time.sample_stride < 1)
        bad("time.sample_stride", "sample_stride >= 1 required");
    if (K % c.time.sample_stride != 0)
        bad("time.sample_stride", "sample_stride must divide T/dt = " + std::to_string(K));
    if (c.output.directory.empty())
        bad("output.directory", "must not be empty");
    for (const std::string &f : c.output.formats)
        if (f != "csv" && f != "json")
            bad("output.formats", "formats ⊆ {csv,json}, got '" + f + "'");
}

inline RunConfig parse_config(const std::string &text)
{
    using detail::bad;
    RunConfig c;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        line = detail::trim(line);
        if (line.empty())
            continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'section.key = value'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (!seen.insert(key).second)
            bad(key, "duplicate key");
        if (val.empty())
            bad(key, "missing value");

        auto real = [&] { return detail::parse_real(key, val); };
        auto integer = [&] { return detail::parse_int(key, val); };
        if (key == "grid.dim") {
            long long d = integer();
            if (d < 1 || d > 3)
                bad(key, "dim ∈ {1,2,3} required, got " + val);
            c.grid.dim = int(d);
        } else if (key == "grid.L")
            c.grid.L = real();
        else if (key == "grid.M") {
            long long m = integer();
            if (m < 0 || m > 1000)
                bad(key, "0 <= M <= 1000 required, got " + val);
            c.grid.M = int(m);
        } else if (key == "potential.kind")
            c.potential.kind = detail::wrap(key, [&] { return parse_potential_kind(val); });
        else if (key == "potential.amplitude")
            c.potential.params.amplitude = real();
        else if (key == "potential.width")
            c.potential.params.width = real();
        else if (key == "physics.lambda")
            c.physics.lambda = real();
        else if (key == "physics.N")
            c.physics.N = real();
        else if (key == "physics.order")
            c.physics.order = detail::wrap(key, [&] { return parse_order(val); });
        else if (key == "initial.beta")
            c.initial.beta = real();
        else if (key == "initial.kappa0")
            c.initial.kappa0 = real();
        else if (key == "initial.gamma_scale")
            c.initial.gamma_scale = real();
        else if (key == "initial.phi0")
            c.initial.phi0 = real();
        else if (key == "time.dt")
            c.time.dt = real();
        else if (key == "time.T")
            c.time.T = real();
        else if (key == "time.integrator")
            c.time.integrator = detail::wrap(key, [&] { return parse_integrator(val); });
        else if (key == "time.sample_stride") {
            long long s = integer();
            if (s < 1)
                bad(key, "sample_stride >= 1 required, got " + val);
            c.time.sample_stride = std::size_t(s);
        } else if (key == "qbe.mode")
            c.qbe.mode = detail::wrap(key, [&] { return parse_qbe_mode(val); });
        else if (key == "qbe.enable_q4")
            c.qbe.enable_q4 = detail::parse_bool(key, val);
        else if (key == "output.directory")
            c.output.directory = val;
        else if (key == "output.formats") {
            c.output.formats.clear();
            std::istringstream fs(val);
            std::string f;
            while (std::getline(fs, f, ','))
                if (!(f = detail::trim(f)).empty())
                    c.output.formats.push_back(f);
        } else
            bad(key, "unknown key");
    }
    validate(c);
    return c;
}

inline std::string serialize(const RunConfig &c)
{
    using detail::fmt_real;
    std::ostringstream o;
    o << "grid.dim = " << c.grid.dim << "\n"
      << "grid.L = " << fmt_real(c.grid.L) << "\n"
      << "grid.M = " << c.grid.M << "\n"
      << "potential.kind = " << to_string(c.potential.kind) << "\n"
      << "potential.amplitude = " << fmt_real(c.potential.params.amplitude) << "\n"
      << "potential.width = " << fmt_real(c.potential.params.width) << "\n"
      << "physics.lambda = " << fmt_real(c.physics.lambda) << "\n"
      << "physics.N = " << fmt_real(c.physics.N) << "\n"
      << "physics.order = " << to_string(c.physics.order) << "\n"
      << "initial.beta = " << fmt_real(c.initial.beta) << "\n"
      << "initial.kappa0 = " << fmt_real(c.initial.kappa0) << "\n"
      << "initial.gamma_scale = " << fmt_real(c.initial.gamma_scale) << "\n"
      << "initial.phi0 = " << fmt_real(c.initial.phi0) << "\n"
      << "time.dt = " << fmt_real(c.time.dt) << "\n"
      << "time.T = " << fmt_real(c.time.T) << "\n"
      << "time.integrator = " << to_string(c.time.integrator) << "\n"
      << "time.sample_stride = " << c.time.sample_stride << "\n"
      << "qbe.mode = " << to_string(c.qbe.mode) << "\n"
      << "qbe.enable_q4 = " << (c.qbe.enable_q4 ? "true" : "false") << "\n"
      << "output.directory = " << c.output.directory << "\n"
      << "output.formats = ";
    for (std::size_t i = 0; i < c.output.formats.size(); ++i)
        o << (i ? "," : "") << c.output.formats[i];
    o << "\n";
    return o.str();
}

} // namespace hfbkin
