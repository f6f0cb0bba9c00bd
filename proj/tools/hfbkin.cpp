#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "hfbkin/pipeline.hpp"

using namespace hfbkin;

namespace {

RunConfig load(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

int report(const PipelineReport &r)
{
    for (const CheckResult &c : r.checks)
        std::cout << (c.ok ? "ok   " : "FAIL ") << c.name << " value=" << io::num(c.value)
                  << (c.detail.empty() ? "" : "  (" + c.detail + ")") << "\n";
    for (const std::string &f : r.files)
        std::cout << "wrote " << f << "\n";
    std::cout << "elapsed " << r.seconds << " s\n";
    if (r.exit_code != 0)
        std::cerr << "hfbkin: check failed: " << r.first_failure << "\n";
    return r.exit_code;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"HFB kinetic simulator"};
    app.require_subcommand(1);

    std::string cfg_path, out_dir, mode;
    bool q4 = false;
    std::size_t stride = 0;

    auto add_common = [&](CLI::App *sub) {
        sub->add_option("config", cfg_path, "flat key = value config file")->required();
        sub->add_option("--output-dir", out_dir, "override output.directory");
    };
    auto *sim = app.add_subcommand("simulate", "evolve the HFB system and write observables");
    auto *qbe = app.add_subcommand("qbe", "simulate, then accumulate the collision integrals");
    auto *ker = app.add_subcommand("kernels", "dump B12/B03 at t = 0 (dim 1, M <= 4)");
    auto *ver = app.add_subcommand("verify", "full pipeline plus verification report");
    auto *orc = app.add_subcommand("oracle-diff", "compare optimized sums with brute force");
    for (CLI::App *s : {sim, qbe, ker, ver, orc})
        add_common(s);
    for (CLI::App *s : {qbe, ver, orc}) {
        s->add_option("--mode", mode, "frozen|selfconsistent");
        s->add_flag("--enable-q4", q4, "include the quartic operator");
        s->add_option("--sample-stride", stride, "store every k-th step");
    }
    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig rc = load(cfg_path);
        if (!out_dir.empty())
            rc.output.directory = out_dir;
        if (!mode.empty())
            rc.qbe.mode = parse_qbe_mode(mode);
        if (q4)
            rc.qbe.enable_q4 = true;
        if (stride > 0)
            rc.time.sample_stride = stride;
        validate(rc);

        if (*sim)
            return report(run_pipeline(rc, Stage::simulate));
        if (*qbe)
            return report(run_pipeline(rc, Stage::qbe));
        if (*ver) {
            PipelineReport r = run_pipeline(rc, Stage::verify);
            std::cout << r.verify.dump(2) << "\n";
            return report(r);
        }
        if (*ker) {
            for (const std::string &f : dump_kernels(rc))
                std::cout << "wrote " << f << "\n";
            return 0;
        }
        if (*orc) {
            std::cout << oracle_diff(rc).dump(2) << "\n";
            return 0;
        }
    } catch (const std::exception &e) {
        std::cerr << "hfbkin: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
