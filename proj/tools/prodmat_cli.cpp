// Command-line front end: simulation, formula evaluation and the
// universality experiments, with CSV/JSON artifacts.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "prodmat/harness.hpp"
#include "prodmat/limit.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;
using namespace prodmat;

namespace {

struct Common {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;  // 0 = keep config value
    int workers = 0;
};

void add_common(CLI::App* cmd, Common& common, bool with_config) {
    if (with_config)
        cmd->add_option("--config", common.config_path, "JSON experiment config")->required();
    cmd->add_option("--out", common.out_dir, "output directory");
    cmd->add_option("--seed", common.seed, "master seed override");
    cmd->add_option("--workers", common.workers, "worker threads (0 = all)");
}

void apply_workers(int workers) {
#ifdef _OPENMP
    if (workers > 0) omp_set_num_threads(workers);
#else
    (void)workers;
#endif
}

int effective_workers(int workers) {
#ifdef _OPENMP
    return workers > 0 ? workers : omp_get_max_threads();
#else
    (void)workers;
    return 1;
#endif
}

ExperimentConfig load_config(const Common& common) {
    std::ifstream f(common.config_path);
    if (!f) throw ConfigError("cannot open config file: " + common.config_path);
    std::stringstream ss;
    ss << f.rdbuf();
    ExperimentConfig cfg = parse_config(ss.str());
    if (common.seed != 0) cfg.seed = common.seed;
    return cfg;
}

int finish_experiment(const ExperimentReport& rep, const ExperimentConfig& cfg,
                      const Common& common, double wall) {
    fs::create_directories(common.out_dir);
    write_report_json(rep, cfg, common.out_dir + "/report.json");
    write_samples_csv(rep, common.out_dir + "/samples.csv");
    write_meta_json(wall, effective_workers(common.workers), common.out_dir + "/meta.json");
    for (const auto& q : rep.queries) {
        std::printf("query c=");
        for (double c : q.c) std::printf("%g ", c);
        std::printf("m=");
        for (int m : q.m) std::printf("%d ", m);
        std::printf("formula=%.8g estimate=%.8g stderr=%.3g z=%.3f%s\n", q.formula, q.estimate,
                    q.stderr_, q.z, q.gamma_zero ? " (gamma=0 edge case)" : "");
    }
    for (const auto& s : rep.statistics)
        std::printf("stat %s statistic=%.6g p=%.4g\n", s.name.c_str(), s.statistic, s.p_value);
    std::printf("%s\n", rep.pass ? "PASS" : "FAIL");
    return rep.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"products of right-unitarily-invariant random matrices: simulation and exact formulas"};
    app.require_subcommand(1);

    // sample-paths
    Common sp_common;
    int sp_n = 50;
    double sp_tmax = 10.0;
    int sp_steps = 500;
    auto* sp = app.add_subcommand("sample-paths", "centered log singular value trajectories");
    sp->add_option("--n", sp_n, "matrix size");
    sp->add_option("--t-max", sp_tmax, "largest ensemble time");
    sp->add_option("--steps", sp_steps, "grid points (>= 100)");
    add_common(sp, sp_common, false);

    // laplace-limit / laplace-finite-n
    Common ll_common;
    std::vector<double> ll_c, ll_t;
    int ll_nmax = 0;
    auto* ll = app.add_subcommand("laplace-limit", "limiting joint Laplace transform");
    ll->add_option("--c", ll_c, "exponents c_1..c_k")->required();
    ll->add_option("--t", ll_t, "times t_1 >= ... >= t_k")->required();
    ll->add_option("--n-max", ll_nmax, "residue series cap (0 = auto)");
    add_common(ll, ll_common, false);

    Common lf_common;
    std::vector<double> lf_c, lf_t;
    int lf_n = 0, lf_nmax = 0;
    auto* lf = app.add_subcommand("laplace-finite-n", "finite-N Dyson Laplace transform (centered)");
    lf->add_option("--c", lf_c, "exponents")->required();
    lf->add_option("--t", lf_t, "times")->required();
    lf->add_option("--N", lf_n, "matrix size")->required();
    lf->add_option("--n-max", lf_nmax, "residue series cap (0 = auto)");
    add_common(lf, lf_common, false);

    // kernel
    Common k_common;
    double k_s = 1.0, k_t = 1.0, k_x = 0.0, k_y = 0.0;
    double k_cw = std::numeric_limits<double>::quiet_NaN();
    bool k_density_grid = false;
    double k_xmin = -6.0, k_xmax = 4.0, k_dx = 0.1;
    double k_count_a = std::numeric_limits<double>::quiet_NaN();
    auto* kn = app.add_subcommand("kernel", "limiting correlation kernel and intensity");
    kn->add_option("--s", k_s, "first time");
    kn->add_option("--t", k_t, "second time");
    kn->add_option("--x", k_x, "first position");
    kn->add_option("--y", k_y, "second position");
    kn->add_option("--cw", k_cw, "w-line abscissa (default: saddle-adapted)");
    kn->add_flag("--density-grid", k_density_grid, "emit intensity CSV over x in [xmin, xmax]");
    kn->add_option("--xmin", k_xmin, "grid start");
    kn->add_option("--xmax", k_xmax, "grid end");
    kn->add_option("--dx", k_dx, "grid spacing");
    kn->add_option("--count-above", k_count_a, "expected count of points above this level");
    add_common(kn, k_common, false);

    // experiments
    Common u_common;
    auto* un = app.add_subcommand("universality", "Monte Carlo vs limiting Laplace transform");
    add_common(un, u_common, true);

    Common o_common;
    auto* om = app.add_subcommand("oracle-smalln", "small-N operator expansion vs Monte Carlo");
    add_common(om, o_common, true);

    Common c_common;
    double cv_c = 0.5, cv_t = 1.0;
    std::vector<int> cv_ns = {50, 100, 200, 400};
    auto* cv = app.add_subcommand("convergence", "finite-N to limit convergence table");
    cv->add_option("--c", cv_c, "exponent");
    cv->add_option("--t", cv_t, "time");
    cv->add_option("--N", cv_ns, "matrix sizes");
    add_common(cv, c_common, false);

    CLI11_PARSE(app, argc, argv);

    try {
        auto t0 = std::chrono::steady_clock::now();
        auto wall = [&] {
            return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        };

        if (sp->parsed()) {
            apply_workers(sp_common.workers);
            std::uint64_t seed = sp_common.seed ? sp_common.seed : 1;
            SamplePaths paths = run_sample_paths(sp_n, sp_tmax, sp_steps, seed);
            fs::create_directories(sp_common.out_dir);
            write_sample_paths_csv(paths, sp_common.out_dir + "/paths.csv");
            write_meta_json(wall(), effective_workers(sp_common.workers),
                            sp_common.out_dir + "/meta.json");
            std::printf("wrote %s/paths.csv (%d paths, %zu times)\n", sp_common.out_dir.c_str(),
                        paths.n, paths.times.size());
            return 0;
        }
        if (ll->parsed()) {
            ContourPlan plan;
            plan.n_max = ll_nmax;
            std::printf("%.15g\n", laplace_limit({ll_t, ll_c}, plan));
            return 0;
        }
        if (lf->parsed()) {
            ContourPlan plan;
            plan.n_max = lf_nmax;
            std::printf("%.15g\n", laplace_finite_n({lf_t, lf_c}, lf_n, plan));
            return 0;
        }
        if (kn->parsed()) {
            apply_workers(k_common.workers);
            if (k_density_grid) {
                fs::create_directories(k_common.out_dir);
                std::string path = k_common.out_dir + "/density.csv";
                std::ofstream f(path, std::ios::binary);
                if (!f) throw ConfigError("cannot open " + path);
                f << "t,x,density\r\n";
                int npts = static_cast<int>(std::floor((k_xmax - k_xmin) / k_dx + 1e-9)) + 1;
                std::vector<double> dens(npts);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
                for (int i = 0; i < npts; ++i) dens[i] = kernel_density(k_t, k_xmin + i * k_dx);
                for (int i = 0; i < npts; ++i) {
                    char buf[96];
                    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\r\n", k_t,
                                  k_xmin + i * k_dx, dens[i]);
                    f << buf;
                }
                std::printf("wrote %s\n", path.c_str());
            } else if (std::isfinite(k_count_a)) {
                std::printf("%.15g\n", expected_count(k_t, k_count_a));
            } else {
                std::printf("%.15g\n", kernel_eval({k_s, k_t, k_x, k_y}, k_cw));
            }
            return 0;
        }
        if (un->parsed()) {
            apply_workers(u_common.workers);
            ExperimentConfig cfg = load_config(u_common);
            ExperimentReport rep = run_universality(cfg);
            return finish_experiment(rep, cfg, u_common, wall());
        }
        if (om->parsed()) {
            apply_workers(o_common.workers);
            ExperimentConfig cfg = load_config(o_common);
            ExperimentReport rep = run_oracle_smalln(cfg);
            return finish_experiment(rep, cfg, o_common, wall());
        }
        if (cv->parsed()) {
            auto rows = run_convergence_sweep(cv_c, cv_t, cv_ns);
            fs::create_directories(c_common.out_dir);
            write_convergence_csv(rows, c_common.out_dir + "/convergence.csv");
            for (const auto& r : rows)
                std::printf("N=%-5d finite=%.10g limit=%.10g err=%.3e ratio=%.3f%s\n", r.n,
                            r.finite_n, r.limit, r.err, r.ratio, r.exact ? " (exact)" : "");
            return 0;
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
