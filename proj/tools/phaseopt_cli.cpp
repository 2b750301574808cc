#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "phaseopt/study.hpp"

namespace {

using namespace phaseopt;

ReferenceShape shape_by_name(const std::string& name) {
    if (name == "disk") return ReferenceShape::disk(0.0, 0.0, 1.0);
    if (name == "square") return ReferenceShape::rectangle(0.0, 0.0, 2.0, 2.0);
    throw CLI::ValidationError("--shape must be disk or square");
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << content;
}

std::string summary_csv(const std::vector<RunSummary>& runs, bool with_alpha) {
    std::string out = with_alpha ? "alpha" : "seed";
    out += ",total,iterations,termination";
    std::size_t max_areas = 0;
    for (const RunSummary& r : runs) max_areas = std::max(max_areas, r.per_phase_area.size());
    for (std::size_t l = 1; l <= max_areas; ++l) out += ",area_" + std::to_string(l);
    out += ",raster\n";
    char buf[64];
    for (const RunSummary& r : runs) {
        if (with_alpha)
            std::snprintf(buf, sizeof buf, "%.17g", r.alpha);
        else
            std::snprintf(buf, sizeof buf, "%llu", static_cast<unsigned long long>(r.seed));
        out += buf;
        std::snprintf(buf, sizeof buf, ",%.17g,%d,%s", r.final_total, r.iterations,
                      r.termination == TerminationReason::StepCriterion ? "step" : "cap");
        out += buf;
        for (double a : r.per_phase_area) {
            std::snprintf(buf, sizeof buf, ",%.17g", a);
            out += buf;
        }
        out += "," + r.raster_path + "\n";
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Penalized Dirichlet-Laplacian eigenvalues and multiphase partition optimization"};
    app.require_subcommand(1);

    // eig-error
    std::string ee_shape = "disk", ee_out = "table.csv";
    std::vector<int> ee_n{100};
    std::vector<double> ee_c{1e3, 1e4, 1e5, 1e6, 1e7, 1e8, 1e9};
    int ee_kmax = 10, ee_jobs = 1;
    double ee_tol = 1e-9;
    std::uint64_t ee_seed = 0;
    bool ee_node_center = false;
    auto* ee = app.add_subcommand("eig-error", "relative-error table over (N, C)");
    ee->add_option("--shape", ee_shape, "disk|square")->required();
    ee->add_option("--n", ee_n, "grid resolutions N")->required();
    ee->add_option("--c", ee_c, "penalization constants");
    ee->add_option("--kmax", ee_kmax, "eigenvalues compared per cell");
    ee->add_option("--tol", ee_tol, "eigensolver tolerance");
    ee->add_option("--seed", ee_seed, "base seed");
    ee->add_option("--jobs", ee_jobs, "worker pool size");
    ee->add_flag("--node-center-mask", ee_node_center,
                 "sample shapes without the h/4 erosion (see README)");
    ee->add_option("--out", ee_out, "output CSV path")->required();

    // optimize
    std::string opt_config, opt_out = ".";
    auto* op = app.add_subcommand("optimize", "one projected-gradient run");
    op->add_option("--config", opt_config, "run config file")->required();
    op->add_option("--out", opt_out, "output directory");

    // sweep-alpha
    std::string sw_config, sw_out = ".";
    std::vector<double> sw_alphas;
    auto* sw = app.add_subcommand("sweep-alpha", "optimize across an alpha sweep");
    sw->add_option("--config", sw_config, "run config file")->required();
    sw->add_option("--alphas", sw_alphas, "strictly increasing alphas")->required();
    sw->add_option("--out", sw_out, "output directory");

    // stability
    std::string st_config, st_out;
    int st_seeds = 4;
    auto* st = app.add_subcommand("stability", "repeat a run from random seeds");
    st->add_option("--config", st_config, "run config file")->required();
    st->add_option("--seeds", st_seeds, "number of seeds (0..n-1)");
    st->add_option("--out", st_out, "output directory (optional)");

    // calibrate-alpha
    std::string ca_config, ca_out;
    std::vector<double> ca_alphas;
    double ca_target = 205.2;
    auto* ca = app.add_subcommand("calibrate-alpha",
                                  "scan alphas, report the final cost of each");
    ca->add_option("--config", ca_config, "run config file")->required();
    ca->add_option("--alphas", ca_alphas, "strictly increasing alphas")->required();
    ca->add_option("--target", ca_target, "cost to match");
    ca->add_option("--out", ca_out, "output directory (optional)");

    // ref-eigs
    std::string re_shape = "disk", re_out = "reference.csv";
    int re_count = 10;
    auto* re = app.add_subcommand("ref-eigs", "export analytic reference eigenvalues");
    re->add_option("--shape", re_shape, "disk|square")->required();
    re->add_option("--count", re_count, "how many eigenvalues");
    re->add_option("--out", re_out, "output CSV path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ee) {
            ErrorTable table = error_table(
                shape_by_name(ee_shape), ee_n, ee_c, ee_kmax, ee_tol, ee_seed, ee_jobs,
                ee_node_center ? MaskRule::NodeCenter : MaskRule::ErodeQuarterCell);
            write_file(ee_out, table.csv());
            std::cout << table.csv();
        } else if (*op) {
            OptimizerConfig cfg = parse_run_config(opt_config);
            cfg.out_dir = opt_out;
            RunLog log = optimize(cfg);
            std::cout << "final total " << log.final_total() << " after "
                      << log.records.back().iteration << " iterations ("
                      << (log.termination == TerminationReason::StepCriterion ? "step criterion"
                                                                              : "iteration cap")
                      << ")\n"
                      << "outputs in " << opt_out << "/" << cfg.run_id << "_*\n";
        } else if (*sw) {
            OptimizerConfig cfg = parse_run_config(sw_config);
            cfg.out_dir = sw_out;
            SweepResult res = alpha_sweep(cfg, sw_alphas);
            const std::string csv = summary_csv(res.runs, true);
            write_file(sw_out + "/" + cfg.run_id + "_sweep.csv", csv);
            std::cout << csv;
        } else if (*st) {
            OptimizerConfig cfg = parse_run_config(st_config);
            cfg.out_dir = st_out;
            StabilityResult res = stability_study(cfg, st_seeds);
            std::cout << summary_csv(res.runs, false);
            std::printf("spread %.6g\n", res.spread);
            if (!st_out.empty())
                write_file(st_out + "/" + cfg.run_id + "_stability.csv",
                           summary_csv(res.runs, false));
        } else if (*ca) {
            OptimizerConfig cfg = parse_run_config(ca_config);
            cfg.out_dir = ca_out;
            SweepResult res = alpha_sweep(cfg, ca_alphas);
            double best_alpha = 0.0, best_gap = 1e300;
            for (const RunSummary& r : res.runs) {
                std::printf("alpha %.10g -> total %.10g\n", r.alpha, r.final_total);
                const double gap = std::abs(r.final_total - ca_target);
                if (gap < best_gap) {
                    best_gap = gap;
                    best_alpha = r.alpha;
                }
            }
            std::printf("closest to %.6g: alpha %.10g (|gap| %.6g)\n", ca_target, best_alpha,
                        best_gap);
        } else if (*re) {
            write_file(re_out, reference_eigenvalues_csv(shape_by_name(re_shape), re_count));
            std::cout << "wrote " << re_out << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
