#include "phaseopt/study.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <thread>

#include "phaseopt/rng.hpp"

namespace phaseopt {

namespace {

std::uint64_t cell_seed(std::uint64_t seed, int N, double C) {
    std::uint64_t cbits;
    static_assert(sizeof cbits == sizeof C);
    std::memcpy(&cbits, &C, sizeof cbits);
    return mix_seed(seed, static_cast<std::uint64_t>(N), cbits);
}

}  // namespace

std::string ErrorTable::csv() const {
    std::string out = "N";
    char buf[64];
    for (double C : Cs) {
        std::snprintf(buf, sizeof buf, ",C=%g", C);
        out += buf;
    }
    out += "\n";
    for (std::size_t r = 0; r < Ns.size(); ++r) {
        out += std::to_string(Ns[r]);
        for (std::size_t c = 0; c < Cs.size(); ++c) {
            if (failures[r][c].empty())
                std::snprintf(buf, sizeof buf, ",%.6g", entries[r][c]);
            else
                std::snprintf(buf, sizeof buf, ",failed(%s)", failures[r][c].c_str());
            out += buf;
        }
        out += "\n";
    }
    return out;
}

double ErrorTable::entry(int N, double C) const {
    for (std::size_t r = 0; r < Ns.size(); ++r)
        if (Ns[r] == N)
            for (std::size_t c = 0; c < Cs.size(); ++c)
                if (Cs[c] == C) return entries[r][c];
    throw std::invalid_argument("ErrorTable::entry: no such cell");
}

ErrorTable error_table(const ReferenceShape& shape, const std::vector<int>& Ns,
                       const std::vector<double>& Cs, int k_max, double tol,
                       std::uint64_t seed, int jobs, MaskRule rule) {
    if (k_max < 1) throw std::invalid_argument("error_table: k_max must be >= 1");
    ErrorTable table;
    table.Ns = Ns;
    table.Cs = Cs;
    table.k_max = k_max;
    table.shape_id = shape.id();
    table.entries.assign(Ns.size(), std::vector<double>(Cs.size(), std::nan("")));
    table.failures.assign(Ns.size(), std::vector<std::string>(Cs.size(), "pending"));
    const std::vector<double> ref = shape.reference_eigenvalues(k_max);

    const std::size_t cells = Ns.size() * Cs.size();
    auto run_cell = [&](std::size_t cell) {
        const std::size_t r = cell / Cs.size();
        const std::size_t c = cell % Cs.size();
        const int N = Ns[r];
        const double C = Cs[c];
        try {
            GridSpec grid = GridSpec::dirichlet_box(-1.5, 1.5, -1.5, 1.5, N, N);
            const double margin = rule == MaskRule::ErodeQuarterCell ? grid.hx / 4.0 : 0.0;
            ScalarField phi = rasterize(shape, grid, margin);
            PenalizedOperator op(grid, phi, C);
            std::vector<EigenPair> pairs =
                smallest_eigenpairs(op, k_max, tol, cell_seed(seed, N, C));
            double worst = 0.0;
            for (int k = 0; k < k_max; ++k)
                worst = std::max(worst, std::abs(pairs[k].lambda - ref[k]) / ref[k]);
            table.entries[r][c] = worst;
            table.failures[r][c].clear();
        } catch (const std::exception& e) {
            table.failures[r][c] = e.what();
        }
    };

    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(cells)));
    if (workers == 1) {
        for (std::size_t cell = 0; cell < cells; ++cell) run_cell(cell);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t cell = next.fetch_add(1); cell < cells;
                     cell = next.fetch_add(1))
                    run_cell(cell);
            });
        for (std::thread& t : pool) t.join();
    }
    return table;
}

double decay_exponent(const ErrorTable& table, int N) {
    std::size_t row = table.Ns.size();
    for (std::size_t r = 0; r < table.Ns.size(); ++r)
        if (table.Ns[r] == N) row = r;
    if (row == table.Ns.size()) throw std::invalid_argument("decay_exponent: no row for N");
    const std::vector<double>& e = table.entries[row];
    for (std::size_t c = 0; c < e.size(); ++c)
        if (!table.failures[row][c].empty())
            throw InsufficientDataError("decay_exponent: row has failed cells");

    // Plateau onset: the first pair of successive entries within 5% relative.
    std::size_t pre = e.size();
    for (std::size_t c = 0; c + 1 < e.size(); ++c) {
        if (std::abs(e[c + 1] - e[c]) / e[c] < 0.05) {
            pre = c;
            break;
        }
    }
    if (pre < 3)
        throw InsufficientDataError("decay_exponent: fewer than 3 pre-plateau columns");

    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double n = static_cast<double>(pre);
    for (std::size_t c = 0; c < pre; ++c) {
        const double x = std::log(table.Cs[c]);
        const double y = std::log(e[c]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace {

RunSummary summarize(const RunLog& log, std::uint64_t seed, double alpha,
                     const std::string& raster_path) {
    RunSummary s;
    s.seed = seed;
    s.alpha = alpha;
    s.final_total = log.final_total();
    s.iterations = log.records.back().iteration;
    s.termination = log.termination;
    s.labels = argmax_partition(log.final_system);
    const GridSpec& g = log.final_system.grid;
    s.per_phase_area.assign(log.final_system.h, 0.0);
    for (std::uint16_t lab : s.labels)
        if (lab <= log.final_system.h) s.per_phase_area[lab - 1] += g.cell_area();
    s.raster_path = raster_path;
    if (!raster_path.empty())
        write_ppm(s.labels, g, log.final_system.h, raster_path);
    return s;
}

}  // namespace

StabilityResult stability_study(const OptimizerConfig& cfg, int n_seeds) {
    if (n_seeds < 2) throw std::invalid_argument("stability_study: n_seeds must be >= 2");
    std::vector<std::uint64_t> seeds(n_seeds);
    for (int i = 0; i < n_seeds; ++i) seeds[i] = static_cast<std::uint64_t>(i);
    return stability_study(cfg, seeds);
}

StabilityResult stability_study(const OptimizerConfig& cfg,
                                const std::vector<std::uint64_t>& seeds) {
    if (seeds.empty()) throw std::invalid_argument("stability_study: needs seeds");
    StabilityResult result;
    for (std::uint64_t s : seeds) {
        OptimizerConfig run_cfg = cfg;
        run_cfg.seed = s;
        run_cfg.run_id = cfg.run_id + "_seed" + std::to_string(s);
        std::string raster;
        if (!cfg.out_dir.empty())
            raster = cfg.out_dir + "/" + run_cfg.run_id + "_final.ppm";
        RunLog log = optimize(run_cfg);
        result.runs.push_back(summarize(log, s, cfg.alpha, raster));
    }
    double lo = result.runs[0].final_total, hi = lo;
    for (const RunSummary& r : result.runs) {
        lo = std::min(lo, r.final_total);
        hi = std::max(hi, r.final_total);
    }
    result.spread = (hi - lo) / std::abs(lo);
    return result;
}

SweepResult alpha_sweep(const OptimizerConfig& base_cfg, const std::vector<double>& alphas) {
    for (std::size_t i = 0; i + 1 < alphas.size(); ++i)
        if (!(alphas[i] < alphas[i + 1]))
            throw std::invalid_argument("alpha_sweep: alphas must be strictly increasing");
    SweepResult result;
    result.alphas = alphas;
    if (alphas.empty()) return result;
    result.runs.resize(alphas.size());

    // Largest alpha first; each next run warm-starts from the previous final
    // densities.
    std::optional<PhaseSystem> init;
    for (std::size_t idx = alphas.size(); idx-- > 0;) {
        OptimizerConfig cfg = base_cfg;
        cfg.alpha = alphas[idx];
        char tag[32];
        std::snprintf(tag, sizeof tag, "_alpha%g", alphas[idx]);
        cfg.run_id = base_cfg.run_id + tag;
        std::string raster;
        if (!cfg.out_dir.empty()) raster = cfg.out_dir + "/" + cfg.run_id + "_final.ppm";
        RunLog log = optimize(cfg, init);
        init = log.final_system;
        result.runs[idx] = summarize(log, cfg.seed, alphas[idx], raster);
    }
    return result;
}

OptimizerConfig parse_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const char* ws = " \t\r";
            s.erase(0, s.find_first_not_of(ws));
            const std::size_t last = s.find_last_not_of(ws);
            s.resize(last == std::string::npos ? 0 : last + 1);
            return s;
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!key.empty()) kv[key] = value;
    }

    auto get = [&](const std::string& key, const std::string& fallback) {
        auto it = kv.find(key);
        return it == kv.end() ? fallback : it->second;
    };
    auto getd = [&](const std::string& key, double fallback) {
        auto it = kv.find(key);
        return it == kv.end() ? fallback : std::stod(it->second);
    };
    auto geti = [&](const std::string& key, int fallback) {
        auto it = kv.find(key);
        return it == kv.end() ? fallback : std::stoi(it->second);
    };

    const int nx = geti("nx", 0);
    const int ny = geti("ny", nx);
    const double width = getd("width", 0.0);
    const double height = getd("height", width);
    const double xmin = getd("xmin", 0.0);
    const double ymin = getd("ymin", 0.0);
    const std::string bc = get("bc", "periodic");

    OptimizerConfig cfg;
    if (bc == "periodic")
        cfg.grid = GridSpec::periodic_box(xmin, xmin + width, ymin, ymin + height, nx, ny);
    else if (bc == "dirichlet")
        cfg.grid = GridSpec::dirichlet_box(xmin, xmin + width, ymin, ymin + height, nx, ny);
    else
        throw std::runtime_error(path + ": bc must be periodic or dirichlet");
    cfg.k = geti("k", 1);
    cfg.alpha = getd("alpha", 0.0);
    cfg.h = geti("h", 1);
    cfg.C = getd("C", 1e4);
    cfg.gamma0 = getd("gamma0", 1e-4);
    cfg.omega = getd("omega", 2.0);
    cfg.eps = getd("eps", 1e-6);
    cfg.p_max = geti("p_max", 500);
    cfg.seed = static_cast<std::uint64_t>(std::stoull(get("seed", "0")));
    cfg.eig_tol = getd("eig_tol", 1e-8);
    cfg.run_id = get("run_id", "run");
    cfg.checkpoint_every = geti("checkpoint_every", 25);
    cfg.validate();
    return cfg;
}

std::string reference_eigenvalues_csv(const ReferenceShape& shape, int count) {
    const std::vector<double> lams = shape.reference_eigenvalues(count);
    std::string out = "k,lambda\n";
    char buf[64];
    for (int k = 0; k < count; ++k) {
        std::snprintf(buf, sizeof buf, "%d,%.12g\n", k + 1, lams[k]);
        out += buf;
    }
    return out;
}

}  // namespace phaseopt
