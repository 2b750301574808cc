#include "phaseopt/eigensolver.hpp"

#include <fftw3.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>

#include "phaseopt/rng.hpp"

namespace phaseopt {

PenalizedOperator::PenalizedOperator(const GridSpec& g, const ScalarField& density,
                                     double penalization)
    : grid(g), phi(density), C(penalization) {
    require_same_grid(g, density.grid, "PenalizedOperator");
    if (C < 0.0) throw std::invalid_argument("PenalizedOperator: C must be >= 0");
    for (double& v : phi.values) {
        if (!(v > -1e-9) || !(v < 1.0 + 1e-9))
            throw std::invalid_argument("PenalizedOperator: phi must lie in [0,1]");
        v = std::clamp(v, 0.0, 1.0);
    }
}

ScalarField PenalizedOperator::apply(const ScalarField& u) const {
    require_same_grid(grid, u.grid, "PenalizedOperator::apply");
    ScalarField v(grid);
    apply(u.values, v.values);
    return v;
}

std::vector<double> PenalizedOperator::diagonal() const {
    const double d0 = 2.0 / (grid.hx * grid.hx) + 2.0 / (grid.hy * grid.hy);
    std::vector<double> d(grid.node_count());
    #pragma omp parallel for schedule(static) if(d.size() >= 32768)
    for (long idx = 0; idx < static_cast<long>(d.size()); ++idx)
        d[idx] = d0 + C * (1.0 - phi.values[idx]);
    return d;
}

namespace {

using Col = std::vector<double>;
using Block = std::vector<Col>;

// FFTW plan creation is not thread-safe; executions on distinct plans are.
std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

// Applies (T + shift)^{-1} by diagonalizing the 5-point stencil T in the
// sine (Dirichlet) or Fourier (periodic) basis; the LOBPCG preconditioner
// while C(1-phi) is comparable to the stencil diagonal. Plans and buffers
// are cached per thread and grid geometry; the shift enters only at the
// mode division.
class StencilFft {
  public:
    explicit StencilFft(const GridSpec& g) : g_(g), n_(g.node_count()) {
        buf_ = fftw_alloc_real(n_);
        mode_x_.resize(g.nx);
        mode_y_.resize(g.ny);
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        if (g_.bc == BcKind::DirichletBox) {
            plan_ = fftw_plan_r2r_2d(g.ny, g.nx, buf_, buf_, FFTW_RODFT00, FFTW_RODFT00,
                                     FFTW_ESTIMATE);
            norm_ = 1.0 / (4.0 * (g.nx + 1) * (g.ny + 1));
            for (int k = 0; k < g.nx; ++k)
                mode_x_[k] = 2.0 / (g.hx * g.hx) *
                             (1.0 - std::cos((k + 1) * std::numbers::pi / (g.nx + 1)));
            for (int k = 0; k < g.ny; ++k)
                mode_y_[k] = 2.0 / (g.hy * g.hy) *
                             (1.0 - std::cos((k + 1) * std::numbers::pi / (g.ny + 1)));
        } else {
            cbuf_ = fftw_alloc_complex(static_cast<std::size_t>(g.nx / 2 + 1) * g.ny);
            plan_r2c_ = fftw_plan_dft_r2c_2d(g.ny, g.nx, buf_, cbuf_, FFTW_ESTIMATE);
            plan_c2r_ = fftw_plan_dft_c2r_2d(g.ny, g.nx, cbuf_, buf_, FFTW_ESTIMATE);
            norm_ = 1.0 / static_cast<double>(n_);
            for (int k = 0; k < g.nx; ++k)
                mode_x_[k] = 2.0 / (g.hx * g.hx) *
                             (1.0 - std::cos(2.0 * std::numbers::pi * k / g.nx));
            for (int k = 0; k < g.ny; ++k)
                mode_y_[k] = 2.0 / (g.hy * g.hy) *
                             (1.0 - std::cos(2.0 * std::numbers::pi * k / g.ny));
        }
    }

    StencilFft(const StencilFft&) = delete;
    StencilFft& operator=(const StencilFft&) = delete;

    ~StencilFft() {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        if (plan_) fftw_destroy_plan(plan_);
        if (plan_r2c_) fftw_destroy_plan(plan_r2c_);
        if (plan_c2r_) fftw_destroy_plan(plan_c2r_);
        fftw_free(buf_);
        if (cbuf_) fftw_free(cbuf_);
    }

    // One engine per thread and grid geometry.
    static StencilFft& shared(const GridSpec& g) {
        thread_local std::vector<std::pair<GridSpec, std::unique_ptr<StencilFft>>> cache;
        for (auto& entry : cache)
            if (entry.first == g) return *entry.second;
        cache.emplace_back(g, std::make_unique<StencilFft>(g));
        return *cache.back().second;
    }

    void solve_shifted(double shift, const Col& r, Col& z) {
        std::copy(r.begin(), r.end(), buf_);
        if (g_.bc == BcKind::DirichletBox) {
            fftw_execute(plan_);
            for (int j = 0; j < g_.ny; ++j) {
                const std::size_t row = static_cast<std::size_t>(j) * g_.nx;
                for (int i = 0; i < g_.nx; ++i)
                    buf_[row + i] /= mode_x_[i] + mode_y_[j] + shift;
            }
            fftw_execute(plan_);
        } else {
            fftw_execute(plan_r2c_);
            const int half = g_.nx / 2 + 1;
            for (int j = 0; j < g_.ny; ++j)
                for (int i = 0; i < half; ++i) {
                    const double w = 1.0 / (mode_x_[i] + mode_y_[j] + shift);
                    cbuf_[static_cast<std::size_t>(j) * half + i][0] *= w;
                    cbuf_[static_cast<std::size_t>(j) * half + i][1] *= w;
                }
            fftw_execute(plan_c2r_);
        }
        z.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) z[i] = buf_[i] * norm_;
    }

  private:
    GridSpec g_;
    std::size_t n_;
    double norm_ = 1.0;
    double* buf_ = nullptr;
    fftw_complex* cbuf_ = nullptr;
    fftw_plan plan_ = nullptr;
    fftw_plan plan_r2c_ = nullptr;
    fftw_plan plan_c2r_ = nullptr;
    std::vector<double> mode_x_, mode_y_;
};

// Same fixed-chunk order as dot_chunked, serial body; callers parallelize
// over column pairs instead.
double chunked_dot(const Col& a, const Col& b) {
    const std::size_t n = a.size();
    constexpr int kChunks = 64;
    double partial[kChunks] = {};
    const std::size_t chunk = (n + kChunks - 1) / kChunks;
    for (int c = 0; c < kChunks; ++c) {
        const std::size_t lo = c * chunk;
        const std::size_t hi = lo < n ? std::min(n, lo + chunk) : lo;
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += a[i] * b[i];
        partial[c] = s;
    }
    double total = 0.0;
    for (int c = 0; c < kChunks; ++c) total += partial[c];
    return total;
}

void axpy(double a, const Col& x, Col& y) {
    const long n = static_cast<long>(y.size());
    #pragma omp parallel for schedule(static) if(n >= 32768)
    for (long i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale(Col& x, double a) {
    const long n = static_cast<long>(x.size());
    #pragma omp parallel for schedule(static) if(n >= 32768)
    for (long i = 0; i < n; ++i) x[i] *= a;
}

struct ApplyCounter {
    const PenalizedOperator* op;
    std::size_t count = 0;
    void apply(const Col& u, Col& v) {
        op->apply(u, v);
        ++count;
    }
};

// Modified Gram-Schmidt with one reorthogonalization pass; columns that lose
// all their mass against the prior basis are dropped.
void mgs(Block& block, const std::vector<const Block*>& against, double drop_tol = 1e-10) {
    Block kept;
    kept.reserve(block.size());
    for (Col& col : block) {
        const double orig = std::sqrt(chunked_dot(col, col));
        if (!(orig > 0.0)) continue;
        for (int pass = 0; pass < 2; ++pass) {
            for (const Block* basis : against)
                for (const Col& q : *basis) axpy(-chunked_dot(q, col), q, col);
            for (const Col& q : kept) axpy(-chunked_dot(q, col), q, col);
        }
        const double norm = std::sqrt(chunked_dot(col, col));
        if (norm > drop_tol * orig && norm > 0.0) {
            scale(col, 1.0 / norm);
            kept.push_back(std::move(col));
        }
    }
    block = std::move(kept);
}

// out[.][c] = sum_s S[s] * Y(s, c); columns are independent, so one parallel
// region over columns keeps the per-column accumulation order fixed.
Block combine(const std::vector<const Block*>& parts, const Eigen::MatrixXd& Y, int cols) {
    std::size_t n = 0;
    std::vector<const Col*> cols_in;
    for (const Block* p : parts)
        for (const Col& s : *p) {
            n = s.size();
            cols_in.push_back(&s);
        }
    Block out(cols, Col(n, 0.0));
    #pragma omp parallel for schedule(dynamic, 1)
    for (int c = 0; c < cols; ++c) {
        double* dst = out[c].data();
        for (std::size_t row = 0; row < cols_in.size(); ++row) {
            const double w = Y(static_cast<int>(row), c);
            if (w != 0.0) {
                const double* src = cols_in[row]->data();
                for (std::size_t i = 0; i < n; ++i) dst[i] += w * src[i];
            }
        }
    }
    return out;
}

Col random_col(std::size_t n, std::mt19937_64& rng) {
    Col c(n);
    for (double& v : c) v = uniform01(rng) - 0.5;
    return c;
}

void fix_sign(Col& u) {
    std::size_t arg = 0;
    double best = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double a = std::abs(u[i]);
        if (a > best) {
            best = a;
            arg = i;
        }
    }
    if (u[arg] < 0.0) scale(u, -1.0);
}

std::vector<EigenPair> package(const PenalizedOperator& op, const std::vector<double>& lambda,
                               Block& vecs, int k) {
    const double scale_m = 1.0 / std::sqrt(op.grid.cell_area());
    std::vector<EigenPair> out;
    out.reserve(k);
    for (int i = 0; i < k; ++i) {
        EigenPair p;
        p.lambda = lambda[i];
        fix_sign(vecs[i]);
        p.u = ScalarField(op.grid);
        for (std::size_t idx = 0; idx < vecs[i].size(); ++idx)
            p.u.values[idx] = vecs[i][idx] * scale_m;
        p.residual = eigen_residual(op, p);
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace

// Diagnostics: iterations and operator applications of the last LOBPCG call
// on this thread.
thread_local std::size_t g_last_lobpcg_iterations = 0;
thread_local std::size_t g_last_lobpcg_applies = 0;
std::size_t last_lobpcg_iterations() { return g_last_lobpcg_iterations; }
std::size_t last_lobpcg_applies() { return g_last_lobpcg_applies; }

std::vector<EigenPair> smallest_eigenpairs(const PenalizedOperator& op, int k, double tol,
                                           std::uint64_t seed,
                                           const std::vector<ScalarField>* warm_start) {
    const std::size_t n = op.grid.node_count();
    if (k < 1) throw std::invalid_argument("smallest_eigenpairs: k must be >= 1");
    if (static_cast<std::size_t>(k) >= n)
        throw DimensionError("smallest_eigenpairs: k must be < nx*ny");
    if (!(tol > 0.0)) throw std::invalid_argument("smallest_eigenpairs: tol must be > 0");

    const int pad = std::clamp(k, 2, 8);
    const int m = static_cast<int>(std::min<std::size_t>(k + pad, n));
    std::mt19937_64 rng(mix_seed(seed, 0x10b9c6ULL));

    const std::vector<double> diag = op.diagonal();
    ApplyCounter counter{&op};
    const std::size_t budget = kMaxAppliesPerPair * static_cast<std::size_t>(k);

    // Preconditioner: shifted-stencil solve while the penalization stays
    // comparable to the stencil diagonal, Jacobi once it dominates.
    double mean_phi = 0.0;
    for (double v : op.phi.values) mean_phi += v;
    mean_phi /= static_cast<double>(n);
    const double d0 = 2.0 / (op.grid.hx * op.grid.hx) + 2.0 / (op.grid.hy * op.grid.hy);
    const double shift = op.C * (1.0 - mean_phi);
    StencilFft* stencil_prec = nullptr;
    if (shift <= 30.0 * d0 && (op.grid.bc == BcKind::DirichletBox || shift > 1e-12 * d0))
        stencil_prec = &StencilFft::shared(op.grid);

    // Initial block: warm vectors first, the rest random; re-fill if MGS drops.
    Block X;
    if (warm_start)
        for (const ScalarField& w : *warm_start) {
            if (static_cast<int>(X.size()) == m) break;
            require_same_grid(op.grid, w.grid, "smallest_eigenpairs warm start");
            X.push_back(w.values);
        }
    while (static_cast<int>(X.size()) < m) X.push_back(random_col(n, rng));
    mgs(X, {});
    while (static_cast<int>(X.size()) < m) {
        Block fresh{random_col(n, rng)};
        mgs(fresh, {&X});
        for (Col& c : fresh) X.push_back(std::move(c));
    }

    Block AX(m, Col(n));
    for (int i = 0; i < m; ++i) counter.apply(X[i], AX[i]);

    Block P;
    std::vector<double> theta(m, 0.0);
    double best_first_k = std::numeric_limits<double>::infinity();

    std::size_t iterations = 0;
    while (true) {
        ++iterations;
        // Rayleigh-Ritz on the current X block.
        {
            Eigen::MatrixXd G(m, m);
            #pragma omp parallel for schedule(dynamic)
            for (int i = 0; i < m; ++i)
                for (int j = i; j < m; ++j) G(i, j) = chunked_dot(X[i], AX[j]);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < i; ++j) G(i, j) = G(j, i);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
            const Eigen::MatrixXd& Y = es.eigenvectors();
            std::vector<const Block*> xs{&X};
            Block Xn = combine(xs, Y, m);
            Block AXn = combine({&AX}, Y, m);
            X = std::move(Xn);
            AX = std::move(AXn);
            for (int i = 0; i < m; ++i) theta[i] = es.eigenvalues()(i);
        }

        // Residuals and convergence of the first k.
        Block R(k);
        double worst = 0.0;
        bool done = true;
        for (int i = 0; i < k; ++i) {
            R[i] = AX[i];
            axpy(-theta[i], X[i], R[i]);
            const double res = std::sqrt(chunked_dot(R[i], R[i]));
            worst = std::max(worst, res / std::max(1.0, theta[i]));
            if (res > tol * std::max(1.0, theta[i])) done = false;
        }
        best_first_k = std::min(best_first_k, worst);
        if (done) break;
        if (counter.count > budget)
            throw ConvergenceError("smallest_eigenpairs: iteration cap exceeded", best_first_k);

        // Preconditioned residuals for the full block.
        Block W(m, Col(n));
        if (stencil_prec) {
            Col r(n);
            for (int i = 0; i < m; ++i) {
                for (std::size_t idx = 0; idx < n; ++idx)
                    r[idx] = AX[i][idx] - theta[i] * X[i][idx];
                stencil_prec->solve_shifted(shift, r, W[i]);
            }
        } else {
            #pragma omp parallel for schedule(dynamic, 1)
            for (int i = 0; i < m; ++i)
                for (std::size_t idx = 0; idx < n; ++idx)
                    W[i][idx] = (AX[i][idx] - theta[i] * X[i][idx]) / diag[idx];
        }

        mgs(W, {&X});
        if (!P.empty()) mgs(P, {&X, &W});
        if (W.empty() && P.empty())
            throw ConvergenceError("smallest_eigenpairs: search space collapsed", best_first_k);

        Block AW(W.size(), Col(n)), AP(P.size(), Col(n));
        for (std::size_t i = 0; i < W.size(); ++i) counter.apply(W[i], AW[i]);
        for (std::size_t i = 0; i < P.size(); ++i) counter.apply(P[i], AP[i]);

        const int s = m + static_cast<int>(W.size() + P.size());
        std::vector<const Block*> Sparts{&X, &W, &P};
        std::vector<const Block*> ASparts{&AX, &AW, &AP};
        std::vector<const Col*> Scols, AScols;
        for (const Block* b : Sparts)
            for (const Col& c : *b) Scols.push_back(&c);
        for (const Block* b : ASparts)
            for (const Col& c : *b) AScols.push_back(&c);

        Eigen::MatrixXd H(s, s);
        #pragma omp parallel for schedule(dynamic)
        for (int i = 0; i < s; ++i)
            for (int j = i; j < s; ++j) H(i, j) = chunked_dot(*Scols[i], *AScols[j]);
        for (int i = 0; i < s; ++i)
            for (int j = 0; j < i; ++j) H(i, j) = H(j, i);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
        const Eigen::MatrixXd Y = es.eigenvectors().leftCols(m);

        Block Xn = combine(Sparts, Y, m);
        Block AXn = combine(ASparts, Y, m);
        // New direction block: the part of the update outside the old X span.
        Eigen::MatrixXd Ytail = Y.bottomRows(s - m);
        Block Pn = combine({&W, &P}, Ytail, m);
        mgs(Pn, {});

        X = std::move(Xn);
        AX = std::move(AXn);
        P = std::move(Pn);
        for (int i = 0; i < m; ++i) theta[i] = es.eigenvalues()(i);
    }

    g_last_lobpcg_iterations = iterations;
    g_last_lobpcg_applies = counter.count;
    std::vector<double> lambda(theta.begin(), theta.begin() + k);
    return package(op, lambda, X, k);
}

namespace {

// Jacobi-preconditioned CG for A z = b; returns applies used.
std::size_t cg_solve(ApplyCounter& counter, const std::vector<double>& diag, const Col& b,
                     Col& z, double rel_tol, std::size_t max_iters) {
    const std::size_t n = b.size();
    z.assign(n, 0.0);
    Col r = b;
    Col p(n), Ap(n), precr(n);
    const double bnorm = std::sqrt(chunked_dot(b, b));
    if (bnorm == 0.0) return 0;
    const bool par = n >= 32768;
    #pragma omp parallel for schedule(static) if(par)
    for (long i = 0; i < static_cast<long>(n); ++i) precr[i] = r[i] / diag[i];
    p = precr;
    double rho = chunked_dot(r, precr);
    std::size_t it = 0;
    for (; it < max_iters; ++it) {
        counter.apply(p, Ap);
        const double denom = chunked_dot(p, Ap);
        if (!(denom > 0.0)) break;  // not definite (or breakdown); caller verifies
        const double a = rho / denom;
        axpy(a, p, z);
        axpy(-a, Ap, r);
        if (std::sqrt(chunked_dot(r, r)) <= rel_tol * bnorm) break;
        #pragma omp parallel for schedule(static) if(par)
        for (long i = 0; i < static_cast<long>(n); ++i) precr[i] = r[i] / diag[i];
        const double rho_new = chunked_dot(r, precr);
        const double beta = rho_new / rho;
        rho = rho_new;
        #pragma omp parallel for schedule(static) if(par)
        for (long i = 0; i < static_cast<long>(n); ++i) p[i] = precr[i] + beta * p[i];
    }
    return it + 1;
}

}  // namespace

std::vector<EigenPair> shift_invert_eigenpairs(const PenalizedOperator& op, int k, double tol,
                                               std::uint64_t seed) {
    const std::size_t n = op.grid.node_count();
    if (k < 1) throw std::invalid_argument("shift_invert_eigenpairs: k must be >= 1");
    if (static_cast<std::size_t>(k) >= n)
        throw DimensionError("shift_invert_eigenpairs: k must be < nx*ny");
    if (!(tol > 0.0)) throw std::invalid_argument("shift_invert_eigenpairs: tol must be > 0");

    const std::vector<double> diag = op.diagonal();
    Block found;
    std::vector<double> lambdas;
    std::mt19937_64 rng(mix_seed(seed, 0x51ca9eULL));

    for (int j = 0; j < k; ++j) {
        ApplyCounter counter{&op};
        Col x = random_col(n, rng);
        for (const Col& u : found) axpy(-chunked_dot(u, x), u, x);
        scale(x, 1.0 / std::sqrt(chunked_dot(x, x)));

        Col Ax(n), y(n);
        double lambda = 0.0, res = std::numeric_limits<double>::infinity();
        double best = res;
        while (true) {
            const double inner = std::clamp(0.1 * std::min(1.0, best), 1e-13, 1e-2);
            cg_solve(counter, diag, x, y, inner, 20000);
            for (const Col& u : found) axpy(-chunked_dot(u, y), u, y);
            const double ynorm = std::sqrt(chunked_dot(y, y));
            if (!(ynorm > 0.0))
                throw ConvergenceError("shift_invert_eigenpairs: breakdown", best);
            scale(y, 1.0 / ynorm);
            x = y;
            counter.apply(x, Ax);
            lambda = chunked_dot(x, Ax);
            Col r = Ax;
            axpy(-lambda, x, r);
            res = std::sqrt(chunked_dot(r, r));
            best = std::min(best, res / std::max(1.0, lambda));
            if (res <= tol * std::max(1.0, lambda)) break;
            if (counter.count > kMaxAppliesPerPair)
                throw ConvergenceError("shift_invert_eigenpairs: iteration cap exceeded", best);
        }
        found.push_back(x);
        lambdas.push_back(lambda);
    }

    // Deflation yields them in ascending order; enforce it regardless.
    std::vector<int> order(k);
    for (int i = 0; i < k; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return lambdas[a] < lambdas[b]; });
    Block sorted_vecs;
    std::vector<double> sorted_lambda;
    for (int idx : order) {
        sorted_vecs.push_back(std::move(found[idx]));
        sorted_lambda.push_back(lambdas[idx]);
    }
    return package(op, sorted_lambda, sorted_vecs, k);
}

double eigen_residual(const PenalizedOperator& op, const EigenPair& pair) {
    require_same_grid(op.grid, pair.u.grid, "eigen_residual");
    ScalarField v = op.apply(pair.u);
    const long n = static_cast<long>(v.values.size());
    #pragma omp parallel for schedule(static) if(n >= 32768)
    for (long i = 0; i < n; ++i) v.values[i] -= pair.lambda * pair.u.values[i];
    return std::sqrt(op.grid.cell_area() * dot_chunked(v.values, v.values));
}

}  // namespace phaseopt
