#include <chrono>
#include <cmath>
#include <limits>

#include "hsdp/alm.hpp"
#include "hsdp/lanczos.hpp"

namespace hsdp {

std::string algorithm_name(Algorithm a) {
    switch(a) {
    case Algorithm::Dense: return "dense";
    case Algorithm::HierDual: return "hier-dual";
    case Algorithm::HierBoth: return "hier-both";
    }
    return "unknown";
}

Algorithm parse_algorithm(const std::string &s) {
    if(s == "dense") return Algorithm::Dense;
    if(s == "hier-dual") return Algorithm::HierDual;
    if(s == "hier-both") return Algorithm::HierBoth;
    throw InvalidInput("unknown algorithm '" + s + "' (expected dense, hier-dual or hier-both)");
}

double default_sigma0(int N) { return N <= 512 ? 1.0 : 0.1; }

int default_levels(int N) { return std::max(1, ilog2(std::max(1, N / 8))); }

double SolverConfig::resolved_sigma0(int N) const { return sigma0 > 0.0 ? sigma0 : default_sigma0(N); }

int SolverConfig::resolved_levels(int N) const { return levels > 0 ? levels : default_levels(N); }

void SolverConfig::validate(int N) const {
    if(N < 3) throw InvalidInput("N must be at least 3");
    if(!std::isfinite(sigma0) || sigma0 < 0.0) throw InvalidInput("sigma0 must be positive (0 selects the default)");
    if(!(tol > 0.0)) throw InvalidInput("tolerance must be positive");
    if(max_outer < 1) throw InvalidInput("max_outer must be at least 1");
    if(inner_iters < 1 || fit_iters < 1) throw InvalidInput("iteration budgets must be at least 1");
    if(lbfgs_memory < 1) throw InvalidInput("L-BFGS memory must be at least 1");
    if(!(penalty_factor > 1.0) || !(penalty_ratio >= 1.0)) throw InvalidInput("penalty factor must exceed 1 and ratio be >= 1");
    if(!(sigma_min > 0.0) || sigma_min > sigma_max) throw InvalidInput("penalty clamps must satisfy 0 < min <= max");
    if(algorithm == Algorithm::Dense) return;
    if(!is_power_of_two(N)) throw InvalidInput("hierarchical engines need N to be a power of two");
    const int m = resolved_levels(N);
    check_hier_shape(N, kBasis, m);
    if(ranks.empty() || (ranks.size() != 1 && static_cast<int>(ranks.size()) != m))
        throw InvalidInput("ranks must hold one value or one per level");
    for(int r : ranks)
        if(r < 1) throw InvalidInput("ranks must be positive");
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

LbfgsOptions inner_options(const SolverConfig &cfg, int iters) {
    LbfgsOptions o;
    o.max_iters = iters;
    o.memory    = cfg.lbfgs_memory;
    o.gtol      = cfg.inner_gtol;
    return o;
}

// Dense eigenvalues up to this size; Lanczos on the dense matvec above it keeps the
// per-iteration cost quadratic.
constexpr int kDenseEigMax = 256;

double eta_p3_dense_or_lanczos(const CMat &M) {
    if(M.rows() <= kDenseEigMax) return eta_p3_dense(M);
    LanczosOptions opts;
    opts.max_steps        = 300;
    opts.tol              = 1e-9;
    const ExtremeEigen ex = lanczos_extremes([&M](const CVec &x, CVec &y) { y.noalias() = M * x; },
                                             static_cast<int>(M.rows()), opts);
    return eta_p3(ex.min, ex.max);
}

double sparse_trace(const SparseMatrix &A, const CMat &M) {
    double acc = 0.0;
    for(const auto &e : A.entries) acc += (e.value * M(e.col, e.row)).real();
    return acc;
}

CMat psd_projection(const CMat &X) {
    const Eigen::SelfAdjointEigenSolver<CMat> es(X);
    if(es.info() != Eigen::Success) throw NumericalFailure("eigendecomposition failed in PSD projection");
    const RVec ev = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * ev.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

class Recorder {
  public:
    Recorder(SolveResult &res, const IterationCallback &cb) : res_(res), cb_(cb) {}

    // Returns false when the run should stop.
    bool record(int iter, const Metrics &m, double sigma, Clock::time_point t_iter, double tol) {
        TraceRow row;
        row.iter          = iter;
        row.eta_p         = m.eta_p;
        row.eta_d         = m.eta_d;
        row.eta_g         = m.eta_g;
        row.obj_primal    = m.obj_primal;
        row.obj_dual      = m.obj_dual;
        row.dobj_per_site = std::isnan(prev_) ? 0.0 : (m.obj_primal - prev_) / res_.N;
        row.sigma         = sigma;
        row.wall_ms       = ms_since(t_iter);
        prev_             = m.obj_primal;
        res_.trace.rows.push_back(row);
        res_.final      = m;
        res_.iterations = iter;
        if(!std::isfinite(m.obj_primal) || !std::isfinite(m.eta_d) || !std::isfinite(m.eta_p))
            throw NumericalFailure("non-finite metrics at outer iteration " + std::to_string(iter));
        if(m.max_eta() <= tol) {
            res_.converged = true;
            return false;
        }
        return !cb_ || cb_(row);
    }

  private:
    SolveResult             &res_;
    const IterationCallback &cb_;
    double                   prev_ = std::numeric_limits<double>::quiet_NaN();
};

SolveResult make_result(Algorithm a, int N, double h) {
    SolveResult r;
    r.algorithm = a;
    r.N         = N;
    r.h         = h;
    return r;
}

} // namespace

SolveResult alm_dense(int N, double h, const SolverConfig &cfg, const IterationCallback &cb) {
    cfg.validate(N);
    const auto         t0 = Clock::now();
    SolveResult        res = make_result(Algorithm::Dense, N, h);
    const SparseMatrix Js  = cost_matrix(N, h);
    const CMat         J   = Js.to_dense();
    const double       jn  = J.norm();
    double             sigma = cfg.resolved_sigma0(N);
    CMat               M     = CMat::Identity(J.rows(), J.cols());
    Multipliers        mult  = Multipliers::zeros(N);
    CMat               S;
    Recorder           rec(res, cb);

    for(int it = 1; it <= cfg.max_outer; ++it) {
        const auto t_iter = Clock::now();
        // One sweep: PSD projection of the residual, then the closed-form multipliers.
        S                    = psd_projection(J - assemble_dual_certificate(mult) - M / sigma);
        mult                 = eliminate_all(S, J, M, sigma);
        const CMat step      = S - J + assemble_dual_certificate(mult);
        M += sigma * step;
        Metrics m;
        m.eta_d      = step.norm() / (1.0 + jn);
        m.eta_p      = eta_p3_dense(M);
        m.obj_primal = sparse_trace(Js, M);
        m.obj_dual   = dual_objective_dense(mult);
        m.eta_g      = eta_gap(m.obj_primal, m.obj_dual);
        res.sigma    = sigma;
        const bool go = rec.record(it, m, sigma, t_iter, cfg.tol);
        sigma         = update_penalty(sigma, m.eta_p, m.eta_d, cfg);
        if(!go) break;
    }
    res.M_dense = std::move(M);
    res.S_dense = std::move(S);
    res.duals   = std::move(mult);
    res.seconds = ms_since(t0) / 1e3;
    return res;
}

SolveResult alm_hier_dual(int N, double h, const SolverConfig &cfg, const IterationCallback &cb) {
    cfg.validate(N);
    const auto         t0  = Clock::now();
    SolveResult        res = make_result(Algorithm::HierDual, N, h);
    const SparseMatrix Js  = cost_matrix(N, h);
    const CMat         J   = Js.to_dense();
    const Operand      Jop = Operand::sparse(Js, N);
    double             sigma = cfg.resolved_sigma0(N);
    CMat               M     = CMat::Identity(J.rows(), J.cols());
    HierPSD            S     = hier_new(N, kBasis, cfg.resolved_levels(N), cfg.ranks, cfg.seed);
    const LbfgsOptions opts  = inner_options(cfg, cfg.inner_iters);
    Recorder           rec(res, cb);

    for(int it = 1; it <= cfg.max_outer; ++it) {
        const auto t_iter = Clock::now();
        Metrics    m;
        {
            const Operand  Mop = Operand::dense(M, N);
            const DualLoss loss(Js, Mop, sigma, false);
            inner_minimize(S, loss, opts);
            const Operand Sop = Operand::hier(S);
            m.eta_d           = eta_d_structured(Jop, Sop, Mop, sigma);
            m.obj_dual        = dual_objective_structured(Jop, Sop, Mop, sigma);
        }
        const CMat        Sd   = hier_to_dense(S);
        const Multipliers mult = eliminate_all(Sd, J, M, sigma);
        M += sigma * (Sd - J + assemble_dual_certificate(mult));
        m.eta_p      = eta_p3_dense_or_lanczos(M);
        m.obj_primal = sparse_trace(Js, M);
        m.eta_g      = eta_gap(m.obj_primal, m.obj_dual);
        res.sigma    = sigma;
        const bool go = rec.record(it, m, sigma, t_iter, cfg.tol);
        sigma         = update_penalty(sigma, m.eta_p, m.eta_d, cfg);
        if(!go) break;
    }
    res.M_dense = std::move(M);
    res.S_hier  = std::move(S);
    res.seconds = ms_since(t0) / 1e3;
    return res;
}

SolveResult alm_hier_both(int N, double h, const SolverConfig &cfg, const IterationCallback &cb) {
    cfg.validate(N);
    const auto         t0  = Clock::now();
    SolveResult        res = make_result(Algorithm::HierBoth, N, h);
    const SparseMatrix Js  = cost_matrix(N, h);
    const Operand      Jop = Operand::sparse(Js, N);
    const int          m_levels = cfg.resolved_levels(N);
    double             sigma    = cfg.resolved_sigma0(N);
    HierPSD            S        = hier_new(N, kBasis, m_levels, cfg.ranks, cfg.seed);
    HierPSD            M        = hier_new(N, kBasis, m_levels, cfg.ranks, cfg.seed + 1);
    const LbfgsOptions opts     = inner_options(cfg, cfg.inner_iters);
    const LbfgsOptions fit_opts = inner_options(cfg, cfg.fit_iters);
    Recorder           rec(res, cb);

    for(int it = 1; it <= cfg.max_outer; ++it) {
        const auto t_iter = Clock::now();
        Metrics    m;
        {
            const Operand  Mop = Operand::hier(M);
            const DualLoss loss(Js, Mop, sigma, false);
            inner_minimize(S, loss, opts);
            const Operand Sop = Operand::hier(S);
            m.eta_d           = eta_d_structured(Jop, Sop, Mop, sigma);
            m.obj_dual        = dual_objective_structured(Jop, Sop, Mop, sigma);
            const PrimalFitObjective fit(Js, Sop, Mop, sigma);
            HierPSD                  next = M;
            primal_fit(next, fit, fit_opts);
            M = std::move(next);
        }
        const Operand Mop = Operand::hier(M);
        m.eta_p           = eta_p4_structured(Mop);
        m.obj_primal      = Mop.trace_with(Js);
        m.eta_g           = eta_gap(m.obj_primal, m.obj_dual);
        res.sigma         = sigma;
        const bool go     = rec.record(it, m, sigma, t_iter, cfg.tol);
        sigma             = update_penalty(sigma, m.eta_p, m.eta_d, cfg);
        if(!go) break;
    }
    res.M_hier  = std::move(M);
    res.S_hier  = std::move(S);
    res.seconds = ms_since(t0) / 1e3;
    return res;
}

SolveResult solve(int N, double h, const SolverConfig &cfg, const IterationCallback &cb) {
    switch(cfg.algorithm) {
    case Algorithm::Dense: return alm_dense(N, h, cfg, cb);
    case Algorithm::HierDual: return alm_hier_dual(N, h, cfg, cb);
    case Algorithm::HierBoth: return alm_hier_both(N, h, cfg, cb);
    }
    throw InvalidInput("unknown algorithm");
}

} // namespace hsdp
