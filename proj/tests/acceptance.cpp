// Acceptance driver. Prints one PASS/FAIL line per criterion; arguments select criteria (default all).
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <string>

#include "hsdp/alm.hpp"
#include "hsdp/oracle.hpp"
#include "hsdp/reference.hpp"
#include "test_util.hpp"

using namespace hsdp;
using namespace hsdp::testing;

namespace {

struct Outcome {
    bool        pass = false;
    std::string detail;
};

std::string fmt(const char *f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

double lambda_min(const CMat &A) { return Eigen::SelfAdjointEigenSolver<CMat>(A, Eigen::EigenvaluesOnly).eigenvalues()(0); }

// Inner L-BFGS budget for the N = 64 runs. The CLI default of 100 leaves eta_P near 1.6e-3 at h = 1.
constexpr int kInnerIters = 200;

SolverConfig n64_config(Algorithm a) {
    SolverConfig cfg;
    cfg.algorithm   = a;
    cfg.levels      = 3;
    cfg.ranks       = {20};
    cfg.tol         = 1e-3;
    cfg.max_outer   = 150;
    cfg.inner_iters = kInnerIters;
    return cfg;
}

double err_percent(double bound, double e0) { return 100.0 * (e0 - bound) / std::abs(e0); }

// N = 64 runs shared between the reproduction and convergence criteria.
std::map<std::pair<int, double>, SolveResult> g_runs;

const SolveResult &n64_run(Algorithm a, double h) {
    const auto key = std::make_pair(static_cast<int>(a), h);
    auto       it  = g_runs.find(key);
    if(it == g_runs.end()) {
        const auto t0 = std::chrono::steady_clock::now();
        it            = g_runs.emplace(key, solve(64, h, n64_config(a))).first;
        std::fprintf(stderr, "  %s h=%.1f: %d iterations, %.0f s, bound %.6f\n", algorithm_name(a).c_str(), h,
                     it->second.iterations, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(),
                     it->second.bound());
    }
    return it->second;
}

Outcome encoding() {
    std::mt19937_64 rng(101);
    double          worst_res = 0.0, worst_eig = 0.0;
    for(int trial = 0; trial < 50; ++trial) {
        const int  N = 2 + trial % 7;
        const CMat M = moments_from_state(random_state(N, rng), N);
        worst_res    = std::max(worst_res, linear_residuals(M, N).norm);
        worst_eig    = std::min(worst_eig, lambda_min(M));
    }
    return {worst_res <= 1e-10 && worst_eig >= -1e-10, fmt("max residual %.2e, min eigenvalue %.2e", worst_res, worst_eig)};
}

Outcome lower_bound() {
    bool        ok = true;
    std::string worst;
    double      worst_margin = -1e300;
    auto        check = [&](Algorithm a, int N, double h, SolverConfig cfg) {
        cfg.algorithm      = a;
        cfg.tol            = 1e-5;
        const auto   res   = solve(N, h, cfg);
        const double e0    = ed_ground_energy(N, h);
        const double slack = e0 + 1e-4 * (1.0 + std::abs(e0)) - res.bound();
        if(!(slack >= 0.0)) ok = false;
        if(-slack > worst_margin) {
            worst_margin = -slack;
            worst        = fmt("%s N=%d h=%.1f bound %.6f vs E0 %.6f", algorithm_name(a).c_str(), N, h, res.bound(), e0);
        }
    };
    for(double h : {0.5, 1.0, 1.5}) {
        SolverConfig dense;
        dense.max_outer = 5000;
        for(int N : {4, 8}) check(Algorithm::Dense, N, h, dense);
        SolverConfig hier;
        hier.levels    = 2;
        hier.ranks     = {20};
        hier.max_outer = 300;
        check(Algorithm::HierDual, 8, h, hier);
        check(Algorithm::HierBoth, 8, h, hier);
    }
    return {ok, "tightest: " + worst};
}

Outcome table4() {
    struct Row {
        double h, target, tol;
    };
    bool        ok = true;
    std::string detail;
    for(const Row r : {Row{1.0, 2.73, 0.3}, Row{0.5, 1.11, 0.3}, Row{1.5, 0.71, 0.2}}) {
        const auto  &res = n64_run(Algorithm::HierDual, r.h);
        const double err = err_percent(res.bound(), ff_ground_energy(64, r.h));
        ok               = ok && std::abs(err - r.target) <= r.tol;
        detail += fmt("h=%.1f Err %.3f%% (target %.2f +- %.1f); ", r.h, err, r.target, r.tol);
    }
    return {ok, detail};
}

Outcome table5() {
    const auto  &res = n64_run(Algorithm::HierBoth, 1.0);
    const double err = err_percent(res.bound(), ff_ground_energy(64, 1.0));
    return {std::abs(err - 2.78) <= 0.3, fmt("h=1.0 Err %.3f%% (target 2.78 +- 0.3), %d iterations", err, res.iterations)};
}

Outcome fits() {
    const auto   ref   = reference_solution(64, 1.0, 1e-4);
    const int    ranks = 20;
    const auto   fs    = fit_hier_to_dense(ref.S, 64, 3, 3, std::span<const int>(&ranks, 1), 100, 0);
    const auto   fm    = fit_hier_to_dense(ref.M, 64, 3, 3, std::span<const int>(&ranks, 1), 100, 0);
    const double off   = offband_fraction(ref.S, 64, 8);
    const double lo    = lambda_min(ref.S);
    const double err   = err_percent(ref.run.bound(), ff_ground_energy(64, 1.0));
    return {fs.err <= 1e-4 && fm.err <= 5e-3,
            fmt("reference %d iterations, Err_rel %.3f%%, S off-band %.3f, lambda_min %.1e; Err_S %.3e (<= 1e-4), Err_M %.3e (<= 5e-3)",
                ref.run.iterations, err, off, lo, fs.err, fm.err)};
}

// The chain needs three sites, so K = 2 gets a purely random cost.
SparseMatrix test_cost(int K, std::mt19937_64 &rng) {
    SparseMatrix J     = K >= 3 ? cost_matrix(K, 0.7) : SparseMatrix{3 * K + 1, 3 * K + 1, {}};
    SparseMatrix extra = random_sparse_hermitian(K, 12, rng);
    J.entries.insert(J.entries.end(), extra.entries.begin(), extra.entries.end());
    return J;
}

Outcome kernels() {
    std::mt19937_64 rng(606);
    double          worst = 0.0;
    for(int K : {2, 4, 8, 16}) {
        const int        m = K == 2 ? 1 : 3 - (K == 4);
        const HierLevels B = random_levels(K, 3, m, 3, rng), Bp = random_levels(K, 3, m, 2, rng);
        const CMat       Bd = B.to_dense(), Bpd = Bp.to_dense(), D = random_cmat(3 * K, 3 * K, rng);
        const SparseMatrix Sp = to_sparse(D, 0.8, rng);
        worst = std::max(worst, rel_diff(pair_corr_hh(B, Bp), pair_corr_dense_oracle(Bd, Bpd, K, 3)));
        worst = std::max(worst, rel_diff(pair_corr_hd(B, D), pair_corr_dense_oracle(Bd, D, K, 3)));
        worst = std::max(worst, rel_diff(pair_corr_hs(B, Sp), pair_corr_dense_oracle(Bd, Sp.to_dense(), K, 3)));

        const std::vector<int> r2{2};
        const SparseMatrix     J  = test_cost(K, rng);
        const CMat             Jd = J.to_dense();
        const double           sigma = 0.9;
        const HierPSD          S = hier_new(K, 3, m, r2, 700 + K), Mh = hier_new(K, 3, m, r2, 800 + K);
        const CMat             Sd = hier_to_dense(S), Md = random_hermitian(3 * K + 1, rng), Mhd = hier_to_dense(Mh);
        const Operand          dM = Operand::dense(Md, K), hM = Operand::hier(Mh);
        for(const auto &[Mop, Mdense] : {std::pair<const Operand *, const CMat *>{&dM, &Md}, {&hM, &Mhd}}) {
            const DualLoss loss(J, *Mop, sigma);
            worst = std::max(worst, rel(loss.value(S), loss_dense_oracle(Sd, Jd, *Mdense, sigma)));

            const HierPSD            H = hier_new(K, 3, m, r2, 900 + K);
            const Operand            Sop = Operand::hier(S);
            const PrimalFitObjective fit(J, Sop, *Mop, sigma);
            const CMat               T = primal_target_dense(Sd, Jd, *Mdense, sigma);
            worst = std::max(worst, rel(fit.value(H), (hier_to_dense(H) - T).squaredNorm() - T.squaredNorm()));

            const Multipliers y  = eliminate_all(Sd, Jd, *Mdense, sigma);
            const double      ed = (Sd - Jd + assemble_dual_certificate(y)).norm() / (1.0 + Jd.norm());
            worst = std::max(worst, rel(eta_d_structured(Operand::sparse(J, K), Sop, *Mop, sigma), ed));
        }
    }
    return {worst <= 1e-10, fmt("max relative deviation %.2e over K in {2,4,8,16}", worst)};
}

Outcome gradients() {
    std::mt19937_64        rng(707);
    const int              K = 16;
    const std::vector<int> r2{2};
    const SparseMatrix     J = test_cost(K, rng);
    const HierPSD          S = hier_new(K, 3, 3, r2, 71), Mh = hier_new(K, 3, 3, r2, 72), H = hier_new(K, 3, 3, r2, 73);
    const Operand          Mop = Operand::hier(Mh), Sop = Operand::hier(S);
    const DualLoss         loss(J, Mop, 0.8);
    const PrimalFitObjective fit(J, Sop, Mop, 0.8);
    const double dual_err = max_fd_error([&](const HierPSD &s, HierGradient &g) { return loss.value_and_grad(s, g); }, S, 20, rng);
    const double fit_err = max_fd_error([&](const HierPSD &h, HierGradient &g) { return fit.value_and_grad(h, g); }, H, 20, rng);
    return {dual_err <= 1e-6 && fit_err <= 1e-6, fmt("dual inner %.2e, primal fit %.2e", dual_err, fit_err)};
}

Outcome convergence() {
    bool        ok = true;
    std::string detail;
    for(Algorithm a : {Algorithm::HierDual, Algorithm::HierBoth}) {
        const auto &res = n64_run(a, 1.0);
        ok              = ok && res.converged && res.iterations <= 150;
        detail += fmt("%s: max eta %.2e after %d iterations; ", algorithm_name(a).c_str(), res.final.max_eta(), res.iterations);
    }
    return {ok, detail};
}

double ms_per_iter(Algorithm a, int N, int outer, int inner) {
    SolverConfig cfg;
    cfg.algorithm   = a;
    cfg.max_outer   = outer;
    cfg.inner_iters = inner;
    cfg.fit_iters   = inner;
    cfg.inner_gtol  = 0.0;
    cfg.tol         = 1e-300;
    const auto res  = solve(N, 1.0, cfg);
    // The first outer iteration starts L-BFGS from scratch and is skipped when possible.
    double ms = 0.0;
    int    n  = 0;
    for(const auto &r : res.trace.rows)
        if(r.iter > 1 || res.trace.rows.size() == 1) {
            ms += r.wall_ms;
            ++n;
        }
    std::fprintf(stderr, "  %s N=%d: %.1f ms/iter\n", algorithm_name(a).c_str(), N, ms / n);
    return ms / n;
}

Outcome scaling() {
    const double d1 = ms_per_iter(Algorithm::Dense, 256, 4, 1), d2 = ms_per_iter(Algorithm::Dense, 512, 4, 1);
    const double q1 = ms_per_iter(Algorithm::HierDual, 256, 3, 10), q2 = ms_per_iter(Algorithm::HierDual, 512, 3, 10),
                 q3 = ms_per_iter(Algorithm::HierDual, 1024, 3, 10);
    const double b1 = ms_per_iter(Algorithm::HierBoth, 256, 3, 10), b2 = ms_per_iter(Algorithm::HierBoth, 512, 3, 10),
                 b3 = ms_per_iter(Algorithm::HierBoth, 1024, 3, 10);
    const double rd = d2 / d1, rq1 = q2 / q1, rq2 = q3 / q2, rb1 = b2 / b1, rb2 = b3 / b2;
    const bool   ok = rd >= 6.0 && rq1 >= 2.5 && rq1 <= 6.0 && rq2 >= 2.5 && rq2 <= 6.0 && rb1 <= 8.0 && rb2 <= 8.0;
    // The absolute dense vs hier-dual comparison depends on the inner budget and is reported only.
    return {ok, fmt("ratios dense %.2f; hier-dual %.2f, %.2f; hier-both %.2f, %.2f (per-iteration at N=256: dense %.0f ms, "
                    "hier-dual %.0f ms)",
                    rd, rq1, rq2, rb1, rb2, d1, q1)};
}

Outcome oracles() {
    double worst = 0.0;
    for(int N = 2; N <= 12; ++N)
        for(double h : {0.5, 1.0, 1.5}) worst = std::max(worst, std::abs(ff_ground_energy(N, h) - ed_ground_energy(N, h)));
    const double two = std::abs(ed_ground_energy(2, 1.0) + 2.0 * std::numbers::sqrt2);
    return {worst <= 1e-9 && two <= 1e-12, fmt("ED vs free fermions %.2e, N=2 deviation %.2e", worst, two)};
}

} // namespace

int main(int argc, char **argv) {
    const std::map<int, std::pair<const char *, std::function<Outcome()>>> criteria{
        {1, {"encoding correctness", encoding}},  {2, {"lower-bound property", lower_bound}},
        {3, {"hier-dual reproduction at N=64", table4}}, {4, {"hier-both reproduction at N=64", table5}},
        {5, {"fit experiments", fits}},           {6, {"kernel equivalence", kernels}},
        {7, {"gradient suite", gradients}},       {8, {"convergence protocol", convergence}},
        {9, {"scaling", scaling}},                {10, {"oracle validation", oracles}}};
    std::set<int> chosen;
    for(int i = 1; i < argc; ++i) chosen.insert(std::atoi(argv[i]));
    if(chosen.empty())
        for(const auto &[k, v] : criteria) chosen.insert(k);

    int failed = 0;
    for(int k : chosen) {
        const auto it = criteria.find(k);
        if(it == criteria.end()) {
            std::fprintf(stderr, "unknown criterion %d\n", k);
            return 2;
        }
        const auto t0 = std::chrono::steady_clock::now();
        Outcome    o;
        try {
            o = it->second.second();
        } catch(const std::exception &e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s criterion %d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", k, it->second.first, o.detail.c_str(), secs);
        std::fflush(stdout);
        failed += !o.pass;
    }
    return failed == 0 ? 0 : 1;
}
