#include <algorithm>

#include "doctest.h"
#include "hsdp/alm.hpp"
#include "hsdp/oracle.hpp"
#include "test_util.hpp"

using namespace hsdp;
using namespace hsdp::testing;

namespace {

SparseMatrix test_cost(int K, std::mt19937_64 &rng) {
    SparseMatrix J     = cost_matrix(K, 0.7);
    SparseMatrix extra = random_sparse_hermitian(K, 12, rng);
    J.entries.insert(J.entries.end(), extra.entries.begin(), extra.entries.end());
    return J;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

const std::vector<int> kRank2{2};

} // namespace

TEST_CASE("pair multiplier elimination") {
    const auto &o = constraint_ops();
    const CMat  Z = CMat::Zero(3, 3);

    // Real symmetric residual blocks: nothing to correct.
    std::mt19937_64 rng(1);
    RMat            Rr = RMat::Random(3, 3);
    const CMat      Rs = (Rr + Rr.transpose()).cast<cplx>();
    CHECK(eliminate_Lambda(Z, Z, Rs, CMat(Rs.transpose()), Z, Z, 1.0).norm() <= 1e-15);

    CMat E12 = Z, E21 = Z;
    E12(0, 1) = I_unit;
    E21(1, 0) = -I_unit;
    const CVec L = eliminate_Lambda(Z, Z, E12, E21, Z, Z, 1.0);
    CVec       expect = CVec::Zero(9);
    expect(3)         = 2.0;
    CHECK((L - expect).norm() <= 1e-14);

    // Stationarity oracle: least squares against the stacked adjoint, solved by QR.
    CMat B(18, 9);
    B << o.A_U_adj, o.A_L_adj;
    for(int trial = 0; trial < 10; ++trial) {
        const CMat   Sij = random_cmat(3, 3, rng), Jij = random_cmat(3, 3, rng), Mij = random_cmat(3, 3, rng);
        const double sigma = 0.5 + trial;
        const CVec   out   = eliminate_Lambda(Sij, Sij.adjoint(), Jij, Jij.adjoint(), Mij, Mij.adjoint(), sigma);
        CVec         r(18);
        r << vec3(CMat(Jij - Sij - Mij / sigma)), vec3(CMat((Jij - Sij - Mij / sigma).adjoint()));
        const CVec ls = B.colPivHouseholderQr().solve(r);
        CHECK((out - ls).norm() <= 1e-12 * std::max(1.0, ls.norm()));
        CHECK(out.imag().norm() <= 1e-12 * std::max(1.0, out.norm()));
    }
}

TEST_CASE("cluster and scalar eliminations") {
    const auto &o = constraint_ops();
    const CMat  I3 = CMat::Identity(3, 3);
    const CVec  z3 = CVec::Zero(3);
    CHECK((eliminate_lambda(I3, z3, 2.0 * I3, z3, I3, z3, 1.0) - o.G_D * o.z).norm() <= 1e-14);

    std::mt19937_64 rng(2);
    for(int trial = 0; trial < 10; ++trial) {
        const double sigma = 0.3 + trial;
        const CMat   S = random_hermitian(3, rng), J = random_hermitian(3, rng), M = random_hermitian(3, rng);
        const CVec   s1 = random_cmat(3, 1, rng), j1 = random_cmat(3, 1, rng), m1 = random_cmat(3, 1, rng);
        const CVec   l  = eliminate_lambda(S, s1, J, j1, M, m1, sigma);
        // Dense stationarity system solved directly: (Phi Phi^*) lambda = Phi rho_R + z / sigma.
        CVec rho(15);
        rho << vec3(CMat(J - S - M / sigma)), j1 - s1 - m1 / sigma, (j1 - s1 - m1 / sigma).conjugate();
        const CVec ls = (o.Phi * o.Phi.adjoint()).fullPivLu().solve(o.Phi * rho + o.z / sigma);
        CHECK((l - ls).norm() <= 1e-12 * std::max(1.0, ls.norm()));
    }

    CHECK(eliminate_gamma(0.0, 0.0, 1.0, 1.0) == 0.0);
    CHECK(eliminate_gamma(0.5, 0.0, 1.0, 2.0) == doctest::Approx(-0.5).epsilon(1e-15));
    // Scalar term -g + sigma/2 (J0 - g - S0 - M0/sigma)^2 is stationary at the output.
    const double sigma = 1.7, J0 = 0.2, S0 = 0.4, M0 = 0.9;
    auto         q = [&](double g) { return -g + 0.5 * sigma * std::pow(J0 - g - S0 - M0 / sigma, 2); };
    const double g = eliminate_gamma(S0, J0, M0, sigma);
    CHECK(std::abs((q(g + 1e-6) - q(g - 1e-6)) / 2e-6) <= 1e-8);
}

TEST_CASE("multiplier elimination minimizes the dense Lagrangian") {
    std::mt19937_64 rng(3);
    const int       K = 4;
    const CMat      S = random_hermitian(13, rng), J = random_hermitian(13, rng), M = random_hermitian(13, rng);
    const double    sigma = 1.3;
    const Multipliers y   = eliminate_all(S, J, M, sigma);
    const double      L0  = lagrangian_dense(S, y, J, M, sigma);
    const auto       &o   = constraint_ops();
    for(int trial = 0; trial < 20; ++trial) {
        Multipliers p = y;
        for(auto &L : p.Lambda) L += 1e-3 * random_cmat(9, 1, rng).real().cast<cplx>();
        for(auto &l : p.lambda) l += 1e-3 * o.G_D * (o.Phi * cluster_rho(random_hermitian(4, rng), 0));
        p.gamma += 1e-3;
        CHECK(lagrangian_dense(S, p, J, M, sigma) >= L0 - 1e-12);
    }
    CHECK(y.K == K);
}

TEST_CASE("scalar pair forms agree with the pair-correlation route") {
    std::mt19937_64    rng(10);
    const auto        &o = constraint_ops();
    CHECK(o.pair_residual.scalar);
    CHECK(o.pair_range.scalar);
    CHECK(o.pair_constraint.scalar);
    for(int K : {2, 4, 8, 16}) {
        const int               m = K == 2 ? 1 : 2;
        const std::vector<Operand> ops{Operand::hier(hier_new(K, 3, m, kRank2, 80 + K)),
                                       Operand::dense(random_hermitian(3 * K + 1, rng), K),
                                       Operand::sparse(random_sparse_hermitian(K, 20, rng), K)};
        for(const PairForm *f : {&o.pair_residual, &o.pair_range, &o.pair_constraint})
            for(const auto &X : ops)
                for(const auto &Y : ops) {
                    const double fast = pair_bilinear(*f, X, Y), ref = pair_bilinear_kernels(*f, X, Y);
                    CHECK(std::abs(fast - ref) <= 1e-10 * std::max(1.0, std::abs(ref)));
                }
        const CMat y = random_cmat(3 * K, 3, rng);
        for(const auto &X : ops)
            for(int l = 0; l < m; ++l) {
                CMat a = CMat::Zero(3 * K, 3), b = CMat::Zero(3 * K, 3);
                pair_grad_apply(o.pair_residual, X, -0.7, l, y, a);
                pair_grad_apply_kernels(o.pair_residual, X, -0.7, l, y, b);
                CHECK((a - b).norm() <= 1e-10 * std::max(1.0, b.norm()));
            }
    }
}

TEST_CASE("structured loss matches the dense oracle") {
    std::mt19937_64    rng(4);
    const int          K = 8;
    const SparseMatrix J = test_cost(K, rng);
    const CMat         Jd = J.to_dense();
    for(double sigma : {0.3, 1.0, 4.0}) {
        const HierPSD S  = hier_new(K, 3, 2, kRank2, 11);
        const HierPSD Mh = hier_new(K, 3, 2, kRank2, 12);
        const CMat    Sd = hier_to_dense(S);
        const CMat    Md = random_hermitian(3 * K + 1, rng);

        const Operand  dense_M = Operand::dense(Md, K);
        const DualLoss loss_d(J, dense_M, sigma);
        CHECK(rel(loss_d.value(S), loss_dense_oracle(Sd, Jd, Md, sigma)) <= 1e-10);

        const Operand  hier_M = Operand::hier(Mh);
        const DualLoss loss_h(J, hier_M, sigma);
        const CMat     Mhd = hier_to_dense(Mh);
        CHECK(rel(loss_h.value(S), loss_dense_oracle(Sd, Jd, Mhd, sigma)) <= 1e-10);

        // Dropping constants shifts by L(0).
        const DualLoss loss_nc(J, hier_M, sigma, false);
        const double   L0 = loss_dense_oracle(CMat::Zero(3 * K + 1, 3 * K + 1), Jd, Mhd, sigma);
        CHECK(rel(loss_nc.value(S), loss_h.value(S) - L0) <= 1e-10);
    }
}

TEST_CASE("loss with zero S and J against identity") {
    // Hand evaluation: every pair and cluster residual is -M/sigma, leaving only the z and corner terms.
    const int          K = 4;
    const SparseMatrix J{3 * K + 1, 3 * K + 1, {}};
    const CMat         I = CMat::Identity(3 * K + 1, 3 * K + 1);
    const Operand      Mop = Operand::dense(I, K);
    const DualLoss     loss(J, Mop, 1.0);
    HierPSD            S = hier_new(K, 3, 1, std::vector<int>{1}, 0);
    S.levels.factors[0].setZero();
    S.spike.setZero();
    // With M = I feasible: lambda_j = -G_D(Phi rho_I - z) = 0 and gamma = 0, so L = ||I||^2/2 - ||I||^2/2 = 0.
    CHECK(std::abs(loss.value(S)) <= 1e-12);
    CHECK(std::abs(loss_dense_oracle(CMat::Zero(13, 13), CMat::Zero(13, 13), I, 1.0)) <= 1e-12);
}

TEST_CASE("loss gradient against finite differences") {
    std::mt19937_64    rng(5);
    const int          K = 8;
    const SparseMatrix J = test_cost(K, rng);
    const HierPSD      S = hier_new(K, 3, 2, kRank2, 21);
    const CMat         Md = random_hermitian(3 * K + 1, rng);
    const HierPSD      Mh = hier_new(K, 3, 2, kRank2, 22);
    const Operand      dense_M = Operand::dense(Md, K), hier_M = Operand::hier(Mh);
    for(const Operand *M : {&dense_M, &hier_M}) {
        const DualLoss loss(J, *M, 0.8);
        auto           f = [&](const HierPSD &s, HierGradient &g) { return loss.value_and_grad(s, g); };
        CHECK(max_fd_error(f, S, 20, rng) <= 1e-6);

        // Directional derivative along the level factors equals d/dtheta loss(theta y) at theta = 1.
        HierGradient g = S;
        loss.value_and_grad(S, g);
        double dir = 0.0;
        for(int l = 0; l < S.levels.levels(); ++l)
            dir += (g.levels.factors[l].array().conjugate() * S.levels.factors[l].array()).real().sum();
        auto scaled = [&](double th) {
            HierPSD s = S;
            for(auto &f : s.levels.factors) f *= th;
            return loss.value(s);
        };
        const double fd = (scaled(1.0 + 1e-6) - scaled(1.0 - 1e-6)) / 2e-6;
        CHECK(std::abs(fd - dir) <= 1e-6 * std::max(1.0, std::abs(dir)));
    }
}

TEST_CASE("primal fit objective matches the dense target") {
    std::mt19937_64    rng(6);
    const int          K = 8;
    const SparseMatrix J = test_cost(K, rng);
    const CMat         Jd = J.to_dense();
    const double       sigma = 1.4;
    const HierPSD      S = hier_new(K, 3, 2, kRank2, 31), M = hier_new(K, 3, 2, kRank2, 32);
    const HierPSD      H = hier_new(K, 3, 2, kRank2, 33);
    const Operand      Sop = Operand::hier(S), Mop = Operand::hier(M);
    const PrimalFitObjective obj(J, Sop, Mop, sigma);
    const CMat T  = primal_target_dense(hier_to_dense(S), Jd, hier_to_dense(M), sigma);
    const CMat Hd = hier_to_dense(H);
    CHECK(rel(obj.value(H), (Hd - T).squaredNorm() - T.squaredNorm()) <= 1e-10);

    auto f = [&](const HierPSD &x, HierGradient &g) { return obj.value_and_grad(x, g); };
    CHECK(max_fd_error(f, H, 20, rng) <= 1e-6);

    // Same against a dense previous iterate.
    const CMat               Md = random_hermitian(3 * K + 1, rng);
    const Operand            dMop = Operand::dense(Md, K);
    const PrimalFitObjective obj_d(J, Sop, dMop, sigma);
    const CMat               Td = primal_target_dense(hier_to_dense(S), Jd, Md, sigma);
    CHECK(rel(obj_d.value(H), (Hd - Td).squaredNorm() - Td.squaredNorm()) <= 1e-10);
}

TEST_CASE("primal fit against a feasible target recovers the corner") {
    // Moments of the all-up product state, written exactly in hierarchical form: the spike carries
    // the sigma^z rows and the corner, the finest level carries each site's (x, y) block.
    const int K = 8, m = 2;
    HierPSD   target = hier_new(K, 3, m, std::vector<int>{4}, 0);
    target.levels.factors[0].setZero();
    target.levels.factors[1].setZero();
    target.spike.setZero();
    for(int j = 0; j < K; ++j) {
        target.spike(3 * j + 2)                 = 1.0;
        target.levels.factors[1](3 * j, j % 4)     = 1.0;
        target.levels.factors[1](3 * j + 1, j % 4) = -I_unit;
    }
    target.spike(3 * K) = 1.0;
    const CMat Md       = hier_to_dense(target);
    CVec       psi      = CVec::Zero(1 << K);
    psi(0)              = 1.0;
    REQUIRE((Md - moments_from_state(psi, K)).norm() <= 1e-14);

    // With S = J - F*(y) the target M + sigma (S - J + F*) is M itself.
    std::mt19937_64    rng(9);
    const auto        &o = constraint_ops();
    const SparseMatrix J = cost_matrix(K, 1.0);
    Multipliers        y = Multipliers::zeros(K);
    for(auto &L : y.Lambda) L = random_cmat(9, 1, rng).real().cast<cplx>();
    for(auto &l : y.lambda) l = o.G_D * (o.Phi * cluster_rho(random_hermitian(4, rng), 0));
    const Operand            Sop = Operand::dense(CMat(J.to_dense() - assemble_dual_certificate(y)), K);
    const Operand            Mop = Operand::hier(target);
    const PrimalFitObjective obj(J, Sop, Mop, 1.0);
    HierPSD                  H = hier_new(K, 3, m, std::vector<int>{4}, 5);
    LbfgsOptions             opts;
    opts.max_iters = 1000;
    opts.gtol      = 1e-12;
    const auto r   = primal_fit(H, obj, opts);
    CHECK(std::abs(obj.value(H) + Md.squaredNorm()) <= 1e-8 * Md.squaredNorm());
    CHECK(std::abs(std::norm(H.spike(3 * K)) - 1.0) <= 1e-3);
    CHECK(std::is_sorted(r.history.rbegin(), r.history.rend()));
}

TEST_CASE("structured metrics match dense evaluation") {
    std::mt19937_64    rng(7);
    const int          K = 8;
    const SparseMatrix J = test_cost(K, rng);
    const CMat         Jd = J.to_dense();
    const double       sigma = 0.9;
    const HierPSD      S = hier_new(K, 3, 2, kRank2, 51), M = hier_new(K, 3, 2, kRank2, 52);
    const CMat         Sd = hier_to_dense(S), Md = hier_to_dense(M);
    const Operand      Jop = Operand::sparse(J, K), Sop = Operand::hier(S), Mop = Operand::hier(M);

    const Multipliers y      = eliminate_all(Sd, Jd, Md, sigma);
    const double      dense_ = (Sd - Jd + assemble_dual_certificate(y)).norm() / (1.0 + Jd.norm());
    CHECK(rel(eta_d_structured(Jop, Sop, Mop, sigma), dense_) <= 1e-10);
    CHECK(rel(dual_objective_structured(Jop, Sop, Mop, sigma), dual_objective_dense(y)) <= 1e-10);

    const auto lr = linear_residuals(Md, K);
    CHECK(rel(eta_p4_structured(Mop), lr.norm / (1.0 + lr.rhs_norm)) <= 1e-10);
    CHECK(rel(eta_p3_hier(M), eta_p3_dense(Md)) <= 1e-8);
    CHECK(rel(Mop.trace_with(J), (Jd * Md).trace().real()) <= 1e-12);
    CHECK(rel(Mop.frob2(), Md.squaredNorm()) <= 1e-12);
    CHECK(std::abs(Mop.entry(5, 3 * K) - Md(5, 3 * K)) <= 1e-12);
    CHECK(std::abs(Mop.entry(4, 7) - Md(4, 7)) <= 1e-12);
}

TEST_CASE("metric trivial cases") {
    const int  K = 4;
    const CMat I = CMat::Identity(3 * K + 1, 3 * K + 1);
    CHECK(eta_p3_dense(I) == 0.0);
    CHECK(eta_p4_structured(Operand::dense(I, K)) == 0.0);
    CHECK(eta_gap(-3.5, -3.5) == 0.0);
    CHECK(eta_p3(-1.0, 3.0) == doctest::Approx(0.25));

    // S = J - F*(y) exactly, with M feasible: the eliminated multipliers reproduce y.
    std::mt19937_64    rng(8);
    const auto        &o = constraint_ops();
    const SparseMatrix J = cost_matrix(K, 0.6);
    Multipliers        y = Multipliers::zeros(K);
    for(auto &L : y.Lambda) L = random_cmat(9, 1, rng).real().cast<cplx>();
    for(auto &l : y.lambda) l = o.G_D * (o.Phi * cluster_rho(random_hermitian(4, rng), 0));
    y.gamma      = -0.4;
    const CMat S = J.to_dense() - assemble_dual_certificate(y);
    // The structured norm expands squares, so an exact zero shows up at the square root of rounding.
    CHECK(eta_d_structured(Operand::sparse(J, K), Operand::dense(S, K), Operand::dense(I, K), 0.7) <= 1e-6);
}

TEST_CASE("penalty update") {
    SolverConfig cfg;
    cfg.penalty_rule = PenaltyRule::PrimalRaises;
    CHECK(update_penalty(1.0, 1e-2, 9e-3, cfg) == 1.0);
    CHECK(update_penalty(1.0, 1.0, 1e-3, cfg) == 2.0);
    CHECK(update_penalty(1e4, 1.0, 1e-3, cfg) == 1e4);
    CHECK(update_penalty(1.0, 1e-3, 1.0, cfg) == 0.5);
    CHECK(update_penalty(1e-4, 1e-3, 1.0, cfg) == 1e-4);
    cfg.penalty_rule = PenaltyRule::DualRaises;
    CHECK(SolverConfig{}.penalty_rule == PenaltyRule::DualRaises);
    CHECK(update_penalty(1.0, 1.0, 1e-3, cfg) == 0.5);
    CHECK(update_penalty(1.0, 1e-3, 1.0, cfg) == 2.0);
    CHECK_THROWS_AS(update_penalty(0.0, 1.0, 1.0, cfg), InvalidInput);
}

TEST_CASE("config defaults and validation") {
    CHECK(default_sigma0(512) == 1.0);
    CHECK(default_sigma0(1024) == 0.1);
    CHECK(default_levels(64) == 3);
    CHECK(default_levels(4096) == 9);
    CHECK(default_levels(8) == 1);
    SolverConfig cfg;
    CHECK_NOTHROW(cfg.validate(64));
    CHECK_THROWS_AS(cfg.validate(48), InvalidInput);
    cfg.algorithm = Algorithm::Dense;
    CHECK_NOTHROW(cfg.validate(48));
    cfg.tol = 0.0;
    CHECK_THROWS_AS(cfg.validate(48), InvalidInput);
    CHECK(parse_algorithm("hier-both") == Algorithm::HierBoth);
    CHECK(algorithm_name(Algorithm::HierDual) == "hier-dual");
    CHECK_THROWS_AS(parse_algorithm("admm"), InvalidInput);
}

TEST_CASE("L-BFGS on a Rosenbrock valley") {
    auto f = [](const RVec &x, RVec &g) {
        double v = 0.0;
        g.setZero(x.size());
        for(Eigen::Index i = 0; i + 1 < x.size(); ++i) {
            const double a = x(i + 1) - x(i) * x(i), b = 1.0 - x(i);
            v += 100.0 * a * a + b * b;
            g(i) += -400.0 * a * x(i) - 2.0 * b;
            g(i + 1) += 200.0 * a;
        }
        return v;
    };
    RVec x = RVec::Constant(10, -1.2);
    LbfgsOptions opts;
    opts.max_iters = 500;
    opts.gtol      = 1e-10;
    const auto r   = lbfgs_minimize(f, x, opts);
    CHECK(r.status == "converged");
    CHECK((x - RVec::Ones(10)).norm() <= 1e-6);
    CHECK(std::is_sorted(r.history.rbegin(), r.history.rend()));
}

TEST_CASE("hierarchical pack round trip") {
    const HierPSD H = hier_new(8, 3, 2, std::vector<int>{2, 3}, 61);
    HierPSD       G = hier_new(8, 3, 2, std::vector<int>{2, 3}, 62);
    unpack_hier(pack_hier(H), G);
    CHECK((hier_to_dense(G) - hier_to_dense(H)).norm() == 0.0);
    CHECK_THROWS_AS(unpack_hier(RVec::Zero(3), G), InvalidInput);
}

TEST_CASE("fit recovers an exactly representable matrix") {
    const HierPSD target = hier_new(8, 3, 2, kRank2, 71);
    const CMat    A      = hier_to_dense(target);
    const auto    fit    = fit_hier_to_dense(A, 8, 3, 2, kRank2, 2000, 72);
    CHECK(fit.err <= 1e-6);
}

TEST_CASE("small instances bound the exact energy") {
    SolverConfig cfg;
    cfg.tol       = 1e-5;
    cfg.max_outer = 3000;
    cfg.algorithm = Algorithm::Dense;
    for(double h : {0.5, 1.0, 1.5}) {
        const double E0  = ed_ground_energy(8, h);
        const auto   res = alm_dense(8, h, cfg);
        CHECK(res.converged);
        CHECK(res.bound() <= E0 + 1e-6 + 10 * cfg.tol * (1 + std::abs(E0)));
        CHECK(linear_residuals(res.M_dense, 8).norm <= 1e-8);
        MESSAGE("dense N=8 h=" << h << " bound " << res.bound() << " exact " << E0 << " iters " << res.iterations);
    }
}

TEST_CASE("dense engine keeps M feasible every iteration") {
    SolverConfig cfg;
    cfg.algorithm = Algorithm::Dense;
    for(int k = 1; k <= 6; ++k) {
        cfg.max_outer = k;
        const auto res = alm_dense(6, 1.0, cfg);
        CHECK(linear_residuals(res.M_dense, 6).norm <= 1e-8);
        CHECK(static_cast<int>(res.trace.rows.size()) <= k);
    }
}

TEST_CASE("hierarchical-dual engine on N = 8") {
    SolverConfig cfg;
    cfg.algorithm = Algorithm::HierDual;
    cfg.tol       = 1e-4;
    cfg.max_outer = 300;
    for(double h : {0.5, 1.0, 1.5}) {
        const double E0  = ed_ground_energy(8, h);
        const auto   res = alm_hier_dual(8, h, cfg);
        MESSAGE("hier-dual N=8 h=" << h << " bound " << res.bound() << " exact " << E0 << " iters " << res.iterations
                                   << " eta " << res.final.max_eta());
        CHECK(res.converged);
        CHECK(res.bound() <= E0 + 1e-6 + 10 * res.final.max_eta() * (1 + std::abs(E0)));
        CHECK(linear_residuals(res.M_dense, 8).norm <= 1e-8);
    }
}

TEST_CASE("hierarchical-both engine on N = 8") {
    SolverConfig cfg;
    cfg.algorithm = Algorithm::HierBoth;
    cfg.tol       = 1e-3;
    cfg.max_outer = 300;
    const double E0  = ed_ground_energy(8, 1.0);
    const auto   res = alm_hier_both(8, 1.0, cfg);
    MESSAGE("hier-both N=8 bound " << res.bound() << " exact " << E0 << " iters " << res.iterations << " eta "
                                   << res.final.max_eta());
    CHECK(res.converged);
    CHECK(res.bound() <= E0 + 1e-6 + 10 * res.final.max_eta() * (1 + std::abs(E0)));
}
