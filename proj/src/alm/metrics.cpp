#include <cmath>
#include <ostream>

#include "hsdp/alm.hpp"
#include "hsdp/lanczos.hpp"

namespace hsdp {

double update_penalty(double sigma, double eta_p, double eta_d, const SolverConfig &cfg) {
    if(!(sigma > 0.0)) throw InvalidInput("update_penalty: sigma must be positive");
    const bool primal_heavy = eta_p > cfg.penalty_ratio * eta_d;
    const bool dual_heavy   = eta_d > cfg.penalty_ratio * eta_p;
    double     out          = sigma;
    if(cfg.penalty_rule == PenaltyRule::PrimalRaises) {
        if(primal_heavy) out = sigma * cfg.penalty_factor;
        else if(dual_heavy) out = sigma / cfg.penalty_factor;
    } else {
        if(dual_heavy) out = sigma * cfg.penalty_factor;
        else if(primal_heavy) out = sigma / cfg.penalty_factor;
    }
    return std::clamp(out, cfg.sigma_min, cfg.sigma_max);
}

double eta_gap(double primal, double dual) { return std::abs(primal - dual) / (1.0 + std::abs(primal) + std::abs(dual)); }

double eta_p3(double lmin, double lmax) { return std::max(0.0, -lmin) / (1.0 + std::max(0.0, lmax)); }

double eta_p3_dense(const CMat &M) {
    const Eigen::SelfAdjointEigenSolver<CMat> es(M, Eigen::EigenvaluesOnly);
    if(es.info() != Eigen::Success) throw NumericalFailure("eigenvalue solve failed");
    const auto &ev = es.eigenvalues();
    return eta_p3(ev(0), ev(ev.size() - 1));
}

double eta_p3_hier(const HierPSD &M) {
    LanczosOptions opts;
    opts.tol                = 1e-10;
    const ExtremeEigen ex   = lanczos_extremes([&M](const CVec &x, CVec &y) { y = hier_matvec(M, x); }, M.dim(), opts);
    return eta_p3(ex.min, ex.max);
}

double eta_p4_structured(const Operand &M) {
    const auto  &o  = constraint_ops();
    const int    K  = M.K();
    double       r2 = pair_bilinear(o.pair_constraint, M, M);
    for(int j = 0; j < K; ++j) r2 += (o.Phi * M.rho(j) - o.z).squaredNorm();
    r2 += (M.corner() - 1.0) * (M.corner() - 1.0);
    const double npairs = 0.5 * K * (K - 1);
    const double b      = std::sqrt(npairs * o.w.squaredNorm() + K * o.z.squaredNorm() + 1.0);
    return std::sqrt(std::max(0.0, r2)) / (1.0 + b);
}

double dual_objective_structured(const Operand &J, const Operand &S, const Operand &M, double sigma) {
    const auto &o = constraint_ops();
    double      d = J.corner() - S.corner() - M.corner() / sigma + 1.0 / sigma;
    for(int j = 0; j < M.K(); ++j) {
        const CVec r      = J.rho(j) - S.rho(j) - M.rho(j) / sigma;
        const CVec lambda = o.G_D * (o.Phi * r + o.z / sigma);
        d += lambda.dot(o.z).real();
    }
    return d;
}

double eta_d_structured(const Operand &J, const Operand &S, const Operand &M, double sigma) {
    const auto &o = constraint_ops();
    const CMat  P = CMat::Identity(15, 15) - o.Pi_D;
    // Pair blocks: ||(I - Pi)(S - J)||^2 + ||Pi M||^2 / sigma^2.
    double acc = pair_bilinear(o.pair_residual, S, S) - 2.0 * pair_bilinear(o.pair_residual, S, J) +
                 pair_bilinear(o.pair_residual, J, J) + pair_bilinear(o.pair_range, M, M) / (sigma * sigma);
    for(int j = 0; j < M.K(); ++j) {
        const CVec r = J.rho(j) - S.rho(j) - M.rho(j) / sigma;
        acc += (-(P * r) - M.rho(j) / sigma + o.beta / sigma).squaredNorm();
    }
    const double corner = (1.0 - M.corner()) / sigma;
    acc += corner * corner;
    return std::sqrt(std::max(0.0, acc)) / (1.0 + std::sqrt(J.frob2()));
}

void ConvergenceTrace::write_csv(std::ostream &os) const {
    os << "iter,eta_p,eta_d,eta_g,obj_primal,obj_dual,dobj_per_site,sigma,wall_ms\n";
    const auto old = os.precision(12);
    for(const auto &r : rows)
        os << r.iter << ',' << r.eta_p << ',' << r.eta_d << ',' << r.eta_g << ',' << r.obj_primal << ',' << r.obj_dual
           << ',' << r.dobj_per_site << ',' << r.sigma << ',' << r.wall_ms << '\n';
    os.precision(old);
}

} // namespace hsdp
