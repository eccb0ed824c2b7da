#include "hsdp/alm.hpp"

namespace hsdp {

namespace {

const CMat &residual_projector() {
    static const CMat P = CMat::Identity(15, 15) - constraint_ops().Pi_D;
    return P;
}

// Chain rule from cluster-vector and corner derivatives plus per-level panel derivatives
// (on the absorbed levels) back to the factors and spike of S.
void finish_gradient(const HierPSD &S, const Operand &Sop, std::vector<CMat> &out, const std::vector<CVec> &g_rho,
                     double d_corner, HierGradient &grad) {
    const int  ck = kBasis * S.K();
    const auto &Y = Sop.levels().factors;
    CVec       g_border(ck);
    for(int j = 0; j < S.K(); ++j) {
        const CMat U = unvec3(g_rho[j].head(9));
        const CMat W = U + U.adjoint();
        for(std::size_t l = 0; l < out.size(); ++l) out[l].middleRows(kBasis * j, kBasis) += W * Y[l].middleRows(kBasis * j, kBasis);
        g_border.segment(kBasis * j, kBasis) = g_rho[j].segment(9, 3) + g_rho[j].segment(12, 3).conjugate();
    }
    const cplx  t_last = S.spike(ck);
    const auto  t_hat  = S.spike.head(ck);
    grad.levels        = S.levels;
    for(std::size_t l = 0; l < out.size(); ++l) grad.levels.factors[l] = out[l].leftCols(S.levels.factors[l].cols());
    grad.spike.resize(ck + 1);
    grad.spike.head(ck) = out[0].rightCols(1) + g_border * t_last;
    grad.spike(ck)      = (g_border.conjugate().array() * t_hat.array()).sum() + 2.0 * d_corner * t_last;
}

std::vector<CMat> zero_panels(const Operand &Sop) {
    std::vector<CMat> out;
    for(const auto &f : Sop.levels().factors) out.push_back(CMat::Zero(f.rows(), f.cols()));
    return out;
}

} // namespace

DualLoss::DualLoss(const SparseMatrix &J, const Operand &M, double sigma, bool include_constants)
    : J_(&J), M_(&M), Jop_(Operand::sparse(J, M.K())), sigma_(sigma) {
    if(!(sigma > 0.0)) throw InvalidInput("DualLoss: sigma must be positive");
    const auto &o   = constraint_ops();
    const auto &res = o.pair_residual;
    const double s  = sigma_;
    pair_const_ = 0.5 * s *
                  (pair_bilinear(res, Jop_, Jop_) + pair_bilinear(res, M, M) / (s * s) -
                   2.0 / s * pair_bilinear(res, Jop_, M));
    m_frob2_ = M.frob2();
    if(!include_constants) {
        // L(0): every S-dependent term vanishes.
        constant_ = pair_const_;
        const CMat &P = residual_projector();
        for(int j = 0; j < M.K(); ++j) {
            const CVec r = Jop_.rho(j) - M.rho(j) / s;
            constant_ += 0.5 * s * r.dot(P * r).real() - r.dot(o.beta).real() - o.zGz / (2.0 * s);
        }
        constant_ += -Jop_.corner() + M.corner() / s - 1.0 / (2.0 * s) - m_frob2_ / (2.0 * s);
    }
}

double DualLoss::value(const HierPSD &S) const { return eval(S, nullptr); }

double DualLoss::value_and_grad(const HierPSD &S, HierGradient &grad) const { return eval(S, &grad); }

double DualLoss::eval(const HierPSD &S, HierGradient *grad) const {
    const auto   &o   = constraint_ops();
    const auto   &res = o.pair_residual;
    const CMat   &P   = residual_projector();
    const double  s   = sigma_;
    const Operand Sop = Operand::hier(S);
    if(Sop.K() != M_->K()) throw InvalidInput("DualLoss: S and M have different K");

    double f = pair_const_ + 0.5 * s * pair_bilinear(res, Sop, Sop) - s * pair_bilinear(res, Sop, Jop_) +
               pair_bilinear(res, Sop, *M_);

    std::vector<CVec> g_rho(static_cast<std::size_t>(Sop.K()));
    for(int j = 0; j < Sop.K(); ++j) {
        const CVec r  = Jop_.rho(j) - Sop.rho(j) - M_->rho(j) / s;
        const CVec Pr = P * r;
        f += 0.5 * s * r.dot(Pr).real() - r.dot(o.beta).real() - o.zGz / (2.0 * s);
        g_rho[j] = -(s * Pr - o.beta);
    }
    f += Sop.corner() - Jop_.corner() + M_->corner() / s - 1.0 / (2.0 * s);
    f -= m_frob2_ / (2.0 * s);
    f -= constant_;

    if(grad) {
        auto out = zero_panels(Sop);
        for(int l = 0; l < static_cast<int>(out.size()); ++l) {
            const CMat &Y = Sop.levels().factors[l];
            pair_grad_apply(res, Sop, s, l, Y, out[l]);
            pair_grad_apply(res, Jop_, -s, l, Y, out[l]);
            pair_grad_apply(res, *M_, 1.0, l, Y, out[l]);
        }
        finish_gradient(S, Sop, out, g_rho, 1.0, *grad);
    }
    return f;
}

PrimalFitObjective::PrimalFitObjective(const SparseMatrix &J, const Operand &S, const Operand &M, double sigma)
    : J_(&J), S_(&S), M_(&M), Jop_(Operand::sparse(J, M.K())), sigma_(sigma) {
    if(!(sigma > 0.0)) throw InvalidInput("PrimalFitObjective: sigma must be positive");
    if(S.K() != M.K()) throw InvalidInput("PrimalFitObjective: S and M have different K");
    const auto &o = constraint_ops();
    const CMat &P = residual_projector();
    for(int j = 0; j < M.K(); ++j) {
        const CVec r = Jop_.rho(j) - S.rho(j) - M.rho(j) / sigma;
        rho_target_.push_back(-sigma * (P * r) + o.beta);
    }
}

double PrimalFitObjective::value(const HierPSD &H) const { return eval(H, nullptr); }

double PrimalFitObjective::value_and_grad(const HierPSD &H, HierGradient &grad) const { return eval(H, &grad); }

double PrimalFitObjective::eval(const HierPSD &H, HierGradient *grad) const {
    const auto   &res = constraint_ops().pair_residual;
    const double  s   = sigma_;
    const Operand Hop = Operand::hier(H);
    if(Hop.K() != M_->K()) throw InvalidInput("PrimalFitObjective: H has the wrong K");

    // Re<H, T> = pair part + cluster part + corner (the target corner is exactly 1).
    const double pair = -s * (pair_bilinear(res, Hop, Jop_) - pair_bilinear(res, Hop, *S_)) +
                        pair_bilinear(res, Hop, *M_);
    double cluster = 0.0;
    for(int j = 0; j < Hop.K(); ++j) cluster += Hop.rho(j).dot(rho_target_[j]).real();
    const double f = Hop.frob2() - 2.0 * (pair + cluster + Hop.corner());

    if(grad) {
        auto out = zero_panels(Hop);
        for(int l = 0; l < static_cast<int>(out.size()); ++l) {
            const CMat &Y = Hop.levels().factors[l];
            hier_blockdiag_apply(Hop.levels(), l, Y, 4.0, out[l]);
            pair_grad_apply(res, Jop_, 2.0 * s, l, Y, out[l]);
            pair_grad_apply(res, *S_, -2.0 * s, l, Y, out[l]);
            pair_grad_apply(res, *M_, -2.0, l, Y, out[l]);
        }
        std::vector<CVec> g_rho;
        for(int j = 0; j < Hop.K(); ++j) {
            CVec g = -2.0 * rho_target_[j];
            // 2||border||^2 of the full norm, attributed to the column slot.
            g.segment(9, 3) += 4.0 * Hop.rho(j).segment(9, 3);
            g_rho.push_back(std::move(g));
        }
        finish_gradient(H, Hop, out, g_rho, 2.0 * Hop.corner() - 2.0, *grad);
    }
    return f;
}

} // namespace hsdp
