#pragma once

#include <iosfwd>
#include <vector>

#include "hsdp/hmatrix.hpp"
#include "hsdp/types.hpp"

namespace hsdp {

/// Basis size per cluster for the spin-1/2 chain: (sigma^x, sigma^y, sigma^z).
inline constexpr int kBasis = 3;

/// Real-bilinear form on pairs of 3x3 blocks, stored as two 9x9 tables over block-vec indices:
///   form(X, Y) = Re( sum_{e,e'} T1[e,e'] X_e Y_e' + T2[e,e'] conj(X_e) Y_e' ).
/// Summed over strict-upper block pairs this contracts two PairCorrTensors, P(X, Y) and P(conj X, Y).
struct PairForm {
    CMat      T1, T2;
    EntryMask mask1, mask2; ///< nonzero (e, e') of each table
    /// Set when T1 = coef1 I and T2 = coef2 I with real coefficients. For Hermitian operands the
    /// strict-upper sum then equals half the off-diagonal-block part of full Frobenius products.
    bool   scalar = false;
    double coef1 = 0.0, coef2 = 0.0;

    [[nodiscard]] double eval(const PairCorrTensor &P_xy, const PairCorrTensor &P_conjx_y) const;
    /// Direct evaluation on two 3x3 blocks.
    [[nodiscard]] double direct(const CMat &X, const CMat &Y) const;
    /// Terms realizing G(e') = scale * sum_e conj(T1[e,e']) A(e), i.e. the Y-slot derivative against partner conj(X).
    [[nodiscard]] std::vector<UpperTerm> terms1(double scale) const;
    /// Same for the T2 table against partner X.
    [[nodiscard]] std::vector<UpperTerm> terms2(double scale) const;

    /// Recovers the tables of the symmetric bilinear form polarizing `quad` by probing unit inputs.
    template <class Quad> static PairForm from_quadratic(Quad &&quad);
};

/// Constraint operators of the relaxation, transcribed entry by entry, with adjoints and Gram inverses.
struct ConstraintOps {
    CMat A_U, A_L;      ///< 9 x 9, act on vec of the (i,j) and (j,i) blocks
    CMat D;             ///< 12 x 9, acts on vec of a diagonal block
    CMat D_U, D_L;      ///< 12 x 3, act on the border column and on the border row entries
    CVec w;             ///< 9, all zero
    CVec z;             ///< 12
    CMat A_U_adj, A_L_adj, D_adj, D_U_adj, D_L_adj;
    CMat G_A;           ///< (A_U A_U^* + A_L A_L^*)^{-1}
    CMat G_D;           ///< (D D^* + D_U D_U^* + D_L D_L^*)^{-1}

    // Per-cluster stacked form. rho = (vec X_jj, border column, border row entries) in C^15.
    CMat   Phi;         ///< 12 x 15 = [D | D_U | D_L]
    CMat   Pi_D;        ///< Phi^* G_D Phi, orthogonal projector onto range(Phi^*)
    CVec   beta;        ///< Phi^* G_D z
    double zGz = 0.0;   ///< z^* G_D z

    PairForm pair_residual; ///< ||(I - Pi)(X, X^*)||^2 after eliminating the pair multiplier
    PairForm pair_range;    ///< ||Pi (X, X^*)||^2
    PairForm pair_constraint; ///< ||A_U vec X + A_L vec X^*||^2
};

/// Built once on first use.
const ConstraintOps &constraint_ops();

inline CVec vec3(const CMat &X) { return Eigen::Map<const CVec>(X.data(), 9); }
inline CMat unvec3(const CVec &v) { return Eigen::Map<const CMat>(v.data(), 3, 3); }

/// Stacked per-cluster vector for cluster j of a (3K+1)-square Hermitian matrix.
CVec cluster_rho(const CMat &A, int j);

/// Sparse (3N+1)-square cost matrix of the periodic transverse-field Ising chain, 0-based entries.
SparseMatrix cost_matrix(int N, double h);

/// Writes "row,col,value" lines with 1-based indices.
void write_triples_csv(std::ostream &os, const SparseMatrix &A);

/// Multipliers of the relaxation. Lambda is indexed by pair_index(i, j) for i < j.
struct Multipliers {
    int               K = 0;
    std::vector<CVec> Lambda; ///< 9-vectors, real-valued
    std::vector<CVec> lambda; ///< 12-vectors
    double            gamma = 0.0;

    static Multipliers zeros(int K);
};

inline int pair_index(int i, int j, int K) { return i * K - i * (i + 1) / 2 + (j - i - 1); }

/// Dense (3K+1)-square F*(Lambda, lambda, gamma). Rejects non-real Lambda and lambda that would
/// not yield a Hermitian certificate.
CMat assemble_dual_certificate(const Multipliers &mult);

struct LinearResiduals {
    CVec   values;   ///< pair family (lexicographic i<j), then clusters, then the corner
    double norm     = 0.0;
    double rhs_norm = 0.0; ///< ||(w, ..., z, ..., 1)||
};

LinearResiduals linear_residuals(const CMat &M, int K);

/// Moment matrix of a normalized N-qubit state (qubit i is bit i of the basis index).
CMat moments_from_state(const CVec &psi, int N);

// ---------------------------------------------------------------------------------------------

template <class Quad> PairForm PairForm::from_quadratic(Quad &&quad) {
    auto unit = [](int e, cplx a) {
        CMat X = CMat::Zero(3, 3);
        X(e % 3, e / 3) = a;
        return X;
    };
    auto bil = [&](const CMat &X, const CMat &Y) {
        return 0.25 * (quad(CMat(X + Y)) - quad(CMat(X - Y)));
    };
    PairForm  f;
    f.T1 = CMat::Zero(9, 9);
    f.T2 = CMat::Zero(9, 9);
    for(int e = 0; e < 9; ++e)
        for(int ep = 0; ep < 9; ++ep) {
            const double f11 = bil(unit(e, 1.0), unit(ep, 1.0));
            const double fii = bil(unit(e, I_unit), unit(ep, I_unit));
            const double f1i = bil(unit(e, 1.0), unit(ep, I_unit));
            const double fi1 = bil(unit(e, I_unit), unit(ep, 1.0));
            f.T1(e, ep) = {0.5 * (f11 - fii), -0.5 * (f1i + fi1)};
            f.T2(e, ep) = {0.5 * (f11 + fii), 0.5 * (fi1 - f1i)};
        }
    constexpr double tiny = 1e-13;
    const cplx       a = f.T1(0, 0), b = f.T2(0, 0);
    f.scalar = std::abs(a.imag()) <= tiny && std::abs(b.imag()) <= tiny &&
               (f.T1 - a * CMat::Identity(9, 9)).cwiseAbs().maxCoeff() <= tiny &&
               (f.T2 - b * CMat::Identity(9, 9)).cwiseAbs().maxCoeff() <= tiny;
    if(f.scalar) {
        f.coef1 = a.real();
        f.coef2 = b.real();
    }
    for(int e = 0; e < 9; ++e)
        for(int ep = 0; ep < 9; ++ep) {
            if(std::abs(f.T1(e, ep)) > tiny) f.mask1.emplace_back(e, ep);
            else f.T1(e, ep) = 0.0;
            if(std::abs(f.T2(e, ep)) > tiny) f.mask2.emplace_back(e, ep);
            else f.T2(e, ep) = 0.0;
        }
    return f;
}

} // namespace hsdp
