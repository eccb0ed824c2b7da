#include <cmath>
#include <ostream>
#include <string>

#include "hsdp/model.hpp"

namespace hsdp {

CVec cluster_rho(const CMat &A, int j) {
    const int ck = static_cast<int>(A.rows()) - 1;
    CVec      rho(15);
    rho.head(9)        = vec3(CMat(A.block(3 * j, 3 * j, 3, 3)));
    rho.segment(9, 3)  = A.block(3 * j, ck, 3, 1);
    rho.segment(12, 3) = A.block(ck, 3 * j, 1, 3).transpose();
    return rho;
}

SparseMatrix cost_matrix(int N, double h) {
    if(N < 3) throw InvalidInput("cost matrix needs N >= 3, got " + std::to_string(N));
    if(!std::isfinite(h)) throw InvalidInput("field strength must be finite");
    const int    n = 3 * N + 1;
    SparseMatrix J{n, n, {}};
    auto         sym = [&J](int a, int b, double v) {
        J.entries.push_back({a, b, v});
        J.entries.push_back({b, a, v});
    };
    // zz bonds between the sigma^z rows of neighbouring sites, periodic closure last.
    for(int k = 1; k <= N - 1; ++k) sym(3 * k - 1, 3 * k + 2, -0.5);
    sym(3 * N - 1, 2, -0.5);
    if(h != 0.0)
        for(int k = 1; k <= N; ++k) sym(3 * k - 3, 3 * N, -0.5 * h);
    return J;
}

void write_triples_csv(std::ostream &os, const SparseMatrix &A) {
    os << "row,col,value\n";
    os.precision(17);
    for(const auto &e : A.entries) {
        os << e.row + 1 << ',' << e.col + 1 << ',' << e.value.real();
        if(e.value.imag() != 0.0) os << (e.value.imag() > 0 ? "+" : "") << e.value.imag() << 'i';
        os << '\n';
    }
}

Multipliers Multipliers::zeros(int K) {
    Multipliers m;
    m.K = K;
    m.Lambda.assign(static_cast<std::size_t>(K * (K - 1) / 2), CVec::Zero(9));
    m.lambda.assign(static_cast<std::size_t>(K), CVec::Zero(12));
    return m;
}

CMat assemble_dual_certificate(const Multipliers &mult) {
    const auto &o = constraint_ops();
    const int   K = mult.K;
    if(static_cast<int>(mult.Lambda.size()) != K * (K - 1) / 2 || static_cast<int>(mult.lambda.size()) != K)
        throw InvalidInput("multiplier counts do not match K");
    const int ck = 3 * K;
    CMat      F  = CMat::Zero(ck + 1, ck + 1);
    for(int i = 0; i < K; ++i)
        for(int j = i + 1; j < K; ++j) {
            const CVec &L = mult.Lambda[pair_index(i, j, K)];
            if(L.size() != 9) throw InvalidInput("pair multiplier must have 9 entries");
            if(L.imag().cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, L.norm()))
                throw InvalidInput("pair multipliers must be real");
            F.block(3 * i, 3 * j, 3, 3) = unvec3(o.A_U_adj * L);
            F.block(3 * j, 3 * i, 3, 3) = unvec3(o.A_L_adj * L);
        }
    for(int j = 0; j < K; ++j) {
        const CVec &l = mult.lambda[j];
        if(l.size() != 12) throw InvalidInput("cluster multiplier must have 12 entries");
        const CMat blk = unvec3(o.D_adj * l);
        const CVec col = o.D_U_adj * l;
        const CVec row = o.D_L_adj * l;
        const double tol = 1e-10 * std::max(1.0, l.norm());
        if((blk - blk.adjoint()).cwiseAbs().maxCoeff() > tol || (row - col.conjugate()).cwiseAbs().maxCoeff() > tol)
            throw InvalidInput("cluster multiplier does not generate a Hermitian certificate");
        F.block(3 * j, 3 * j, 3, 3) = blk;
        F.block(3 * j, ck, 3, 1)    = col;
        F.block(ck, 3 * j, 1, 3)    = row.transpose();
    }
    F(ck, ck) = mult.gamma;
    return F;
}

LinearResiduals linear_residuals(const CMat &M, int K) {
    const auto &o  = constraint_ops();
    const int   ck = 3 * K;
    if(M.rows() != ck + 1 || M.cols() != ck + 1) throw InvalidInput("moment matrix size does not match K");
    const int       npairs = K * (K - 1) / 2;
    LinearResiduals r;
    r.values.resize(9 * npairs + 12 * K + 1);
    int p = 0;
    for(int i = 0; i < K; ++i)
        for(int j = i + 1; j < K; ++j) {
            r.values.segment(9 * p, 9) = o.A_U * vec3(CMat(M.block(3 * i, 3 * j, 3, 3))) +
                                         o.A_L * vec3(CMat(M.block(3 * j, 3 * i, 3, 3))) - o.w;
            ++p;
        }
    for(int j = 0; j < K; ++j) r.values.segment(9 * npairs + 12 * j, 12) = o.Phi * cluster_rho(M, j) - o.z;
    r.values(r.values.size() - 1) = M(ck, ck) - 1.0;
    r.norm     = r.values.norm();
    r.rhs_norm = std::sqrt(static_cast<double>(npairs) * o.w.squaredNorm() +
                           static_cast<double>(K) * o.z.squaredNorm() + 1.0);
    return r;
}

CMat moments_from_state(const CVec &psi, int N) {
    if(N < 1 || N > 12) throw InvalidInput("moments_from_state supports 1 <= N <= 12");
    const long dim = 1L << N;
    if(psi.size() != dim) throw InvalidInput("state length must be 2^N");
    if(std::abs(psi.norm() - 1.0) > 1e-10) throw InvalidInput("state must be normalized");

    // Columns: sigma^a_i psi for every (i, a), then psi itself; the moment matrix is their Gram matrix.
    CMat V(dim, 3 * N + 1);
    for(int i = 0; i < N; ++i) {
        const long bit = 1L << i;
        for(long b = 0; b < dim; ++b) {
            const long flipped = b ^ bit;
            const bool up      = (b & bit) == 0;
            V(flipped, 3 * i)     = psi(b);
            V(flipped, 3 * i + 1) = (up ? I_unit : -I_unit) * psi(b);
            V(b, 3 * i + 2)       = up ? psi(b) : -psi(b);
        }
    }
    V.col(3 * N) = psi;
    return V.adjoint() * V;
}

} // namespace hsdp
