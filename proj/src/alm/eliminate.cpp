#include "hsdp/alm.hpp"

namespace hsdp {

CVec eliminate_Lambda(const CMat &S_ij, const CMat &S_ji, const CMat &J_ij, const CMat &J_ji, const CMat &M_ij,
                      const CMat &M_ji, double sigma) {
    const auto &o  = constraint_ops();
    const CMat  Ru = J_ij - S_ij - M_ij / sigma;
    const CMat  Rl = J_ji - S_ji - M_ji / sigma;
    return o.G_A * (o.A_U * vec3(Ru) + o.A_L * vec3(Rl) + o.w / sigma);
}

CVec eliminate_lambda(const CMat &S_jj, const CVec &S1_j, const CMat &J_jj, const CVec &J1_j, const CMat &M_jj,
                      const CVec &M1_j, double sigma) {
    const auto &o  = constraint_ops();
    const CMat  R  = J_jj - S_jj - M_jj / sigma;
    const CVec  r1 = J1_j - S1_j - M1_j / sigma;
    return o.G_D * (o.D * vec3(R) + o.D_U * r1 + o.D_L * r1.conjugate() + o.z / sigma);
}

double eliminate_gamma(double S0, double J0, double M0, double sigma) { return J0 - S0 - M0 / sigma + 1.0 / sigma; }

Multipliers eliminate_all(const CMat &S, const CMat &J, const CMat &M, double sigma) {
    const int K  = static_cast<int>(S.rows() - 1) / 3;
    const int ck = 3 * K;
    if(S.rows() != ck + 1 || J.rows() != ck + 1 || M.rows() != ck + 1)
        throw InvalidInput("eliminate_all: matrices must share size 3K+1");
    Multipliers mult = Multipliers::zeros(K);
    for(int i = 0; i < K; ++i)
        for(int j = i + 1; j < K; ++j) {
            auto blk = [&](const CMat &A, int a, int b) { return CMat(A.block(3 * a, 3 * b, 3, 3)); };
            mult.Lambda[pair_index(i, j, K)] =
                eliminate_Lambda(blk(S, i, j), blk(S, j, i), blk(J, i, j), blk(J, j, i), blk(M, i, j), blk(M, j, i), sigma);
        }
    for(int j = 0; j < K; ++j) {
        auto blk = [&](const CMat &A) { return CMat(A.block(3 * j, 3 * j, 3, 3)); };
        auto col = [&](const CMat &A) { return CVec(A.block(3 * j, ck, 3, 1)); };
        mult.lambda[j] = eliminate_lambda(blk(S), col(S), blk(J), col(J), blk(M), col(M), sigma);
    }
    mult.gamma = eliminate_gamma(S(ck, ck).real(), J(ck, ck).real(), M(ck, ck).real(), sigma);
    return mult;
}

double lagrangian_dense(const CMat &S, const Multipliers &mult, const CMat &J, const CMat &M, double sigma) {
    const auto &o = constraint_ops();
    double      lin = 0.0;
    for(const auto &L : mult.Lambda) lin += L.dot(o.w).real();
    for(const auto &l : mult.lambda) lin += l.dot(o.z).real();
    lin += mult.gamma;
    const CMat F = assemble_dual_certificate(mult);
    return -lin + 0.5 * sigma * (J - F - S - M / sigma).squaredNorm() - M.squaredNorm() / (2.0 * sigma);
}

double loss_dense_oracle(const CMat &S, const CMat &J, const CMat &M, double sigma) {
    return lagrangian_dense(S, eliminate_all(S, J, M, sigma), J, M, sigma);
}

CMat primal_target_dense(const CMat &S, const CMat &J, const CMat &M, double sigma) {
    return M + sigma * (S - J + assemble_dual_certificate(eliminate_all(S, J, M, sigma)));
}

double dual_objective_dense(const Multipliers &mult) {
    const auto &o = constraint_ops();
    double      d = mult.gamma;
    for(const auto &L : mult.Lambda) d += L.dot(o.w).real();
    for(const auto &l : mult.lambda) d += l.dot(o.z).real();
    return d;
}

} // namespace hsdp
