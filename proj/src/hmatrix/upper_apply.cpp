#include <algorithm>

#include "hsdp/hmatrix.hpp"

namespace hsdp {

namespace {

void check_apply_shapes(int ck, int C, std::span<const UpperTerm> terms, const CMat &y, const CMat &out) {
    if(y.rows() != ck || out.rows() != ck || out.cols() != y.cols())
        throw InvalidInput("upper_apply: panel shapes disagree with CK");
    for(const auto &t : terms)
        if(t.src < 0 || t.dst < 0 || t.src >= C * C || t.dst >= C * C)
            throw InvalidInput("upper_apply: term index out of range");
}

CMat gather_rows(const CMat &X, int first, int step, int count) {
    CMat out(count, X.cols());
    for(int a = 0; a < count; ++a) out.row(a) = X.row(first + step * a);
    return out;
}

void scatter_add_rows(CMat &X, int first, int step, const CMat &rows) {
    for(int a = 0; a < rows.rows(); ++a) X.row(first + step * a) += rows.row(a);
}

} // namespace

void upper_apply_h(const HierLevels &A, std::span<const UpperTerm> terms, int level, const CMat &y, CMat &out) {
    const int C = A.C;
    check_apply_shapes(A.dim(), C, terms, y, out);
    const int ry = static_cast<int>(y.cols());
    for(int la = 0; la < A.levels(); ++la) {
        const int fine = std::max(level, la);
        const int c    = A.block_rows(fine);
        const int nc   = A.block_clusters(fine);
        const int ra   = A.rank(la);
        for(int blk = 0; blk < A.blocks(fine); ++blk) {
            const int  r0 = blk * c;
            const auto Xa = A.factors[la].middleRows(r0, c);
            const auto Yb = y.middleRows(r0, c);
            auto       Ob = out.middleRows(r0, c);
            for(const auto &t : terms) {
                const int k = t.src % C, kappa = t.src / C, kp = t.dst % C, kappap = t.dst / C;
                // G y: suffix sums over partners to the right.
                CMat W = CMat::Zero(ra, ry);
                for(int i = nc - 1; i >= 0; --i) {
                    if(i < nc - 1) Ob.row(C * i + kp).noalias() += t.coeff * (Xa.row(C * i + k) * W);
                    W.noalias() += Xa.row(C * i + kappa).adjoint() * Yb.row(C * i + kappap);
                }
                // G^* y: prefix sums over partners to the left.
                CMat V = CMat::Zero(ra, ry);
                for(int j = 0; j < nc; ++j) {
                    if(j > 0) Ob.row(C * j + kappap).noalias() += std::conj(t.coeff) * (Xa.row(C * j + kappa) * V);
                    V.noalias() += Xa.row(C * j + k).adjoint() * Yb.row(C * j + kp);
                }
            }
        }
    }
}

void upper_apply_d(const CMat &A, int K, int C, std::span<const UpperTerm> terms, int level, const CMat &y,
                   CMat &out) {
    const int ck = C * K;
    if(A.rows() != ck || A.cols() != ck) throw InvalidInput("upper_apply_d: dense partner must be CK x CK");
    check_apply_shapes(ck, C, terms, y, out);
    const int nblocks = 1 << level;
    const int nb      = K / nblocks;
    const int c       = ck / nblocks;
    for(int blk = 0; blk < nblocks; ++blk) {
        const int i0 = blk * c;
        for(const auto &t : terms) {
            const int k = t.src % C, kappa = t.src / C, kp = t.dst % C, kappap = t.dst / C;
            CMat      U(nb, nb);
            for(int b2 = 0; b2 < nb; ++b2)
                for(int a = 0; a < nb; ++a) U(a, b2) = b2 > a ? A(i0 + C * a + k, i0 + C * b2 + kappa) : cplx{};
            const CMat Yright = gather_rows(y, i0 + kappap, C, nb);
            const CMat Yleft  = gather_rows(y, i0 + kp, C, nb);
            scatter_add_rows(out, i0 + kp, C, t.coeff * (U * Yright));
            scatter_add_rows(out, i0 + kappap, C, std::conj(t.coeff) * (U.adjoint() * Yleft));
        }
    }
}

void upper_apply_s(const SparseMatrix &A, int K, int C, std::span<const UpperTerm> terms, int level,
                   const CMat &y, CMat &out) {
    const int ck = C * K;
    check_apply_shapes(ck, C, terms, y, out);
    const int nb = K >> level;
    for(const auto &s : A.entries) {
        if(s.row < 0 || s.col < 0 || s.row >= A.rows || s.col >= A.cols)
            throw InvalidInput("upper_apply_s: sparse entry out of range");
        if(s.row >= ck || s.col >= ck) continue;
        const int i = s.row / C, j = s.col / C;
        if(i >= j || i / nb != j / nb) continue;
        const int e = s.row % C + C * (s.col % C);
        for(const auto &t : terms) {
            if(t.src != e) continue;
            const int  kp = t.dst % C, kappap = t.dst / C;
            const cplx cv = t.coeff * s.value;
            out.row(C * i + kp) += cv * y.row(C * j + kappap);
            out.row(C * j + kappap) += std::conj(cv) * y.row(C * i + kp);
        }
    }
}

} // namespace hsdp
