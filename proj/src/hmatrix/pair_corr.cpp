#include <algorithm>
#include <map>
#include <string>

#include "hsdp/hmatrix.hpp"

namespace hsdp {

PairCorrTensor PairCorrTensor::transposed() const {
    PairCorrTensor out(C_);
    const int      n = entries();
    for(int e = 0; e < n; ++e)
        for(int ep = 0; ep < n; ++ep) out.at(ep, e) = at(e, ep);
    return out;
}

double PairCorrTensor::max_abs() const {
    double m = 0.0;
    for(const auto &v : data_) m = std::max(m, std::abs(v));
    return m;
}

PairCorrTensor &PairCorrTensor::operator+=(const PairCorrTensor &o) {
    if(o.C_ != C_) throw InvalidInput("PairCorrTensor size mismatch");
    for(std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
}

PairCorrTensor &PairCorrTensor::operator*=(cplx s) {
    for(auto &v : data_) v *= s;
    return *this;
}

namespace {

void check_pair(int K1, int C1, int K2, int C2) {
    if(K1 != K2 || C1 != C2)
        throw InvalidInput("pair correlation arguments disagree on (K, C): (" + std::to_string(K1) + ", " +
                           std::to_string(C1) + ") vs (" + std::to_string(K2) + ", " + std::to_string(C2) + ")");
}

EntryMask full_mask(int C) {
    EntryMask m;
    for(int e = 0; e < C * C; ++e)
        for(int ep = 0; ep < C * C; ++ep) m.emplace_back(e, ep);
    return m;
}

// Groups (e, e') by the row pair (k, k'); the scan accumulates per row pair and finishes per column pair.
std::map<std::pair<int, int>, std::vector<std::pair<int, int>>> group_by_rows(const EntryMask &mask, int C) {
    std::map<std::pair<int, int>, std::vector<std::pair<int, int>>> g;
    for(auto [e, ep] : mask) {
        if(e < 0 || ep < 0 || e >= C * C || ep >= C * C) throw InvalidInput("entry mask index out of range");
        g[{e % C, ep % C}].emplace_back(e / C, ep / C);
    }
    return g;
}

} // namespace

PairCorrTensor pair_corr_hh(const HierLevels &B, const HierLevels &Bp, const EntryMask *mask) {
    check_pair(B.K, B.C, Bp.K, Bp.C);
    const int C = B.C;
    PairCorrTensor P(C);
    const EntryMask all    = mask ? EntryMask{} : full_mask(C);
    const auto      groups = group_by_rows(mask ? *mask : all, C);

    for(int la = 0; la < B.levels(); ++la)
        for(int lb = 0; lb < Bp.levels(); ++lb) {
            const int fine = std::max(la, lb);
            const int c    = B.block_rows(fine);
            const int nc   = B.block_clusters(fine);
            const int ra   = B.rank(la);
            const int rb   = Bp.rank(lb);
            for(int blk = 0; blk < B.blocks(fine); ++blk) {
                const auto Xa = B.factors[la].middleRows(blk * c, c);
                const auto Xb = Bp.factors[lb].middleRows(blk * c, c);
                for(const auto &[rows, cols] : groups) {
                    const auto [k, kp] = rows;
                    CMat Z             = CMat::Zero(ra, rb);
                    for(int j = 0; j < nc; ++j) {
                        if(j > 0)
                            for(auto [kappa, kappap] : cols) {
                                const cplx v = (Xa.row(C * j + kappa).conjugate() * Z *
                                                Xb.row(C * j + kappap).adjoint())(0, 0);
                                P(k, kappa, kp, kappap) += v;
                            }
                        Z.noalias() += Xa.row(C * j + k).transpose() * Xb.row(C * j + kp);
                    }
                }
            }
        }
    return P;
}

PairCorrTensor pair_corr_hd(const HierLevels &B, const CMat &Bp, const EntryMask *mask) {
    const int C  = B.C;
    const int ck = B.dim();
    if(Bp.rows() != ck || Bp.cols() != ck)
        throw InvalidInput("pair_corr_hd: dense partner must be " + std::to_string(ck) + " x " + std::to_string(ck));
    PairCorrTensor  P(C);
    const EntryMask all = mask ? EntryMask{} : full_mask(C);
    const auto     &m   = mask ? *mask : all;
    for(auto [e, ep] : m)
        if(e < 0 || ep < 0 || e >= C * C || ep >= C * C) throw InvalidInput("entry mask index out of range");

    for(int la = 0; la < B.levels(); ++la) {
        const int nb = B.block_clusters(la);
        const int r  = B.rank(la);
        const int c  = B.block_rows(la);
        for(int blk = 0; blk < B.blocks(la); ++blk) {
            const int i0 = blk * c;
            // Per-row-offset strided views of this block's factor rows.
            std::vector<CMat> Y(C);
            for(int k = 0; k < C; ++k) {
                Y[k].resize(nb, r);
                for(int a = 0; a < nb; ++a) Y[k].row(a) = B.factors[la].row(i0 + C * a + k);
            }
            for(auto [e, ep] : m) {
                const int k = e % C, kappa = e / C, kp = ep % C, kappap = ep / C;
                CMat      Dsub(nb, nb);
                for(int b2 = 0; b2 < nb; ++b2)
                    for(int a = 0; a < nb; ++a) Dsub(a, b2) = Bp(i0 + C * a + kp, i0 + C * b2 + kappap);
                const CMat Wt = Dsub.triangularView<Eigen::StrictlyUpper>().transpose() * Y[k];
                P.at(e, ep) += (Y[kappa].conjugate().array() * Wt.array()).sum();
            }
        }
    }
    return P;
}

PairCorrTensor pair_corr_hs(const HierLevels &B, const SparseMatrix &Bp, const EntryMask *mask) {
    const int C  = B.C;
    const int ck = B.dim();
    if(Bp.rows < ck || Bp.cols < ck) throw InvalidInput("pair_corr_hs: sparse partner smaller than CK x CK");
    PairCorrTensor  P(C);
    const EntryMask all = mask ? EntryMask{} : full_mask(C);
    const auto     &m   = mask ? *mask : all;

    // For each e', the list of e that the mask pairs with it.
    std::vector<std::vector<int>> partners(static_cast<std::size_t>(C * C));
    for(auto [e, ep] : m) {
        if(e < 0 || ep < 0 || e >= C * C || ep >= C * C) throw InvalidInput("entry mask index out of range");
        partners[ep].push_back(e);
    }

    for(const auto &s : Bp.entries) {
        if(s.row < 0 || s.col < 0 || s.row >= Bp.rows || s.col >= Bp.cols)
            throw InvalidInput("pair_corr_hs: sparse entry out of range");
        if(s.row >= ck || s.col >= ck) {
            if(s.value != cplx{}) throw InvalidInput("pair_corr_hs: sparse entry outside the CK x CK block");
            continue;
        }
        const int i = s.row / C, kp = s.row % C, j = s.col / C, kappap = s.col % C;
        if(i >= j) continue;
        const int ep = kp + C * kappap;
        for(int e : partners[ep]) {
            const int k = e % C, kappa = e / C;
            cplx      bij{};
            for(int la = 0; la < B.levels(); ++la) {
                const int nb = B.block_clusters(la);
                if(i / nb != j / nb) continue;
                bij += (B.factors[la].row(C * i + k).array() * B.factors[la].row(C * j + kappa).conjugate().array())
                           .sum();
            }
            P.at(e, ep) += bij * s.value;
        }
    }
    return P;
}

PairCorrTensor pair_corr_dense_oracle(const CMat &B, const CMat &Bp, int K, int C) {
    PairCorrTensor P(C);
    for(int i = 0; i < K; ++i)
        for(int j = i + 1; j < K; ++j)
            for(int e = 0; e < C * C; ++e)
                for(int ep = 0; ep < C * C; ++ep)
                    P.at(e, ep) += B(C * i + e % C, C * j + e / C) * Bp(C * i + ep % C, C * j + ep / C);
    return P;
}

} // namespace hsdp
