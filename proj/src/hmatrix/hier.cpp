#include <random>
#include <string>

#include "hsdp/hmatrix.hpp"

namespace hsdp {

void check_hier_shape(int K, int C, int m) {
    if(K < 2 || C < 1) throw InvalidInput("hierarchical matrix needs K >= 2 and C >= 1");
    if(!is_power_of_two(K)) throw InvalidInput("K = " + std::to_string(K) + " is not a power of two");
    if(m < 1) throw InvalidInput("level count must be positive");
    if(m > 30 || (1L << (m - 1)) >= K)
        throw InvalidInput("levels m = " + std::to_string(m) + " violate 2^(m-1) < K = " + std::to_string(K));
    for(int l = 0; l < m; ++l)
        if((C * K) % (1 << l) != 0) throw InvalidInput("CK is not divisible by the level block count");
}

void HierLevels::validate() const {
    check_hier_shape(K, C, levels());
    for(int l = 0; l < levels(); ++l) {
        if(factors[l].rows() != dim())
            throw InvalidInput("level " + std::to_string(l) + " factor has " + std::to_string(factors[l].rows()) +
                               " rows, expected " + std::to_string(dim()));
        if(factors[l].cols() < 1) throw InvalidInput("level ranks must be positive");
    }
}

CMat HierLevels::to_dense() const {
    CMat out = CMat::Zero(dim(), dim());
    for(int l = 0; l < levels(); ++l) {
        const int c = block_rows(l);
        for(int b = 0; b < blocks(l); ++b) {
            auto yb = factors[l].middleRows(b * c, c);
            out.block(b * c, b * c, c, c).noalias() += yb * yb.adjoint();
        }
    }
    return out;
}

HierLevels HierLevels::conj() const {
    HierLevels out{K, C, {}};
    out.factors.reserve(factors.size());
    for(const auto &f : factors) out.factors.emplace_back(f.conjugate());
    return out;
}

std::size_t HierLevels::parameter_count() const {
    std::size_t n = 0;
    for(const auto &f : factors) n += static_cast<std::size_t>(f.size());
    return n;
}

HierPSD hier_new(int K, int C, int m, std::span<const int> ranks, std::uint64_t seed) {
    check_hier_shape(K, C, m);
    if(ranks.size() != 1 && ranks.size() != static_cast<std::size_t>(m))
        throw InvalidInput("ranks must list one value or one value per level");
    std::mt19937_64                  rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto                             draw = [&]() {
        const double re = normal(rng);
        const double im = normal(rng);
        return cplx{re, im};
    };

    HierPSD H;
    H.levels.K = K;
    H.levels.C = C;
    for(int l = 0; l < m; ++l) {
        const int r = ranks.size() == 1 ? ranks[0] : ranks[l];
        if(r < 1) throw InvalidInput("ranks must be positive");
        CMat f(C * K, r);
        for(Eigen::Index j = 0; j < f.cols(); ++j)
            for(Eigen::Index i = 0; i < f.rows(); ++i) f(i, j) = draw();
        H.levels.factors.push_back(std::move(f));
    }
    H.spike.resize(C * K + 1);
    for(Eigen::Index i = 0; i < H.spike.size(); ++i) H.spike(i) = draw();
    return H;
}

CMat hier_to_dense(const HierPSD &H) {
    const int n   = H.dim();
    CMat      out = CMat::Zero(n, n);
    out.topLeftCorner(n - 1, n - 1) = H.levels.to_dense();
    out.noalias() += H.spike * H.spike.adjoint();
    return out;
}

AbsorbedSpike absorb_spike(const HierPSD &H) {
    const int     ck = H.levels.dim();
    AbsorbedSpike out;
    out.levels = H.levels;
    auto &f0   = out.levels.factors.at(0);
    f0.conservativeResize(Eigen::NoChange, f0.cols() + 1);
    f0.col(f0.cols() - 1) = H.spike.head(ck);
    const cplx last       = H.spike(ck);
    out.border            = H.spike.head(ck) * std::conj(last);
    out.corner            = std::norm(last);
    return out;
}

CVec hier_matvec(const HierPSD &H, const CVec &x) {
    const int n = H.dim();
    if(x.size() != n) throw InvalidInput("hier_matvec: vector length mismatch");
    CVec out = CVec::Zero(n);
    for(int l = 0; l < H.levels.levels(); ++l) {
        const int   c = H.levels.block_rows(l);
        const auto &f = H.levels.factors[l];
        for(int b = 0; b < H.levels.blocks(l); ++b) {
            const CVec coef = f.middleRows(b * c, c).adjoint() * x.segment(b * c, c);
            out.segment(b * c, c).noalias() += f.middleRows(b * c, c) * coef;
        }
    }
    out += H.spike * H.spike.dot(x);
    return out;
}

void hier_blockdiag_apply(const HierLevels &A, int level, const CMat &y, cplx coeff, CMat &out) {
    for(int la = 0; la < A.levels(); ++la) {
        const int   fine = std::max(level, la);
        const int   c    = A.block_rows(fine);
        const auto &x    = A.factors[la];
        for(int b = 0; b < A.blocks(fine); ++b) {
            const CMat g = x.middleRows(b * c, c).adjoint() * y.middleRows(b * c, c);
            out.middleRows(b * c, c).noalias() += coeff * (x.middleRows(b * c, c) * g);
        }
    }
}

double hier_inner(const HierLevels &A, const HierLevels &B) {
    double acc = 0.0;
    for(int la = 0; la < A.levels(); ++la)
        for(int lb = 0; lb < B.levels(); ++lb) {
            const int fine = std::max(la, lb);
            const int c    = A.block_rows(fine);
            for(int b = 0; b < A.blocks(fine); ++b)
                acc += (A.factors[la].middleRows(b * c, c).adjoint() * B.factors[lb].middleRows(b * c, c))
                           .squaredNorm();
        }
    return acc;
}

} // namespace hsdp
