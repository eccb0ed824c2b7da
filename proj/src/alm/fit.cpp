#include <cmath>

#include "hsdp/alm.hpp"

namespace hsdp {

FitResult fit_hier_to_dense(const CMat &A, int K, int C, int m, std::span<const int> ranks, int iters,
                            std::uint64_t seed) {
    const int ck = C * K;
    if(A.rows() != ck + 1 || A.cols() != ck + 1) throw InvalidInput("fit_hier_to_dense: target must be (CK+1)-square");
    const double a2 = A.squaredNorm();
    if(!(a2 > 0.0)) throw InvalidInput("fit_hier_to_dense: target must be nonzero");

    FitResult out;
    out.H = hier_new(K, C, m, ranks, seed);
    // Start on the target's scale so the fit does not depend on how A is normalized.
    const double start = std::sqrt(std::sqrt(a2) / hier_to_dense(out.H).norm());
    for(auto &y : out.H.levels.factors) y *= start;
    out.H.spike *= start;
    // f = ||H - A||^2 / ||A||^2; with G = (H - A) / ||A||^2 the panel gradient is 4 G|_blocks y.
    auto f = [&](const HierPSD &H, HierGradient &g) {
        const CMat D = (hier_to_dense(H) - A) / a2;
        g            = H;
        for(int l = 0; l < H.levels.levels(); ++l) {
            const int   c = H.levels.block_rows(l);
            const auto &y = H.levels.factors[l];
            auto       &o = g.levels.factors[l];
            for(int b = 0; b < H.levels.blocks(l); ++b)
                o.middleRows(b * c, c).noalias() = 4.0 * D.block(b * c, b * c, c, c) * y.middleRows(b * c, c);
        }
        g.spike.noalias() = 4.0 * D * H.spike;
        return D.squaredNorm() * a2;
    };
    LbfgsOptions opts;
    opts.max_iters = iters;
    opts.gtol      = 1e-14;
    const auto r   = minimize_hier(f, out.H, opts);
    out.iterations = r.iterations;
    out.err        = (hier_to_dense(out.H) - A).norm() / std::sqrt(a2);
    return out;
}

} // namespace hsdp
