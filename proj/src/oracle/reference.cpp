#include <cmath>
#include <string>

#include "hsdp/reference.hpp"

namespace hsdp {

ReferenceSolution reference_solution(int N, double h, double accuracy, int max_outer) {
    if(N > 256) throw InvalidInput("reference_solution is limited to N <= 256");
    if(!(accuracy > 0.0)) throw InvalidInput("accuracy must be positive");
    SolverConfig cfg;
    cfg.algorithm = Algorithm::Dense;
    cfg.tol       = accuracy;
    cfg.max_outer = max_outer;
    ReferenceSolution ref;
    ref.run = alm_dense(N, h, cfg);
    if(!ref.run.converged)
        throw NumericalFailure("reference solve stopped at max(eta) = " + std::to_string(ref.run.final.max_eta()) +
                               " after " + std::to_string(ref.run.iterations) + " iterations");
    ref.M     = ref.run.M_dense;
    ref.S     = ref.run.S_dense;
    ref.duals = ref.run.duals;
    return ref;
}

RMat block_magnitudes(const CMat &A, int K) {
    if(A.rows() < 3 * K || A.cols() < 3 * K) throw InvalidInput("block_magnitudes: matrix smaller than 3K");
    RMat out(K, K);
    for(int i = 0; i < K; ++i)
        for(int j = 0; j < K; ++j) out(i, j) = A.block(3 * i, 3 * j, 3, 3).norm();
    return out;
}

double offband_fraction(const CMat &A, int K, int distance) {
    const RMat B     = block_magnitudes(A, K);
    double     total = 0.0, off = 0.0;
    for(int i = 0; i < K; ++i)
        for(int j = 0; j < K; ++j) {
            const int    d  = std::min(std::abs(i - j), K - std::abs(i - j));
            const double m2 = B(i, j) * B(i, j);
            total += m2;
            if(d > distance) off += m2;
        }
    return total > 0.0 ? std::sqrt(off / total) : 0.0;
}

} // namespace hsdp
