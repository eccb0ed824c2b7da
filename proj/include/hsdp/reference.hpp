#pragma once

#include "hsdp/alm.hpp"

namespace hsdp {

/// Dense primal/dual pair from the baseline engine run to the requested accuracy.
struct ReferenceSolution {
    CMat        M;
    CMat        S;
    Multipliers duals;
    SolveResult run; ///< trace and final metrics of the dense solve
};

/// Runs the dense engine until max(eta) <= accuracy or `max_outer` iterations.
/// Throws NumericalFailure if the accuracy is not reached. N is limited to 256.
ReferenceSolution reference_solution(int N, double h, double accuracy, int max_outer = 20000);

/// Frobenius mass of the cluster blocks of the CK x CK part at periodic cluster distance
/// greater than `distance`, as a fraction of the whole CK x CK part.
double offband_fraction(const CMat &A, int K, int distance);

/// K x K grid of 3x3 block Frobenius norms of the CK x CK part.
RMat block_magnitudes(const CMat &A, int K);

} // namespace hsdp
