#include <random>

#include "hsdp/lanczos.hpp"

namespace hsdp {

ExtremeEigen lanczos_extremes(const LinearOperator &A, int dim, const LanczosOptions &opts) {
    if(dim < 1) throw InvalidInput("lanczos: dimension must be positive");
    const int steps_cap = std::min(dim, opts.max_steps);

    std::mt19937_64                  rng(opts.seed);
    std::normal_distribution<double> n(0.0, 1.0);
    CVec                             q(dim);
    for(int i = 0; i < dim; ++i) {
        const double re = n(rng);
        q(i)            = {re, n(rng)};
    }
    q /= q.norm();

    CMat              Q(dim, steps_cap);
    std::vector<double> alpha, beta;
    CVec              w(dim);
    ExtremeEigen      out;
    for(int k = 0; k < steps_cap; ++k) {
        Q.col(k) = q;
        A(q, w);
        const double a = q.dot(w).real();
        alpha.push_back(a);
        // Full reorthogonalization, applied twice for stability.
        for(int pass = 0; pass < 2; ++pass) w -= Q.leftCols(k + 1) * (Q.leftCols(k + 1).adjoint() * w);
        const double b = w.norm();

        const int m = k + 1;
        if(m % 8 != 0 && b > opts.tol && m < steps_cap && m < dim) {
            beta.push_back(b);
            q = w / b;
            continue;
        }
        RMat         T = RMat::Zero(m, m);
        for(int i = 0; i < m; ++i) {
            T(i, i) = alpha[i];
            if(i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
        }
        Eigen::SelfAdjointEigenSolver<RMat> es(T);
        const auto &ev    = es.eigenvalues();
        const auto &evec  = es.eigenvectors();
        out.min           = ev(0);
        out.max           = ev(m - 1);
        out.steps         = m;
        const double scale = std::max({1.0, std::abs(out.min), std::abs(out.max)});
        const double rmin  = b * std::abs(evec(m - 1, 0));
        const double rmax  = b * std::abs(evec(m - 1, m - 1));
        if((rmin <= opts.tol * scale && rmax <= opts.tol * scale) || b <= opts.tol * scale || m == dim) {
            out.converged = true;
            break;
        }
        beta.push_back(b);
        q = w / b;
    }
    return out;
}

} // namespace hsdp
