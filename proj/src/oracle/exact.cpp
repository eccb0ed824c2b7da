#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "hsdp/lanczos.hpp"
#include "hsdp/oracle.hpp"

namespace hsdp {

namespace {

void check_ed_size(int N) {
    if(N < 2 || N > 12) throw InvalidInput("exact diagonalization supports 2 <= N <= 12, got " + std::to_string(N));
}

double zz_diagonal(int N, long b) {
    double d = 0.0;
    for(int i = 0; i < N; ++i) {
        const int j  = (i + 1) % N;
        const int zi = (b >> i) & 1, zj = (b >> j) & 1;
        d -= zi == zj ? 1.0 : -1.0;
    }
    return d;
}

} // namespace

void tfi_apply(int N, double h, const CVec &x, CVec &y) {
    const long dim = 1L << N;
    if(x.size() != dim) throw InvalidInput("tfi_apply: vector length must be 2^N");
    y.resize(dim);
    for(long b = 0; b < dim; ++b) {
        cplx acc = zz_diagonal(N, b) * x(b);
        for(int i = 0; i < N; ++i) acc -= h * x(b ^ (1L << i));
        y(b) = acc;
    }
}

RMat tfi_dense(int N, double h) {
    if(N < 2 || N > 8) throw InvalidInput("dense Hamiltonian only for 2 <= N <= 8");
    const long dim = 1L << N;
    RMat       H   = RMat::Zero(dim, dim);
    for(long b = 0; b < dim; ++b) {
        H(b, b) = zz_diagonal(N, b);
        for(int i = 0; i < N; ++i) H(b ^ (1L << i), b) -= h;
    }
    return H;
}

double ed_ground_energy(int N, double h) {
    check_ed_size(N);
    if(N <= 8) {
        Eigen::SelfAdjointEigenSolver<RMat> es(tfi_dense(N, h), Eigen::EigenvaluesOnly);
        return es.eigenvalues()(0);
    }
    LanczosOptions opts;
    opts.max_steps = 400;
    opts.tol       = 1e-13;
    const auto ev  = lanczos_extremes([N, h](const CVec &x, CVec &y) { tfi_apply(N, h, x, y); }, 1 << N, opts);
    if(!ev.converged) throw NumericalFailure("Lanczos did not converge for N = " + std::to_string(N));
    return ev.min;
}

double tfi_expectation(int N, double h, const CVec &psi) {
    CVec y;
    tfi_apply(N, h, psi, y);
    return psi.dot(y).real();
}

double ff_ground_energy(int N, double h) {
    if(N < 2) throw InvalidInput("free-fermion energy needs N >= 2");
    const double pi = std::numbers::pi;

    // Sector energy: paired modes contribute their Bogoliubov vacuum -eps/2 and cost eps per quasiparticle;
    // self-conjugate momenta (k = 0 or pi) are bare modes with signed energy 2(h - cos k) and occupation
    // fixed by the required fermion parity.
    auto sector = [&](bool periodic_fermions, int parity) {
        double             e0 = 0.0;
        double             cheapest = std::numeric_limits<double>::infinity();
        int                occ_parity = 0;
        for(int n = 0; n < N; ++n) {
            const double k   = periodic_fermions ? 2.0 * pi * n / N : pi * (2.0 * n + 1) / N;
            const double c   = std::cos(k);
            const bool   selfconj = std::abs(std::sin(k)) < 1e-12;
            if(selfconj) {
                const double a = 2.0 * (h - c);
                // occupy when it lowers the energy
                if(a < 0) {
                    e0 += a / 2.0;
                    occ_parity ^= 1;
                } else {
                    e0 -= a / 2.0;
                }
                cheapest = std::min(cheapest, std::abs(a));
            } else {
                const double eps = 2.0 * std::sqrt(1.0 + h * h - 2.0 * h * c);
                e0 -= eps / 2.0;
                cheapest = std::min(cheapest, eps);
            }
        }
        if(occ_parity != parity) e0 += cheapest;
        return e0;
    };
    // Antiperiodic fermions live in the even-parity spin sector, periodic ones in the odd sector.
    return std::min(sector(false, 0), sector(true, 1));
}

} // namespace hsdp
