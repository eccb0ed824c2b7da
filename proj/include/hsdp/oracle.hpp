#pragma once

#include "hsdp/types.hpp"

namespace hsdp {

/// y = H x for the periodic transverse-field Ising chain, H = -h sum X_i - sum Z_i Z_{i+1}.
/// Qubit i is bit i of the basis index. N = 2 keeps both bond terms of the periodic sum.
void tfi_apply(int N, double h, const CVec &x, CVec &y);

/// Dense real Hamiltonian, N <= 8.
RMat tfi_dense(int N, double h);

/// Exact ground energy for 2 <= N <= 12: dense diagonalization up to N = 8, Lanczos above.
double ed_ground_energy(int N, double h);

/// Exact periodic ground energy from the free-fermion solution, minimized over both parity sectors.
double ff_ground_energy(int N, double h);

/// <psi|H|psi> for a normalized state.
double tfi_expectation(int N, double h, const CVec &psi);

} // namespace hsdp
