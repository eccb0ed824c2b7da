#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "hsdp/types.hpp"

namespace hsdp {

/// Multi-level block-diagonal Gram factors of a CK x CK PSD matrix.
///
/// Level l (0-based here) splits the CK rows into n_l = 2^l equal blocks of c_l = CK / n_l rows.
/// Its factor is one contiguous CK x r_l panel; block b is the row range [b c_l, (b+1) c_l).
/// The represented matrix is sum_l blockdiag_b( y_b y_b^* ).
struct HierLevels {
    int               K = 0; ///< cluster count
    int               C = 0; ///< basis size per cluster
    std::vector<CMat> factors;

    [[nodiscard]] int dim() const { return C * K; }
    [[nodiscard]] int levels() const { return static_cast<int>(factors.size()); }
    [[nodiscard]] int blocks(int l) const { return 1 << l; }
    [[nodiscard]] int block_rows(int l) const { return dim() / blocks(l); }
    [[nodiscard]] int block_clusters(int l) const { return K / blocks(l); }
    [[nodiscard]] int rank(int l) const { return static_cast<int>(factors[l].cols()); }

    /// Throws InvalidInput if any shape invariant is violated.
    void validate() const;

    [[nodiscard]] CMat       to_dense() const;
    [[nodiscard]] HierLevels conj() const;
    [[nodiscard]] std::size_t parameter_count() const;
};

/// Hierarchical PSD matrix of size (CK+1): padded sum of levels plus a rank-one spike t t^*.
struct HierPSD {
    HierLevels levels;
    CVec       spike; ///< length CK + 1

    [[nodiscard]] int K() const { return levels.K; }
    [[nodiscard]] int C() const { return levels.C; }
    [[nodiscard]] int dim() const { return levels.dim() + 1; }
    [[nodiscard]] std::size_t parameter_count() const {
        return levels.parameter_count() + static_cast<std::size_t>(spike.size());
    }
};

/// Validates (K, C, m): K must be a power of two and 2^(m-1) < K.
void check_hier_shape(int K, int C, int m);

/// Draws every factor and spike entry as a standard complex normal from a seeded generator.
/// `ranks` holds either one rank per level or a single rank used for every level.
HierPSD hier_new(int K, int C, int m, std::span<const int> ranks, std::uint64_t seed);

CMat hier_to_dense(const HierPSD &H);

/// Result of folding the spike's first CK entries into level 0 as one extra column.
struct AbsorbedSpike {
    HierLevels levels; ///< same (2)-block as the original including t_hat t_hat^*
    CVec       border; ///< column CK of the densification, rows 0..CK-1: t_hat * conj(t_last)
    double     corner = 0.0; ///< |t_last|^2
};

AbsorbedSpike absorb_spike(const HierPSD &H);

/// Applies the densification to x in O(CK m r) without forming it.
CVec hier_matvec(const HierPSD &H, const CVec &x);

/// out += coeff * (A restricted to the level-`level` block diagonal) * y, for y of shape CK x r.
void hier_blockdiag_apply(const HierLevels &A, int level, const CMat &y, cplx coeff, CMat &out);

/// Re<A, B>_F of two level sums over the full CK x CK block.
double hier_inner(const HierLevels &A, const HierLevels &B);

// ---------------------------------------------------------------------------------------------
// Strict-upper pair correlations

/// C^4 aggregate P[k, kappa, k', kappa'] = sum_{i<j} B_ij(k, kappa) B'_ij(k', kappa').
///
/// Entries are addressed by block-vec indices e = k + C kappa (column stacking), so P(e, e')
/// couples entry e of B's blocks with entry e' of B''s blocks.
class PairCorrTensor {
  public:
    PairCorrTensor() = default;
    explicit PairCorrTensor(int C) : C_(C), data_(static_cast<std::size_t>(C * C * C * C), cplx{}) {}

    [[nodiscard]] int C() const { return C_; }
    [[nodiscard]] int entries() const { return C_ * C_; }

    cplx       &at(int e, int ep) { return data_[static_cast<std::size_t>(e * C_ * C_ + ep)]; }
    const cplx &at(int e, int ep) const { return data_[static_cast<std::size_t>(e * C_ * C_ + ep)]; }

    cplx &operator()(int k, int kappa, int kp, int kappap) { return at(k + C_ * kappa, kp + C_ * kappap); }
    const cplx &operator()(int k, int kappa, int kp, int kappap) const {
        return at(k + C_ * kappa, kp + C_ * kappap);
    }

    /// Swaps the roles of the two arguments: result(e', e) = this(e, e').
    [[nodiscard]] PairCorrTensor transposed() const;
    [[nodiscard]] double         max_abs() const;

    PairCorrTensor &operator+=(const PairCorrTensor &o);
    PairCorrTensor &operator*=(cplx s);

  private:
    int               C_ = 0;
    std::vector<cplx> data_;
};

/// Optional subset of (e, e') entries to evaluate; entries outside the mask are left zero.
using EntryMask = std::vector<std::pair<int, int>>;

PairCorrTensor pair_corr_hh(const HierLevels &B, const HierLevels &Bp, const EntryMask *mask = nullptr);
PairCorrTensor pair_corr_hd(const HierLevels &B, const CMat &Bp, const EntryMask *mask = nullptr);
/// `Bp` entries index the CK x CK block; entries outside it are rejected.
PairCorrTensor pair_corr_hs(const HierLevels &B, const SparseMatrix &Bp, const EntryMask *mask = nullptr);

/// Brute-force double loop used as the test oracle for the three kernels above.
PairCorrTensor pair_corr_dense_oracle(const CMat &B, const CMat &Bp, int K, int C);

/// One coefficient of a strict-upper linear map: G_ij(dst) += coeff * A_ij(src) for i < j.
struct UpperTerm {
    int  src = 0;
    int  dst = 0;
    cplx coeff{};
};

/// out += (G + G^*) y restricted to the level-`level` blocks, with G built from the terms and
/// partner A. These are the gradient counterparts of the pair_corr kernels.
void upper_apply_h(const HierLevels &A, std::span<const UpperTerm> terms, int level, const CMat &y, CMat &out);
void upper_apply_d(const CMat &A, int K, int C, std::span<const UpperTerm> terms, int level, const CMat &y,
                   CMat &out);
void upper_apply_s(const SparseMatrix &A, int K, int C, std::span<const UpperTerm> terms, int level,
                   const CMat &y, CMat &out);

// ---------------------------------------------------------------------------------------------
// Binary serialization
//
// Little-endian layout, all integers uint32:
//   magic "HSDP" | version | kind (1 = hierarchical, 2 = dense) | K | C | m | ranks[m] | flags
// followed by raw complex doubles (real, imag):
//   kind 1: factor panels level by level, each column-major CK x r_l; then the spike if flags bit 0
//   kind 2: the (CK+1) x (CK+1) matrix column-major (m = 0, no ranks)

inline constexpr std::uint32_t kFormatVersion = 1;

void    write_hier(std::ostream &os, const HierPSD &H);
void    write_dense(std::ostream &os, const CMat &A, int K, int C);
HierPSD read_hier(std::istream &is);
CMat    read_dense(std::istream &is, int *K = nullptr, int *C = nullptr);

} // namespace hsdp
