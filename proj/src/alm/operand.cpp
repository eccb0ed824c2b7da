#include <map>

#include "hsdp/alm.hpp"

namespace hsdp {

namespace {

SparseMatrix conj_of(const SparseMatrix &A) {
    SparseMatrix out = A;
    for(auto &e : out.entries) e.value = std::conj(e.value);
    return out;
}

// Strict-upper 3x3 blocks of a sparse matrix, keyed by cluster pair.
std::map<std::pair<int, int>, CMat> upper_blocks(const SparseMatrix &A) {
    std::map<std::pair<int, int>, CMat> out;
    for(const auto &e : A.entries) {
        const int i = e.row / kBasis, j = e.col / kBasis;
        if(i >= j) continue;
        auto [it, fresh] = out.try_emplace({i, j}, CMat::Zero(kBasis, kBasis));
        it->second(e.row % kBasis, e.col % kBasis) += e.value;
    }
    return out;
}

} // namespace

Operand Operand::hier(const HierPSD &H) {
    H.levels.validate();
    if(H.C() != kBasis) throw InvalidInput("Operand::hier expects basis size 3");
    Operand op;
    op.kind_         = Kind::Hier;
    op.K_            = H.K();
    AbsorbedSpike ab = absorb_spike(H);
    op.levels_       = std::move(ab.levels);
    op.levels_conj_  = op.levels_.conj();
    op.spike_        = H.spike;
    op.border_       = std::move(ab.border);
    op.corner_       = ab.corner;
    op.rho_.resize(static_cast<std::size_t>(op.K_));
    for(int j = 0; j < op.K_; ++j) {
        CMat blk = CMat::Zero(kBasis, kBasis);
        for(const auto &f : op.levels_.factors) {
            const auto rows = f.middleRows(kBasis * j, kBasis);
            blk.noalias() += rows * rows.adjoint();
        }
        CVec rho(15);
        rho.head(9)        = vec3(blk);
        rho.segment(9, 3)  = op.border_.segment(kBasis * j, kBasis);
        rho.segment(12, 3) = op.border_.segment(kBasis * j, kBasis).conjugate();
        op.rho_[j]         = std::move(rho);
    }
    return op;
}

Operand Operand::dense(const CMat &A, int K) {
    const int ck = kBasis * K;
    if(A.rows() != ck + 1 || A.cols() != ck + 1) throw InvalidInput("Operand::dense: matrix must be (3K+1)-square");
    Operand op;
    op.kind_       = Kind::Dense;
    op.K_          = K;
    op.dense_      = A.topLeftCorner(ck, ck);
    op.dense_conj_ = op.dense_.conjugate();
    op.border_     = A.col(ck).head(ck);
    op.corner_     = A(ck, ck).real();
    op.frob2_      = A.squaredNorm();
    op.rho_.resize(static_cast<std::size_t>(K));
    for(int j = 0; j < K; ++j) op.rho_[j] = cluster_rho(A, j);
    return op;
}

Operand Operand::sparse(const SparseMatrix &A, int K) {
    const int ck = kBasis * K;
    if(A.rows != ck + 1 || A.cols != ck + 1) throw InvalidInput("Operand::sparse: matrix must be (3K+1)-square");
    Operand op;
    op.kind_        = Kind::Sparse;
    op.K_           = K;
    op.sparse_full_ = A;
    op.sparse_      = SparseMatrix{ck, ck, {}};
    op.border_      = CVec::Zero(ck);
    op.rho_.assign(static_cast<std::size_t>(K), CVec::Zero(15));
    std::map<std::pair<int, int>, cplx> merged;
    for(const auto &e : A.entries) {
        if(e.row < 0 || e.col < 0 || e.row > ck || e.col > ck) throw InvalidInput("Operand::sparse: entry out of range");
        merged[{e.row, e.col}] += e.value;
        if(e.row < ck && e.col < ck) {
            op.sparse_.entries.push_back(e);
            const int i = e.row / kBasis, j = e.col / kBasis;
            if(i == j) op.rho_[i](e.row % kBasis + kBasis * (e.col % kBasis)) += e.value;
        } else if(e.row < ck) {
            op.rho_[e.row / kBasis](9 + e.row % kBasis) += e.value;
            op.border_(e.row) += e.value;
        } else if(e.col < ck) {
            op.rho_[e.col / kBasis](12 + e.col % kBasis) += e.value;
        } else {
            op.corner_ += e.value.real();
        }
    }
    for(const auto &[key, v] : merged) op.frob2_ += std::norm(v);
    op.sparse_conj_ = conj_of(op.sparse_);
    return op;
}

double Operand::frob2() const {
    if(kind_ != Kind::Hier) return frob2_;
    return hier_inner(levels_, levels_) + 2.0 * border_.squaredNorm() + corner_ * corner_;
}

cplx Operand::entry(int row, int col) const {
    const int ck = kBasis * K_;
    if(row < 0 || col < 0 || row > ck || col > ck) throw InvalidInput("Operand::entry: index out of range");
    switch(kind_) {
    case Kind::Dense:
        if(row < ck && col < ck) return dense_(row, col);
        if(row == ck && col == ck) return corner_;
        return row < ck ? border_(row) : std::conj(border_(col));
    case Kind::Sparse: {
        cplx v{};
        for(const auto &e : sparse_full_.entries)
            if(e.row == row && e.col == col) v += e.value;
        return v;
    }
    case Kind::Hier:
        if(row == ck || col == ck) return spike_(row) * std::conj(spike_(col));
        cplx v{};
        for(int l = 0; l < levels_.levels(); ++l) {
            const int c = levels_.block_rows(l);
            if(row / c != col / c) continue;
            v += (levels_.factors[l].row(row).array() * levels_.factors[l].row(col).conjugate().array()).sum();
        }
        return v;
    }
    return {};
}

double Operand::trace_with(const SparseMatrix &B) const {
    double acc = 0.0;
    for(const auto &e : B.entries) acc += (e.value * entry(e.col, e.row)).real();
    return acc;
}

double pair_bilinear_kernels(const PairForm &form, const Operand &X, const Operand &Y) {
    using Kd = Operand::Kind;
    if(X.K() != Y.K()) throw InvalidInput("pair_bilinear: operands have different K");
    const auto *m1 = &form.mask1;
    const auto *m2 = &form.mask2;
    if(X.kind() == Kd::Hier) {
        switch(Y.kind()) {
        case Kd::Hier:
            return form.eval(pair_corr_hh(X.levels(), Y.levels(), m1), pair_corr_hh(X.levels_conj(), Y.levels(), m2));
        case Kd::Dense:
            return form.eval(pair_corr_hd(X.levels(), Y.dense_block(), m1),
                             pair_corr_hd(X.levels_conj(), Y.dense_block(), m2));
        case Kd::Sparse:
            return form.eval(pair_corr_hs(X.levels(), Y.sparse_mat(), m1),
                             pair_corr_hs(X.levels_conj(), Y.sparse_mat(), m2));
        }
    }
    if(Y.kind() == Kd::Hier) {
        // P(X, Y) is the transpose of P(Y, X); P(conj X, Y) = conj P(X, conj Y) transposed.
        auto swapped = [](const EntryMask &m) {
            EntryMask s;
            for(auto [e, ep] : m) s.emplace_back(ep, e);
            return s;
        };
        const EntryMask s1 = swapped(form.mask1), s2 = swapped(form.mask2);
        PairCorrTensor  pxy, pcxy;
        if(X.kind() == Kd::Dense) {
            pxy  = pair_corr_hd(Y.levels(), X.dense_block(), &s1).transposed();
            pcxy = pair_corr_hd(Y.levels_conj(), X.dense_block(), &s2).transposed();
        } else {
            pxy  = pair_corr_hs(Y.levels(), X.sparse_mat(), &s1).transposed();
            pcxy = pair_corr_hs(Y.levels_conj(), X.sparse_mat(), &s2).transposed();
        }
        // pcxy now holds P(X, conj Y); conjugating gives P(conj X, Y).
        for(int e = 0; e < pcxy.entries(); ++e)
            for(int ep = 0; ep < pcxy.entries(); ++ep) pcxy.at(e, ep) = std::conj(pcxy.at(e, ep));
        return form.eval(pxy, pcxy);
    }

    // Neither side hierarchical: direct per-block evaluation.
    const int K = X.K();
    auto      block = [K](const Operand &A, int i, int j) {
        CMat b(kBasis, kBasis);
        if(A.kind() == Operand::Kind::Dense) b = A.dense_block().block(kBasis * i, kBasis * j, kBasis, kBasis);
        return b;
    };
    double acc = 0.0;
    if(X.kind() == Kd::Dense && Y.kind() == Kd::Dense) {
        for(int i = 0; i < K; ++i)
            for(int j = i + 1; j < K; ++j) acc += form.direct(block(X, i, j), block(Y, i, j));
        return acc;
    }
    if(X.kind() == Kd::Sparse && Y.kind() == Kd::Sparse) {
        const auto bx = upper_blocks(X.sparse_mat()), by = upper_blocks(Y.sparse_mat());
        for(const auto &[key, b] : bx) {
            auto it = by.find(key);
            if(it != by.end()) acc += form.direct(b, it->second);
        }
        return acc;
    }
    const Operand &sp = X.kind() == Kd::Sparse ? X : Y;
    const Operand &dn = X.kind() == Kd::Sparse ? Y : X;
    for(const auto &[key, b] : upper_blocks(sp.sparse_mat())) {
        const CMat d = block(dn, key.first, key.second);
        acc += &sp == &X ? form.direct(b, d) : form.direct(d, b);
    }
    return acc;
}

void pair_grad_apply_kernels(const PairForm &form, const Operand &X, double scale, int level, const CMat &y,
                             CMat &out) {
    if(scale == 0.0) return;
    const auto t1 = form.terms1(scale);
    const auto t2 = form.terms2(scale);
    switch(X.kind()) {
    case Operand::Kind::Hier:
        upper_apply_h(X.levels_conj(), t1, level, y, out);
        upper_apply_h(X.levels(), t2, level, y, out);
        break;
    case Operand::Kind::Dense:
        upper_apply_d(X.dense_block_conj(), X.K(), kBasis, t1, level, y, out);
        upper_apply_d(X.dense_block(), X.K(), kBasis, t2, level, y, out);
        break;
    case Operand::Kind::Sparse:
        upper_apply_s(X.sparse_conj(), X.K(), kBasis, t1, level, y, out);
        upper_apply_s(X.sparse_mat(), X.K(), kBasis, t2, level, y, out);
        break;
    }
}

namespace {

cplx level_entry(const HierLevels &L, int row, int col) {
    cplx v{};
    for(int l = 0; l < L.levels(); ++l) {
        const int c = L.block_rows(l);
        if(row / c != col / c) continue;
        v += (L.factors[l].row(row).array() * L.factors[l].row(col).conjugate().array()).sum();
    }
    return v;
}

// Re sum_e conj(X'(e)) Y(e) over the CK x CK part, X' = conj(X) when `conj_x`.
// Symmetric in the two operands for Hermitian inputs, so mixed kinds are reordered.
double frob_re(const Operand &X, const Operand &Y, bool conj_x) {
    using Kd = Operand::Kind;
    const int order = [](Kd k) { return k == Kd::Hier ? 0 : k == Kd::Dense ? 1 : 2; }(X.kind());
    const int order_y = [](Kd k) { return k == Kd::Hier ? 0 : k == Kd::Dense ? 1 : 2; }(Y.kind());
    if(order_y < order) return frob_re(Y, X, conj_x);
    auto pick = [conj_x](cplx x) { return conj_x ? x : std::conj(x); };

    if(X.kind() == Kd::Hier) {
        const HierLevels &Lx = conj_x ? X.levels_conj() : X.levels();
        if(Y.kind() == Kd::Hier) return hier_inner(Lx, Y.levels());
        if(Y.kind() == Kd::Dense) {
            // tr(X' D) = sum_l sum_b tr(y_b^* D_bb y_b)
            const CMat &D   = Y.dense_block();
            double      acc = 0.0;
            for(int l = 0; l < Lx.levels(); ++l) {
                const int c = Lx.block_rows(l);
                for(int b = 0; b < Lx.blocks(l); ++b) {
                    const auto yb = Lx.factors[l].middleRows(b * c, c);
                    acc += (yb.conjugate().array() * (D.block(b * c, b * c, c, c) * yb).array()).sum().real();
                }
            }
            return acc;
        }
        double acc = 0.0;
        for(const auto &e : Y.sparse_mat().entries) acc += (std::conj(level_entry(Lx, e.row, e.col)) * e.value).real();
        return acc;
    }
    if(X.kind() == Kd::Dense) {
        const CMat &A = X.dense_block();
        if(Y.kind() == Kd::Dense)
            return conj_x ? (A.array() * Y.dense_block().array()).sum().real()
                          : (A.conjugate().array() * Y.dense_block().array()).sum().real();
        double acc = 0.0;
        for(const auto &e : Y.sparse_mat().entries) acc += (pick(A(e.row, e.col)) * e.value).real();
        return acc;
    }
    std::map<std::pair<int, int>, cplx> xs;
    for(const auto &e : X.sparse_mat().entries) xs[{e.row, e.col}] += e.value;
    double acc = 0.0;
    for(const auto &e : Y.sparse_mat().entries) {
        auto it = xs.find({e.row, e.col});
        if(it != xs.end()) acc += (pick(it->second) * e.value).real();
    }
    return acc;
}

double diag_re(const Operand &X, const Operand &Y, bool conj_x) {
    double acc = 0.0;
    for(int j = 0; j < X.K(); ++j) {
        const auto x = X.rho(j).head(9), y = Y.rho(j).head(9);
        acc += conj_x ? (x.array() * y.array()).sum().real() : x.dot(y).real();
    }
    return acc;
}

} // namespace

double pair_bilinear(const PairForm &form, const Operand &X, const Operand &Y) {
    if(!form.scalar) return pair_bilinear_kernels(form, X, Y);
    if(X.K() != Y.K()) throw InvalidInput("pair_bilinear: operands have different K");
    double acc = 0.0;
    if(form.coef2 != 0.0) acc += form.coef2 * (frob_re(X, Y, false) - diag_re(X, Y, false));
    if(form.coef1 != 0.0) acc += form.coef1 * (frob_re(X, Y, true) - diag_re(X, Y, true));
    return 0.5 * acc;
}

void pair_grad_apply(const PairForm &form, const Operand &X, double scale, int level, const CMat &y, CMat &out) {
    if(!form.scalar) return pair_grad_apply_kernels(form, X, scale, level, y, out);
    if(scale == 0.0) return;
    // out += scale (coef1 conj(X) + coef2 X) y on the level blocks, with cluster-diagonal blocks removed.
    const cplx a = scale * form.coef1, b = scale * form.coef2;
    const int  ck = kBasis * X.K();
    if(y.rows() != ck || out.rows() != ck || out.cols() != y.cols()) throw InvalidInput("pair_grad_apply: shape mismatch");
    const int c = ck >> level;
    switch(X.kind()) {
    case Operand::Kind::Hier:
        hier_blockdiag_apply(X.levels(), level, y, b, out);
        hier_blockdiag_apply(X.levels_conj(), level, y, a, out);
        break;
    case Operand::Kind::Dense:
        for(int blk = 0; blk < (1 << level); ++blk) {
            const auto yb = y.middleRows(blk * c, c);
            auto       ob = out.middleRows(blk * c, c);
            ob.noalias() += b * (X.dense_block().block(blk * c, blk * c, c, c) * yb);
            ob.noalias() += a * (X.dense_block_conj().block(blk * c, blk * c, c, c) * yb);
        }
        break;
    case Operand::Kind::Sparse:
        for(const auto &e : X.sparse_mat().entries)
            if(e.row / c == e.col / c) out.row(e.row) += (b * e.value + a * std::conj(e.value)) * y.row(e.col);
        break;
    }
    for(int j = 0; j < X.K(); ++j) {
        const CMat Xjj = unvec3(X.rho(j).head(9));
        out.middleRows(kBasis * j, kBasis) -= (a * Xjj.conjugate() + b * Xjj) * y.middleRows(kBasis * j, kBasis);
    }
}

} // namespace hsdp
