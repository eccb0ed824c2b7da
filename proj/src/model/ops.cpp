#include "hsdp/model.hpp"

namespace hsdp {

double PairForm::eval(const PairCorrTensor &P_xy, const PairCorrTensor &P_conjx_y) const {
    cplx acc{};
    for(auto [e, ep] : mask1) acc += T1(e, ep) * P_xy.at(e, ep);
    for(auto [e, ep] : mask2) acc += T2(e, ep) * P_conjx_y.at(e, ep);
    return acc.real();
}

double PairForm::direct(const CMat &X, const CMat &Y) const {
    const CVec x = vec3(X), y = vec3(Y);
    return ((x.transpose() * T1 * y)(0, 0) + (x.adjoint() * T2 * y)(0, 0)).real();
}

std::vector<UpperTerm> PairForm::terms1(double scale) const {
    std::vector<UpperTerm> t;
    for(auto [e, ep] : mask1) t.push_back({e, ep, scale * std::conj(T1(e, ep))});
    return t;
}

std::vector<UpperTerm> PairForm::terms2(double scale) const {
    std::vector<UpperTerm> t;
    for(auto [e, ep] : mask2) t.push_back({e, ep, scale * std::conj(T2(e, ep))});
    return t;
}

namespace {

// Row r of the printed transpose permutation has its single 1 in column kTransposeCol[r].
constexpr int kTransposeCol[9] = {0, 3, 6, 1, 4, 7, 2, 5, 8};

// First nine rows shared by the two border operators (times 1/2), as printed, in units of i.
constexpr int kBorderImag[9][3] = {{0, 0, 0}, {0, 0, 1}, {0, -1, 0}, {0, 0, -1}, {0, 0, 0},
                                   {1, 0, 0}, {0, 1, 0}, {-1, 0, 0}, {0, 0, 0}};

ConstraintOps build_ops() {
    ConstraintOps o;
    const cplx    half_over_i = 1.0 / (2.0 * I_unit);

    o.A_U = half_over_i * CMat::Identity(9, 9);
    o.A_L = CMat::Zero(9, 9);
    for(int r = 0; r < 9; ++r) o.A_L(r, kTransposeCol[r]) = -half_over_i;

    o.D                   = CMat::Zero(12, 9);
    o.D.topRows(9)        = CMat::Identity(9, 9);
    o.D_U                 = CMat::Zero(12, 3);
    o.D_L                 = CMat::Zero(12, 3);
    for(int r = 0; r < 9; ++r)
        for(int c = 0; c < 3; ++c) {
            o.D_U(r, c) = 0.5 * I_unit * static_cast<double>(kBorderImag[r][c]);
            o.D_L(r, c) = o.D_U(r, c);
        }
    for(int c = 0; c < 3; ++c) {
        o.D_U(9 + c, c) = 0.5;
        o.D_L(9 + c, c) = -0.5;
    }

    o.w = CVec::Zero(9);
    o.z = CVec::Zero(12);
    o.z(0) = o.z(4) = o.z(8) = 1.0;

    o.A_U_adj = o.A_U.adjoint();
    o.A_L_adj = o.A_L.adjoint();
    o.D_adj   = o.D.adjoint();
    o.D_U_adj = o.D_U.adjoint();
    o.D_L_adj = o.D_L.adjoint();

    o.G_A = (o.A_U * o.A_U_adj + o.A_L * o.A_L_adj).inverse();
    o.G_D = (o.D * o.D_adj + o.D_U * o.D_U_adj + o.D_L * o.D_L_adj).inverse();

    o.Phi.resize(12, 15);
    o.Phi << o.D, o.D_U, o.D_L;
    o.Pi_D = o.Phi.adjoint() * o.G_D * o.Phi;
    o.beta = o.Phi.adjoint() * o.G_D * o.z;
    o.zGz  = (o.z.adjoint() * o.G_D * o.z)(0, 0).real();

    // Pair quadratics with the (j,i) block tied to the (i,j) block by Hermiticity.
    auto pair_parts = [&o](const CMat &X) {
        const CVec u = vec3(X), l = vec3(CMat(X.adjoint()));
        const CVec lam = o.G_A * (o.A_U * u + o.A_L * l);
        return std::pair<CVec, CVec>{u - o.A_U_adj * lam, l - o.A_L_adj * lam};
    };
    o.pair_residual = PairForm::from_quadratic([&](const CMat &X) {
        auto [ru, rl] = pair_parts(X);
        return ru.squaredNorm() + rl.squaredNorm();
    });
    o.pair_range = PairForm::from_quadratic([&](const CMat &X) {
        auto [ru, rl] = pair_parts(X);
        return X.squaredNorm() * 2.0 - ru.squaredNorm() - rl.squaredNorm();
    });
    o.pair_constraint = PairForm::from_quadratic([&](const CMat &X) {
        return (o.A_U * vec3(X) + o.A_L * vec3(CMat(X.adjoint()))).squaredNorm();
    });
    return o;
}

} // namespace

const ConstraintOps &constraint_ops() {
    static const ConstraintOps ops = build_ops();
    return ops;
}

} // namespace hsdp
