#include <array>
#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

#include "hsdp/hmatrix.hpp"

namespace hsdp {

namespace {

constexpr std::array<char, 4> kMagic{'H', 'S', 'D', 'P'};
constexpr std::uint32_t       kKindHier  = 1;
constexpr std::uint32_t       kKindDense = 2;
constexpr std::uint32_t       kFlagSpike = 1;

void put_u32(std::ostream &os, std::uint32_t v) {
    std::array<char, 4> b{};
    for(int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
    os.write(b.data(), 4);
}

void put_f64(std::ostream &os, double d) {
    const auto          v = std::bit_cast<std::uint64_t>(d);
    std::array<char, 8> b{};
    for(int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
    os.write(b.data(), 8);
}

void put_cplx(std::ostream &os, cplx z) {
    put_f64(os, z.real());
    put_f64(os, z.imag());
}

std::uint32_t get_u32(std::istream &is) {
    std::array<unsigned char, 4> b{};
    if(!is.read(reinterpret_cast<char *>(b.data()), 4)) throw InvalidInput("truncated matrix file header");
    std::uint32_t v = 0;
    for(int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream &is) {
    std::array<unsigned char, 8> b{};
    if(!is.read(reinterpret_cast<char *>(b.data()), 8)) throw InvalidInput("truncated matrix file payload");
    std::uint64_t v = 0;
    for(int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(v);
}

cplx get_cplx(std::istream &is) {
    const double re = get_f64(is);
    const double im = get_f64(is);
    return {re, im};
}

void put_panel(std::ostream &os, const CMat &A) {
    for(Eigen::Index j = 0; j < A.cols(); ++j)
        for(Eigen::Index i = 0; i < A.rows(); ++i) put_cplx(os, A(i, j));
}

void get_panel(std::istream &is, CMat &A) {
    for(Eigen::Index j = 0; j < A.cols(); ++j)
        for(Eigen::Index i = 0; i < A.rows(); ++i) A(i, j) = get_cplx(is);
}

struct Header {
    std::uint32_t              kind = 0, K = 0, C = 0, m = 0, flags = 0;
    std::vector<std::uint32_t> ranks;
};

Header read_header(std::istream &is) {
    std::array<char, 4> magic{};
    if(!is.read(magic.data(), 4) || magic != kMagic) throw InvalidInput("not an HSDP matrix file (bad magic)");
    const auto version = get_u32(is);
    if(version != kFormatVersion) throw InvalidInput("unsupported HSDP file version " + std::to_string(version));
    Header h;
    h.kind = get_u32(is);
    h.K    = get_u32(is);
    h.C    = get_u32(is);
    h.m    = get_u32(is);
    if(h.m > 64) throw InvalidInput("implausible level count in HSDP header");
    for(std::uint32_t l = 0; l < h.m; ++l) h.ranks.push_back(get_u32(is));
    h.flags = get_u32(is);
    if(h.K == 0 || h.C == 0 || h.K > (1u << 20) || h.C > 64) throw InvalidInput("implausible (K, C) in HSDP header");
    return h;
}

void write_header(std::ostream &os, std::uint32_t kind, int K, int C, const std::vector<std::uint32_t> &ranks,
                  std::uint32_t flags) {
    os.write(kMagic.data(), 4);
    put_u32(os, kFormatVersion);
    put_u32(os, kind);
    put_u32(os, static_cast<std::uint32_t>(K));
    put_u32(os, static_cast<std::uint32_t>(C));
    put_u32(os, static_cast<std::uint32_t>(ranks.size()));
    for(auto r : ranks) put_u32(os, r);
    put_u32(os, flags);
}

} // namespace

void write_hier(std::ostream &os, const HierPSD &H) {
    H.levels.validate();
    std::vector<std::uint32_t> ranks;
    for(int l = 0; l < H.levels.levels(); ++l) ranks.push_back(static_cast<std::uint32_t>(H.levels.rank(l)));
    const bool spike = H.spike.size() > 0;
    if(spike && H.spike.size() != H.dim()) throw InvalidInput("write_hier: spike length mismatch");
    write_header(os, kKindHier, H.K(), H.C(), ranks, spike ? kFlagSpike : 0u);
    for(const auto &f : H.levels.factors) put_panel(os, f);
    if(spike)
        for(Eigen::Index i = 0; i < H.spike.size(); ++i) put_cplx(os, H.spike(i));
    if(!os) throw NumericalFailure("write_hier: stream error");
}

void write_dense(std::ostream &os, const CMat &A, int K, int C) {
    if(A.rows() != C * K + 1 || A.cols() != C * K + 1) throw InvalidInput("write_dense: matrix is not (CK+1) square");
    write_header(os, kKindDense, K, C, {}, 0u);
    put_panel(os, A);
    if(!os) throw NumericalFailure("write_dense: stream error");
}

HierPSD read_hier(std::istream &is) {
    const Header h = read_header(is);
    if(h.kind != kKindHier) throw InvalidInput("HSDP file does not hold a hierarchical matrix");
    HierPSD H;
    H.levels.K = static_cast<int>(h.K);
    H.levels.C = static_cast<int>(h.C);
    for(auto r : h.ranks) {
        CMat f(H.levels.dim(), static_cast<Eigen::Index>(r));
        get_panel(is, f);
        H.levels.factors.push_back(std::move(f));
    }
    H.levels.validate();
    if(h.flags & kFlagSpike) {
        H.spike.resize(H.dim());
        for(Eigen::Index i = 0; i < H.spike.size(); ++i) H.spike(i) = get_cplx(is);
    } else {
        H.spike = CVec::Zero(H.dim());
    }
    return H;
}

CMat read_dense(std::istream &is, int *K, int *C) {
    const Header h = read_header(is);
    if(h.kind != kKindDense) throw InvalidInput("HSDP file does not hold a dense matrix");
    const int n = static_cast<int>(h.C * h.K + 1);
    CMat      A(n, n);
    get_panel(is, A);
    if(K) *K = static_cast<int>(h.K);
    if(C) *C = static_cast<int>(h.C);
    return A;
}

} // namespace hsdp
