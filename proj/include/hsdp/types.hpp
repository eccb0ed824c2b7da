#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hsdp {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

inline constexpr cplx I_unit{0.0, 1.0};

/// Thrown for malformed inputs (shape mismatches, out-of-range parameters).
class InvalidInput : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown when an iterative numerical routine fails in a way the caller cannot recover from.
class NumericalFailure : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// One stored entry of a sparse complex matrix, 0-based.
struct SparseEntry {
    int  row = 0;
    int  col = 0;
    cplx value{};
};

/// Coordinate-list sparse matrix. Duplicate (row, col) pairs are summed.
struct SparseMatrix {
    int                      rows = 0;
    int                      cols = 0;
    std::vector<SparseEntry> entries;

    [[nodiscard]] CMat to_dense() const {
        CMat out = CMat::Zero(rows, cols);
        for(const auto &e : entries) out(e.row, e.col) += e.value;
        return out;
    }
};

inline bool is_power_of_two(long v) { return v > 0 && (v & (v - 1)) == 0; }

inline int ilog2(long v) {
    int l = 0;
    while(v > 1) {
        v >>= 1;
        ++l;
    }
    return l;
}

} // namespace hsdp
