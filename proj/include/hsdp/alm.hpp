#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hsdp/hmatrix.hpp"
#include "hsdp/model.hpp"

namespace hsdp {

enum class Algorithm { Dense, HierDual, HierBoth };

std::string algorithm_name(Algorithm a);
Algorithm   parse_algorithm(const std::string &s);

/// Which residual triggers a penalty increase; the other one triggers a decrease.
///  - DualRaises:   eta_D > ratio * eta_P doubles sigma. Sigma weights the dual residual in the
///                  loss, so this is the balancing direction that converges (default).
///  - PrimalRaises: eta_P > ratio * eta_D doubles sigma. Kept for comparison; it drives sigma to
///                  its floor whenever the primal residual is already small.
enum class PenaltyRule { PrimalRaises, DualRaises };

struct SolverConfig {
    Algorithm     algorithm = Algorithm::HierDual;
    double        sigma0    = 0.0; ///< <= 0 picks 1 for N <= 512 and 0.1 above
    double        penalty_factor = 2.0;
    double        penalty_ratio  = 10.0;
    double        sigma_min      = 1e-4;
    double        sigma_max      = 1e4;
    PenaltyRule   penalty_rule   = PenaltyRule::DualRaises;
    int           inner_iters    = 100;
    int           lbfgs_memory   = 10;
    double        inner_gtol     = 1e-9; ///< gradient norm tolerance relative to 1 + |f|
    int           levels         = 0;    ///< <= 0 picks max(1, log2(N/8))
    std::vector<int> ranks       = {20};
    double        tol            = 1e-3;
    int           max_outer      = 150;
    std::uint64_t seed           = 0;
    int           fit_iters      = 100;  ///< primal-fit budget per outer iteration (hier-both)

    [[nodiscard]] double resolved_sigma0(int N) const;
    [[nodiscard]] int    resolved_levels(int N) const;
    /// Throws InvalidInput for inconsistent settings.
    void validate(int N) const;
};

double default_sigma0(int N);
int    default_levels(int N);

// ---------------------------------------------------------------------------------------------
// Multiplier eliminations

CVec   eliminate_Lambda(const CMat &S_ij, const CMat &S_ji, const CMat &J_ij, const CMat &J_ji, const CMat &M_ij,
                        const CMat &M_ji, double sigma);
CVec   eliminate_lambda(const CMat &S_jj, const CVec &S1_j, const CMat &J_jj, const CVec &J1_j, const CMat &M_jj,
                        const CVec &M1_j, double sigma);
double eliminate_gamma(double S0, double J0, double M0, double sigma);

/// All multipliers from dense (3K+1)-square S, J, M.
Multipliers eliminate_all(const CMat &S, const CMat &J, const CMat &M, double sigma);

/// Literal augmented Lagrangian for given multipliers, dense.
double lagrangian_dense(const CMat &S, const Multipliers &mult, const CMat &J, const CMat &M, double sigma);

/// Dense oracle of the eliminated loss: substitutes eliminate_all into lagrangian_dense.
double loss_dense_oracle(const CMat &S, const CMat &J, const CMat &M, double sigma);

// ---------------------------------------------------------------------------------------------
// Structured operands

/// A (3K+1)-square Hermitian matrix in one of three storage forms, with what the structured
/// kernels need precomputed: the absorbed level panel, conjugate copies and per-cluster vectors.
class Operand {
  public:
    enum class Kind { Hier, Dense, Sparse };

    static Operand hier(const HierPSD &H);
    static Operand dense(const CMat &A, int K);
    static Operand sparse(const SparseMatrix &A, int K);

    [[nodiscard]] Kind kind() const { return kind_; }
    [[nodiscard]] int  K() const { return K_; }
    [[nodiscard]] const CVec &rho(int j) const { return rho_[j]; }
    [[nodiscard]] double      corner() const { return corner_; }
    /// Full squared Frobenius norm; O(CK m^2 r^2) for the hierarchical kind.
    [[nodiscard]] double frob2() const;

    [[nodiscard]] const HierLevels   &levels() const { return levels_; }
    [[nodiscard]] const HierLevels   &levels_conj() const { return levels_conj_; }
    [[nodiscard]] const CMat         &dense_block() const { return dense_; }
    [[nodiscard]] const CMat         &dense_block_conj() const { return dense_conj_; }
    [[nodiscard]] const SparseMatrix &sparse_mat() const { return sparse_; }
    [[nodiscard]] const SparseMatrix &sparse_conj() const { return sparse_conj_; }

    /// Re Tr(A B) against a sparse Hermitian partner.
    [[nodiscard]] double trace_with(const SparseMatrix &B) const;
    /// Single entry (row, col) of the represented matrix.
    [[nodiscard]] cplx entry(int row, int col) const;

  private:
    Kind              kind_ = Kind::Dense;
    int               K_    = 0;
    HierLevels        levels_, levels_conj_; ///< spike already absorbed into level 0
    CVec              spike_;
    CMat              dense_, dense_conj_; ///< CK x CK block
    CVec              border_;             ///< column CK, rows 0..CK-1
    SparseMatrix      sparse_, sparse_conj_; ///< CK x CK part
    SparseMatrix      sparse_full_;
    std::vector<CVec> rho_;
    double            corner_ = 0.0;
    double            frob2_  = 0.0;
};

/// sum_{i<j} form(X_ij, Y_ij). Scalar forms go through Frobenius products of the operands;
/// everything else through the pair-correlation kernels.
double pair_bilinear(const PairForm &form, const Operand &X, const Operand &Y);
/// Always the pair-correlation route.
double pair_bilinear_kernels(const PairForm &form, const Operand &X, const Operand &Y);

/// out += 2 (G + G^*) y on level `level`, where G is the derivative matrix of
/// scale * sum_{i<j} form(X_ij, S_ij) with respect to S (real-composite convention).
void pair_grad_apply(const PairForm &form, const Operand &X, double scale, int level, const CMat &y, CMat &out);
/// Always the strict-upper term route.
void pair_grad_apply_kernels(const PairForm &form, const Operand &X, double scale, int level, const CMat &y,
                             CMat &out);

// ---------------------------------------------------------------------------------------------
// Structured dual loss and primal fit

/// Gradient of a real function of a HierPSD in the real-composite convention: entries hold
/// d f / d Re + i d f / d Im for every factor and spike entry.
using HierGradient = HierPSD;

/// Eliminated augmented Lagrangian as a function of the hierarchical dual variable S.
/// J and M are held by reference and must outlive the loss.
class DualLoss {
  public:
    /// `include_constants = false` reports L(S) - L(0); the argmin is unchanged.
    DualLoss(const SparseMatrix &J, const Operand &M, double sigma, bool include_constants = true);

    double value(const HierPSD &S) const;
    double value_and_grad(const HierPSD &S, HierGradient &grad) const;

  private:
    double eval(const HierPSD &S, HierGradient *grad) const;

    const SparseMatrix *J_;
    const Operand      *M_;
    Operand             Jop_;
    double              sigma_;
    double              pair_const_ = 0.0; ///< S-independent part of the pair group
    double              m_frob2_    = 0.0;
    double              constant_   = 0.0;
};

/// ||H||^2 - 2 Re<H, T> for T = M + sigma (S - J + F*(eliminated multipliers)).
class PrimalFitObjective {
  public:
    PrimalFitObjective(const SparseMatrix &J, const Operand &S, const Operand &M, double sigma);

    double value(const HierPSD &H) const;
    double value_and_grad(const HierPSD &H, HierGradient &grad) const;

  private:
    double eval(const HierPSD &H, HierGradient *grad) const;

    const SparseMatrix *J_;
    const Operand      *S_;
    const Operand      *M_;
    Operand             Jop_;
    double              sigma_;
    std::vector<CVec>   rho_target_; ///< per-cluster target vectors
};

/// Dense target of the primal update.
CMat primal_target_dense(const CMat &S, const CMat &J, const CMat &M, double sigma);

// ---------------------------------------------------------------------------------------------
// Quasi-Newton

struct LbfgsOptions {
    int    max_iters = 100;
    int    memory    = 10;
    double gtol      = 1e-9;
    double c1        = 1e-4;
    double c2        = 0.9;
    int    max_linesearch = 30;
};

struct LbfgsResult {
    int         iterations = 0;
    int         evaluations = 0;
    double      f          = 0.0;
    double      gnorm      = 0.0;
    bool        line_search_failed = false;
    std::string status;
    std::vector<double> history; ///< objective after each accepted step
};

/// f(x, g) returns the value and writes the gradient. x is updated in place to the best iterate.
using Objective = std::function<double(const RVec &, RVec &)>;
LbfgsResult lbfgs_minimize(const Objective &f, RVec &x, const LbfgsOptions &opts = {});

RVec pack_hier(const HierPSD &H);
void unpack_hier(const RVec &x, HierPSD &H);

/// Minimizes a HierPSD objective in place from its current value.
LbfgsResult minimize_hier(const std::function<double(const HierPSD &, HierGradient &)> &f, HierPSD &H,
                          const LbfgsOptions &opts);

LbfgsResult inner_minimize(HierPSD &S, const DualLoss &loss, const LbfgsOptions &opts);
LbfgsResult primal_fit(HierPSD &H, const PrimalFitObjective &obj, const LbfgsOptions &opts);

// ---------------------------------------------------------------------------------------------
// Metrics and penalty

double update_penalty(double sigma, double eta_p, double eta_d, const SolverConfig &cfg);

struct Metrics {
    double eta_p      = 0.0;
    double eta_d      = 0.0;
    double eta_g      = 0.0;
    double obj_primal = 0.0;
    double obj_dual   = 0.0;

    [[nodiscard]] double max_eta() const { return std::max({eta_p, eta_d, eta_g}); }
};

double eta_gap(double primal, double dual);
/// max(0, -lmin) / (1 + max(0, lmax)).
double eta_p3(double lmin, double lmax);
double eta_p3_dense(const CMat &M);
double eta_p3_hier(const HierPSD &M);
/// ||A(M) - b|| / (1 + ||b||) evaluated from the factors of M.
double eta_p4_structured(const Operand &M);
/// Dual objective sum <lambda_j, z> + gamma with multipliers eliminated at (S, M).
double dual_objective_structured(const Operand &J, const Operand &S, const Operand &M, double sigma);
/// ||S - J + F*|| / (1 + ||J||) with multipliers eliminated at (S, M), from structured kernels.
double eta_d_structured(const Operand &J, const Operand &S, const Operand &M, double sigma);
double dual_objective_dense(const Multipliers &mult);

// ---------------------------------------------------------------------------------------------
// Engines

struct TraceRow {
    int    iter = 0;
    double eta_p = 0, eta_d = 0, eta_g = 0, obj_primal = 0, obj_dual = 0, dobj_per_site = 0, sigma = 0,
           wall_ms = 0;
};

struct ConvergenceTrace {
    std::vector<TraceRow> rows;
    void                  write_csv(std::ostream &os) const;
};

struct SolveResult {
    Algorithm              algorithm = Algorithm::Dense;
    int                    N         = 0;
    double                 h         = 0.0;
    CMat                   M_dense;   ///< set by the dense and hier-dual engines
    std::optional<HierPSD> M_hier;    ///< set by hier-both
    CMat                   S_dense;   ///< set by the dense engine
    Multipliers            duals;     ///< set by the dense engine
    std::optional<HierPSD> S_hier;    ///< set by the hierarchical engines
    ConvergenceTrace       trace;
    Metrics                final;
    double                 sigma      = 0.0;
    int                    iterations = 0;
    bool                   converged  = false;
    double                 seconds    = 0.0;

    [[nodiscard]] double bound() const { return final.obj_primal; }
};

/// Observer called after every outer iteration; returning false stops the run.
using IterationCallback = std::function<bool(const TraceRow &)>;

SolveResult alm_dense(int N, double h, const SolverConfig &cfg, const IterationCallback &cb = {});
SolveResult alm_hier_dual(int N, double h, const SolverConfig &cfg, const IterationCallback &cb = {});
SolveResult alm_hier_both(int N, double h, const SolverConfig &cfg, const IterationCallback &cb = {});
SolveResult solve(int N, double h, const SolverConfig &cfg, const IterationCallback &cb = {});

// ---------------------------------------------------------------------------------------------
// Fitting

struct FitResult {
    HierPSD H;
    double  err        = 0.0; ///< ||H - A|| / ||A|| of the best iterate
    int     iterations = 0;
};

FitResult fit_hier_to_dense(const CMat &A, int K, int C, int m, std::span<const int> ranks, int iters,
                            std::uint64_t seed);

} // namespace hsdp
