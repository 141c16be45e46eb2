#pragma once

#include <ffop/mesh.h>

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace ffop {

/// Below this many unknowns the dense paths are used by default.
inline constexpr Eigen::Index kDenseThreshold = 3000;

///
/// Symmetric sparse matrix with a checked symmetry tolerance.
///
class SparseSym
{
public:
    SparseSym() = default;

    /// Throws InvalidArgument unless max|a_ij - a_ji| <= tol * max|a|.
    explicit SparseSym(SparseMatrix matrix, double tol = 1e-12);

    const SparseMatrix& matrix() const { return m_matrix; }
    Eigen::Index size() const { return m_matrix.rows(); }
    /// Measured max|a_ij - a_ji| / max|a| at construction.
    double asymmetry() const { return m_asymmetry; }

private:
    SparseMatrix m_matrix;
    double m_asymmetry = 0;
};

enum class SolverPath { Auto, Dense, SparseDirect, ConjugateGradient };

///
/// Cholesky factorization of a sparse symmetric positive definite matrix.
///
/// Backed by CHOLMOD when available; falls back to a simplicial LDL^T.
///
class SparseCholesky
{
public:
    SparseCholesky();
    ~SparseCholesky();
    SparseCholesky(SparseCholesky&&) noexcept;
    SparseCholesky& operator=(SparseCholesky&&) noexcept;

    /// Throws NumericalError if the matrix is not numerically positive definite.
    explicit SparseCholesky(const SparseMatrix& A);

    Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
    Eigen::MatrixXd solve(const Eigen::MatrixXd& B) const;

private:
    struct Impl;
    std::unique_ptr<Impl> m_impl;
};

struct SolveOptions
{
    SolverPath path = SolverPath::Auto;
    double tolerance = 1e-9;
    int max_iterations = 20000;
};

struct SolveResult
{
    Eigen::VectorXd x;
    double relative_residual = 0;
    int iterations = 0;
    std::vector<std::string> warnings;
};

///
/// Solve A x = b for symmetric positive (semi)definite A.
///
/// When `nullspace` is given, b is projected onto its orthogonal complement
/// (with a warning if that changes b) and the returned x is orthogonal to it.
/// Throws NumericalError if the relative residual exceeds the tolerance.
///
SolveResult solve_spd(const SparseSym& A, const Eigen::VectorXd& b,
                      const std::vector<Eigen::VectorXd>& nullspace = {}, const SolveOptions& options = {});

struct EigenResult
{
    /// Ascending.
    Eigen::VectorXd eigenvalues;
    /// M-orthonormal columns.
    Eigen::MatrixXd eigenvectors;
    /// ||A phi - lambda M phi|| per pair.
    Eigen::VectorXd residuals;
    /// Shift used by the iterative path (0 for dense).
    double shift = 0;
    int iterations = 0;
    bool dense = false;
};

struct EigenOptions
{
    SolverPath path = SolverPath::Auto;
    int max_iterations = 1000;
    /// Ritz pairs are accepted once ||A phi - lambda M phi|| <= tol (lambda + shift) ||M phi||.
    double tolerance = 1e-11;
    std::uint64_t seed = 0x5eed;
};

///
/// The k smallest eigenpairs of A phi = lambda M phi for symmetric positive
/// semidefinite A and positive diagonal M.
///
/// The iterative path runs blocked inverse iteration on A + sigma M with
/// Rayleigh-Ritz projection at every step, sigma = 1e-8 trace(A) / trace(M).
///
EigenResult eigs_generalized(const SparseSym& A, const Eigen::VectorXd& mass_diagonal, int k,
                             const EigenOptions& options = {});

/// Per-pair residual bound check: ||A phi - lambda M phi|| <= tol (||A|| + lambda ||M||).
bool eigen_residuals_ok(const SparseSym& A, const Eigen::VectorXd& mass_diagonal, const EigenResult& result,
                        double tol = 1e-7);

struct BoxQPResult
{
    Eigen::VectorXd x;
    double objective = 0;
    /// Infinity norm of the projected gradient over the free (non-fixed) entries.
    double kkt_residual = 0;
    int iterations = 0;
    bool converged = false;
    std::vector<std::string> warnings;
};

struct BoxQPOptions
{
    int max_iterations = 500;
    SolverPath path = SolverPath::Auto;
};

///
/// minimize 1/2 x^T A x subject to x_i = fixed values on `fixed_indices`,
/// lower <= x <= upper elsewhere.
///
/// Projected gradient with Jacobi scaling and Barzilai-Borwein steps, each
/// round followed by a Newton step on the current free face.
///
BoxQPResult solve_box_qp(const SparseSym& A, const std::vector<int>& fixed_indices,
                         const Eigen::VectorXd& fixed_values, const Eigen::VectorXd& lower,
                         const Eigen::VectorXd& upper, const BoxQPOptions& options = {});

///
/// One implicit Euler step of u_t = -M^{-1} A u: solves (M + tau A) u = M u0.
///
Eigen::VectorXd diffuse(const SparseSym& A, const Eigen::VectorXd& mass_diagonal, const Eigen::VectorXd& u0,
                        double tau, const SolveOptions& options = {});

/// Principal submatrix A(rows, cols).
SparseMatrix submatrix(const SparseMatrix& A, const std::vector<int>& rows, const std::vector<int>& cols);

/// Max absolute row sum.
double norm_inf(const SparseMatrix& A);

} // namespace ffop
