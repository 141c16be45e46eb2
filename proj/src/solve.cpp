#include <ffop/error.h>
#include <ffop/solve.h>

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#ifdef FFOP_HAVE_CHOLMOD
#include <Eigen/CholmodSupport>
#endif

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <string>

namespace ffop {

namespace {

Eigen::VectorXd project_out(const Eigen::VectorXd& v, const Eigen::MatrixXd& basis)
{
    if (basis.cols() == 0) return v;
    return v - basis * (basis.transpose() * v);
}

// Orthonormal basis of the span of `vectors` (columns), dropping dependent ones.
Eigen::MatrixXd orthonormal_basis(const std::vector<Eigen::VectorXd>& vectors, Eigen::Index n)
{
    Eigen::MatrixXd basis(n, 0);
    for (const auto& v : vectors) {
        if (v.size() != n) throw InvalidArgument("nullspace vector has wrong length");
        Eigen::VectorXd w = project_out(v, basis);
        w = project_out(w, basis);
        const double len = w.norm();
        if (len > 1e-12 * std::max(1.0, v.norm())) {
            basis.conservativeResize(n, basis.cols() + 1);
            basis.col(basis.cols() - 1) = w / len;
        }
    }
    return basis;
}

Eigen::VectorXd pcg(const SparseMatrix& A, const Eigen::VectorXd& b, const Eigen::MatrixXd& nullspace,
                    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& precondition, double tol,
                    int max_iterations, int& iterations)
{
    Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
    Eigen::VectorXd r = b;
    const double bnorm = b.norm();
    if (bnorm == 0) return x;
    Eigen::VectorXd z = project_out(precondition(r), nullspace);
    Eigen::VectorXd p = z;
    double rz = r.dot(z);
    for (iterations = 0; iterations < max_iterations; ++iterations) {
        if (r.norm() <= 0.1 * tol * bnorm) break;
        const Eigen::VectorXd Ap = A * p;
        const double pAp = p.dot(Ap);
        if (!(pAp > 0)) break;
        const double alpha = rz / pAp;
        x += alpha * p;
        r -= alpha * Ap;
        z = project_out(precondition(r), nullspace);
        const double rz_new = r.dot(z);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
    }
    return project_out(x, nullspace);
}

} // namespace

SparseSym::SparseSym(SparseMatrix matrix, double tol)
: m_matrix(std::move(matrix))
{
    if (m_matrix.rows() != m_matrix.cols()) throw InvalidArgument("SparseSym: matrix is not square");
    m_matrix.makeCompressed();
    const SparseMatrix diff = SparseMatrix(m_matrix.transpose()) - m_matrix;
    double max_abs = 0, max_diff = 0;
    for (Eigen::Index k = 0; k < m_matrix.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(m_matrix, k); it; ++it) max_abs = std::max(max_abs, std::abs(it.value()));
        for (SparseMatrix::InnerIterator it(diff, k); it; ++it) max_diff = std::max(max_diff, std::abs(it.value()));
    }
    m_asymmetry = max_abs > 0 ? max_diff / max_abs : 0;
    if (m_asymmetry > tol) {
        throw InvalidArgument("SparseSym: matrix is not symmetric (relative asymmetry " + std::to_string(m_asymmetry) + ")");
    }
}

struct SparseCholesky::Impl
{
#ifdef FFOP_HAVE_CHOLMOD
    Eigen::CholmodDecomposition<SparseMatrix, Eigen::Lower> factor;
#else
    Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower> factor;
#endif
};

SparseCholesky::SparseCholesky() = default;
SparseCholesky::~SparseCholesky() = default;
SparseCholesky::SparseCholesky(SparseCholesky&&) noexcept = default;
SparseCholesky& SparseCholesky::operator=(SparseCholesky&&) noexcept = default;

SparseCholesky::SparseCholesky(const SparseMatrix& A)
: m_impl(std::make_unique<Impl>())
{
    m_impl->factor.compute(A);
    if (m_impl->factor.info() != Eigen::Success) {
        throw NumericalError("sparse Cholesky factorization failed (matrix not positive definite?)");
    }
}

Eigen::VectorXd SparseCholesky::solve(const Eigen::VectorXd& b) const
{
    return m_impl->factor.solve(b);
}

Eigen::MatrixXd SparseCholesky::solve(const Eigen::MatrixXd& B) const
{
    return m_impl->factor.solve(B);
}

SparseMatrix submatrix(const SparseMatrix& A, const std::vector<int>& rows, const std::vector<int>& cols)
{
    std::vector<int> col_map(static_cast<size_t>(A.cols()), -1);
    for (size_t j = 0; j < cols.size(); ++j) col_map[static_cast<size_t>(cols[j])] = static_cast<int>(j);
    std::vector<int> row_map(static_cast<size_t>(A.rows()), -1);
    for (size_t i = 0; i < rows.size(); ++i) row_map[static_cast<size_t>(rows[i])] = static_cast<int>(i);
    std::vector<Triplet> t;
    for (Eigen::Index k = 0; k < A.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(A, k); it; ++it) {
            const int r = row_map[static_cast<size_t>(it.row())];
            const int c = col_map[static_cast<size_t>(it.col())];
            if (r >= 0 && c >= 0) t.emplace_back(r, c, it.value());
        }
    }
    SparseMatrix S(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    S.setFromTriplets(t.begin(), t.end());
    return S;
}

double norm_inf(const SparseMatrix& A)
{
    Eigen::VectorXd rowsum = Eigen::VectorXd::Zero(A.rows());
    for (Eigen::Index k = 0; k < A.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(A, k); it; ++it) rowsum[it.row()] += std::abs(it.value());
    }
    return rowsum.size() ? rowsum.maxCoeff() : 0.0;
}

SolveResult solve_spd(const SparseSym& Asym, const Eigen::VectorXd& b, const std::vector<Eigen::VectorXd>& nullspace,
                      const SolveOptions& options)
{
    const SparseMatrix& A = Asym.matrix();
    const Eigen::Index n = A.rows();
    if (b.size() != n) throw InvalidArgument("solve_spd: right-hand side has wrong length");

    SolveResult result;
    const Eigen::MatrixXd N = orthonormal_basis(nullspace, n);
    const Eigen::VectorXd rhs = project_out(b, N);
    if ((rhs - b).norm() > 1e-12 * std::max(1.0, b.norm())) {
        result.warnings.push_back("right-hand side projected onto the range of the operator");
    }

    SolverPath path = options.path;
    if (path == SolverPath::Auto) {
        path = n < kDenseThreshold ? SolverPath::Dense
                                   : (N.cols() == 0 ? SolverPath::SparseDirect : SolverPath::ConjugateGradient);
    }

    switch (path) {
    case SolverPath::Dense: {
        Eigen::MatrixXd Ad = Eigen::MatrixXd(A);
        if (N.cols() > 0) {
            const double scale = std::max(Ad.diagonal().cwiseAbs().maxCoeff(), 1e-300);
            Ad += scale * N * N.transpose();
        }
        Eigen::LDLT<Eigen::MatrixXd> ldlt(Ad);
        result.x = project_out(ldlt.solve(rhs), N);
        break;
    }
    case SolverPath::SparseDirect: {
        if (N.cols() == 0) {
            result.x = SparseCholesky(A).solve(rhs);
        } else {
            // Singular system: PCG preconditioned by an exact factor of a slightly shifted matrix.
            SparseMatrix shifted = A;
            const Eigen::VectorXd diag = A.diagonal();
            const double delta = 1e-8 * std::max(diag.cwiseAbs().maxCoeff(), 1e-300);
            for (Eigen::Index i = 0; i < n; ++i) shifted.coeffRef(i, i) += delta;
            SparseCholesky factor(shifted);
            result.x = pcg(A, rhs, N, [&](const Eigen::VectorXd& r) { return factor.solve(r); }, options.tolerance,
                           options.max_iterations, result.iterations);
        }
        break;
    }
    case SolverPath::ConjugateGradient:
    default: {
        Eigen::IncompleteCholesky<double, Eigen::Lower, Eigen::AMDOrdering<int>> ic;
        ic.compute(A);
        if (ic.info() == Eigen::Success) {
            result.x = pcg(A, rhs, N, [&](const Eigen::VectorXd& r) { return Eigen::VectorXd(ic.solve(r)); },
                           options.tolerance, options.max_iterations, result.iterations);
        } else {
            const Eigen::VectorXd inv_diag = A.diagonal().cwiseMax(1e-300).cwiseInverse();
            result.x = pcg(A, rhs, N, [&](const Eigen::VectorXd& r) { return Eigen::VectorXd(inv_diag.cwiseProduct(r)); },
                           options.tolerance, options.max_iterations, result.iterations);
        }
        break;
    }
    }

    const double rnorm = rhs.norm();
    result.relative_residual = rnorm > 0 ? (A * result.x - rhs).norm() / rnorm : (A * result.x).norm();
    if (!(result.relative_residual <= options.tolerance)) {
        throw NumericalError("solve_spd did not converge (relative residual " +
                             std::to_string(result.relative_residual) + ")");
    }
    return result;
}

EigenResult eigs_generalized(const SparseSym& Asym, const Eigen::VectorXd& mass, int k, const EigenOptions& options)
{
    const SparseMatrix& A = Asym.matrix();
    const Eigen::Index n = A.rows();
    if (mass.size() != n) throw InvalidArgument("eigs_generalized: mass has wrong length");
    if (!(mass.minCoeff() > 0)) throw InvalidArgument("eigs_generalized: mass must be positive");
    if (k < 1 || k >= n) {
        throw InvalidArgument("eigs_generalized: need 1 <= k < dimension (k = " + std::to_string(k) + ")");
    }

    EigenResult result;
    const Eigen::VectorXd inv_sqrt_m = mass.cwiseSqrt().cwiseInverse();
    const Eigen::VectorXd sqrt_m = mass.cwiseSqrt();

    const Eigen::Index block = std::min<Eigen::Index>(n, std::max<Eigen::Index>(2 * k, k + 16));
    SolverPath path = options.path;
    if (path == SolverPath::Auto) path = (n < kDenseThreshold || block >= n / 2) ? SolverPath::Dense : SolverPath::SparseDirect;

    if (path == SolverPath::Dense) {
        const Eigen::MatrixXd C = inv_sqrt_m.asDiagonal() * Eigen::MatrixXd(A) * inv_sqrt_m.asDiagonal();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
        if (es.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
        result.eigenvalues = es.eigenvalues().head(k);
        result.eigenvectors = inv_sqrt_m.asDiagonal() * es.eigenvectors().leftCols(k);
        result.dense = true;
    } else {
        const double shift = std::max(1e-8 * A.diagonal().sum() / mass.sum(), 1e-300);
        SparseMatrix K = A;
        for (Eigen::Index i = 0; i < n; ++i) K.coeffRef(i, i) += shift * mass[i];
        const SparseCholesky factor(K);
        // Residuals of A x cannot be resolved below this.
        const double roundoff = 100 * std::numeric_limits<double>::epsilon() * norm_inf(A);

        std::mt19937_64 rng(options.seed);
        std::normal_distribution<double> normal;
        Eigen::MatrixXd X(n, block);
        for (Eigen::Index j = 0; j < block; ++j) {
            for (Eigen::Index i = 0; i < n; ++i) X(i, j) = normal(rng);
        }

        Eigen::VectorXd theta;
        bool converged = false;
        int iter = 0;
        for (; iter < options.max_iterations && !converged; ++iter) {
            Eigen::MatrixXd Y = factor.solve(Eigen::MatrixXd(mass.asDiagonal() * X));
            // M-orthonormalize through the diagonal square root.
            Eigen::HouseholderQR<Eigen::MatrixXd> qr(sqrt_m.asDiagonal() * Y);
            Y = inv_sqrt_m.asDiagonal() * (qr.householderQ() * Eigen::MatrixXd::Identity(n, block));

            const Eigen::MatrixXd AY = A * Y;
            Eigen::MatrixXd Ar = Y.transpose() * AY;
            Ar = 0.5 * (Ar + Ar.transpose()).eval();
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Ar);
            theta = es.eigenvalues();
            X = Y * es.eigenvectors();

            const Eigen::MatrixXd AX = AY * es.eigenvectors();
            converged = true;
            for (int i = 0; i < k && converged; ++i) {
                const Eigen::VectorXd Mx = mass.cwiseProduct(X.col(i));
                const double r = (AX.col(i) - theta[i] * Mx).norm();
                const double floor = roundoff * X.col(i).norm();
                if (r > std::max(options.tolerance * (std::abs(theta[i]) + shift) * Mx.norm(), floor)) converged = false;
            }
        }
        if (!converged) {
            throw NumericalError("eigs_generalized: no convergence after " + std::to_string(iter) + " iterations");
        }
        result.eigenvalues = theta.head(k);
        result.eigenvectors = X.leftCols(k);
        result.shift = shift;
        result.iterations = iter;
    }

    result.residuals.resize(k);
    for (int i = 0; i < k; ++i) {
        const Eigen::VectorXd phi = result.eigenvectors.col(i);
        result.residuals[i] = (A * phi - result.eigenvalues[i] * mass.cwiseProduct(phi)).norm();
    }
    return result;
}

bool eigen_residuals_ok(const SparseSym& A, const Eigen::VectorXd& mass, const EigenResult& result, double tol)
{
    const double anorm = norm_inf(A.matrix());
    const double mnorm = mass.maxCoeff();
    for (Eigen::Index i = 0; i < result.residuals.size(); ++i) {
        if (!(result.residuals[i] <= tol * (anorm + std::abs(result.eigenvalues[i]) * mnorm))) return false;
    }
    return true;
}

Eigen::VectorXd diffuse(const SparseSym& A, const Eigen::VectorXd& mass, const Eigen::VectorXd& u0, double tau,
                        const SolveOptions& options)
{
    if (!(tau > 0)) throw InvalidArgument("diffusion time must be positive");
    if (u0.size() != A.size() || mass.size() != A.size()) throw InvalidArgument("diffuse: size mismatch");
    SparseMatrix K = tau * A.matrix();
    for (Eigen::Index i = 0; i < K.rows(); ++i) K.coeffRef(i, i) += mass[i];
    const SparseSym Ks(std::move(K), 1e-10);
    return solve_spd(Ks, mass.cwiseProduct(u0), {}, options).x;
}

namespace {

// Factorization of a principal submatrix, dense below the threshold.
class FaceSolver
{
public:
    FaceSolver(const SparseMatrix& H, SolverPath path)
    {
        if (path == SolverPath::Dense || (path == SolverPath::Auto && H.rows() < kDenseThreshold)) {
            m_dense = std::make_unique<Eigen::LDLT<Eigen::MatrixXd>>(Eigen::MatrixXd(H));
        } else {
            m_sparse = std::make_unique<SparseCholesky>(H);
        }
    }

    Eigen::VectorXd solve(const Eigen::VectorXd& b) const
    {
        return m_dense ? Eigen::VectorXd(m_dense->solve(b)) : m_sparse->solve(b);
    }

private:
    std::unique_ptr<Eigen::LDLT<Eigen::MatrixXd>> m_dense;
    std::unique_ptr<SparseCholesky> m_sparse;
};

} // namespace

BoxQPResult solve_box_qp(const SparseSym& Asym, const std::vector<int>& fixed_indices,
                         const Eigen::VectorXd& fixed_values, const Eigen::VectorXd& lower,
                         const Eigen::VectorXd& upper, const BoxQPOptions& options)
{
    const SparseMatrix& A = Asym.matrix();
    const Eigen::Index n = A.rows();
    if (lower.size() != n || upper.size() != n) throw InvalidArgument("solve_box_qp: bounds have wrong length");
    if (static_cast<Eigen::Index>(fixed_indices.size()) != fixed_values.size()) {
        throw InvalidArgument("solve_box_qp: fixed indices and values differ in length");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(lower[i] <= upper[i])) throw InvalidArgument("solve_box_qp: lower bound exceeds upper bound");
    }

    std::vector<char> is_fixed(static_cast<size_t>(n), 0);
    Eigen::VectorXd full = Eigen::VectorXd::Zero(n);
    for (size_t j = 0; j < fixed_indices.size(); ++j) {
        const int i = fixed_indices[j];
        if (i < 0 || i >= n) throw InvalidArgument("solve_box_qp: fixed index out of range");
        const double v = fixed_values[static_cast<Eigen::Index>(j)];
        if (v < lower[i] || v > upper[i]) {
            throw InvalidArgument("solve_box_qp: infeasible fixed value at index " + std::to_string(i));
        }
        is_fixed[static_cast<size_t>(i)] = 1;
        full[i] = v;
    }
    std::vector<int> free_ids, fixed_ids;
    for (Eigen::Index i = 0; i < n; ++i) (is_fixed[static_cast<size_t>(i)] ? fixed_ids : free_ids).push_back(static_cast<int>(i));

    BoxQPResult result;
    if (free_ids.empty()) {
        result.x = full;
        result.objective = 0.5 * full.dot(A * full);
        result.converged = true;
        return result;
    }

    const SparseMatrix H = submatrix(A, free_ids, free_ids);
    const Eigen::Index m = H.rows();
    Eigen::VectorXd lo(m), hi(m), fixed_part(static_cast<Eigen::Index>(fixed_ids.size()));
    for (Eigen::Index j = 0; j < m; ++j) {
        lo[j] = lower[free_ids[static_cast<size_t>(j)]];
        hi[j] = upper[free_ids[static_cast<size_t>(j)]];
    }
    for (size_t j = 0; j < fixed_ids.size(); ++j) fixed_part[static_cast<Eigen::Index>(j)] = full[fixed_ids[j]];
    const Eigen::VectorXd g0 = fixed_ids.empty() ? Eigen::VectorXd::Zero(m)
                                                 : Eigen::VectorXd(submatrix(A, free_ids, fixed_ids) * fixed_part);

    auto proj = [&](const Eigen::VectorXd& x) { return x.cwiseMax(lo).cwiseMin(hi); };
    auto objective = [&](const Eigen::VectorXd& x) { return 0.5 * x.dot(H * x) + g0.dot(x); };
    auto gradient = [&](const Eigen::VectorXd& x) { return Eigen::VectorXd(H * x + g0); };
    auto assemble_full = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd c = full;
        for (Eigen::Index j = 0; j < m; ++j) c[free_ids[static_cast<size_t>(j)]] = x[j];
        return c;
    };

    const double anorm = norm_inf(A);
    auto tolerance = [&](const Eigen::VectorXd& x) { return 1e-8 * anorm * assemble_full(x).norm() + 1e-12; };

    // Start from the projected unconstrained minimizer.
    Eigen::VectorXd x = proj(FaceSolver(H, options.path).solve(-g0));
    const Eigen::VectorXd inv_diag = H.diagonal().cwiseAbs().cwiseMax(1e-300).cwiseInverse();
    double bb_step = 1.0;
    const double armijo = 1e-4;

    int iter = 0;
    for (; iter < options.max_iterations; ++iter) {
        Eigen::VectorXd g = gradient(x);
        if ((x - proj(x - g)).norm() <= tolerance(x)) {
            result.converged = true;
            break;
        }

        // Projected, Jacobi-scaled Barzilai-Borwein steps.
        for (int inner = 0; inner < 10; ++inner) {
            const Eigen::VectorXd d = -inv_diag.cwiseProduct(g);
            double alpha = bb_step;
            const double f = objective(x);
            Eigen::VectorXd x_new = proj(x + alpha * d);
            for (int backtrack = 0; backtrack < 60 && objective(x_new) > f + armijo * g.dot(x_new - x); ++backtrack) {
                alpha *= 0.5;
                x_new = proj(x + alpha * d);
            }
            const Eigen::VectorXd s = x_new - x;
            if (s.squaredNorm() == 0) break;
            const Eigen::VectorXd y = H * s;
            const double sy = s.dot(y);
            bb_step = sy > 0 ? s.dot(s.cwiseQuotient(inv_diag)) / sy : 1.0;
            bb_step = std::clamp(bb_step, 1e-12, 1e12);
            const bool same_face = ((x.array() > lo.array()) == (x_new.array() > lo.array())).all() &&
                                   ((x.array() < hi.array()) == (x_new.array() < hi.array())).all();
            x = x_new;
            g = gradient(x);
            if (same_face) break;
        }

        // Newton step on the free face.
        std::vector<int> face;
        for (Eigen::Index j = 0; j < m; ++j) {
            if (x[j] > lo[j] && x[j] < hi[j]) face.push_back(static_cast<int>(j));
        }
        if (!face.empty()) {
            const SparseMatrix Hf = submatrix(H, face, face);
            Eigen::VectorXd gf(static_cast<Eigen::Index>(face.size()));
            for (size_t j = 0; j < face.size(); ++j) gf[static_cast<Eigen::Index>(j)] = g[face[j]];
            Eigen::VectorXd step = FaceSolver(Hf, options.path).solve(-gf);
            Eigen::VectorXd d = Eigen::VectorXd::Zero(m);
            for (size_t j = 0; j < face.size(); ++j) d[face[j]] = step[static_cast<Eigen::Index>(j)];
            const double f = objective(x);
            double t = 1.0;
            for (int backtrack = 0; backtrack < 60; ++backtrack, t *= 0.5) {
                const Eigen::VectorXd x_try = proj(x + t * d);
                if (objective(x_try) <= f + armijo * g.dot(x_try - x)) {
                    x = x_try;
                    break;
                }
            }
        }
    }

    const Eigen::VectorXd g = gradient(x);
    result.kkt_residual = (x - proj(x - g)).cwiseAbs().maxCoeff();
    if (!result.converged && (x - proj(x - g)).norm() <= tolerance(x)) result.converged = true;
    if (!result.converged) result.warnings.push_back("solve_box_qp reached the iteration cap");
    result.iterations = iter;
    result.x = assemble_full(x);
    result.objective = 0.5 * result.x.dot(A * result.x);
    return result;
}

} // namespace ffop
