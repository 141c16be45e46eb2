#include "oracles.h"

#include <ffop/error.h>
#include <ffop/mesh_gen.h>
#include <ffop/symtensor.h>

#include <cmath>
#include <limits>
#include <numbers>

namespace ffop::oracles {

namespace {

SimplicialMesh jitter(const SimplicialMesh& mesh, double amount, std::mt19937_64& rng)
{
    const double h = mean_edge_length(mesh);
    std::uniform_real_distribution<double> u(-1, 1);
    // Halve the displacement until no element inverts or degenerates.
    for (;; amount *= 0.5) {
        Eigen::MatrixXd V = mesh.vertices();
        for (Eigen::Index v = 0; v < V.rows(); ++v) {
            if (mesh.is_boundary(v)) continue;
            for (Eigen::Index k = 0; k < V.cols(); ++k) V(v, k) += amount * h * u(rng);
        }
        try {
            return SimplicialMesh::create(V, mesh.elements());
        } catch (const GeometryError&) {
            if (amount < 1e-3) throw;
        }
    }
}

} // namespace

SimplicialMesh jittered_disk(int rings, double amount, std::mt19937_64& rng)
{
    return jitter(make_disk(rings), amount, rng);
}

SimplicialMesh jittered_cube(int n, double amount, std::mt19937_64& rng)
{
    return jitter(make_cube(n), amount, rng);
}

OdecoFrame random_octahedral(int dim, std::mt19937_64& rng)
{
    std::normal_distribution<double> g;
    if (dim == 2) {
        std::uniform_real_distribution<double> angle(0, 2 * std::numbers::pi);
        return OdecoFrame::from_angle(angle(rng));
    }
    Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
    q.normalize();
    return OdecoFrame::from_rotation(q);
}

FrameField random_field(const SimplicialMesh& mesh, bool odeco, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> w(0.5, 2.0);
    std::vector<OdecoFrame> frames;
    for (Eigen::Index v = 0; v < mesh.num_vertices(); ++v) {
        OdecoFrame f = random_octahedral(mesh.dim(), rng);
        if (odeco) {
            for (Eigen::Index a = 0; a < f.weights.size(); ++a) f.weights[a] = w(rng);
        }
        frames.push_back(f);
    }
    return FrameField::from_frames(frames);
}

KktOracle::KktOracle(const SimplicialMesh& mesh, const FrameField& field, double epsilon, BcKind bc)
: m_sys(assemble_mixed_system(mesh, field, epsilon, bc))
{
    m_n = m_sys.M.size();
    const Eigen::Index r = m_sys.B.rows();
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(2 * m_n + r, 2 * m_n + r);
    K.topLeftCorner(m_n, m_n) = Eigen::MatrixXd(m_sys.M_T);
    K.block(0, m_n, m_n, m_n) = m_sys.M.asDiagonal();
    K.block(m_n, 0, m_n, m_n) = m_sys.M.asDiagonal();
    const Eigen::MatrixXd B(m_sys.B);
    K.block(m_n, 2 * m_n, m_n, r) = B.transpose();
    K.block(2 * m_n, m_n, r, m_n) = B;
    m_lu.compute(K);
}

Eigen::VectorXd KktOracle::apply(const Eigen::VectorXd& u) const
{
    const Eigen::VectorXd Cu = m_sys.D.transpose() * (m_sys.A.asDiagonal() * (m_sys.G * u));
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m_lu.rows());
    rhs.segment(m_n, m_n) = -Cu;
    const Eigen::VectorXd sol = m_lu.solve(rhs);
    const Eigen::VectorXd lambda = sol.segment(m_n, m_n);
    return m_sys.G.transpose() * (m_sys.A.asDiagonal() * (m_sys.D * lambda));
}

SparseMatrix reference_bilaplacian(const SimplicialMesh& mesh)
{
    const FrameField field = constant_field(mesh, OdecoFrame::axis_aligned(mesh.dim()));
    const MixedSystem sys = assemble_mixed_system(mesh, field, 1.0, BcKind::Natural);
    const int m = sys.mandel;
    const SparseMatrix C = SparseMatrix(sys.D.transpose()) * sys.A.asDiagonal() * sys.G;
    Eigen::VectorXd w = sys.M.cwiseInverse();
    for (Eigen::Index v = 0; v < mesh.num_vertices(); ++v) {
        if (mesh.is_boundary(v)) w.segment(v * m, m).setZero();
    }
    return SparseMatrix(C.transpose()) * w.asDiagonal() * C;
}

double brute_force_box_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& g, const Eigen::VectorXd& lo,
                          const Eigen::VectorXd& hi, Eigen::VectorXd* argmin)
{
    const auto n = static_cast<int>(H.rows());
    long total = 1;
    for (int i = 0; i < n; ++i) total *= 3;
    double best = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_x;
    std::vector<int> state(static_cast<size_t>(n));
    for (long code = 0; code < total; ++code) {
        long c = code;
        std::vector<int> free;
        Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < n; ++i) {
            state[static_cast<size_t>(i)] = static_cast<int>(c % 3);
            c /= 3;
            if (state[static_cast<size_t>(i)] == 0) free.push_back(i);
            else x[i] = state[static_cast<size_t>(i)] == 1 ? lo[i] : hi[i];
        }
        if (!free.empty()) {
            const auto k = static_cast<Eigen::Index>(free.size());
            Eigen::MatrixXd Hff(k, k);
            Eigen::VectorXd rhs(k);
            for (Eigen::Index a = 0; a < k; ++a) {
                rhs[a] = -g[free[static_cast<size_t>(a)]];
                for (int j = 0; j < n; ++j) {
                    if (state[static_cast<size_t>(j)] != 0) rhs[a] -= H(free[static_cast<size_t>(a)], j) * x[j];
                }
                for (Eigen::Index b = 0; b < k; ++b) Hff(a, b) = H(free[static_cast<size_t>(a)], free[static_cast<size_t>(b)]);
            }
            const Eigen::VectorXd xf = Hff.ldlt().solve(rhs);
            for (Eigen::Index a = 0; a < k; ++a) x[free[static_cast<size_t>(a)]] = xf[a];
        }
        bool feasible = true;
        for (int i = 0; i < n; ++i) feasible = feasible && x[i] >= lo[i] - 1e-14 && x[i] <= hi[i] + 1e-14;
        if (!feasible) continue;
        const double f = 0.5 * x.dot(H * x) + g.dot(x);
        if (f < best) {
            best = f;
            best_x = x;
        }
    }
    if (argmin) *argmin = best_x;
    return best;
}

double max_abs(const SparseMatrix& A)
{
    double m = 0;
    for (Eigen::Index k = 0; k < A.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(A, k); it; ++it) m = std::max(m, std::abs(it.value()));
    }
    return m;
}

} // namespace ffop::oracles
