#include <ffop/error.h>
#include <ffop/fem.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

namespace ffop {

namespace {

void require_epsilon(double epsilon)
{
    if (!(epsilon > 0 && epsilon <= 1)) {
        throw InvalidArgument("epsilon must lie in (0, 1], got " + std::to_string(epsilon));
    }
}

SparseMatrix block_diagonal(const std::vector<Eigen::MatrixXd>& blocks, int m)
{
    std::vector<Triplet> triplets;
    triplets.reserve(blocks.size() * static_cast<size_t>(m * m));
    for (size_t v = 0; v < blocks.size(); ++v) {
        const int base = static_cast<int>(v) * m;
        for (int a = 0; a < m; ++a) {
            for (int b = 0; b < m; ++b) {
                if (blocks[v](a, b) != 0) triplets.emplace_back(base + a, base + b, blocks[v](a, b));
            }
        }
    }
    const auto n = static_cast<Eigen::Index>(blocks.size()) * m;
    SparseMatrix out(n, n);
    out.setFromTriplets(triplets.begin(), triplets.end());
    return out;
}

// C = D^T A G, mapping vertex scalars to per-vertex Mandel tensors.
SparseMatrix coupling_matrix(const SimplicialMesh& mesh, const MeshMeasures& measures)
{
    const int dim = mesh.dim();
    Eigen::VectorXd A(mesh.num_elements() * dim);
    for (Eigen::Index e = 0; e < mesh.num_elements(); ++e) A.segment(e * dim, dim).setConstant(measures.element_volumes[e]);
    const SparseMatrix AG = A.asDiagonal() * gradient_matrix(mesh);
    return SparseMatrix(divergence_matrix(mesh).transpose()) * AG;
}

SparseMatrix symmetrized(const SparseMatrix& A)
{
    SparseMatrix At = A.transpose();
    SparseMatrix S = 0.5 * (A + At);
    S.prune(0.0);
    return S;
}

// Moore-Penrose inverse of a small symmetric PSD matrix; `singular` is set when
// an eigenvalue falls below 1e-12 * max eigenvalue.
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& S, bool& singular)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
    const Eigen::VectorXd& lambda = eig.eigenvalues();
    const double cutoff = 1e-12 * std::max(lambda.cwiseAbs().maxCoeff(), 0.0);
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(lambda.size());
    singular = false;
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        if (lambda[i] > cutoff && lambda[i] > 0) {
            inv[i] = 1 / lambda[i];
        } else {
            singular = true;
        }
    }
    return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

} // namespace

std::string to_string(BcKind kind)
{
    return kind == BcKind::Natural ? "natural" : "neumann";
}

BcKind bc_kind_from_string(const std::string& name)
{
    if (name == "natural") return BcKind::Natural;
    if (name == "neumann") return BcKind::Neumann;
    throw InvalidArgument("unknown boundary condition '" + name + "' (expected natural or neumann)");
}

SparseMatrix divergence_matrix(const SimplicialMesh& mesh)
{
    const int dim = mesh.dim();
    const int m = mandel_size(dim);
    std::vector<Triplet> triplets;
    triplets.reserve(static_cast<size_t>(mesh.num_elements() * (dim + 1) * dim * dim));
    for (Eigen::Index e = 0; e < mesh.num_elements(); ++e) {
        const Eigen::MatrixXd grads = element_shape_gradients(mesh, e);
        for (int k = 0; k <= dim; ++k) {
            const int base = mesh.elements()(e, k) * m;
            for (int j = 0; j < dim; ++j) {
                const auto row = static_cast<int>(e * dim + j);
                for (int i = 0; i < dim; ++i) {
                    const int a = mandel_index(dim, i, j);
                    const double scale = i == j ? 1.0 : 1.0 / std::numbers::sqrt2;
                    triplets.emplace_back(row, base + a, scale * grads(i, k));
                }
            }
        }
    }
    SparseMatrix D(mesh.num_elements() * dim, mesh.num_vertices() * m);
    D.setFromTriplets(triplets.begin(), triplets.end());
    return D;
}

std::vector<Eigen::MatrixXd> modified_forms(const FrameField& field, double epsilon)
{
    require_epsilon(epsilon);
    std::vector<Eigen::MatrixXd> out;
    out.reserve(static_cast<size_t>(field.num_vertices()));
    for (Eigen::Index v = 0; v < field.num_vertices(); ++v) {
        out.push_back(modify_epsilon(field.form(v), field.norm(v), epsilon).q);
    }
    return out;
}

SparseMatrix energy_block_matrix(const FrameField& field, const MeshMeasures& measures, double epsilon)
{
    if (measures.dual_volumes.size() != field.num_vertices()) {
        throw InvalidArgument("field and measures have different vertex counts");
    }
    auto blocks = modified_forms(field, epsilon);
    for (size_t v = 0; v < blocks.size(); ++v) blocks[v] *= measures.dual_volumes[static_cast<Eigen::Index>(v)];
    return block_diagonal(blocks, mandel_size(field.dim()));
}

Eigen::MatrixXd vertex_constraint_block(const MeshMeasures& measures, int boundary_position, int dim, BcKind bc)
{
    const int m = mandel_size(dim);
    if (bc == BcKind::Natural) return Eigen::MatrixXd::Identity(m, m);
    const Eigen::VectorXd n = measures.boundary_normals.row(boundary_position).transpose();
    const Eigen::MatrixXd& T = measures.boundary_tangents[static_cast<size_t>(boundary_position)];
    Eigen::MatrixXd rows(T.cols(), m);
    for (Eigen::Index k = 0; k < T.cols(); ++k) {
        const Eigen::MatrixXd tn = T.col(k) * n.transpose();
        rows.row(k) = to_mandel(0.5 * (tn + tn.transpose())).transpose();
    }
    return rows;
}

SparseMatrix boundary_constraint_matrix(const SimplicialMesh& mesh, const MeshMeasures& measures, BcKind bc)
{
    const int dim = mesh.dim();
    const int m = mandel_size(dim);
    const auto& boundary = mesh.boundary_vertices();
    std::vector<Triplet> triplets;
    int row = 0;
    for (size_t b = 0; b < boundary.size(); ++b) {
        const Eigen::MatrixXd block = vertex_constraint_block(measures, static_cast<int>(b), dim, bc);
        for (Eigen::Index r = 0; r < block.rows(); ++r, ++row) {
            for (int a = 0; a < m; ++a) {
                if (block(r, a) != 0) triplets.emplace_back(row, boundary[b] * m + a, block(r, a));
            }
        }
    }
    SparseMatrix B(row, mesh.num_vertices() * m);
    B.setFromTriplets(triplets.begin(), triplets.end());
    return B;
}

MixedSystem assemble_mixed_system(const SimplicialMesh& mesh, const FrameField& field, double epsilon, BcKind bc)
{
    field.require_compatible(mesh);
    const MeshMeasures measures = compute_measures(mesh);
    MixedSystem sys;
    sys.dim = mesh.dim();
    sys.mandel = mandel_size(sys.dim);
    sys.bc = bc;
    sys.G = gradient_matrix(mesh);
    sys.D = divergence_matrix(mesh);
    sys.A.resize(mesh.num_elements() * sys.dim);
    for (Eigen::Index e = 0; e < mesh.num_elements(); ++e) {
        sys.A.segment(e * sys.dim, sys.dim).setConstant(measures.element_volumes[e]);
    }
    sys.M.resize(mesh.num_vertices() * sys.mandel);
    for (Eigen::Index v = 0; v < mesh.num_vertices(); ++v) {
        sys.M.segment(v * sys.mandel, sys.mandel).setConstant(measures.dual_volumes[v]);
    }
    sys.M_T = energy_block_matrix(field, measures, epsilon);
    sys.B = boundary_constraint_matrix(mesh, measures, bc);
    return sys;
}

Eigen::MatrixXd project_constraints(const Eigen::MatrixXd& Mbar, const Eigen::MatrixXd& B, bool* singular)
{
    const Eigen::MatrixXd MBt = Mbar * B.transpose();
    bool dropped = false;
    const Eigen::MatrixXd S_inv = pseudo_inverse(B * MBt, dropped);
    if (singular) *singular = dropped;
    return Mbar - MBt * S_inv * MBt.transpose();
}

std::vector<Eigen::MatrixXd> projected_blocks(const SimplicialMesh& mesh, const FrameField& field, double epsilon,
                                              BcKind bc, int* singular_blocks)
{
    field.require_compatible(mesh);
    const MeshMeasures measures = compute_measures(mesh);
    auto blocks = modified_forms(field, epsilon);
    int singular_count = 0;
    for (Eigen::Index v = 0; v < mesh.num_vertices(); ++v) {
        Eigen::MatrixXd& P = blocks[static_cast<size_t>(v)];
        P /= measures.dual_volumes[v];
        const int b = mesh.boundary_index(v);
        if (b < 0) continue;
        bool singular = false;
        P = project_constraints(P, vertex_constraint_block(measures, b, mesh.dim(), bc), &singular);
        if (singular) ++singular_count;
    }
    if (singular_blocks) *singular_blocks = singular_count;
    return blocks;
}

AssembledOperator assemble_operator(const SimplicialMesh& mesh, const FrameField& field, double epsilon, BcKind bc)
{
    field.require_compatible(mesh);
    require_epsilon(epsilon);
    const int dim = mesh.dim();
    const MeshMeasures measures = compute_measures(mesh);
    int singular_blocks = 0;
    const auto blocks = projected_blocks(mesh, field, epsilon, bc, &singular_blocks);

    AssembledOperator op;
    const SparseMatrix C = coupling_matrix(mesh, measures);
    const SparseMatrix PC = block_diagonal(blocks, mandel_size(dim)) * C;
    op.A = symmetrized(SparseMatrix(C.transpose()) * PC);
    op.mass = measures.dual_volumes;
    op.bc = bc;
    op.epsilon = epsilon;
    op.field_fingerprint = field_fingerprint(field);
    if (singular_blocks > 0) {
        op.warnings.push_back(std::to_string(singular_blocks) +
                              " singular boundary constraint block(s) inverted by pseudoinverse");
    }
    return op;
}

SparseMatrix assemble_natural_shortcut(const SimplicialMesh& mesh, const FrameField& field, double epsilon)
{
    field.require_compatible(mesh);
    const int m = mandel_size(mesh.dim());
    const MeshMeasures measures = compute_measures(mesh);
    const auto forms = modified_forms(field, epsilon);

    std::vector<int> rows;
    std::vector<int> all_vertices(static_cast<size_t>(mesh.num_vertices()));
    std::vector<Eigen::MatrixXd> blocks;
    for (Eigen::Index v = 0; v < mesh.num_vertices(); ++v) {
        all_vertices[static_cast<size_t>(v)] = static_cast<int>(v);
        if (mesh.is_boundary(v)) continue;
        for (int a = 0; a < m; ++a) rows.push_back(static_cast<int>(v) * m + a);
        blocks.push_back(forms[static_cast<size_t>(v)] / measures.dual_volumes[v]);
    }
    const SparseMatrix C = submatrix(coupling_matrix(mesh, measures), rows, all_vertices);
    const SparseMatrix PC = block_diagonal(blocks, m) * C;
    return symmetrized(SparseMatrix(C.transpose()) * PC);
}

Eigen::VectorXd apply_dirichlet_partition(const AssembledOperator& op, const SimplicialMesh& mesh,
                                          const Eigen::VectorXd& boundary_values, const SolveOptions& options)
{
    if (op.bc != BcKind::Neumann) {
        throw InvalidArgument("the Dirichlet problem requires an operator assembled with neumann constraints");
    }
    if (op.A.rows() != mesh.num_vertices()) throw InvalidArgument("operator does not match the mesh");
    const auto& boundary = mesh.boundary_vertices();
    if (boundary_values.size() != static_cast<Eigen::Index>(boundary.size())) {
        throw InvalidArgument("expected " + std::to_string(boundary.size()) + " boundary values, got " +
                              std::to_string(boundary_values.size()));
    }

    Eigen::VectorXd u = Eigen::VectorXd::Zero(mesh.num_vertices());
    std::vector<int> interior;
    for (Eigen::Index v = 0; v < mesh.num_vertices(); ++v) {
        if (!mesh.is_boundary(v)) interior.push_back(static_cast<int>(v));
    }
    for (size_t b = 0; b < boundary.size(); ++b) u[boundary[b]] = boundary_values[static_cast<Eigen::Index>(b)];
    if (interior.empty()) return u;

    const SparseMatrix A_ii = submatrix(op.A, interior, interior);
    const SparseMatrix A_ib = submatrix(op.A, interior, boundary);
    const Eigen::VectorXd rhs = -(A_ib * boundary_values);
    SolveResult result;
    try {
        result = solve_spd(SparseSym(A_ii, 1e-10), rhs, {}, options);
    } catch (const NumericalError& e) {
        throw NumericalError(std::string("interior block of the Dirichlet problem is singular: ") + e.what());
    }
    for (size_t i = 0; i < interior.size(); ++i) u[interior[i]] = result.x[static_cast<Eigen::Index>(i)];
    return u;
}

Eigen::VectorXd diffuse(const AssembledOperator& op, const Eigen::VectorXd& u0, double tau, const SolveOptions& options)
{
    return diffuse(SparseSym(op.A, 1e-10), op.mass, u0, tau, options);
}

} // namespace ffop
