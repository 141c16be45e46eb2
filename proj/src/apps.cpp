#include <ffop/apps.h>
#include <ffop/error.h>

#include <algorithm>
#include <cmath>

namespace ffop {

std::vector<int> nonzero_modes(const Eigen::VectorXd& eigenvalues, double rel)
{
    std::vector<int> out;
    if (eigenvalues.size() == 0) return out;
    const double threshold = rel * eigenvalues.maxCoeff();
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
        if (eigenvalues[i] > threshold) out.push_back(static_cast<int>(i));
    }
    return out;
}

SpectralEmbedding build_embedding(const AssembledOperator& op, int dim, int N, const EigenOptions& options)
{
    if (N < 1) throw InvalidArgument("embedding needs at least one mode");
    const Eigen::Index n = op.A.rows();
    const int k = static_cast<int>(std::min<Eigen::Index>(N + dim + 1, n - 1));
    const EigenResult eig = eigs_generalized(SparseSym(op.A, 1e-10), op.mass, k, options);
    std::vector<int> keep = nonzero_modes(eig.eigenvalues);

    SpectralEmbedding emb;
    emb.discarded_zero_modes = k - static_cast<int>(keep.size());
    if (static_cast<int>(keep.size()) > N) keep.resize(static_cast<size_t>(N));
    emb.coordinates.resize(n, static_cast<Eigen::Index>(keep.size()));
    emb.eigenvalues.resize(static_cast<Eigen::Index>(keep.size()));
    for (size_t j = 0; j < keep.size(); ++j) {
        const auto col = static_cast<Eigen::Index>(j);
        emb.eigenvalues[col] = eig.eigenvalues[keep[j]];
        emb.coordinates.col(col) = eig.eigenvectors.col(keep[j]) / eig.eigenvalues[keep[j]];
    }
    emb.field_fingerprint = op.field_fingerprint;
    return emb;
}

SpectralEmbedding biharmonic_embedding(const SimplicialMesh& mesh, int N, const EigenOptions& options)
{
    const FrameField identity = constant_field(mesh, OdecoFrame::axis_aligned(mesh.dim()));
    return build_embedding(assemble_operator(mesh, identity, 1.0, BcKind::Neumann), mesh.dim(), N, options);
}

Eigen::VectorXd distance_field(const SpectralEmbedding& emb, Eigen::Index source)
{
    if (source < 0 || source >= emb.coordinates.rows()) throw InvalidArgument("source vertex out of range");
    return (emb.coordinates.rowwise() - emb.coordinates.row(source)).rowwise().norm();
}

double embedding_distance(const SpectralEmbedding& emb, Eigen::Index p, Eigen::Index q)
{
    return (emb.coordinates.row(p) - emb.coordinates.row(q)).norm();
}

std::vector<int> trace_descent_path(const SimplicialMesh& mesh, const Eigen::VectorXd& dist, int start)
{
    if (dist.size() != mesh.num_vertices()) throw InvalidArgument("distance field does not match the mesh");
    if (start < 0 || start >= mesh.num_vertices()) throw InvalidArgument("start vertex out of range");
    const auto neighbors = mesh.vertex_neighbors();
    if (neighbors[static_cast<size_t>(start)].empty()) throw InvalidArgument("start vertex is isolated");

    std::vector<int> path{start};
    int current = start;
    while (true) {
        int next = -1;
        double best_rate = 0;
        for (int u : neighbors[static_cast<size_t>(current)]) {
            const double drop = dist[current] - dist[u];
            if (!(drop > 0)) continue;
            const double rate = drop / (mesh.vertex(u) - mesh.vertex(current)).norm();
            if (rate > best_rate) {
                best_rate = rate;
                next = u;
            }
        }
        if (next < 0) break;
        path.push_back(next);
        current = next;
    }
    return path;
}

ColoringResult color_by_boundary(const AssembledOperator& op, const SimplicialMesh& mesh,
                                 const Eigen::MatrixXd& boundary_colors, const BoxQPOptions& options)
{
    const auto& boundary = mesh.boundary_vertices();
    if (boundary_colors.rows() != static_cast<Eigen::Index>(boundary.size())) {
        throw InvalidArgument("expected one color per boundary vertex (" + std::to_string(boundary.size()) + ")");
    }
    if (op.A.rows() != mesh.num_vertices()) throw InvalidArgument("operator does not match the mesh");
    if (boundary_colors.size() > 0 && !(boundary_colors.minCoeff() >= 0 && boundary_colors.maxCoeff() <= 1)) {
        throw InvalidArgument("colors must lie in [0, 1]");
    }

    const Eigen::Index n = mesh.num_vertices();
    const SparseSym A(op.A, 1e-10);
    ColoringResult out;
    out.colors.resize(n, boundary_colors.cols());
    for (Eigen::Index c = 0; c < boundary_colors.cols(); ++c) {
        const Eigen::VectorXd values = boundary_colors.col(c);
        const Eigen::VectorXd lower = Eigen::VectorXd::Constant(n, values.minCoeff());
        const Eigen::VectorXd upper = Eigen::VectorXd::Constant(n, values.maxCoeff());
        BoxQPResult r = solve_box_qp(A, boundary, values, lower, upper, options);
        out.colors.col(c) = r.x;
        out.channels.push_back(std::move(r));
    }
    return out;
}

} // namespace ffop
