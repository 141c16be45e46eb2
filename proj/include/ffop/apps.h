#pragma once

#include <ffop/fem.h>
#include <ffop/mesh.h>
#include <ffop/solve.h>

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace ffop {

/// Modes with eigenvalue above rel * (largest computed eigenvalue), ascending.
std::vector<int> nonzero_modes(const Eigen::VectorXd& eigenvalues, double rel = 1e-8);

///
/// Spectral embedding v -> (phi_k(v) / lambda_k)_k over the first N nonzero
/// modes; Euclidean distance in it is the frame field operator distance.
///
struct SpectralEmbedding
{
    /// #vertices x N.
    Eigen::MatrixXd coordinates;
    Eigen::VectorXd eigenvalues;
    int discarded_zero_modes = 0;
    std::uint64_t field_fingerprint = 0;

    int size() const { return static_cast<int>(coordinates.cols()); }
};

///
/// Computes N + dim + 1 eigenpairs (enough to cover the affine nullspace),
/// discards the zero modes and keeps the first N of the rest.
///
SpectralEmbedding build_embedding(const AssembledOperator& op, int dim, int N, const EigenOptions& options = {});

/// The same construction on the Bilaplacian (identity tensor, Neumann constraints).
SpectralEmbedding biharmonic_embedding(const SimplicialMesh& mesh, int N, const EigenOptions& options = {});

/// d(source, v) for every vertex.
Eigen::VectorXd distance_field(const SpectralEmbedding& emb, Eigen::Index source);

double embedding_distance(const SpectralEmbedding& emb, Eigen::Index p, Eigen::Index q);

///
/// Greedy descent over the vertex graph: step to the 1-ring neighbor with the
/// largest decrease of `dist` per unit edge length until no neighbor decreases it.
///
/// Returns the visited vertices, starting with `start`.
///
std::vector<int> trace_descent_path(const SimplicialMesh& mesh, const Eigen::VectorXd& dist, int start);

struct ColoringResult
{
    /// #vertices x channels, within each channel's boundary range.
    Eigen::MatrixXd colors;
    std::vector<BoxQPResult> channels;
};

///
/// Per channel: minimize 1/2 c^T A c with boundary vertices fixed to
/// `boundary_colors` (rows follow boundary_vertices()) and every value boxed
/// to the channel's boundary range.
///
ColoringResult color_by_boundary(const AssembledOperator& op, const SimplicialMesh& mesh,
                                 const Eigen::MatrixXd& boundary_colors, const BoxQPOptions& options = {});

} // namespace ffop
