#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <utility>
#include <vector>

namespace ffop {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

///
/// Triangle (dim = 2) or tetrahedral (dim = 3) mesh of a flat domain.
///
/// Elements are stored with positive orientation; boundary facets are the
/// facets incident to exactly one element, oriented so their normal points
/// out of the domain. Instances are validated on construction and immutable
/// afterwards.
///
class SimplicialMesh
{
public:
    SimplicialMesh() = default;

    ///
    /// Validate and build a mesh from #V x dim positions and #E x (dim+1) indices.
    ///
    /// Throws GeometryError on out-of-range indices, duplicate elements,
    /// non-positive element volume, facets shared by more than two elements
    /// or vertices not referenced by any element.
    ///
    static SimplicialMesh create(Eigen::MatrixXd vertices, Eigen::MatrixXi elements);

    int dim() const { return m_dim; }
    Eigen::Index num_vertices() const { return m_vertices.rows(); }
    Eigen::Index num_elements() const { return m_elements.rows(); }
    Eigen::Index num_boundary_facets() const { return m_boundary_facets.rows(); }

    const Eigen::MatrixXd& vertices() const { return m_vertices; }
    const Eigen::MatrixXi& elements() const { return m_elements; }
    const Eigen::MatrixXi& boundary_facets() const { return m_boundary_facets; }

    Eigen::VectorXd vertex(Eigen::Index v) const { return m_vertices.row(v).transpose(); }

    /// Sorted list of vertices touched by a boundary facet.
    const std::vector<int>& boundary_vertices() const { return m_boundary_vertices; }

    /// Position of `v` in boundary_vertices(), or -1 for interior vertices.
    int boundary_index(Eigen::Index v) const { return m_boundary_index[v]; }
    bool is_boundary(Eigen::Index v) const { return m_boundary_index[v] >= 0; }

    /// Unique undirected edges (i < j), sorted lexicographically.
    std::vector<std::pair<int, int>> edges() const;

    /// Sorted 1-ring vertex neighbors of each vertex.
    std::vector<std::vector<int>> vertex_neighbors() const;

    /// Signed measure (area / volume) of element `e`.
    double signed_volume(Eigen::Index e) const;

private:
    int m_dim = 0;
    Eigen::MatrixXd m_vertices;
    Eigen::MatrixXi m_elements;
    Eigen::MatrixXi m_boundary_facets;
    std::vector<int> m_boundary_vertices;
    std::vector<int> m_boundary_index;
};

///
/// Per-element and per-vertex measures derived from a mesh.
///
/// Boundary quantities are indexed by position in
/// SimplicialMesh::boundary_vertices().
///
struct MeshMeasures
{
    Eigen::VectorXd element_volumes;
    /// Barycentric lumping: sum of incident element volumes / (dim + 1).
    Eigen::VectorXd dual_volumes;
    /// #boundary x dim unit outward normals.
    Eigen::MatrixXd boundary_normals;
    /// Per boundary vertex, a dim x (dim-1) orthonormal basis of the tangent space.
    std::vector<Eigen::MatrixXd> boundary_tangents;
    /// Lumped boundary facet measure per boundary vertex.
    Eigen::VectorXd boundary_areas;

    double total_volume() const { return element_volumes.sum(); }
};

MeshMeasures compute_measures(const SimplicialMesh& mesh);

/// Gradients of the dim+1 barycentric hat functions of element `e`, as columns.
Eigen::MatrixXd element_shape_gradients(const SimplicialMesh& mesh, Eigen::Index e);

///
/// Piecewise-linear gradient operator.
///
/// Maps per-vertex scalars to per-element constant gradients; row
/// `e * dim + k` holds the k-th gradient component on element e.
///
SparseMatrix gradient_matrix(const SimplicialMesh& mesh);

/// Standard P1 stiffness matrix G^T A G (positive semidefinite).
SparseMatrix stiffness_matrix(const SimplicialMesh& mesh);

///
/// Uniform midpoint refinement: 1-to-4 for triangles, 1-to-8 for tetrahedra.
///
/// Coarse vertices keep their indices and positions; midpoints are appended.
/// The central octahedron of each tetrahedron is split along its shortest
/// diagonal.
///
SimplicialMesh refine_uniform(const SimplicialMesh& mesh);

double mean_edge_length(const SimplicialMesh& mesh);

///
/// Point location by bucketing element bounding boxes.
///
class PointLocator
{
public:
    struct Location
    {
        Eigen::Index element = -1;
        /// Barycentric coordinates w.r.t. the element's vertices, in element order.
        Eigen::VectorXd barycentric;
        /// Most negative barycentric coordinate; >= -tol means inside.
        double min_coordinate = 0;
    };

    explicit PointLocator(const SimplicialMesh& mesh);

    /// Containing element, or the element closest to containing `p` among the
    /// candidates of the nearest populated bucket.
    Location locate(const Eigen::VectorXd& p) const;

private:
    Eigen::VectorXd barycentric(Eigen::Index e, const Eigen::VectorXd& p) const;
    Eigen::Index bucket_of(const Eigen::VectorXd& p) const;

    const SimplicialMesh* m_mesh;
    Eigen::VectorXd m_lo;
    Eigen::VectorXd m_cell;
    std::array<int, 3> m_res{1, 1, 1};
    std::vector<std::vector<int>> m_buckets;
};

} // namespace ffop
