#pragma once

#include <ffop/framefield.h>
#include <ffop/mesh.h>
#include <ffop/solve.h>

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace ffop {

enum class BcKind { Natural, Neumann };

std::string to_string(BcKind kind);
/// Parses "natural" or "neumann"; throws InvalidArgument otherwise.
BcKind bc_kind_from_string(const std::string& name);

///
/// Tensor divergence of per-vertex Mandel fields.
///
/// Row e * dim + j, column v * m + a: (div L)_j = sum_i d_i L_ij on element e,
/// with the off-diagonal Mandel coordinates unscaled by 1/sqrt2.
///
SparseMatrix divergence_matrix(const SimplicialMesh& mesh);

/// Block-diagonal M_Teps with block(v) = dual_volume(v) * Q^eps(v).
SparseMatrix energy_block_matrix(const FrameField& field, const MeshMeasures& measures, double epsilon);

/// Q^eps(v) for every vertex.
std::vector<Eigen::MatrixXd> modified_forms(const FrameField& field, double epsilon);

///
/// Boundary multiplier constraints.
///
/// Neumann: one row Mandel(sym(t n^T)) per boundary vertex and tangent t.
/// Natural: the m identity rows of every boundary vertex.
/// Rows are ordered by boundary vertex, then by tangent / coordinate.
///
SparseMatrix boundary_constraint_matrix(const SimplicialMesh& mesh, const MeshMeasures& measures, BcKind bc);

/// Constraint rows of a single boundary vertex (index into boundary_vertices()).
Eigen::MatrixXd vertex_constraint_block(const MeshMeasures& measures, int boundary_position, int dim, BcKind bc);

///
/// All matrices of the mixed discretization.
///
/// Diagonal matrices are stored as vectors.
///
struct MixedSystem
{
    int dim = 0;
    int mandel = 0;
    BcKind bc = BcKind::Neumann;
    SparseMatrix G;
    SparseMatrix D;
    /// Element volumes, each repeated dim times.
    Eigen::VectorXd A;
    /// Dual volumes, each repeated `mandel` times.
    Eigen::VectorXd M;
    SparseMatrix M_T;
    SparseMatrix B;
};

MixedSystem assemble_mixed_system(const SimplicialMesh& mesh, const FrameField& field, double epsilon, BcKind bc);

///
/// Mbar - Mbar B^T (B Mbar B^T)^+ B Mbar for one vertex block with constraint rows `B`.
///
/// `singular` (if given) is set when the pseudoinverse dropped an eigenvalue
/// below 1e-12 * max eigenvalue.
///
Eigen::MatrixXd project_constraints(const Eigen::MatrixXd& Mbar, const Eigen::MatrixXd& B, bool* singular = nullptr);

///
/// Per-vertex middle blocks P_v of the operator: Q^eps(v) / dual_volume(v),
/// projected with the vertex's constraint rows on the boundary.
///
std::vector<Eigen::MatrixXd> projected_blocks(const SimplicialMesh& mesh, const FrameField& field, double epsilon,
                                              BcKind bc, int* singular_blocks = nullptr);

///
/// The discrete operator with its lumped vertex mass.
///
struct AssembledOperator
{
    SparseMatrix A;
    Eigen::VectorXd mass;
    BcKind bc = BcKind::Neumann;
    double epsilon = 1;
    std::uint64_t field_fingerprint = 0;
    std::vector<std::string> warnings;
};

///
/// Frame field operator C^T P C with C = D^T A G and P the per-vertex
/// projection of Q^eps / dual_volume onto the constraint complement.
///
/// Singular constraint blocks (zero-weight boundary vertices) are inverted by
/// pseudoinverse with cutoff 1e-12 * max eigenvalue and reported in `warnings`.
///
AssembledOperator assemble_operator(const SimplicialMesh& mesh, const FrameField& field, double epsilon, BcKind bc);

///
/// Natural boundary conditions by deleting the boundary multiplier columns;
/// produces the same matrix as assemble_operator(..., BcKind::Natural).
///
SparseMatrix assemble_natural_shortcut(const SimplicialMesh& mesh, const FrameField& field, double epsilon);

///
/// Clamped boundary value problem: u = boundary_values on the boundary, with
/// the weak Neumann constraint supplying the normal derivative condition.
///
/// Solves A_II u_I = -A_IB u_B. Throws InvalidArgument unless the operator
/// uses Neumann constraints, NumericalError if the interior block is singular.
///
Eigen::VectorXd apply_dirichlet_partition(const AssembledOperator& op, const SimplicialMesh& mesh,
                                          const Eigen::VectorXd& boundary_values, const SolveOptions& options = {});

/// One implicit diffusion step with the operator's own mass.
Eigen::VectorXd diffuse(const AssembledOperator& op, const Eigen::VectorXd& u0, double tau,
                        const SolveOptions& options = {});

} // namespace ffop
