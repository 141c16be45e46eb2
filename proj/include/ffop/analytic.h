#pragma once

#include <ffop/fem.h>
#include <ffop/mesh.h>
#include <ffop/solve.h>

#include <Eigen/Core>

#include <string>
#include <vector>

namespace ffop {

///
/// Spectrum of 2 u_xxyy + eps (u_xxxx + u_yyyy) on [-1, 1]^2 over the cosine
/// lattice omega = (pi / 2) (a, b), a, b >= 0.
///
struct SquareSpectrum
{
    struct Mode
    {
        int a = 0;
        int b = 0;
        double eigenvalue = 0;
    };

    double epsilon = 1;
    /// Ascending by eigenvalue, then (a, b); (a, b) and (b, a) both listed.
    std::vector<Mode> modes;

    Eigen::VectorXd eigenvalues() const;
};

/// Lattice eigenvalue 2 w_a^2 w_b^2 + eps (w_a^4 + w_b^4), w_k = k pi / 2.
double square_lattice_eigenvalue(int a, int b, double epsilon);

/// The `count` smallest lattice eigenvalues (including the zero mode).
SquareSpectrum square_spectrum(double epsilon, int count);

enum class WarpKind { Polynomial, Exponential };

std::string to_string(WarpKind kind);
WarpKind warp_kind_from_string(const std::string& name);

///
/// Closed-form planar conformal map.
///
/// Polynomial: z + c z^2. Exponential: (exp(c z) - 1) / c, the identity for c = 0.
///
struct ConformalMap
{
    WarpKind kind = WarpKind::Polynomial;
    double c = 0;

    Eigen::Vector2d operator()(const Eigen::Vector2d& x) const;
    Eigen::Matrix2d jacobian(const Eigen::Vector2d& x) const;
    Eigen::Matrix2d inverse_jacobian(const Eigen::Vector2d& x) const;
};

///
/// Build a map and check it on `mesh`: the polynomial map needs |2 c z| < 1
/// at every vertex of a convex domain, the exponential map needs |c| times the
/// domain height below 2 pi, and every warped element must keep its
/// orientation. Throws InvalidArgument otherwise.
///
ConformalMap conformal_warp(WarpKind kind, double c, const SimplicialMesh& mesh);

/// Mesh with the same connectivity and vertices moved by `f`.
SimplicialMesh warp_mesh(const SimplicialMesh& mesh, const ConformalMap& f);

///
/// Coframe field on the warped mesh: the map from the warped domain back to
/// the base has inverse Jacobian df, evaluated at the base vertex.
///
FrameField warped_coframe_field(const SimplicialMesh& base, const ConformalMap& f);

struct WarpResult
{
    SimplicialMesh warped_mesh;
    EigenResult unwarped;
    EigenResult warped;
};

///
/// Constant-field operator on `base` against the coframe operator on f(base),
/// k smallest eigenpairs of each. Both meshes share vertex indexing, so the
/// base eigenvectors index the warped mesh directly.
///
WarpResult warp_experiment(const SimplicialMesh& base, const ConformalMap& f, double epsilon, int k, BcKind bc,
                           const EigenOptions& options = {});

} // namespace ffop
