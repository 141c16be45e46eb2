#pragma once

#include <ffop/mesh.h>
#include <ffop/symtensor.h>

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace ffop {

enum class FieldKind { Octahedral, ConformalOctahedral, Odeco };

std::string to_string(FieldKind kind);

///
/// Per-vertex symmetric frame field with cached tensors and norms.
///
class FrameField
{
public:
    FrameField() = default;

    ///
    /// Build from per-vertex frames; the kind is inferred (all weights 1 ->
    /// octahedral, equal weights per vertex -> conformal octahedral, else odeco).
    ///
    static FrameField from_frames(std::vector<OdecoFrame> frames);

    int dim() const { return m_dim; }
    Eigen::Index num_vertices() const { return static_cast<Eigen::Index>(m_frames.size()); }
    FieldKind kind() const { return m_kind; }

    const OdecoFrame& frame(Eigen::Index v) const { return m_frames[static_cast<size_t>(v)]; }
    const Sym4Form& form(Eigen::Index v) const { return m_forms[static_cast<size_t>(v)]; }
    double norm(Eigen::Index v) const { return m_norms[static_cast<size_t>(v)]; }
    const std::vector<OdecoFrame>& frames() const { return m_frames; }

    /// Vertices where a generator could not determine a direction.
    const std::vector<int>& singular_vertices() const { return m_singular; }
    void set_singular_vertices(std::vector<int> singular) { m_singular = std::move(singular); }

    /// Throws InvalidArgument if the field does not live on `mesh`.
    void require_compatible(const SimplicialMesh& mesh) const;

private:
    int m_dim = 0;
    FieldKind m_kind = FieldKind::Octahedral;
    std::vector<OdecoFrame> m_frames;
    std::vector<Sym4Form> m_forms;
    std::vector<double> m_norms;
    std::vector<int> m_singular;
};

FrameField constant_field(const SimplicialMesh& mesh, const OdecoFrame& frame);

///
/// Boundary-aligned cross field on a planar mesh.
///
/// Boundary vertices take the measure-weighted average of their facets'
/// (cos 4 theta, sin 4 theta) tangent representation; the interior is the
/// piecewise-linear harmonic extension, normalized per vertex. Vertices whose
/// extension has magnitude below 1e-6 are reported as singular and get angle 0.
///
FrameField harmonic_cross_field_2d(const SimplicialMesh& mesh);

/// (cos 4 theta, sin 4 theta) of every vertex of a 2D field (rows).
Eigen::MatrixXd cross_representation(const FrameField& field);

///
/// Rotation about `axis` by pitch * (x . axis) applied to the frame that maps
/// e3 onto `axis` (the identity when axis = e3).
///
FrameField helical_field_3d(const SimplicialMesh& mesh, const Eigen::Vector3d& axis, double pitch);

enum class CoframeRequirement { Any, Conformal };

///
/// Map coframe field: at every vertex the components are the normalized
/// columns of the map's inverse Jacobian and the weights their norms^4.
///
/// Throws InvalidArgument for singular Jacobians, for columns that are not
/// orthogonal within 1e-6, or (when `requirement` is Conformal) for columns
/// whose norms differ by more than 1e-6 relative.
///
FrameField map_coframe_field(const SimplicialMesh& mesh,
                             const std::function<Eigen::MatrixXd(Eigen::Index)>& inverse_jacobian_at_vertex,
                             CoframeRequirement requirement = CoframeRequirement::Any);

///
/// Per boundary vertex, || nn^T : T - w nn^T ||_F / max(||T||, 1e-12) with
/// w = n^T (nn^T : T) n.
///
Eigen::VectorXd check_boundary_alignment(const FrameField& field, const SimplicialMesh& mesh,
                                         const MeshMeasures& measures);

///
/// Transfer a field from `fine` to the vertices of `coarse`.
///
/// 2D: barycentric interpolation of the 4-theta representation, renormalized.
/// 3D: frame of the nearest vertex of the containing fine element, then (for
/// vertices not coinciding with a fine vertex) one pass of quaternion
/// averaging over the coarse 1-ring with symmetry matching. Output is octahedral.
///
FrameField resample_field(const FrameField& field, const SimplicialMesh& fine, const SimplicialMesh& coarse);

/// CSV field file: 2D rows `theta,w1,w2`, 3D rows `qw,qx,qy,qz,w1,w2,w3`, with that header line.
void write_field_csv(const FrameField& field, std::ostream& out);
void save_field(const FrameField& field, const std::filesystem::path& path);
FrameField read_field_csv(std::istream& in, int dim);
FrameField load_field(const std::filesystem::path& path, int dim);

/// Per-vertex tensor dump: `dim,q00,q01,...` with the upper triangle of q in row-major order.
void write_forms_csv(const std::vector<Sym4Form>& forms, std::ostream& out);
std::vector<Sym4Form> read_forms_csv(std::istream& in);

/// FNV-1a hash of the serialized field.
std::uint64_t field_fingerprint(const FrameField& field);

} // namespace ffop
