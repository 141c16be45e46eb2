#include <ffop/analytic.h>
#include <ffop/error.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace ffop {

namespace {

using Complex = std::complex<double>;

Complex as_complex(const Eigen::Vector2d& x)
{
    return {x.x(), x.y()};
}

// Jacobian of a holomorphic map with derivative g, as a 2x2 real matrix.
Eigen::Matrix2d holomorphic_jacobian(Complex g)
{
    Eigen::Matrix2d J;
    J << g.real(), -g.imag(), g.imag(), g.real();
    return J;
}

Complex derivative(const ConformalMap& f, Complex z)
{
    if (f.kind == WarpKind::Polynomial) return 1.0 + 2.0 * f.c * z;
    return std::exp(f.c * z);
}

} // namespace

Eigen::VectorXd SquareSpectrum::eigenvalues() const
{
    Eigen::VectorXd out(static_cast<Eigen::Index>(modes.size()));
    for (size_t i = 0; i < modes.size(); ++i) out[static_cast<Eigen::Index>(i)] = modes[i].eigenvalue;
    return out;
}

double square_lattice_eigenvalue(int a, int b, double epsilon)
{
    const double wa = a * std::numbers::pi / 2;
    const double wb = b * std::numbers::pi / 2;
    const double wa2 = wa * wa;
    const double wb2 = wb * wb;
    return 2 * wa2 * wb2 + epsilon * (wa2 * wa2 + wb2 * wb2);
}

SquareSpectrum square_spectrum(double epsilon, int count)
{
    if (!(epsilon > 0 && epsilon <= 1)) {
        throw InvalidArgument("epsilon must lie in (0, 1], got " + std::to_string(epsilon));
    }
    if (count < 1) throw InvalidArgument("square_spectrum: count must be positive");

    SquareSpectrum out;
    out.epsilon = epsilon;
    // Every mode outside [0, R]^2 has max(a, b) > R, hence eigenvalue >= eps w_{R+1}^4.
    for (int R = 4;; R *= 2) {
        std::vector<SquareSpectrum::Mode> modes;
        for (int a = 0; a <= R; ++a) {
            for (int b = 0; b <= R; ++b) modes.push_back({a, b, square_lattice_eigenvalue(a, b, epsilon)});
        }
        std::sort(modes.begin(), modes.end(), [](const auto& x, const auto& y) {
            if (x.eigenvalue != y.eigenvalue) return x.eigenvalue < y.eigenvalue;
            return x.a != y.a ? x.a < y.a : x.b < y.b;
        });
        if (static_cast<int>(modes.size()) < count) continue;
        const double outside = square_lattice_eigenvalue(R + 1, 0, epsilon);
        if (modes[static_cast<size_t>(count - 1)].eigenvalue < outside) {
            modes.resize(static_cast<size_t>(count));
            out.modes = std::move(modes);
            return out;
        }
    }
}

std::string to_string(WarpKind kind)
{
    return kind == WarpKind::Polynomial ? "poly" : "exp";
}

WarpKind warp_kind_from_string(const std::string& name)
{
    if (name == "poly" || name == "polynomial") return WarpKind::Polynomial;
    if (name == "exp" || name == "exponential") return WarpKind::Exponential;
    throw InvalidArgument("unknown map '" + name + "' (expected poly or exp)");
}

Eigen::Vector2d ConformalMap::operator()(const Eigen::Vector2d& x) const
{
    const Complex z = as_complex(x);
    Complex w;
    if (kind == WarpKind::Polynomial) {
        w = z + c * z * z;
    } else {
        w = c == 0 ? z : (std::exp(c * z) - 1.0) / c;
    }
    return {w.real(), w.imag()};
}

Eigen::Matrix2d ConformalMap::jacobian(const Eigen::Vector2d& x) const
{
    return holomorphic_jacobian(derivative(*this, as_complex(x)));
}

Eigen::Matrix2d ConformalMap::inverse_jacobian(const Eigen::Vector2d& x) const
{
    return holomorphic_jacobian(1.0 / derivative(*this, as_complex(x)));
}

ConformalMap conformal_warp(WarpKind kind, double c, const SimplicialMesh& mesh)
{
    if (mesh.dim() != 2) throw InvalidArgument("conformal warps act on planar meshes");
    if (!std::isfinite(c)) throw InvalidArgument("map parameter must be finite");
    const ConformalMap f{kind, c};
    const Eigen::MatrixXd& V = mesh.vertices();
    if (kind == WarpKind::Polynomial) {
        const double reach = 2 * std::abs(c) * V.rowwise().norm().maxCoeff();
        if (!(reach < 1)) {
            throw InvalidArgument("polynomial map is not injective on this domain (max |2 c z| = " +
                                  std::to_string(reach) + ")");
        }
    } else {
        const double height = V.col(1).maxCoeff() - V.col(1).minCoeff();
        if (!(std::abs(c) * height < 2 * std::numbers::pi)) {
            throw InvalidArgument("exponential map wraps around: |c| * height must stay below 2 pi");
        }
    }
    try {
        warp_mesh(mesh, f);
    } catch (const GeometryError& e) {
        throw InvalidArgument(std::string("map folds the mesh: ") + e.what());
    }
    return f;
}

SimplicialMesh warp_mesh(const SimplicialMesh& mesh, const ConformalMap& f)
{
    Eigen::MatrixXd V = mesh.vertices();
    for (Eigen::Index v = 0; v < V.rows(); ++v) V.row(v) = f(V.row(v).transpose()).transpose();
    return SimplicialMesh::create(std::move(V), mesh.elements());
}

FrameField warped_coframe_field(const SimplicialMesh& base, const ConformalMap& f)
{
    return map_coframe_field(
        base, [&](Eigen::Index v) -> Eigen::MatrixXd { return f.jacobian(base.vertex(v)); },
        CoframeRequirement::Conformal);
}

WarpResult warp_experiment(const SimplicialMesh& base, const ConformalMap& f, double epsilon, int k, BcKind bc,
                           const EigenOptions& options)
{
    WarpResult out;
    out.warped_mesh = warp_mesh(base, f);

    const FrameField constant = constant_field(base, OdecoFrame::axis_aligned(2));
    const AssembledOperator base_op = assemble_operator(base, constant, epsilon, bc);
    out.unwarped = eigs_generalized(SparseSym(base_op.A, 1e-10), base_op.mass, k, options);

    const FrameField coframe = warped_coframe_field(base, f);
    const AssembledOperator warped_op = assemble_operator(out.warped_mesh, coframe, epsilon, bc);
    out.warped = eigs_generalized(SparseSym(warped_op.A, 1e-10), warped_op.mass, k, options);
    return out;
}

} // namespace ffop
