#pragma once

#include <ffop/analytic.h>
#include <ffop/fem.h>
#include <ffop/framefield.h>
#include <ffop/mesh.h>
#include <ffop/solve.h>

#include <Eigen/Core>

#include <string>
#include <vector>

namespace ffop {

/// Zero modes of the operator: constants (Neumann) or affine functions (natural).
int expected_zero_modes(BcKind bc, int dim);

///
/// The first `count` nonzero generalized eigenvalues, computed with enough
/// extra pairs to cover the nullspace.
///
Eigen::VectorXd nonzero_eigenvalues(const AssembledOperator& op, int dim, int count, const EigenOptions& options = {});

/// Nested hierarchy: `base` followed by `levels` uniform refinements (coarsest first).
std::vector<SimplicialMesh> refinement_hierarchy(const SimplicialMesh& base, int levels);

///
/// Field built on the finest mesh and resampled to every level (coarsest first).
///
std::vector<FrameField> resampled_fields(const std::vector<SimplicialMesh>& hierarchy, const FrameField& finest);

/// True if every consecutive entry strictly decreases.
bool strictly_decreasing(const std::vector<double>& values);

struct SquareSpectrumStudy
{
    struct Level
    {
        int cells = 0;
        double mean_edge = 0;
        Eigen::VectorXd discrete;
    };

    double epsilon = 1;
    BcKind bc = BcKind::Neumann;
    Eigen::VectorXd analytic;
    std::vector<Level> levels;

    /// |discrete - analytic| per level (rows) and mode (columns).
    Eigen::MatrixXd absolute_errors() const;
    /// Fraction of modes whose error strictly decreases across all levels.
    double monotone_fraction() const;
    /// Largest relative error of the first `modes` modes at the finest level.
    double finest_relative_error(int modes) const;
};

///
/// Constant axis-aligned field on make_square(cells) for each entry of `cells`,
/// compared to the first `modes` nonzero lattice eigenvalues.
///
SquareSpectrumStudy square_spectrum_study(const std::vector<int>& cells, double epsilon, int modes, BcKind bc,
                                          const EigenOptions& options = {});

struct RefinementStudy
{
    std::vector<double> mean_edges;
    /// Nonzero eigenvalues per level; shorter on levels with few vertices.
    std::vector<Eigen::VectorXd> eigenvalues;
    /// 1-based mode numbers under study.
    std::vector<int> modes;

    /// |lambda_level - lambda_finest| for each studied mode, over the levels that resolve it.
    std::vector<std::vector<double>> errors() const;
    bool monotone() const;
};

///
/// Eigenvalues of the operator on every level of a nested hierarchy with the
/// given per-level fields; errors are measured against the last level.
///
RefinementStudy refinement_study(const std::vector<SimplicialMesh>& hierarchy, const std::vector<FrameField>& fields,
                                 double epsilon, BcKind bc, const std::vector<int>& modes,
                                 const EigenOptions& options = {});

struct WarpStudy
{
    std::vector<double> parameters;
    /// Median relative deviation of the first `modes` nonzero eigenvalues per parameter.
    std::vector<double> median_deviation;
    std::vector<Eigen::VectorXd> unwarped;
    std::vector<Eigen::VectorXd> warped;
};

double median_relative_deviation(const Eigen::VectorXd& reference, const Eigen::VectorXd& other);

/// Spearman rank correlation.
double rank_correlation(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

WarpStudy warp_study(const SimplicialMesh& base, WarpKind kind, const std::vector<double>& parameters, double epsilon,
                     int modes, BcKind bc, const EigenOptions& options = {});

struct DirichletStudy
{
    std::vector<double> mean_edges;
    std::vector<Eigen::VectorXd> solutions;
    /// L2 distance between consecutive levels, measured on the finer one.
    std::vector<double> successive_differences;
};

/// sign(sin(frequency * phi)) at every boundary vertex, phi the polar angle.
Eigen::VectorXd square_wave_boundary(const SimplicialMesh& mesh, int frequency);

DirichletStudy dirichlet_study(const std::vector<SimplicialMesh>& hierarchy, const std::vector<FrameField>& fields,
                               double epsilon, int frequency);

/// Piecewise-linear interpolation of vertex values at arbitrary points (rows).
Eigen::VectorXd interpolate(const SimplicialMesh& mesh, const PointLocator& locator, const Eigen::VectorXd& values,
                            const Eigen::MatrixXd& points);

struct AnisotropyMeasurement
{
    double epsilon = 1;
    /// Half-maximum isoline radius along each ray.
    Eigen::VectorXd radii;
    /// max / min radius.
    double ratio = 1;
    Eigen::VectorXd response;
};

///
/// Impulse at the vertex nearest `center`, one implicit step of length tau,
/// then the half-maximum isoline traced along `rays` equally spaced rays.
///
AnisotropyMeasurement measure_anisotropy(const SimplicialMesh& mesh, const FrameField& field, double epsilon,
                                         double tau, const Eigen::Vector2d& center, int rays = 360);

} // namespace ffop
