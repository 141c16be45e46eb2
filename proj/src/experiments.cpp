#include <ffop/apps.h>
#include <ffop/error.h>
#include <ffop/experiments.h>
#include <ffop/mesh_gen.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace ffop {

namespace {

Eigen::VectorXd average_ranks(const Eigen::VectorXd& x)
{
    const auto n = static_cast<size_t>(x.size());
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return x[static_cast<Eigen::Index>(a)] < x[static_cast<Eigen::Index>(b)]; });
    Eigen::VectorXd ranks(x.size());
    for (size_t i = 0; i < n;) {
        size_t j = i;
        while (j + 1 < n && x[static_cast<Eigen::Index>(order[j + 1])] == x[static_cast<Eigen::Index>(order[i])]) ++j;
        const double r = 0.5 * static_cast<double>(i + j);
        for (size_t t = i; t <= j; ++t) ranks[static_cast<Eigen::Index>(order[t])] = r;
        i = j + 1;
    }
    return ranks;
}

} // namespace

int expected_zero_modes(BcKind bc, int dim)
{
    return bc == BcKind::Neumann ? 1 : dim + 1;
}

Eigen::VectorXd nonzero_eigenvalues(const AssembledOperator& op, int dim, int count, const EigenOptions& options)
{
    const Eigen::Index n = op.A.rows();
    const int k = static_cast<int>(std::min<Eigen::Index>(count + expected_zero_modes(op.bc, dim), n - 1));
    const EigenResult eig = eigs_generalized(SparseSym(op.A, 1e-10), op.mass, k, options);
    std::vector<int> keep = nonzero_modes(eig.eigenvalues);
    if (static_cast<int>(keep.size()) > count) keep.resize(static_cast<size_t>(count));
    Eigen::VectorXd out(static_cast<Eigen::Index>(keep.size()));
    for (size_t i = 0; i < keep.size(); ++i) out[static_cast<Eigen::Index>(i)] = eig.eigenvalues[keep[i]];
    return out;
}

std::vector<SimplicialMesh> refinement_hierarchy(const SimplicialMesh& base, int levels)
{
    std::vector<SimplicialMesh> out{base};
    for (int i = 0; i < levels; ++i) out.push_back(refine_uniform(out.back()));
    return out;
}

std::vector<FrameField> resampled_fields(const std::vector<SimplicialMesh>& hierarchy, const FrameField& finest)
{
    std::vector<FrameField> out;
    for (size_t i = 0; i + 1 < hierarchy.size(); ++i) out.push_back(resample_field(finest, hierarchy.back(), hierarchy[i]));
    out.push_back(finest);
    return out;
}

bool strictly_decreasing(const std::vector<double>& values)
{
    for (size_t i = 1; i < values.size(); ++i) {
        if (!(values[i] < values[i - 1])) return false;
    }
    return true;
}

Eigen::MatrixXd SquareSpectrumStudy::absolute_errors() const
{
    Eigen::MatrixXd err(static_cast<Eigen::Index>(levels.size()), analytic.size());
    for (size_t l = 0; l < levels.size(); ++l) {
        err.row(static_cast<Eigen::Index>(l)) = (levels[l].discrete - analytic).cwiseAbs().transpose();
    }
    return err;
}

double SquareSpectrumStudy::monotone_fraction() const
{
    const Eigen::MatrixXd err = absolute_errors();
    int monotone = 0;
    for (Eigen::Index j = 0; j < err.cols(); ++j) {
        std::vector<double> column(err.col(j).data(), err.col(j).data() + err.rows());
        if (strictly_decreasing(column)) ++monotone;
    }
    return err.cols() ? static_cast<double>(monotone) / static_cast<double>(err.cols()) : 0.0;
}

double SquareSpectrumStudy::finest_relative_error(int modes) const
{
    const auto& finest = levels.back().discrete;
    double worst = 0;
    for (Eigen::Index j = 0; j < std::min<Eigen::Index>(modes, analytic.size()); ++j) {
        worst = std::max(worst, std::abs(finest[j] - analytic[j]) / analytic[j]);
    }
    return worst;
}

SquareSpectrumStudy square_spectrum_study(const std::vector<int>& cells, double epsilon, int modes, BcKind bc,
                                          const EigenOptions& options)
{
    if (cells.empty()) throw InvalidArgument("square spectrum study needs at least one resolution");
    SquareSpectrumStudy study;
    study.epsilon = epsilon;
    study.bc = bc;
    study.analytic = square_spectrum(epsilon, modes + 1).eigenvalues().tail(modes);
    for (int n : cells) {
        const SimplicialMesh mesh = make_square(n);
        const FrameField field = constant_field(mesh, OdecoFrame::axis_aligned(2));
        const AssembledOperator op = assemble_operator(mesh, field, epsilon, bc);
        SquareSpectrumStudy::Level level;
        level.cells = n;
        level.mean_edge = mean_edge_length(mesh);
        level.discrete = nonzero_eigenvalues(op, 2, modes, options);
        if (level.discrete.size() < modes) throw NumericalError("too few nonzero eigenvalues on the square");
        study.levels.push_back(std::move(level));
    }
    return study;
}

std::vector<std::vector<double>> RefinementStudy::errors() const
{
    std::vector<std::vector<double>> out;
    const Eigen::VectorXd& finest = eigenvalues.back();
    for (int m : modes) {
        std::vector<double> e;
        for (size_t l = 0; l + 1 < eigenvalues.size(); ++l) {
            if (eigenvalues[l].size() >= m && finest.size() >= m) e.push_back(std::abs(eigenvalues[l][m - 1] - finest[m - 1]));
        }
        out.push_back(std::move(e));
    }
    return out;
}

bool RefinementStudy::monotone() const
{
    for (const auto& e : errors()) {
        if (e.size() < 2 || !strictly_decreasing(e)) return false;
    }
    return true;
}

RefinementStudy refinement_study(const std::vector<SimplicialMesh>& hierarchy, const std::vector<FrameField>& fields,
                                 double epsilon, BcKind bc, const std::vector<int>& modes, const EigenOptions& options)
{
    if (hierarchy.size() != fields.size() || hierarchy.size() < 2) {
        throw InvalidArgument("refinement study needs one field per level and at least two levels");
    }
    RefinementStudy study;
    study.modes = modes;
    const int count = *std::max_element(modes.begin(), modes.end());
    for (size_t l = 0; l < hierarchy.size(); ++l) {
        const AssembledOperator op = assemble_operator(hierarchy[l], fields[l], epsilon, bc);
        study.mean_edges.push_back(mean_edge_length(hierarchy[l]));
        study.eigenvalues.push_back(nonzero_eigenvalues(op, hierarchy[l].dim(), count, options));
    }
    return study;
}

double median_relative_deviation(const Eigen::VectorXd& reference, const Eigen::VectorXd& other)
{
    const Eigen::Index n = std::min(reference.size(), other.size());
    if (n == 0) throw InvalidArgument("no eigenvalues to compare");
    std::vector<double> dev(static_cast<size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) dev[static_cast<size_t>(i)] = std::abs(other[i] - reference[i]) / std::abs(reference[i]);
    std::sort(dev.begin(), dev.end());
    const size_t mid = dev.size() / 2;
    return dev.size() % 2 ? dev[mid] : 0.5 * (dev[mid - 1] + dev[mid]);
}

double rank_correlation(const Eigen::VectorXd& x, const Eigen::VectorXd& y)
{
    if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("rank correlation needs two equal-length samples");
    const Eigen::VectorXd rx = average_ranks(x).array() - average_ranks(x).mean();
    const Eigen::VectorXd ry = average_ranks(y).array() - average_ranks(y).mean();
    return rx.dot(ry) / (rx.norm() * ry.norm());
}

WarpStudy warp_study(const SimplicialMesh& base, WarpKind kind, const std::vector<double>& parameters, double epsilon,
                     int modes, BcKind bc, const EigenOptions& options)
{
    WarpStudy study;
    study.parameters = parameters;
    const int k = modes + expected_zero_modes(bc, 2);
    for (double c : parameters) {
        const ConformalMap f = conformal_warp(kind, c, base);
        const WarpResult r = warp_experiment(base, f, epsilon, k, bc, options);
        auto pick = [&](const EigenResult& e) {
            std::vector<int> keep = nonzero_modes(e.eigenvalues);
            if (static_cast<int>(keep.size()) > modes) keep.resize(static_cast<size_t>(modes));
            Eigen::VectorXd out(static_cast<Eigen::Index>(keep.size()));
            for (size_t i = 0; i < keep.size(); ++i) out[static_cast<Eigen::Index>(i)] = e.eigenvalues[keep[i]];
            return out;
        };
        study.unwarped.push_back(pick(r.unwarped));
        study.warped.push_back(pick(r.warped));
        study.median_deviation.push_back(median_relative_deviation(study.unwarped.back(), study.warped.back()));
    }
    return study;
}

Eigen::VectorXd square_wave_boundary(const SimplicialMesh& mesh, int frequency)
{
    const auto& boundary = mesh.boundary_vertices();
    Eigen::VectorXd out(static_cast<Eigen::Index>(boundary.size()));
    for (size_t b = 0; b < boundary.size(); ++b) {
        const double phi = std::atan2(mesh.vertices()(boundary[b], 1), mesh.vertices()(boundary[b], 0));
        out[static_cast<Eigen::Index>(b)] = std::sin(frequency * phi) >= 0 ? 1.0 : -1.0;
    }
    return out;
}

Eigen::VectorXd interpolate(const SimplicialMesh& mesh, const PointLocator& locator, const Eigen::VectorXd& values,
                            const Eigen::MatrixXd& points)
{
    Eigen::VectorXd out(points.rows());
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        const auto loc = locator.locate(points.row(i).transpose());
        if (loc.element < 0) throw GeometryError("interpolation point outside the mesh");
        Eigen::VectorXd bary = loc.barycentric.cwiseMax(0.0);
        bary /= bary.sum();
        double v = 0;
        for (int k = 0; k <= mesh.dim(); ++k) v += bary[k] * values[mesh.elements()(loc.element, k)];
        out[i] = v;
    }
    return out;
}

DirichletStudy dirichlet_study(const std::vector<SimplicialMesh>& hierarchy, const std::vector<FrameField>& fields,
                               double epsilon, int frequency)
{
    if (hierarchy.size() != fields.size() || hierarchy.empty()) {
        throw InvalidArgument("Dirichlet study needs one field per level");
    }
    DirichletStudy study;
    for (size_t l = 0; l < hierarchy.size(); ++l) {
        const AssembledOperator op = assemble_operator(hierarchy[l], fields[l], epsilon, BcKind::Neumann);
        study.mean_edges.push_back(mean_edge_length(hierarchy[l]));
        study.solutions.push_back(apply_dirichlet_partition(op, hierarchy[l], square_wave_boundary(hierarchy[l], frequency)));
        if (l == 0) continue;
        const PointLocator coarse(hierarchy[l - 1]);
        const Eigen::VectorXd prolonged =
            interpolate(hierarchy[l - 1], coarse, study.solutions[l - 1], hierarchy[l].vertices());
        const Eigen::VectorXd diff = study.solutions[l] - prolonged;
        study.successive_differences.push_back(std::sqrt(diff.dot(op.mass.cwiseProduct(diff))));
    }
    return study;
}

AnisotropyMeasurement measure_anisotropy(const SimplicialMesh& mesh, const FrameField& field, double epsilon,
                                         double tau, const Eigen::Vector2d& center, int rays)
{
    if (mesh.dim() != 2) throw InvalidArgument("anisotropy is measured on planar meshes");
    if (rays < 4) throw InvalidArgument("need at least four rays");
    const AssembledOperator op = assemble_operator(mesh, field, epsilon, BcKind::Neumann);

    Eigen::Index source = 0;
    (mesh.vertices().rowwise() - center.transpose()).rowwise().squaredNorm().minCoeff(&source);
    Eigen::VectorXd u0 = Eigen::VectorXd::Zero(mesh.num_vertices());
    u0[source] = 1 / op.mass[source];

    AnisotropyMeasurement out;
    out.epsilon = epsilon;
    out.response = diffuse(op, u0, tau);
    const double half = 0.5 * out.response.maxCoeff();
    const Eigen::Vector2d origin = mesh.vertex(source);

    const PointLocator locator(mesh);
    const double step = 0.25 * mean_edge_length(mesh);
    auto value_at = [&](const Eigen::Vector2d& p, bool& inside) {
        const auto loc = locator.locate(p);
        inside = loc.element >= 0 && loc.min_coordinate >= -1e-9;
        if (!inside) return 0.0;
        double v = 0;
        for (int k = 0; k < 3; ++k) v += loc.barycentric[k] * out.response[mesh.elements()(loc.element, k)];
        return v;
    };

    out.radii.resize(rays);
    for (int r = 0; r < rays; ++r) {
        const double angle = 2 * std::numbers::pi * r / rays;
        const Eigen::Vector2d dir(std::cos(angle), std::sin(angle));
        double lo = 0;
        double hi = 0;
        bool inside = true;
        while (true) {
            hi += step;
            if (!(value_at(origin + hi * dir, inside) >= half) || !inside) break;
            lo = hi;
        }
        if (!inside) throw NumericalError("half-maximum isoline reaches the domain boundary");
        for (int it = 0; it < 50; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (value_at(origin + mid * dir, inside) >= half) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.radii[r] = 0.5 * (lo + hi);
    }
    out.ratio = out.radii.maxCoeff() / out.radii.minCoeff();
    return out;
}

} // namespace ffop
