// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Usage: ffop_acceptance [criterion ids...]   (no ids runs all of them)

#include "oracles.h"

#include <ffop/analytic.h>
#include <ffop/apps.h>
#include <ffop/experiments.h>
#include <ffop/fem.h>
#include <ffop/framefield.h>
#include <ffop/mesh_gen.h>
#include <ffop/solve.h>
#include <ffop/symtensor.h>

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace ffop;

namespace {

// Frozen tolerances.
constexpr double kBilaplacianRel = 1e-12;
constexpr double kSquareMonotoneFraction = 0.9;
constexpr double kSquareFinestRel = 0.05;
constexpr double kKktRel = 1e-8;
constexpr double kSymmetryRel = 1e-12;
constexpr double kPsdRel = 1e-10;
constexpr double kNullspaceRel = 1e-10;
constexpr double kProjectorRel = 1e-12;
constexpr double kRescaleRel = 1e-10;
constexpr double kTensorRel = 1e-10;
constexpr double kAnisotropyIsotropic = 0.05;
constexpr double kWarpIdentity = 1e-10;
constexpr double kQpObjectiveRel = 1e-8;

struct Outcome
{
    bool pass = true;
    std::string detail;
};

struct Criterion
{
    int id;
    std::string name;
    std::function<Outcome()> run;
};

std::string fmt(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

std::string list(const std::vector<double>& xs)
{
    std::string s = "[";
    for (size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + fmt(xs[i]);
    return s + "]";
}

Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937_64& rng)
{
    std::normal_distribution<double> g;
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = g(rng);
    return x;
}

Eigen::MatrixXd random_sym(int dim, std::mt19937_64& rng)
{
    const Eigen::MatrixXd X = Eigen::Map<const Eigen::MatrixXd>(random_vector(dim * dim, rng).data(), dim, dim);
    return X + X.transpose();
}

/// Small meshes with every boundary type the operator distinguishes.
std::vector<SimplicialMesh> test_meshes(std::mt19937_64& rng)
{
    return {make_square(6), oracles::jittered_disk(5, 0.2, rng), make_annulus(4, 0.4), oracles::jittered_cube(2, 0.15, rng),
            make_ball(2)};
}

Outcome bilaplacian_reduction()
{
    const auto mesh = make_disk(40);
    std::mt19937_64 rng(101);
    const auto a = assemble_operator(mesh, harmonic_cross_field_2d(mesh), 1.0, BcKind::Natural).A;
    const auto b = assemble_operator(mesh, oracles::random_field(mesh, false, rng), 1.0, BcKind::Natural).A;
    const SparseMatrix ref = oracles::reference_bilaplacian(mesh);
    const double scale = oracles::max_abs(ref);
    const double between = oracles::max_abs(SparseMatrix(a - b)) / scale;
    const double to_ref = std::max(oracles::max_abs(SparseMatrix(a - ref)), oracles::max_abs(SparseMatrix(b - ref))) / scale;
    return {between <= kBilaplacianRel && to_ref <= kBilaplacianRel,
            std::to_string(mesh.num_vertices()) + " vertices; fields differ by " + fmt(between) + ", vs reference " +
                fmt(to_ref) + " (tol " + fmt(kBilaplacianRel) + ")"};
}

Outcome square_spectrum_convergence()
{
    Outcome out;
    for (double eps : {1.0, 0.1}) {
        const auto study = square_spectrum_study({46, 92, 184}, eps, 20, BcKind::Neumann);
        const double mono = study.monotone_fraction();
        const double rel = study.finest_relative_error(10);
        out.pass = out.pass && mono >= kSquareMonotoneFraction && rel < kSquareFinestRel;
        std::vector<double> h;
        for (const auto& level : study.levels) h.push_back(level.mean_edge);
        out.detail += (out.detail.empty() ? "" : "; ") + ("eps " + fmt(eps) + ": h " + list(h) + ", monotone " + fmt(mono) +
                                                         ", finest rel " + fmt(rel));
    }
    return out;
}

Outcome refinement_result(const RefinementStudy& study, const std::vector<int>& modes)
{
    Outcome out{study.monotone(), "h " + list(study.mean_edges)};
    const auto errors = study.errors();
    for (size_t i = 0; i < errors.size(); ++i) out.detail += "; mode " + std::to_string(modes[i]) + " " + list(errors[i]);
    return out;
}

Outcome disk_refinement()
{
    const std::vector<int> modes{10, 20, 30, 40};
    const auto hierarchy = refinement_hierarchy(make_disk(10), 3);
    const auto fields = resampled_fields(hierarchy, harmonic_cross_field_2d(hierarchy.back()));
    return refinement_result(refinement_study(hierarchy, fields, 0.1, BcKind::Neumann, modes), modes);
}

Outcome kkt_equivalence()
{
    std::mt19937_64 rng(104);
    const std::vector<SimplicialMesh> meshes{oracles::jittered_disk(4, 0.25, rng), oracles::jittered_disk(7, 0.25, rng),
                                             make_annulus(3, 0.5), oracles::jittered_cube(2, 0.2, rng),
                                             oracles::jittered_cube(3, 0.2, rng), make_ball(2)};
    double worst = 0;
    int systems = 0;
    for (const auto& mesh : meshes) {
        if (mesh.num_vertices() > 200) return {false, "test mesh exceeds 200 vertices"};
        const auto field = oracles::random_field(mesh, true, rng);
        for (auto bc : {BcKind::Natural, BcKind::Neumann}) {
            for (double eps : {1.0, 0.3, 0.01}) {
                const auto op = assemble_operator(mesh, field, eps, bc);
                const oracles::KktOracle oracle(mesh, field, eps, bc);
                for (int r = 0; r < 20; ++r) {
                    const Eigen::VectorXd u = random_vector(mesh.num_vertices(), rng);
                    const Eigen::VectorXd expected = oracle.apply(u);
                    worst = std::max(worst, (op.A * u - expected).norm() / expected.norm());
                }
                ++systems;
            }
        }
    }
    return {worst <= kKktRel, std::to_string(systems) + " systems x 20 rhs; max rel " + fmt(worst) + " (tol " + fmt(kKktRel) + ")"};
}

Outcome operator_invariants()
{
    std::mt19937_64 rng(105);
    double sym = 0, psd = 0, ones = 0, affine = 0, annihilate = 0, rescale = 0;
    int operators = 0;
    for (const auto& mesh : test_meshes(rng)) {
        const auto measures = compute_measures(mesh);
        for (bool odeco : {false, true}) {
            const auto field = oracles::random_field(mesh, odeco, rng);
            for (double eps : {1.0, 0.3, 0.01}) {
                for (auto bc : {BcKind::Natural, BcKind::Neumann}) {
                    const auto op = assemble_operator(mesh, field, eps, bc);
                    const Eigen::MatrixXd A(op.A);
                    const double anorm = A.norm();
                    sym = std::max(sym, (A - A.transpose()).cwiseAbs().maxCoeff() / A.cwiseAbs().maxCoeff());
                    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(A, Eigen::EigenvaluesOnly).eigenvalues();
                    psd = std::max(psd, -ev.minCoeff() / ev.cwiseAbs().maxCoeff());
                    ones = std::max(ones, (A * Eigen::VectorXd::Ones(A.rows())).norm() / anorm);
                    if (bc == BcKind::Natural) {
                        for (int k = 0; k < mesh.dim(); ++k) {
                            const Eigen::VectorXd x = mesh.vertices().col(k);
                            affine = std::max(affine, (A * x).norm() / (anorm * x.norm()));
                        }
                    }
                    const auto blocks = projected_blocks(mesh, field, eps, bc);
                    double scale = 0;
                    for (const auto& P : blocks) scale = std::max(scale, P.norm());
                    const auto forms = modified_forms(field, eps);
                    for (size_t b = 0; b < mesh.boundary_vertices().size(); ++b) {
                        const auto v = static_cast<size_t>(mesh.boundary_vertices()[b]);
                        const Eigen::MatrixXd Bv = vertex_constraint_block(measures, static_cast<int>(b), mesh.dim(), bc);
                        annihilate = std::max(annihilate, (Bv * blocks[v]).norm() / scale);
                        Eigen::MatrixXd S = random_sym(static_cast<int>(Bv.rows()), rng);
                        S += (S.cwiseAbs().sum() + 1) * Eigen::MatrixXd::Identity(S.rows(), S.cols());
                        const Eigen::MatrixXd Mbar = forms[v] / measures.dual_volumes[static_cast<Eigen::Index>(v)];
                        rescale = std::max(rescale, (project_constraints(Mbar, S * Bv) - blocks[v]).norm() / Mbar.norm());
                    }
                    ++operators;
                }
            }
        }
    }
    const bool pass = sym <= kSymmetryRel && psd <= kPsdRel && ones <= kNullspaceRel && affine <= kNullspaceRel &&
                      annihilate <= kProjectorRel && rescale <= kRescaleRel;
    return {pass, std::to_string(operators) + " operators; asym " + fmt(sym) + ", neg eig " + fmt(psd) + ", A1 " + fmt(ones) +
                      ", Ax " + fmt(affine) + ", BP " + fmt(annihilate) + ", rescale " + fmt(rescale)};
}

Outcome tensor_properties()
{
    std::mt19937_64 rng(106);
    std::uniform_real_distribution<double> u(0, 1);
    const int samples = 1000;
    double inequality = 0, equality = 0, degenerate = 0, ellipticity = 0;
    int total = 0;
    for (int dim : {2, 3}) {
        for (int i = 0; i < samples; ++i) {
            const OdecoFrame oct = oracles::random_octahedral(dim, rng);
            const Sym4Form T = odeco_to_form(oct);
            const Eigen::MatrixXd S = random_sym(dim, rng);
            const double s2 = (S * S).trace();
            inequality = std::max(inequality, (alignment_quadratic(Sym2::from_matrix(S), T) - s2) / s2);

            const Eigen::VectorXd lam = random_vector(dim, rng);
            const Eigen::MatrixXd Sa = oct.components * lam.asDiagonal() * oct.components.transpose();
            equality = std::max(equality, std::abs(alignment_quadratic(Sym2::from_matrix(Sa), T) - lam.squaredNorm()) /
                                              lam.squaredNorm());

            OdecoFrame f = oracles::random_octahedral(dim, rng);
            for (int a = 0; a < dim; ++a) f.weights[a] = 2 * u(rng);
            const Sym4Form W = odeco_to_form(f);
            Eigen::MatrixXd Sd = Eigen::MatrixXd::Zero(dim, dim);
            for (int a = 0; a < dim; ++a) {
                for (int b = a + 1; b < dim; ++b) {
                    const double c = random_vector(1, rng)[0];
                    Sd += c * (f.components.col(a) * f.components.col(b).transpose() +
                               f.components.col(b) * f.components.col(a).transpose());
                }
            }
            degenerate = std::max(degenerate, std::abs(alignment_quadratic(Sym2::from_matrix(Sd), W)) /
                                                  std::max(1.0, f.weights.maxCoeff() * (Sd * Sd).trace()));

            const double eps = std::max(u(rng), 1e-3);
            const double norm = spectral_norm(f);
            const Eigen::VectorXd zeta = random_vector(dim, rng);
            const double floor = eps * norm * std::pow(zeta.squaredNorm(), 2);
            const double sigma = principal_symbol(modify_epsilon(W, norm, eps), zeta);
            ellipticity = std::max(ellipticity, (floor - sigma) / std::max(floor, 1e-300));
            ++total;
        }
    }
    const bool pass = inequality <= kTensorRel && equality <= kTensorRel && degenerate <= kTensorRel && ellipticity <= kTensorRel;
    return {pass, std::to_string(total) + " samples per property; inequality excess " + fmt(inequality) + ", equality " +
                      fmt(equality) + ", degenerate " + fmt(degenerate) + ", ellipticity deficit " + fmt(ellipticity)};
}

Outcome anisotropy_trend()
{
    const auto mesh = make_disk(100);
    const auto field = constant_field(mesh, OdecoFrame::axis_aligned(2));
    const std::vector<double> eps{1, 2e-1, 4e-2, 8e-3};
    std::vector<double> ratios;
    for (double e : eps) ratios.push_back(measure_anisotropy(mesh, field, e, 1e-5, Eigen::Vector2d::Zero()).ratio);
    bool increasing = true;
    for (size_t i = 1; i < ratios.size(); ++i) increasing = increasing && ratios[i] > ratios[i - 1];
    return {increasing && std::abs(ratios.front() - 1) <= kAnisotropyIsotropic, "eps " + list(eps) + " ratio " + list(ratios)};
}

Outcome warp_sweep()
{
    const std::vector<double> c{0.05, 0.025, 0.0125, 0};
    const auto study = warp_study(make_square(32), WarpKind::Polynomial, c, 0.1, 30, BcKind::Neumann);
    const std::vector<double> nonzero(study.median_deviation.begin(), study.median_deviation.end() - 1);
    return {strictly_decreasing(nonzero) && study.median_deviation.back() < kWarpIdentity,
            "c " + list(c) + " median deviation " + list(study.median_deviation)};
}

Outcome distance_metric()
{
    const auto mesh = make_disk(20);
    const auto emb = build_embedding(assemble_operator(mesh, harmonic_cross_field_2d(mesh), 0.1, BcKind::Neumann), 2, 64);
    std::mt19937_64 rng(109);
    std::uniform_int_distribution<Eigen::Index> pick(0, mesh.num_vertices() - 1);
    int violations = 0;
    constexpr double ulp = std::numeric_limits<double>::epsilon();
    for (int i = 0; i < 1000; ++i) {
        const auto p = pick(rng), q = pick(rng), r = pick(rng);
        const double pq = embedding_distance(emb, p, q), qr = embedding_distance(emb, q, r), pr = embedding_distance(emb, p, r);
        if (embedding_distance(emb, p, p) != 0 || pq != embedding_distance(emb, q, p)) ++violations;
        // Three rounded norms and one sum: a few ulps of slack.
        if (pr > (pq + qr) * (1 + 4 * ulp)) ++violations;
    }

    const auto a = build_embedding(assemble_operator(mesh, oracles::random_field(mesh, false, rng), 1.0, BcKind::Neumann), 2, 64);
    const auto b = biharmonic_embedding(mesh, 64);
    double diff = 0;
    for (Eigen::Index s : {Eigen::Index{0}, mesh.num_vertices() / 2, mesh.num_vertices() - 1}) {
        diff = std::max(diff, (distance_field(a, s) - distance_field(b, s)).cwiseAbs().maxCoeff());
    }
    return {violations == 0 && diff == 0,
            "1000 triples, " + std::to_string(violations) + " violations; eps=1 vs biharmonic max diff " + fmt(diff)};
}

Outcome qp_oracle()
{
    std::mt19937_64 rng(110);
    std::uniform_real_distribution<double> u(-1, 1);
    double worst = 0;
    bool in_bounds = true;
    int instances = 0;
    for (int n = 2; n <= 12; ++n) {
        for (int trial = 0; trial < (n <= 9 ? 4 : 1); ++trial) {
            const int nfix = 1 + trial % 3;
            const int total = n + nfix;
            Eigen::MatrixXd L(total, total);
            for (int j = 0; j < total; ++j) L.col(j) = random_vector(total, rng);
            const Eigen::MatrixXd H = L.transpose() * L + 0.05 * Eigen::MatrixXd::Identity(total, total);
            Eigen::VectorXd lo(total), hi(total);
            for (int i = 0; i < total; ++i) {
                lo[i] = -0.3 + 0.2 * u(rng);
                hi[i] = 0.3 + 0.2 * u(rng);
            }
            std::vector<int> fixed_ids;
            Eigen::VectorXd fixed_vals(nfix);
            for (int j = 0; j < nfix; ++j) {
                fixed_ids.push_back(n + j);
                fixed_vals[j] = j % 2 ? lo[n + j] : hi[n + j];
            }
            const auto r = solve_box_qp(SparseSym(H.sparseView()), fixed_ids, fixed_vals, lo, hi);
            const double constant = 0.5 * fixed_vals.dot(H.bottomRightCorner(nfix, nfix) * fixed_vals);
            const double best = oracles::brute_force_box_qp(H.topLeftCorner(n, n), H.topRightCorner(n, nfix) * fixed_vals,
                                                            lo.head(n), hi.head(n)) + constant;
            worst = std::max(worst, std::abs(r.objective - best) / (1 + std::abs(best)));
            in_bounds = in_bounds && (r.x.array() >= lo.array()).all() && (r.x.array() <= hi.array()).all();
            ++instances;
        }
    }

    const auto mesh = make_disk(20);
    const auto& boundary = mesh.boundary_vertices();
    Eigen::MatrixXd colors(static_cast<Eigen::Index>(boundary.size()), 3);
    for (size_t i = 0; i < boundary.size(); ++i) {
        const Eigen::VectorXd x = mesh.vertex(boundary[i]);
        const double angle = std::atan2(x[1], x[0]);
        const int sector = static_cast<int>(std::floor(3 * (angle + M_PI) / (2 * M_PI))) % 3;
        colors.row(static_cast<Eigen::Index>(i)) = Eigen::RowVector3d::Unit(sector) * 0.9 + Eigen::RowVector3d::Constant(0.05);
    }
    const auto coloring = color_by_boundary(assemble_operator(mesh, harmonic_cross_field_2d(mesh), 0.01, BcKind::Natural), mesh, colors);
    bool colors_ok = true;
    for (Eigen::Index c = 0; c < 3; ++c) {
        colors_ok = colors_ok && coloring.colors.col(c).minCoeff() >= colors.col(c).minCoeff() &&
                    coloring.colors.col(c).maxCoeff() <= colors.col(c).maxCoeff();
        for (size_t i = 0; i < boundary.size(); ++i) {
            colors_ok = colors_ok && coloring.colors(boundary[i], c) == colors(static_cast<Eigen::Index>(i), c);
        }
    }
    return {worst <= kQpObjectiveRel && in_bounds && colors_ok,
            std::to_string(instances) + " instances, max objective gap " + fmt(worst) + (in_bounds ? ", bounds held" : ", BOUNDS VIOLATED") +
                "; coloring " + (colors_ok ? "within bounds" : "OUT OF BOUNDS")};
}

Outcome ball_refinement()
{
    const std::vector<int> modes{10, 20, 30};
    const auto hierarchy = refinement_hierarchy(make_ball(4), 2);
    std::vector<FrameField> fields;
    for (const auto& m : hierarchy) fields.push_back(constant_field(m, OdecoFrame::axis_aligned(3)));
    Outcome out = refinement_result(refinement_study(hierarchy, fields, 0.1, BcKind::Neumann, modes), modes);
    out.detail = std::to_string(hierarchy.back().num_elements()) + " tets at finest; " + out.detail;
    return out;
}

} // namespace

int main(int argc, char** argv)
{
    const std::vector<Criterion> criteria{
        {1, "bilaplacian-reduction", bilaplacian_reduction},
        {2, "square-spectrum", square_spectrum_convergence},
        {3, "disk-refinement", disk_refinement},
        {4, "kkt-oracle", kkt_equivalence},
        {5, "operator-invariants", operator_invariants},
        {6, "tensor-properties", tensor_properties},
        {7, "anisotropy-trend", anisotropy_trend},
        {8, "warp-sweep", warp_sweep},
        {9, "distance-metric", distance_metric},
        {10, "qp-oracle", qp_oracle},
        {11, "ball-refinement", ball_refinement},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::stoi(argv[i]));

    int failures = 0;
    for (const auto& c : criteria) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!out.pass) ++failures;
        std::printf("%s %2d %-22s (%6.1f s) %s\n", out.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), seconds, out.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
