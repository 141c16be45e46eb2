#include "oracles.h"

#include <ffop/error.h>
#include <ffop/fem.h>
#include <ffop/mesh_gen.h>
#include <ffop/symtensor.h>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace ffop;

namespace {

Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937_64& rng)
{
    std::normal_distribution<double> g;
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = g(rng);
    return x;
}

void expect_operator_invariants(const SimplicialMesh& mesh, const AssembledOperator& op, std::mt19937_64& rng)
{
    const SparseMatrix& A = op.A;
    const double amax = oracles::max_abs(A);
    EXPECT_LE(oracles::max_abs(SparseMatrix(A - SparseMatrix(A.transpose()))), 1e-12 * amax);
    const double anorm = Eigen::MatrixXd(A).norm();
    for (int i = 0; i < 10; ++i) {
        const Eigen::VectorXd x = random_vector(A.rows(), rng);
        EXPECT_GE(x.dot(A * x), -1e-10 * anorm * x.squaredNorm());
    }
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(A.rows());
    EXPECT_LE((A * ones).norm(), 1e-10 * anorm);
    if (op.bc == BcKind::Natural) {
        for (int k = 0; k < mesh.dim(); ++k) {
            const Eigen::VectorXd x = mesh.vertices().col(k);
            EXPECT_LE((A * x).norm(), 1e-10 * anorm * x.norm());
        }
    }
}

} // namespace

TEST(Divergence, ConstantAndLinearFields)
{
    std::mt19937_64 rng(1);
    for (const auto& mesh : {oracles::jittered_disk(4, 0.2, rng), oracles::jittered_cube(2, 0.2, rng)}) {
        const int dim = mesh.dim();
        const int m = mandel_size(dim);
        const SparseMatrix D = divergence_matrix(mesh);
        const Eigen::VectorXd c = random_vector(m, rng);
        EXPECT_LT((D * c.replicate(mesh.num_vertices(), 1)).norm(), 1e-12);

        Eigen::VectorXd L = Eigen::VectorXd::Zero(mesh.num_vertices() * m);
        for (Eigen::Index v = 0; v < mesh.num_vertices(); ++v) L[v * m] = mesh.vertices()(v, 0);
        const Eigen::VectorXd div = D * L;
        Eigen::VectorXd e1 = Eigen::VectorXd::Zero(dim);
        e1[0] = 1;
        for (Eigen::Index e = 0; e < mesh.num_elements(); ++e) EXPECT_LT((div.segment(e * dim, dim) - e1).norm(), 1e-12);

        // Off-diagonal entry: Lambda_12 = x_2 gives (div Lambda)_1 = 1.
        L.setZero();
        const int a12 = mandel_index(dim, 0, 1);
        for (Eigen::Index v = 0; v < mesh.num_vertices(); ++v) L[v * m + a12] = std::numbers::sqrt2 * mesh.vertices()(v, 1);
        const Eigen::VectorXd div12 = D * L;
        for (Eigen::Index e = 0; e < mesh.num_elements(); ++e) EXPECT_NEAR(div12[e * dim], 1, 1e-12);
    }
}

TEST(Divergence, DivergenceTheorem)
{
    // sum_e vol (div Lambda) . g = sum over boundary facets of the exact facet integral of n^T Lambda g.
    std::mt19937_64 rng(2);
    for (const auto& mesh : {oracles::jittered_disk(5, 0.25, rng), oracles::jittered_cube(2, 0.25, rng)}) {
        const int dim = mesh.dim();
        const int m = mandel_size(dim);
        const auto measures = compute_measures(mesh);
        const Eigen::VectorXd L = random_vector(mesh.num_vertices() * m, rng);
        const Eigen::VectorXd g = random_vector(dim, rng);
        const Eigen::VectorXd div = divergence_matrix(mesh) * L;
        double lhs = 0;
        for (Eigen::Index e = 0; e < mesh.num_elements(); ++e) lhs += measures.element_volumes[e] * div.segment(e * dim, dim).dot(g);

        double rhs = 0;
        for (Eigen::Index f = 0; f < mesh.num_boundary_facets(); ++f) {
            Eigen::MatrixXd P(dim, dim);
            for (int k = 0; k < dim; ++k) P.col(k) = mesh.vertex(mesh.boundary_facets()(f, k));
            Eigen::VectorXd area_normal;
            if (dim == 2) {
                const Eigen::Vector2d t = P.col(1) - P.col(0);
                area_normal = Eigen::Vector2d(t[1], -t[0]);
            } else {
                area_normal = Eigen::Vector3d(P.col(1) - P.col(0)).cross(Eigen::Vector3d(P.col(2) - P.col(0))) / 2;
            }
            Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(dim, dim);
            for (int k = 0; k < dim; ++k) {
                mean += from_mandel(L.segment(mesh.boundary_facets()(f, k) * m, m)) / dim;
            }
            rhs += area_normal.dot(mean * g);
        }
        EXPECT_NEAR(lhs, rhs, 1e-10 * (1 + std::abs(lhs)));
    }
}

TEST(EnergyBlocks, EpsilonOneGivesMass)
{
    const auto mesh = make_disk(4);
    std::mt19937_64 rng(3);
    const auto field = oracles::random_field(mesh, false, rng);
    const auto sys = assemble_mixed_system(mesh, field, 1.0, BcKind::Neumann);
    EXPECT_LT((Eigen::MatrixXd(sys.M_T) - Eigen::MatrixXd(sys.M.asDiagonal())).norm(), 1e-15 * sys.M.norm());
}

TEST(EnergyBlocks, ZeroWeightAndPsd)
{
    const auto mesh = make_disk(3);
    std::vector<OdecoFrame> frames(static_cast<size_t>(mesh.num_vertices()), OdecoFrame::axis_aligned(2, 0.7));
    frames[0].weights.setZero();
    const auto field = FrameField::from_frames(frames);
    const auto measures = compute_measures(mesh);
    for (double eps : {1.0, 0.5, 0.01}) {
        const Eigen::MatrixXd MT(energy_block_matrix(field, measures, eps));
        EXPECT_TRUE(MT.topLeftCorner(3, 3).isZero());
        EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(MT).eigenvalues().minCoeff(), -1e-15);
    }
}

TEST(Constraints, NeumannRowExample)
{
    const auto mesh = make_square(4);
    const auto measures = compute_measures(mesh);
    for (size_t i = 0; i < mesh.boundary_vertices().size(); ++i) {
        const Eigen::VectorXd x = mesh.vertex(mesh.boundary_vertices()[i]);
        if (std::abs(x[1] - 1) > 1e-12 || std::abs(std::abs(x[0]) - 1) < 1e-12) continue;
        const Eigen::MatrixXd row = vertex_constraint_block(measures, static_cast<int>(i), 2, BcKind::Neumann);
        ASSERT_EQ(row.rows(), 1);
        EXPECT_NEAR(row(0, 0), 0, 1e-15);
        EXPECT_NEAR(row(0, 1), 0, 1e-15);
        EXPECT_NEAR(std::abs(row(0, 2)), std::numbers::sqrt2 / 2, 1e-15);
    }
}

TEST(Constraints, CountsAndSupport)
{
    for (const auto& mesh : {make_disk(4), make_ball(2)}) {
        const auto measures = compute_measures(mesh);
        const int m = mandel_size(mesh.dim());
        const auto nb = static_cast<Eigen::Index>(mesh.boundary_vertices().size());
        const SparseMatrix Bn = boundary_constraint_matrix(mesh, measures, BcKind::Neumann);
        EXPECT_EQ(Bn.rows(), nb * (mesh.dim() - 1));
        EXPECT_EQ(boundary_constraint_matrix(mesh, measures, BcKind::Natural).rows(), nb * m);
        const Eigen::MatrixXd B(Bn);
        for (Eigen::Index r = 0; r < B.rows(); ++r) {
            Eigen::Index first = -1;
            for (Eigen::Index c = 0; c < B.cols(); ++c) {
                if (B(r, c) == 0) continue;
                if (first < 0) first = c;
                EXPECT_EQ(c / m, first / m);
            }
        }
    }
}

TEST(Constraints, AllBoundaryNaturalIsIdentityPermutation)
{
    Eigen::MatrixXd V(4, 2);
    V << 0, 0, 1, 0, 1, 1, 0, 1;
    Eigen::MatrixXi E(2, 3);
    E << 0, 1, 2, 0, 2, 3;
    const auto mesh = SimplicialMesh::create(V, E);
    const Eigen::MatrixXd B(boundary_constraint_matrix(mesh, compute_measures(mesh), BcKind::Natural));
    EXPECT_TRUE((B.transpose() * B).isIdentity());
    const auto op = assemble_operator(mesh, constant_field(mesh, OdecoFrame::axis_aligned(2)), 0.4, BcKind::Natural);
    EXPECT_EQ(oracles::max_abs(op.A), 0.0);
}

TEST(Operator, InvariantsOnTestMeshes)
{
    std::mt19937_64 rng(4);
    const std::vector<SimplicialMesh> meshes{make_square(6), oracles::jittered_disk(5, 0.2, rng), make_annulus(4, 0.4),
                                             oracles::jittered_cube(2, 0.15, rng), make_ball(2)};
    for (const auto& mesh : meshes) {
        for (bool odeco : {false, true}) {
            const auto field = oracles::random_field(mesh, odeco, rng);
            for (double eps : {1.0, 0.3, 0.01}) {
                for (auto bc : {BcKind::Natural, BcKind::Neumann}) {
                    const auto op = assemble_operator(mesh, field, eps, bc);
                    EXPECT_TRUE(op.warnings.empty());
                    expect_operator_invariants(mesh, op, rng);
                }
            }
        }
    }
}

TEST(Operator, NeumannDoesNotAnnihilateCoordinates)
{
    const auto mesh = make_disk(6);
    const auto op = assemble_operator(mesh, harmonic_cross_field_2d(mesh), 0.2, BcKind::Neumann);
    const double anorm = Eigen::MatrixXd(op.A).norm();
    for (int k = 0; k < 2; ++k) EXPECT_GT((op.A * mesh.vertices().col(k)).norm(), 1e-6 * anorm);
}

TEST(Operator, ProjectorAnnihilatesConstraints)
{
    std::mt19937_64 rng(5);
    for (const auto& mesh : {oracles::jittered_disk(4, 0.2, rng), make_ball(2)}) {
        const auto field = oracles::random_field(mesh, true, rng);
        const auto measures = compute_measures(mesh);
        for (auto bc : {BcKind::Natural, BcKind::Neumann}) {
            const auto blocks = projected_blocks(mesh, field, 0.1, bc);
            double scale = 0;
            for (const auto& P : blocks) scale = std::max(scale, P.norm());
            for (size_t b = 0; b < mesh.boundary_vertices().size(); ++b) {
                const Eigen::MatrixXd Bv = vertex_constraint_block(measures, static_cast<int>(b), mesh.dim(), bc);
                const Eigen::MatrixXd& P = blocks[static_cast<size_t>(mesh.boundary_vertices()[b])];
                EXPECT_LT((Bv * P).norm(), 1e-12 * scale);
            }
        }
    }
}

TEST(Operator, ConstraintRescalingInvariance)
{
    std::mt19937_64 rng(6);
    std::normal_distribution<double> g;
    const auto mesh = make_ball(2);
    const auto field = oracles::random_field(mesh, true, rng);
    const auto measures = compute_measures(mesh);
    const auto forms = modified_forms(field, 0.05);
    for (size_t b = 0; b < mesh.boundary_vertices().size(); ++b) {
        const auto v = static_cast<size_t>(mesh.boundary_vertices()[b]);
        const Eigen::MatrixXd Mbar = forms[v] / measures.dual_volumes[static_cast<Eigen::Index>(v)];
        for (auto bc : {BcKind::Natural, BcKind::Neumann}) {
            const Eigen::MatrixXd Bv = vertex_constraint_block(measures, static_cast<int>(b), 3, bc);
            Eigen::MatrixXd S(Bv.rows(), Bv.rows());
            for (Eigen::Index i = 0; i < S.size(); ++i) S.data()[i] = g(rng);
            S += 3 * Eigen::MatrixXd::Identity(S.rows(), S.cols());
            const Eigen::MatrixXd P = project_constraints(Mbar, Bv);
            EXPECT_LT((project_constraints(Mbar, S * Bv) - P).norm(), 1e-10 * Mbar.norm());
        }
    }
}

TEST(Operator, NaturalShortcutMatchesSchurFormula)
{
    std::mt19937_64 rng(7);
    for (const auto& mesh : {oracles::jittered_disk(4, 0.2, rng), oracles::jittered_cube(2, 0.15, rng)}) {
        const auto field = oracles::random_field(mesh, true, rng);
        for (double eps : {1.0, 0.2}) {
            const SparseMatrix schur = assemble_operator(mesh, field, eps, BcKind::Natural).A;
            const SparseMatrix shortcut = assemble_natural_shortcut(mesh, field, eps);
            EXPECT_LE(oracles::max_abs(SparseMatrix(schur - shortcut)), 1e-12 * oracles::max_abs(schur));
        }
    }
}

TEST(Operator, BilaplacianAtEpsilonOne)
{
    std::mt19937_64 rng(8);
    const auto mesh = oracles::jittered_disk(6, 0.2, rng);
    const auto a = assemble_operator(mesh, oracles::random_field(mesh, false, rng), 1.0, BcKind::Natural).A;
    const auto b = assemble_operator(mesh, harmonic_cross_field_2d(mesh), 1.0, BcKind::Natural).A;
    const double scale = oracles::max_abs(a);
    EXPECT_LE(oracles::max_abs(SparseMatrix(a - b)), 1e-12 * scale);
    EXPECT_LE(oracles::max_abs(SparseMatrix(a - oracles::reference_bilaplacian(mesh))), 1e-12 * scale);
}

TEST(Operator, MatchesDenseKkt)
{
    std::mt19937_64 rng(9);
    for (const auto& mesh : {oracles::jittered_disk(4, 0.2, rng), oracles::jittered_cube(2, 0.15, rng)}) {
        const auto field = oracles::random_field(mesh, true, rng);
        for (auto bc : {BcKind::Natural, BcKind::Neumann}) {
            for (double eps : {1.0, 0.01}) {
                const auto op = assemble_operator(mesh, field, eps, bc);
                const oracles::KktOracle oracle(mesh, field, eps, bc);
                for (int i = 0; i < 3; ++i) {
                    const Eigen::VectorXd u = random_vector(mesh.num_vertices(), rng);
                    const Eigen::VectorXd ref = oracle.apply(u);
                    EXPECT_LE((op.A * u - ref).norm(), 1e-8 * ref.norm());
                }
            }
        }
    }
}

TEST(Operator, ZeroWeightBoundaryVertexWarns)
{
    const auto mesh = make_disk(3);
    std::vector<OdecoFrame> frames(static_cast<size_t>(mesh.num_vertices()), OdecoFrame::axis_aligned(2));
    frames[static_cast<size_t>(mesh.boundary_vertices().front())].weights.setZero();
    const auto op = assemble_operator(mesh, FrameField::from_frames(frames), 0.3, BcKind::Neumann);
    EXPECT_EQ(op.warnings.size(), 1u);
    std::mt19937_64 rng(10);
    expect_operator_invariants(mesh, op, rng);
}

TEST(Operator, RejectsBadInput)
{
    const auto mesh = make_disk(3);
    const auto field = constant_field(mesh, OdecoFrame::axis_aligned(2));
    EXPECT_THROW(assemble_operator(mesh, field, 0.0, BcKind::Natural), InvalidArgument);
    EXPECT_THROW(assemble_operator(make_disk(4), field, 0.5, BcKind::Natural), InvalidArgument);
    EXPECT_THROW(bc_kind_from_string("dirichlet"), InvalidArgument);
}

TEST(Operator, DeterministicAssembly)
{
    const auto mesh = make_disk(5);
    const auto field = harmonic_cross_field_2d(mesh);
    const auto a = assemble_operator(mesh, field, 0.1, BcKind::Neumann).A;
    const auto b = assemble_operator(mesh, field, 0.1, BcKind::Neumann).A;
    ASSERT_EQ(a.nonZeros(), b.nonZeros());
    EXPECT_TRUE(std::equal(a.valuePtr(), a.valuePtr() + a.nonZeros(), b.valuePtr()));
}

TEST(Dirichlet, ConstantBoundaryGivesConstant)
{
    const auto mesh = make_disk(5);
    const auto op = assemble_operator(mesh, harmonic_cross_field_2d(mesh), 0.1, BcKind::Neumann);
    const Eigen::VectorXd u0 = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(mesh.boundary_vertices().size()), 2.5);
    const Eigen::VectorXd u = apply_dirichlet_partition(op, mesh, u0);
    EXPECT_LT((u.array() - 2.5).abs().maxCoeff(), 1e-9);
}

TEST(Dirichlet, BoundaryValuesExactAndInteriorSolves)
{
    const auto mesh = make_disk(5);
    const auto op = assemble_operator(mesh, harmonic_cross_field_2d(mesh), 0.1, BcKind::Neumann);
    std::mt19937_64 rng(11);
    const Eigen::VectorXd u0 = random_vector(static_cast<Eigen::Index>(mesh.boundary_vertices().size()), rng);
    const Eigen::VectorXd u = apply_dirichlet_partition(op, mesh, u0);
    for (size_t i = 0; i < mesh.boundary_vertices().size(); ++i) {
        EXPECT_EQ(u[mesh.boundary_vertices()[i]], u0[static_cast<Eigen::Index>(i)]);
    }
    const Eigen::VectorXd r = op.A * u;
    for (Eigen::Index v = 0; v < mesh.num_vertices(); ++v) {
        if (!mesh.is_boundary(v)) EXPECT_LT(std::abs(r[v]), 1e-8 * oracles::max_abs(op.A) * u.norm());
    }
    const auto natural = assemble_operator(mesh, harmonic_cross_field_2d(mesh), 0.1, BcKind::Natural);
    EXPECT_THROW(apply_dirichlet_partition(natural, mesh, u0), InvalidArgument);
}

TEST(Diffuse, ConstantPreservedAndMassConserved)
{
    const auto mesh = make_disk(5);
    const auto field = harmonic_cross_field_2d(mesh);
    for (auto bc : {BcKind::Natural, BcKind::Neumann}) {
        const auto op = assemble_operator(mesh, field, 0.2, bc);
        const Eigen::VectorXd c = Eigen::VectorXd::Constant(mesh.num_vertices(), 1.25);
        EXPECT_LT((diffuse(op, c, 1e-3) - c).cwiseAbs().maxCoeff(), 1e-12);
        std::mt19937_64 rng(12);
        const Eigen::VectorXd u0 = random_vector(mesh.num_vertices(), rng);
        const Eigen::VectorXd u = diffuse(op, u0, 1e-3);
        EXPECT_NEAR(op.mass.dot(u), op.mass.dot(u0), 1e-9 * op.mass.dot(u0.cwiseAbs()));
        EXPECT_LT((diffuse(op, u0, 1e-12) - u0).norm(), 1e-6 * u0.norm());
    }
}

TEST(Diffuse, EpsilonOneIsFieldIndependent)
{
    const auto mesh = make_disk(5);
    std::mt19937_64 rng(13);
    const Eigen::VectorXd u0 = random_vector(mesh.num_vertices(), rng);
    const auto a = assemble_operator(mesh, oracles::random_field(mesh, false, rng), 1.0, BcKind::Neumann);
    const auto b = assemble_operator(mesh, constant_field(mesh, OdecoFrame::axis_aligned(2)), 1.0, BcKind::Neumann);
    EXPECT_LT((diffuse(a, u0, 1e-5) - diffuse(b, u0, 1e-5)).norm(), 1e-10 * u0.norm());
}

