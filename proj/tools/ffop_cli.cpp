// Command-line driver: mesh and field generation, operator assembly, the
// boundary-value, diffusion, eigen, distance and coloring problems, and the
// validation experiments. Every run that writes into an output directory also
// writes manifest.json there.

#include <ffop/analytic.h>
#include <ffop/apps.h>
#include <ffop/error.h>
#include <ffop/experiments.h>
#include <ffop/export.h>
#include <ffop/fem.h>
#include <ffop/framefield.h>
#include <ffop/mesh.h>
#include <ffop/mesh_gen.h>
#include <ffop/mesh_io.h>
#include <ffop/solve.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Core>

#include <chrono>
#include <deque>
#include <iomanip>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>

#ifndef FFOP_VERSION
#define FFOP_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kInput = 2, kNumerical = 3, kValidationFailed = 4 };

/// Raised for invalid flag combinations detected after parsing.
class UsageError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Records inputs, outputs and stage timings of one run.
class Manifest
{
public:
    Manifest(std::string command, const std::vector<std::string>& argv)
    : m_start(std::chrono::steady_clock::now())
    {
        m_doc["command"] = std::move(command);
        m_doc["argv"] = argv;
        m_doc["version"] = FFOP_VERSION;
        m_doc["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                         std::to_string(EIGEN_MINOR_VERSION);
        m_doc["inputs"] = json::array();
        m_doc["outputs"] = json::array();
        m_doc["warnings"] = json::array();
        m_doc["timings"] = json::object();
        m_stage = m_start;
    }

    void input(const fs::path& path) { m_doc["inputs"].push_back({{"path", path.string()}, {"fnv1a", ffop::file_hash(path)}}); }
    void output(const fs::path& path) { m_doc["outputs"].push_back({{"path", path.filename().string()}, {"fnv1a", ffop::file_hash(path)}}); }
    void warn(const std::vector<std::string>& warnings)
    {
        for (const auto& w : warnings) {
            std::cerr << "warning: " << w << '\n';
            m_doc["warnings"].push_back(w);
        }
    }
    void set(const std::string& key, json value) { m_doc[key] = std::move(value); }

    void stage(const std::string& name)
    {
        const auto now = std::chrono::steady_clock::now();
        m_doc["timings"][name] = std::chrono::duration<double>(now - m_stage).count();
        m_stage = now;
    }

    void write(const fs::path& dir)
    {
        m_doc["timings"]["total"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - m_start).count();
        ffop::save_text(dir / "manifest.json", m_doc.dump(2) + "\n");
    }

private:
    json m_doc;
    std::chrono::steady_clock::time_point m_start;
    std::chrono::steady_clock::time_point m_stage;
};

struct Common
{
    std::string mesh;
    std::string field;
    std::string out = ".";
    std::string bc = "neumann";
    std::vector<double> epsilons;
    std::string solver = "auto";
};

ffop::SolverPath solver_path(const std::string& name)
{
    if (name == "auto") return ffop::SolverPath::Auto;
    if (name == "dense") return ffop::SolverPath::Dense;
    if (name == "direct") return ffop::SolverPath::SparseDirect;
    if (name == "cg") return ffop::SolverPath::ConjugateGradient;
    throw UsageError("unknown solver '" + name + "'");
}

void check_epsilons(const std::vector<double>& eps)
{
    if (eps.empty()) throw UsageError("at least one epsilon is required");
    for (double e : eps) {
        if (!(e > 0 && e <= 1)) throw ffop::InvalidArgument("epsilon must lie in (0, 1], got " + std::to_string(e));
    }
}

fs::path prepare_output(const std::string& dir)
{
    fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec || !fs::is_directory(p)) throw ffop::Error("cannot create output directory '" + dir + "'");
    return p;
}

ffop::SimplicialMesh load_input_mesh(const std::string& path, Manifest& manifest)
{
    if (!fs::exists(path)) throw ffop::ParseError("mesh file '" + path + "' does not exist");
    manifest.input(path);
    return ffop::load_mesh(path);
}

ffop::FrameField load_input_field(const std::string& path, const ffop::SimplicialMesh& mesh, Manifest& manifest)
{
    if (!fs::exists(path)) throw ffop::ParseError("field file '" + path + "' does not exist");
    manifest.input(path);
    ffop::FrameField field = ffop::load_field(path, mesh.dim());
    field.require_compatible(mesh);
    return field;
}

std::string epsilon_tag(double eps)
{
    std::ostringstream ss;
    ss << eps;
    return ss.str();
}

Eigen::MatrixXd column(const Eigen::VectorXd& v)
{
    return v;
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

Eigen::VectorXd parse_vector(const std::string& s, int size, const std::string& what)
{
    const auto parts = split(s, ',');
    if (static_cast<int>(parts.size()) != size) throw UsageError(what + " needs " + std::to_string(size) + " comma-separated values");
    Eigen::VectorXd v(size);
    for (int i = 0; i < size; ++i) {
        try {
            v[i] = std::stod(parts[static_cast<size_t>(i)]);
        } catch (const std::exception&) {
            throw UsageError(what + ": invalid number '" + parts[static_cast<size_t>(i)] + "'");
        }
    }
    return v;
}

/// Boundary values from a one-column CSV (one row per boundary vertex) or `square-wave:<frequency>`.
Eigen::MatrixXd boundary_data(const std::string& spec, const ffop::SimplicialMesh& mesh, int columns, Manifest& manifest)
{
    const auto nb = static_cast<Eigen::Index>(mesh.boundary_vertices().size());
    if (spec.rfind("square-wave:", 0) == 0) {
        if (columns != 1) throw UsageError("square-wave data has one channel");
        return column(ffop::square_wave_boundary(mesh, std::stoi(spec.substr(12))));
    }
    if (spec == "sectors") {
        // Three boundary sectors colored red, green and blue.
        Eigen::MatrixXd c = Eigen::MatrixXd::Zero(nb, 3);
        const auto& b = mesh.boundary_vertices();
        const Eigen::VectorXd centroid = mesh.vertices().colwise().mean().transpose();
        for (Eigen::Index i = 0; i < nb; ++i) {
            const Eigen::VectorXd d = mesh.vertex(b[static_cast<size_t>(i)]) - centroid;
            const double phi = std::atan2(d[1], d[0]) + std::numbers::pi;
            c(i, std::min(2, static_cast<int>(3 * phi / (2 * std::numbers::pi)))) = 1;
        }
        return c;
    }
    if (!fs::exists(spec)) throw ffop::ParseError("boundary data file '" + spec + "' does not exist");
    manifest.input(spec);
    std::ifstream in(spec);
    Eigen::MatrixXd data(nb, columns);
    std::string line;
    Eigen::Index row = 0;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto parts = split(line, ',');
        if (static_cast<int>(parts.size()) != columns) throw ffop::ParseError("boundary data: wrong number of columns");
        if (row >= nb) throw ffop::ParseError("boundary data has more rows than boundary vertices");
        for (int c = 0; c < columns; ++c) {
            try {
                data(row, c) = std::stod(parts[static_cast<size_t>(c)]);
            } catch (const std::exception&) {
                throw ffop::ParseError("boundary data: invalid number '" + parts[static_cast<size_t>(c)] + "'");
            }
        }
        ++row;
    }
    if (row != nb) throw ffop::ParseError("boundary data has " + std::to_string(row) + " rows, expected " + std::to_string(nb));
    return data;
}

int write_report(const fs::path& dir, const std::string& name, const std::string& csv, bool passed, Manifest& manifest,
                 json summary)
{
    const fs::path report = dir / name;
    ffop::save_text(report, csv);
    manifest.output(report);
    summary["passed"] = passed;
    manifest.set("summary", summary);
    manifest.write(dir);
    std::cout << summary.dump(2) << '\n' << (passed ? "PASS" : "FAIL") << '\n';
    return passed ? kOk : kValidationFailed;
}

template <typename T>
std::string join(const std::vector<T>& values)
{
    std::ostringstream ss;
    for (size_t i = 0; i < values.size(); ++i) ss << (i ? ";" : "") << values[i];
    return ss.str();
}

} // namespace

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv, argv + argc);
    if (const char* threads = std::getenv("FFOP_NUM_THREADS")) Eigen::setNbThreads(std::max(1, std::atoi(threads)));

    CLI::App app{"Frame field operators on simplicial meshes"};
    app.require_subcommand(1);
    std::function<int()> action;

    // mesh gen / mesh refine
    auto* mesh_cmd = app.add_subcommand("mesh", "Generate or refine meshes");
    mesh_cmd->require_subcommand(1);
    std::string shape = "square";
    int mesh_n = 8;
    double inner = 0.4;
    std::string mesh_out;
    auto* mesh_gen = mesh_cmd->add_subcommand("gen", "Generate a mesh");
    mesh_gen->add_option("--shape", shape, "square | disk | annulus | cube | ball | tet")->check(CLI::IsMember({"square", "disk", "annulus", "cube", "ball", "tet"}));
    mesh_gen->add_option("-n,--resolution", mesh_n, "Cells per side (square, cube, ball) or rings (disk, annulus)")->check(CLI::PositiveNumber);
    mesh_gen->add_option("--inner-radius", inner, "Annulus inner radius");
    mesh_gen->add_option("-o,--out", mesh_out, "Output mesh (.off, .obj, .mesh)")->required();
    mesh_gen->callback([&] {
        action = [&] {
            ffop::SimplicialMesh m;
            if (shape == "square") m = ffop::make_square(mesh_n);
            else if (shape == "disk") m = ffop::make_disk(mesh_n);
            else if (shape == "annulus") m = ffop::make_annulus(mesh_n, inner);
            else if (shape == "cube") m = ffop::make_cube(mesh_n);
            else if (shape == "ball") m = ffop::make_ball(mesh_n);
            else m = ffop::make_unit_tetrahedron();
            ffop::save_mesh(m, mesh_out);
            std::cout << m.num_vertices() << " vertices, " << m.num_elements() << " elements\n";
            return kOk;
        };
    });

    std::string refine_in;
    int refine_levels = 1;
    auto* mesh_refine = mesh_cmd->add_subcommand("refine", "Uniform midpoint refinement");
    mesh_refine->add_option("--mesh", refine_in, "Input mesh")->required();
    mesh_refine->add_option("--levels", refine_levels, "Number of refinements")->check(CLI::NonNegativeNumber);
    mesh_refine->add_option("-o,--out", mesh_out, "Output mesh")->required();
    mesh_refine->callback([&] {
        action = [&] {
            if (!fs::exists(refine_in)) throw ffop::ParseError("mesh file '" + refine_in + "' does not exist");
            ffop::SimplicialMesh m = ffop::load_mesh(refine_in);
            for (int i = 0; i < refine_levels; ++i) m = ffop::refine_uniform(m);
            ffop::save_mesh(m, mesh_out);
            std::cout << m.num_vertices() << " vertices, " << m.num_elements() << " elements\n";
            return kOk;
        };
    });

    // field gen
    auto* field_cmd = app.add_subcommand("field", "Frame field generation");
    field_cmd->require_subcommand(1);
    auto* field_gen = field_cmd->add_subcommand("gen", "Generate a frame field");
    std::string kind = "constant";
    std::string field_mesh;
    std::string field_out;
    double angle = 0;
    std::string quat = "1,0,0,0";
    std::string weights;
    std::string axis = "0,0,1";
    double pitch = 0;
    std::string map_name = "poly";
    double map_c = 0;
    std::string warped_out;
    field_gen->add_option("--kind", kind, "constant | harmonic2d | helical | coframe")->check(CLI::IsMember({"constant", "harmonic2d", "helical", "coframe"}));
    field_gen->add_option("--mesh", field_mesh, "Mesh the field lives on (base mesh for coframe)")->required();
    field_gen->add_option("-o,--out", field_out, "Output field CSV")->required();
    field_gen->add_option("--angle", angle, "Constant 2D frame angle (radians)");
    field_gen->add_option("--quat", quat, "Constant 3D frame rotation w,x,y,z");
    field_gen->add_option("--weights", weights, "Constant frame weights, comma-separated");
    field_gen->add_option("--axis", axis, "Helical axis x,y,z");
    field_gen->add_option("--pitch", pitch, "Helical twist per unit length (radians)");
    field_gen->add_option("--map", map_name, "Conformal map: poly | exp")->check(CLI::IsMember({"poly", "exp"}));
    field_gen->add_option("--c", map_c, "Conformal map parameter");
    field_gen->add_option("--warped-mesh", warped_out, "Where to write the warped mesh (coframe)");
    field_gen->callback([&] {
        action = [&] {
            if (!fs::exists(field_mesh)) throw ffop::ParseError("mesh file '" + field_mesh + "' does not exist");
            const ffop::SimplicialMesh m = ffop::load_mesh(field_mesh);
            ffop::FrameField f;
            if (kind == "constant") {
                const int d = m.dim();
                const Eigen::VectorXd w = weights.empty() ? Eigen::VectorXd::Ones(d) : parse_vector(weights, d, "--weights");
                ffop::OdecoFrame frame;
                if (d == 2) {
                    frame = ffop::OdecoFrame::from_angle(angle, w[0], w[1]);
                } else {
                    const Eigen::VectorXd q = parse_vector(quat, 4, "--quat");
                    frame = ffop::OdecoFrame::from_rotation(Eigen::Quaterniond(q[0], q[1], q[2], q[3]), w);
                }
                f = ffop::constant_field(m, frame);
            } else if (kind == "harmonic2d") {
                f = ffop::harmonic_cross_field_2d(m);
                if (!f.singular_vertices().empty()) {
                    std::cerr << "note: " << f.singular_vertices().size() << " singular vertices (angle set to 0)\n";
                }
            } else if (kind == "helical") {
                const Eigen::VectorXd a = parse_vector(axis, 3, "--axis");
                f = ffop::helical_field_3d(m, a, pitch);
            } else {
                if (warped_out.empty()) throw UsageError("--kind coframe needs --warped-mesh");
                const ffop::ConformalMap map = ffop::conformal_warp(ffop::warp_kind_from_string(map_name), map_c, m);
                ffop::save_mesh(ffop::warp_mesh(m, map), warped_out);
                f = ffop::warped_coframe_field(m, map);
            }
            ffop::save_field(f, field_out);
            std::cout << "kind " << ffop::to_string(f.kind()) << ", " << f.num_vertices() << " vertices\n";
            return kOk;
        };
    });

    // Shared operator options.
    std::deque<Common> commons;
    auto add_operator_options = [&](CLI::App* sub, bool multiple_eps, std::vector<double> default_eps) -> Common& {
        Common& common = commons.emplace_back();
        common.epsilons = default_eps;
        sub->add_option("--mesh", common.mesh, "Mesh file")->required();
        sub->add_option("--field", common.field, "Field CSV")->required();
        sub->add_option("-o,--out", common.out, "Output directory");
        sub->add_option("--bc", common.bc, "natural | neumann")->check(CLI::IsMember({"natural", "neumann"}));
        sub->add_option("--solver", common.solver, "auto | dense | direct | cg")->check(CLI::IsMember({"auto", "dense", "direct", "cg"}));
        if (multiple_eps) {
            sub->add_option("--epsilon", common.epsilons, "Epsilon values")->delimiter(',');
        } else {
            sub->add_option("--epsilon", common.epsilons, "Epsilon")->expected(1);
        }
        return common;
    };

    auto* assemble_cmd = app.add_subcommand("assemble", "Write the operator and vertex mass as MatrixMarket");
    Common& common_assemble = add_operator_options(assemble_cmd, false, {0.1});
    assemble_cmd->callback([&] {
        action = [&] {
            check_epsilons(common_assemble.epsilons);
            const fs::path out = prepare_output(common_assemble.out);
            Manifest manifest("assemble", args);
            const auto mesh = load_input_mesh(common_assemble.mesh, manifest);
            const auto field = load_input_field(common_assemble.field, mesh, manifest);
            manifest.stage("load");
            const auto op = ffop::assemble_operator(mesh, field, common_assemble.epsilons.front(), ffop::bc_kind_from_string(common_assemble.bc));
            manifest.warn(op.warnings);
            manifest.stage("assemble");
            ffop::save_matrix_market(out / "operator.mtx", op.A, true);
            ffop::save_diagonal_matrix_market(out / "mass.mtx", op.mass);
            manifest.output(out / "operator.mtx");
            manifest.output(out / "mass.mtx");
            manifest.set("epsilon", op.epsilon);
            manifest.set("bc", ffop::to_string(op.bc));
            manifest.write(out);
            return kOk;
        };
    });

    std::string boundary_spec = "square-wave:3";
    auto* dirichlet_cmd = app.add_subcommand("dirichlet", "Clamped boundary value problem");
    Common& common_dirichlet = add_operator_options(dirichlet_cmd, false, {0.1});
    dirichlet_cmd->add_option("--boundary", boundary_spec, "square-wave:<frequency> or CSV with one value per boundary vertex");
    dirichlet_cmd->callback([&] {
        action = [&] {
            check_epsilons(common_dirichlet.epsilons);
            if (common_dirichlet.bc != "neumann") throw UsageError("dirichlet requires --bc neumann");
            const fs::path out = prepare_output(common_dirichlet.out);
            Manifest manifest("dirichlet", args);
            const auto mesh = load_input_mesh(common_dirichlet.mesh, manifest);
            const auto field = load_input_field(common_dirichlet.field, mesh, manifest);
            const Eigen::VectorXd values = boundary_data(boundary_spec, mesh, 1, manifest);
            manifest.stage("load");
            const auto op = ffop::assemble_operator(mesh, field, common_dirichlet.epsilons.front(), ffop::BcKind::Neumann);
            manifest.warn(op.warnings);
            manifest.stage("assemble");
            ffop::SolveOptions opts;
            opts.path = solver_path(common_dirichlet.solver);
            const Eigen::VectorXd u = ffop::apply_dirichlet_partition(op, mesh, values, opts);
            manifest.stage("solve");
            ffop::save_vtk(out / "solution.vtk", mesh, {{"u", column(u)}});
            ffop::save_vertex_csv(out / "solution.csv", {{"u", column(u)}});
            manifest.output(out / "solution.vtk");
            manifest.output(out / "solution.csv");
            manifest.write(out);
            return kOk;
        };
    });

    double tau = 1e-5;
    std::string impulse;
    int impulse_vertex = -1;
    auto* diffuse_cmd = app.add_subcommand("diffuse", "Implicit diffusion of an impulse");
    Common& common_diffuse = add_operator_options(diffuse_cmd, true, {1, 2e-1, 4e-2, 8e-3});
    diffuse_cmd->add_option("--tau", tau, "Diffusion time")->check(CLI::PositiveNumber);
    diffuse_cmd->add_option("--impulse", impulse, "Impulse positions x,y[,z];x,y[,z];... (nearest vertices)");
    diffuse_cmd->add_option("--vertex", impulse_vertex, "Impulse vertex");
    diffuse_cmd->callback([&] {
        action = [&] {
            check_epsilons(common_diffuse.epsilons);
            const fs::path out = prepare_output(common_diffuse.out);
            Manifest manifest("diffuse", args);
            const auto mesh = load_input_mesh(common_diffuse.mesh, manifest);
            const auto field = load_input_field(common_diffuse.field, mesh, manifest);
            std::vector<Eigen::Index> sources;
            if (impulse_vertex >= 0) {
                if (impulse_vertex >= mesh.num_vertices()) throw UsageError("--vertex out of range");
                sources.push_back(impulse_vertex);
            }
            for (const auto& p : split(impulse, ';')) {
                if (p.empty()) continue;
                const Eigen::VectorXd x = parse_vector(p, mesh.dim(), "--impulse");
                Eigen::Index v = 0;
                (mesh.vertices().rowwise() - x.transpose()).rowwise().squaredNorm().minCoeff(&v);
                sources.push_back(v);
            }
            if (sources.empty()) {
                Eigen::Index v = 0;
                (mesh.vertices().rowwise() - mesh.vertices().colwise().mean()).rowwise().squaredNorm().minCoeff(&v);
                sources.push_back(v);
            }
            manifest.stage("load");
            ffop::PointData data;
            for (double eps : common_diffuse.epsilons) {
                const auto op = ffop::assemble_operator(mesh, field, eps, ffop::bc_kind_from_string(common_diffuse.bc));
                manifest.warn(op.warnings);
                Eigen::VectorXd u0 = Eigen::VectorXd::Zero(mesh.num_vertices());
                for (Eigen::Index s : sources) u0[s] += 1 / op.mass[s];
                ffop::SolveOptions opts;
                opts.path = solver_path(common_diffuse.solver);
                data.emplace_back("u_eps" + epsilon_tag(eps), column(ffop::diffuse(op, u0, tau, opts)));
                manifest.stage("eps " + epsilon_tag(eps));
            }
            ffop::save_vtk(out / "diffusion.vtk", mesh, data);
            ffop::save_vertex_csv(out / "diffusion.csv", data);
            manifest.output(out / "diffusion.vtk");
            manifest.output(out / "diffusion.csv");
            manifest.set("tau", tau);
            manifest.write(out);
            return kOk;
        };
    });

    int num_modes = 64;
    auto* eigs_cmd = app.add_subcommand("eigs", "Smallest generalized eigenpairs");
    Common& common_eigs = add_operator_options(eigs_cmd, false, {0.1});
    eigs_cmd->add_option("--num", num_modes, "Number of eigenpairs")->check(CLI::PositiveNumber);
    eigs_cmd->callback([&] {
        action = [&] {
            check_epsilons(common_eigs.epsilons);
            const fs::path out = prepare_output(common_eigs.out);
            Manifest manifest("eigs", args);
            const auto mesh = load_input_mesh(common_eigs.mesh, manifest);
            const auto field = load_input_field(common_eigs.field, mesh, manifest);
            if (num_modes >= mesh.num_vertices()) throw UsageError("--num must be below the vertex count");
            manifest.stage("load");
            const auto op = ffop::assemble_operator(mesh, field, common_eigs.epsilons.front(), ffop::bc_kind_from_string(common_eigs.bc));
            manifest.warn(op.warnings);
            manifest.stage("assemble");
            ffop::EigenOptions opts;
            opts.path = solver_path(common_eigs.solver);
            const auto eig = ffop::eigs_generalized(ffop::SparseSym(op.A, 1e-10), op.mass, num_modes, opts);
            manifest.stage("eigs");
            ffop::save_eigen_csv(out / "eigen.csv", eig);
            ffop::PointData data;
            for (Eigen::Index i = 0; i < std::min<Eigen::Index>(eig.eigenvalues.size(), 16); ++i) {
                data.emplace_back("mode" + std::to_string(i), column(eig.eigenvectors.col(i)));
            }
            ffop::save_vtk(out / "modes.vtk", mesh, data);
            manifest.output(out / "eigen.csv");
            manifest.output(out / "modes.vtk");
            manifest.set("zero_modes", static_cast<int>(eig.eigenvalues.size()) -
                                           static_cast<int>(ffop::nonzero_modes(eig.eigenvalues).size()));
            manifest.write(out);
            return kOk;
        };
    });

    int source = 0;
    int num_paths = 0;
    std::uint64_t seed = 1;
    auto* distance_cmd = app.add_subcommand("distance", "Spectral distance from a source vertex");
    Common& common_distance = add_operator_options(distance_cmd, false, {0.1});
    distance_cmd->add_option("--num", num_modes, "Nonzero modes in the embedding")->check(CLI::PositiveNumber);
    distance_cmd->add_option("--source", source, "Source vertex")->check(CLI::NonNegativeNumber);
    distance_cmd->add_option("--paths", num_paths, "Descent paths from random start vertices")->check(CLI::NonNegativeNumber);
    distance_cmd->add_option("--seed", seed, "Seed for path start vertices");
    distance_cmd->callback([&] {
        action = [&] {
            check_epsilons(common_distance.epsilons);
            if (common_distance.bc != "neumann") throw UsageError("distances use --bc neumann");
            const fs::path out = prepare_output(common_distance.out);
            Manifest manifest("distance", args);
            const auto mesh = load_input_mesh(common_distance.mesh, manifest);
            const auto field = load_input_field(common_distance.field, mesh, manifest);
            if (source >= mesh.num_vertices()) throw UsageError("--source out of range");
            manifest.stage("load");
            const auto op = ffop::assemble_operator(mesh, field, common_distance.epsilons.front(), ffop::BcKind::Neumann);
            manifest.warn(op.warnings);
            ffop::EigenOptions opts;
            opts.path = solver_path(common_distance.solver);
            const auto emb = ffop::build_embedding(op, mesh.dim(), num_modes, opts);
            manifest.stage("embedding");
            const Eigen::VectorXd d = ffop::distance_field(emb, source);
            ffop::save_vtk(out / "distance.vtk", mesh, {{"distance", column(d)}});
            ffop::save_vertex_csv(out / "distance.csv", {{"distance", column(d)}});
            manifest.output(out / "distance.vtk");
            manifest.output(out / "distance.csv");
            if (num_paths > 0) {
                std::mt19937_64 rng(seed);
                std::uniform_int_distribution<int> pick(0, static_cast<int>(mesh.num_vertices()) - 1);
                std::vector<std::vector<int>> paths;
                int reached = 0;
                for (int i = 0; i < num_paths; ++i) {
                    paths.push_back(ffop::trace_descent_path(mesh, d, pick(rng)));
                    if (paths.back().back() == source) ++reached;
                }
                ffop::save_polylines_obj(out / "paths.obj", mesh, paths);
                manifest.output(out / "paths.obj");
                manifest.set("paths_reaching_source", reached);
                std::cout << reached << " of " << num_paths << " paths reach the source\n";
            }
            manifest.set("modes", emb.size());
            manifest.set("discarded_zero_modes", emb.discarded_zero_modes);
            manifest.write(out);
            return kOk;
        };
    });

    std::string colors_spec = "sectors";
    auto* color_cmd = app.add_subcommand("color", "Bounded diffusion of boundary colors");
    Common& common_color = add_operator_options(color_cmd, false, {0.01});
    color_cmd->add_option("--colors", colors_spec, "CSV with r,g,b per boundary vertex, or 'sectors'");
    color_cmd->callback([&] {
        action = [&] {
            check_epsilons(common_color.epsilons);
            const fs::path out = prepare_output(common_color.out);
            Manifest manifest("color", args);
            const auto mesh = load_input_mesh(common_color.mesh, manifest);
            const auto field = load_input_field(common_color.field, mesh, manifest);
            const Eigen::MatrixXd colors = boundary_data(colors_spec, mesh, 3, manifest);
            manifest.stage("load");
            const bool explicit_bc = color_cmd->count("--bc") > 0;
            const auto bc = explicit_bc ? ffop::bc_kind_from_string(common_color.bc) : ffop::BcKind::Natural;
            const auto op = ffop::assemble_operator(mesh, field, common_color.epsilons.front(), bc);
            manifest.warn(op.warnings);
            ffop::BoxQPOptions opts;
            opts.path = solver_path(common_color.solver);
            const auto result = ffop::color_by_boundary(op, mesh, colors, opts);
            for (const auto& ch : result.channels) manifest.warn(ch.warnings);
            manifest.stage("solve");
            ffop::save_vtk(out / "colors.vtk", mesh, {{"rgb", result.colors}});
            ffop::save_vertex_csv(out / "colors.csv", {{"rgb", result.colors}});
            manifest.output(out / "colors.vtk");
            manifest.output(out / "colors.csv");
            manifest.set("bc", ffop::to_string(bc));
            manifest.write(out);
            return kOk;
        };
    });

    // validate
    auto* validate_cmd = app.add_subcommand("validate", "Run a validation experiment");
    validate_cmd->require_subcommand(1);
    std::string vout = ".";
    std::vector<int> cells{46, 92, 184};
    std::vector<double> veps;
    int vmodes = 20;
    std::string vbc = "both";

    auto* v_square = validate_cmd->add_subcommand("square-spectrum", "Discrete vs analytic spectrum on the square");
    v_square->add_option("--cells", cells, "Cells per side for each resolution")->delimiter(',');
    v_square->add_option("--epsilon", veps, "Epsilon values")->delimiter(',');
    v_square->add_option("--modes", vmodes, "Nonzero modes compared")->check(CLI::PositiveNumber);
    v_square->add_option("--bc", vbc, "neumann | natural | both")->check(CLI::IsMember({"neumann", "natural", "both"}));
    v_square->add_option("-o,--out", vout, "Output directory");
    v_square->callback([&] {
        action = [&] {
            if (veps.empty()) veps = {1, 0.1};
            check_epsilons(veps);
            const fs::path out = prepare_output(vout);
            Manifest manifest("validate square-spectrum", args);
            std::ostringstream csv;
            csv << std::setprecision(17) << "bc,epsilon,cells,mean_edge,mode,analytic,discrete,abs_error,rel_error\n";
            json summary = json::array();
            bool passed = true;
            std::vector<ffop::BcKind> kinds;
            if (vbc != "natural") kinds.push_back(ffop::BcKind::Neumann);
            if (vbc != "neumann") kinds.push_back(ffop::BcKind::Natural);
            for (auto bc : kinds) {
                for (double eps : veps) {
                    const auto study = ffop::square_spectrum_study(cells, eps, vmodes, bc);
                    for (const auto& level : study.levels) {
                        for (Eigen::Index j = 0; j < study.analytic.size(); ++j) {
                            const double err = std::abs(level.discrete[j] - study.analytic[j]);
                            csv << ffop::to_string(bc) << ',' << eps << ',' << level.cells << ',' << level.mean_edge << ','
                                << j + 1 << ',' << study.analytic[j] << ',' << level.discrete[j] << ',' << err << ','
                                << err / study.analytic[j] << '\n';
                        }
                    }
                    const double mono = study.monotone_fraction();
                    const double rel = study.finest_relative_error(std::min(10, vmodes));
                    const bool ok = mono >= 0.9 && rel < 0.05;
                    // The cosine lattice is the weak-Neumann spectrum; natural BC is reported only.
                    if (bc == ffop::BcKind::Neumann) passed = passed && ok;
                    summary.push_back({{"bc", ffop::to_string(bc)}, {"epsilon", eps}, {"monotone_fraction", mono},
                                       {"finest_relative_error_first10", rel}, {"criteria_met", ok}});
                    manifest.stage(ffop::to_string(bc) + " eps " + epsilon_tag(eps));
                }
            }
            if (kinds.size() == 1 && kinds.front() == ffop::BcKind::Natural) passed = false;
            return write_report(out, "square_spectrum.csv", csv.str(), passed, manifest, {{"studies", summary}});
        };
    });

    std::string domain = "disk";
    int base = 10;
    int levels = 3;
    std::vector<int> study_modes{10, 20, 30, 40};
    auto* v_refine = validate_cmd->add_subcommand("refine-spectrum", "Eigenvalue convergence on a refinement hierarchy");
    v_refine->add_option("--domain", domain, "disk (harmonic cross field) | ball (constant field)")->check(CLI::IsMember({"disk", "ball"}));
    v_refine->add_option("--base", base, "Base resolution: disk rings or ball cells per axis")->check(CLI::PositiveNumber);
    v_refine->add_option("--levels", levels, "Number of refinements")->check(CLI::PositiveNumber);
    v_refine->add_option("--modes", study_modes, "1-based nonzero mode numbers")->delimiter(',');
    v_refine->add_option("--epsilon", veps, "Epsilon")->expected(1);
    v_refine->add_option("-o,--out", vout, "Output directory");
    v_refine->callback([&] {
        action = [&] {
            if (veps.empty()) veps = {0.1};
            check_epsilons(veps);
            const fs::path out = prepare_output(vout);
            Manifest manifest("validate refine-spectrum", args);
            const auto hierarchy = ffop::refinement_hierarchy(domain == "disk" ? ffop::make_disk(base) : ffop::make_ball(base), levels);
            std::vector<ffop::FrameField> fields;
            if (domain == "disk") {
                fields = ffop::resampled_fields(hierarchy, ffop::harmonic_cross_field_2d(hierarchy.back()));
            } else {
                for (const auto& m : hierarchy) fields.push_back(ffop::constant_field(m, ffop::OdecoFrame::axis_aligned(3)));
            }
            manifest.stage("setup");
            const auto study = ffop::refinement_study(hierarchy, fields, veps.front(), ffop::BcKind::Neumann, study_modes);
            manifest.stage("eigs");
            std::ostringstream csv;
            csv << std::setprecision(17) << "level,mean_edge,mode,eigenvalue,error_vs_finest\n";
            for (size_t l = 0; l < hierarchy.size(); ++l) {
                for (int m : study_modes) {
                    if (study.eigenvalues[l].size() < m) continue;
                    csv << l << ',' << study.mean_edges[l] << ',' << m << ',' << study.eigenvalues[l][m - 1] << ','
                        << std::abs(study.eigenvalues[l][m - 1] - study.eigenvalues.back()[m - 1]) << '\n';
                }
            }
            json errors = json::object();
            const auto e = study.errors();
            for (size_t i = 0; i < e.size(); ++i) errors[std::to_string(study_modes[i])] = e[i];
            return write_report(out, "refine_spectrum.csv", csv.str(), study.monotone(), manifest,
                                {{"domain", domain}, {"mean_edges", study.mean_edges}, {"errors", errors}});
        };
    });

    int warp_cells = 32;
    std::vector<double> warp_c{0.05, 0.025, 0.0125, 0};
    int warp_modes = 30;
    auto* v_warp = validate_cmd->add_subcommand("warp", "Constant field vs coframe field on a conformally warped square");
    v_warp->add_option("--cells", warp_cells, "Cells per side of the base square")->check(CLI::PositiveNumber);
    v_warp->add_option("--map", map_name, "poly | exp")->check(CLI::IsMember({"poly", "exp"}));
    v_warp->add_option("--c", warp_c, "Map parameters, strongest first")->delimiter(',');
    v_warp->add_option("--modes", warp_modes, "Nonzero modes compared")->check(CLI::PositiveNumber);
    v_warp->add_option("--epsilon", veps, "Epsilon")->expected(1);
    v_warp->add_option("-o,--out", vout, "Output directory");
    v_warp->callback([&] {
        action = [&] {
            if (veps.empty()) veps = {0.1};
            check_epsilons(veps);
            const fs::path out = prepare_output(vout);
            Manifest manifest("validate warp", args);
            const auto study = ffop::warp_study(ffop::make_square(warp_cells), ffop::warp_kind_from_string(map_name), warp_c,
                                                veps.front(), warp_modes, ffop::BcKind::Neumann);
            manifest.stage("eigs");
            std::ostringstream csv;
            csv << std::setprecision(17) << "c,mode,unwarped,warped,rel_deviation\n";
            std::vector<double> nonzero_c;
            bool passed = true;
            for (size_t i = 0; i < warp_c.size(); ++i) {
                for (Eigen::Index j = 0; j < std::min(study.unwarped[i].size(), study.warped[i].size()); ++j) {
                    csv << warp_c[i] << ',' << j + 1 << ',' << study.unwarped[i][j] << ',' << study.warped[i][j] << ','
                        << std::abs(study.warped[i][j] - study.unwarped[i][j]) / study.unwarped[i][j] << '\n';
                }
                if (warp_c[i] == 0) {
                    passed = passed && study.median_deviation[i] < 1e-10;
                } else {
                    nonzero_c.push_back(study.median_deviation[i]);
                }
            }
            passed = passed && ffop::strictly_decreasing(nonzero_c);
            return write_report(out, "warp.csv", csv.str(), passed, manifest,
                                {{"c", warp_c}, {"median_deviation", study.median_deviation}});
        };
    });

    int frequency = 3;
    auto* v_dirichlet = validate_cmd->add_subcommand("dirichlet-convergence", "Square-wave Dirichlet problem on a disk hierarchy");
    v_dirichlet->add_option("--base", base, "Base disk rings")->check(CLI::PositiveNumber);
    v_dirichlet->add_option("--levels", levels, "Number of refinements")->check(CLI::PositiveNumber);
    v_dirichlet->add_option("--frequency", frequency, "Square-wave frequency")->check(CLI::PositiveNumber);
    v_dirichlet->add_option("--epsilon", veps, "Epsilon")->expected(1);
    v_dirichlet->add_option("-o,--out", vout, "Output directory");
    v_dirichlet->callback([&] {
        action = [&] {
            if (veps.empty()) veps = {0.1};
            check_epsilons(veps);
            const fs::path out = prepare_output(vout);
            Manifest manifest("validate dirichlet-convergence", args);
            const auto hierarchy = ffop::refinement_hierarchy(ffop::make_disk(base), levels);
            const auto fields = ffop::resampled_fields(hierarchy, ffop::harmonic_cross_field_2d(hierarchy.back()));
            const auto study = ffop::dirichlet_study(hierarchy, fields, veps.front(), frequency);
            manifest.stage("solve");
            std::ostringstream csv;
            csv << std::setprecision(17) << "level,mean_edge,l2_difference_to_previous\n";
            for (size_t l = 1; l < hierarchy.size(); ++l) {
                csv << l << ',' << study.mean_edges[l] << ',' << study.successive_differences[l - 1] << '\n';
            }
            ffop::save_vtk(out / "dirichlet_finest.vtk", hierarchy.back(), {{"u", column(study.solutions.back())}});
            manifest.output(out / "dirichlet_finest.vtk");
            return write_report(out, "dirichlet_convergence.csv", csv.str(),
                                ffop::strictly_decreasing(study.successive_differences), manifest,
                                {{"mean_edges", study.mean_edges}, {"differences", study.successive_differences}});
        };
    });

    int rings = 100;
    int rays = 360;
    auto* v_aniso = validate_cmd->add_subcommand("anisotropy", "Impulse response anisotropy on the disk");
    v_aniso->add_option("--rings", rings, "Disk rings")->check(CLI::PositiveNumber);
    v_aniso->add_option("--tau", tau, "Diffusion time")->check(CLI::PositiveNumber);
    v_aniso->add_option("--epsilon", veps, "Epsilon values, decreasing")->delimiter(',');
    v_aniso->add_option("--rays", rays, "Rays for the isoline")->check(CLI::PositiveNumber);
    v_aniso->add_option("-o,--out", vout, "Output directory");
    v_aniso->callback([&] {
        action = [&] {
            if (veps.empty()) veps = {1, 2e-1, 4e-2, 8e-3};
            check_epsilons(veps);
            const fs::path out = prepare_output(vout);
            Manifest manifest("validate anisotropy", args);
            const auto mesh = ffop::make_disk(rings);
            const auto field = ffop::constant_field(mesh, ffop::OdecoFrame::axis_aligned(2));
            std::ostringstream csv;
            csv << std::setprecision(17) << "epsilon,ray,angle,radius\n";
            std::vector<double> ratios;
            ffop::PointData data;
            for (double eps : veps) {
                const auto m = ffop::measure_anisotropy(mesh, field, eps, tau, Eigen::Vector2d::Zero(), rays);
                for (int r = 0; r < rays; ++r) {
                    csv << eps << ',' << r << ',' << 2 * std::numbers::pi * r / rays << ',' << m.radii[r] << '\n';
                }
                ratios.push_back(m.ratio);
                data.emplace_back("u_eps" + epsilon_tag(eps), column(m.response));
                manifest.stage("eps " + epsilon_tag(eps));
            }
            ffop::save_vtk(out / "anisotropy.vtk", mesh, data);
            manifest.output(out / "anisotropy.vtk");
            bool passed = true;
            for (size_t i = 1; i < ratios.size(); ++i) {
                if (!(veps[i] < veps[i - 1]) || !(ratios[i] > ratios[i - 1])) passed = false;
            }
            for (size_t i = 0; i < veps.size(); ++i) {
                if (veps[i] == 1 && !(ratios[i] < 1.05)) passed = false;
            }
            return write_report(out, "anisotropy.csv", csv.str(), passed, manifest, {{"epsilon", veps}, {"ratio", ratios}});
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        return action ? action() : kUsage;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const ffop::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kNumerical;
    } catch (const ffop::Error& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kInput;
    } catch (const std::exception& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kInput;
    }
}
