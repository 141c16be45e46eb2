#include <ffop/error.h>
#include <ffop/export.h>
#include <ffop/framefield.h>
#include <ffop/solve.h>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace ffop {

namespace {

constexpr double kSingularMagnitude = 1e-6;
constexpr double kKindTolerance = 1e-9;

FieldKind infer_kind(const std::vector<OdecoFrame>& frames)
{
    bool unit = true;
    bool equal = true;
    for (const auto& f : frames) {
        const double wmax = f.weights.maxCoeff();
        const double wmin = f.weights.minCoeff();
        if (wmax - wmin > kKindTolerance * std::max(1.0, wmax)) equal = false;
        if ((f.weights.array() - 1.0).abs().maxCoeff() > kKindTolerance) unit = false;
    }
    if (unit) return FieldKind::Octahedral;
    if (equal) return FieldKind::ConformalOctahedral;
    return FieldKind::Odeco;
}

OdecoFrame cross_from_representation(double c, double s)
{
    return OdecoFrame::from_angle(0.25 * std::atan2(s, c));
}

// Representative of q's symmetry class closest to `reference`, sign included.
Eigen::Quaterniond match_symmetry(const Eigen::Quaterniond& reference, const Eigen::Quaterniond& q)
{
    Eigen::Quaterniond best = q;
    double best_dot = -1;
    for (const auto& g : octahedral_symmetries()) {
        Eigen::Quaterniond candidate = q * g;
        double d = reference.dot(candidate);
        if (d < 0) {
            candidate.coeffs() *= -1;
            d = -d;
        }
        if (d > best_dot) {
            best_dot = d;
            best = candidate;
        }
    }
    return best;
}

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
}

double parse_number(const std::string& token, size_t line_no)
{
    try {
        size_t used = 0;
        const double v = std::stod(token, &used);
        while (used < token.size() && std::isspace(static_cast<unsigned char>(token[used]))) ++used;
        if (used != token.size()) throw std::invalid_argument(token);
        return v;
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line_no) + ": invalid number '" + token + "'");
    }
}

bool is_header(const std::string& line)
{
    for (char ch : line) {
        if (std::isalpha(static_cast<unsigned char>(ch)) && ch != 'e' && ch != 'E') return true;
    }
    return false;
}

} // namespace

std::string to_string(FieldKind kind)
{
    switch (kind) {
    case FieldKind::Octahedral: return "octahedral";
    case FieldKind::ConformalOctahedral: return "conformal_octahedral";
    case FieldKind::Odeco: return "odeco";
    }
    return "unknown";
}

FrameField FrameField::from_frames(std::vector<OdecoFrame> frames)
{
    if (frames.empty()) throw InvalidArgument("frame field needs at least one vertex");
    FrameField field;
    field.m_dim = frames.front().dim();
    field.m_forms.reserve(frames.size());
    field.m_norms.reserve(frames.size());
    for (const auto& f : frames) {
        if (f.dim() != field.m_dim) throw InvalidArgument("frame field mixes dimensions");
        field.m_forms.push_back(odeco_to_form(f));
        field.m_norms.push_back(spectral_norm(f));
    }
    field.m_kind = infer_kind(frames);
    field.m_frames = std::move(frames);
    return field;
}

void FrameField::require_compatible(const SimplicialMesh& mesh) const
{
    if (m_dim != mesh.dim()) {
        throw InvalidArgument("field dimension " + std::to_string(m_dim) + " does not match mesh dimension " +
                              std::to_string(mesh.dim()));
    }
    if (num_vertices() != mesh.num_vertices()) {
        throw InvalidArgument("field has " + std::to_string(num_vertices()) + " vertices, mesh has " +
                              std::to_string(mesh.num_vertices()));
    }
}

FrameField constant_field(const SimplicialMesh& mesh, const OdecoFrame& frame)
{
    if (frame.dim() != mesh.dim()) throw InvalidArgument("frame dimension does not match mesh dimension");
    validate_frame(frame);
    return FrameField::from_frames(std::vector<OdecoFrame>(static_cast<size_t>(mesh.num_vertices()), frame));
}

FrameField harmonic_cross_field_2d(const SimplicialMesh& mesh)
{
    if (mesh.dim() != 2) throw InvalidArgument("harmonic cross field requires a planar mesh");
    const auto& boundary = mesh.boundary_vertices();
    if (boundary.empty()) throw InvalidArgument("harmonic cross field requires a mesh with boundary");

    const Eigen::Index n = mesh.num_vertices();
    Eigen::MatrixXd rep = Eigen::MatrixXd::Zero(n, 2);

    const auto& facets = mesh.boundary_facets();
    for (Eigen::Index f = 0; f < facets.rows(); ++f) {
        const Eigen::Vector2d d = (mesh.vertex(facets(f, 1)) - mesh.vertex(facets(f, 0)));
        const double theta = std::atan2(d.y(), d.x());
        const Eigen::RowVector2d r = d.norm() * Eigen::RowVector2d(std::cos(4 * theta), std::sin(4 * theta));
        rep.row(facets(f, 0)) += r;
        rep.row(facets(f, 1)) += r;
    }
    for (int v : boundary) {
        const double len = rep.row(v).norm();
        if (len > 0) rep.row(v) /= len;
    }

    std::vector<int> interior;
    for (Eigen::Index v = 0; v < n; ++v) {
        if (!mesh.is_boundary(v)) interior.push_back(static_cast<int>(v));
    }
    if (!interior.empty()) {
        const SparseMatrix L = stiffness_matrix(mesh);
        const SparseMatrix L_ii = submatrix(L, interior, interior);
        const SparseMatrix L_ib = submatrix(L, interior, boundary);
        Eigen::MatrixXd rep_b(static_cast<Eigen::Index>(boundary.size()), 2);
        for (size_t i = 0; i < boundary.size(); ++i) rep_b.row(static_cast<Eigen::Index>(i)) = rep.row(boundary[i]);
        const Eigen::MatrixXd rhs = -(L_ib * rep_b);
        const Eigen::MatrixXd rep_i = SparseCholesky(L_ii).solve(rhs);
        for (size_t i = 0; i < interior.size(); ++i) rep.row(interior[i]) = rep_i.row(static_cast<Eigen::Index>(i));
    }

    std::vector<OdecoFrame> frames;
    frames.reserve(static_cast<size_t>(n));
    std::vector<int> singular;
    for (Eigen::Index v = 0; v < n; ++v) {
        if (rep.row(v).norm() < kSingularMagnitude) {
            singular.push_back(static_cast<int>(v));
            frames.push_back(OdecoFrame::from_angle(0.0));
        } else {
            frames.push_back(cross_from_representation(rep(v, 0), rep(v, 1)));
        }
    }
    FrameField field = FrameField::from_frames(std::move(frames));
    field.set_singular_vertices(std::move(singular));
    return field;
}

Eigen::MatrixXd cross_representation(const FrameField& field)
{
    if (field.dim() != 2) throw InvalidArgument("cross representation is defined for planar fields");
    Eigen::MatrixXd rep(field.num_vertices(), 2);
    for (Eigen::Index v = 0; v < field.num_vertices(); ++v) {
        const auto& c = field.frame(v).components;
        const double theta = std::atan2(c(1, 0), c(0, 0));
        rep(v, 0) = std::cos(4 * theta);
        rep(v, 1) = std::sin(4 * theta);
    }
    return rep;
}

FrameField helical_field_3d(const SimplicialMesh& mesh, const Eigen::Vector3d& axis, double pitch)
{
    if (mesh.dim() != 3) throw InvalidArgument("helical field requires a volumetric mesh");
    const double len = axis.norm();
    if (!(len > 0)) throw InvalidArgument("helical field axis must be nonzero");
    const Eigen::Vector3d a = axis / len;
    const Eigen::Quaterniond reference = Eigen::Quaterniond::FromTwoVectors(Eigen::Vector3d::UnitZ(), a);

    std::vector<OdecoFrame> frames;
    frames.reserve(static_cast<size_t>(mesh.num_vertices()));
    for (Eigen::Index v = 0; v < mesh.num_vertices(); ++v) {
        const double angle = pitch * mesh.vertices().row(v).dot(a);
        const Eigen::Quaterniond q = Eigen::Quaterniond(Eigen::AngleAxisd(angle, a)) * reference;
        frames.push_back(OdecoFrame::from_rotation(q));
    }
    return FrameField::from_frames(std::move(frames));
}

FrameField map_coframe_field(const SimplicialMesh& mesh,
                             const std::function<Eigen::MatrixXd(Eigen::Index)>& inverse_jacobian_at_vertex,
                             CoframeRequirement requirement)
{
    const int dim = mesh.dim();
    std::vector<OdecoFrame> frames;
    frames.reserve(static_cast<size_t>(mesh.num_vertices()));
    for (Eigen::Index v = 0; v < mesh.num_vertices(); ++v) {
        const Eigen::MatrixXd J = inverse_jacobian_at_vertex(v);
        if (J.rows() != dim || J.cols() != dim) throw InvalidArgument("inverse Jacobian has the wrong shape");
        const Eigen::VectorXd norms = J.colwise().norm().transpose();
        if (!(norms.minCoeff() > 0) || !(std::abs(J.determinant()) > 1e-14 * norms.prod())) {
            throw InvalidArgument("singular Jacobian at vertex " + std::to_string(v));
        }
        for (int a = 0; a < dim; ++a) {
            for (int b = a + 1; b < dim; ++b) {
                if (std::abs(J.col(a).dot(J.col(b))) > 1e-6 * norms[a] * norms[b]) {
                    throw InvalidArgument("map is not orthogonal at vertex " + std::to_string(v));
                }
            }
        }
        OdecoFrame frame;
        frame.components = J.array().rowwise() / norms.transpose().array();
        frame.weights = norms.array().pow(4);
        if (requirement == CoframeRequirement::Conformal) {
            if (norms.maxCoeff() - norms.minCoeff() > 1e-6 * norms.maxCoeff()) {
                throw InvalidArgument("map is not conformal at vertex " + std::to_string(v));
            }
            frame.weights.setConstant(frame.weights.mean());
        }
        // Re-orthonormalize the directions; columns are orthogonal only to 1e-6.
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(frame.components);
        Eigen::MatrixXd Q = qr.householderQ();
        for (int a = 0; a < dim; ++a) {
            if (Q.col(a).dot(frame.components.col(a)) < 0) Q.col(a) *= -1;
        }
        frame.components = Q;
        frames.push_back(std::move(frame));
    }
    return FrameField::from_frames(std::move(frames));
}

Eigen::VectorXd check_boundary_alignment(const FrameField& field, const SimplicialMesh& mesh,
                                         const MeshMeasures& measures)
{
    field.require_compatible(mesh);
    const auto& boundary = mesh.boundary_vertices();
    Eigen::VectorXd residual(static_cast<Eigen::Index>(boundary.size()));
    for (size_t b = 0; b < boundary.size(); ++b) {
        const Eigen::VectorXd n = measures.boundary_normals.row(static_cast<Eigen::Index>(b)).transpose();
        const Sym2 N = Sym2::from_matrix(n * n.transpose());
        const Sym2 C = contract(N, field.form(boundary[b]));
        const double w = n.dot(C.matrix() * n);
        residual[static_cast<Eigen::Index>(b)] =
            (C.mandel - w * N.mandel).norm() / std::max(field.norm(boundary[b]), 1e-12);
    }
    return residual;
}

FrameField resample_field(const FrameField& field, const SimplicialMesh& fine, const SimplicialMesh& coarse)
{
    field.require_compatible(fine);
    if (coarse.dim() != fine.dim()) throw InvalidArgument("resample: meshes differ in dimension");
    const int dim = fine.dim();
    const PointLocator locator(fine);
    const Eigen::Index n = coarse.num_vertices();
    const double coincide = 1e-9 * mean_edge_length(fine);

    std::vector<PointLocator::Location> locations;
    locations.reserve(static_cast<size_t>(n));
    for (Eigen::Index v = 0; v < n; ++v) {
        auto loc = locator.locate(coarse.vertex(v));
        if (loc.element < 0 || loc.min_coordinate < -0.25) {
            throw GeometryError("resample: vertex " + std::to_string(v) + " lies outside the source mesh");
        }
        loc.barycentric = loc.barycentric.cwiseMax(0.0);
        loc.barycentric /= loc.barycentric.sum();
        locations.push_back(std::move(loc));
    }

    std::vector<OdecoFrame> frames;
    frames.reserve(static_cast<size_t>(n));
    std::vector<int> singular;

    if (dim == 2) {
        const Eigen::MatrixXd rep = cross_representation(field);
        for (Eigen::Index v = 0; v < n; ++v) {
            const auto& loc = locations[static_cast<size_t>(v)];
            Eigen::RowVector2d r = Eigen::RowVector2d::Zero();
            for (int k = 0; k <= dim; ++k) r += loc.barycentric[k] * rep.row(fine.elements()(loc.element, k));
            if (r.norm() < kSingularMagnitude) {
                singular.push_back(static_cast<int>(v));
                frames.push_back(OdecoFrame::from_angle(0.0));
            } else {
                frames.push_back(cross_from_representation(r[0], r[1]));
            }
        }
        FrameField out = FrameField::from_frames(std::move(frames));
        out.set_singular_vertices(std::move(singular));
        return out;
    }

    std::vector<Eigen::Quaterniond> nearest(static_cast<size_t>(n));
    std::vector<bool> coincident(static_cast<size_t>(n));
    for (Eigen::Index v = 0; v < n; ++v) {
        const auto& loc = locations[static_cast<size_t>(v)];
        Eigen::Index best = 0;
        double best_dist = std::numeric_limits<double>::infinity();
        for (int k = 0; k <= dim; ++k) {
            const int u = fine.elements()(loc.element, k);
            const double d = (fine.vertex(u) - coarse.vertex(v)).norm();
            if (d < best_dist) {
                best_dist = d;
                best = u;
            }
        }
        nearest[static_cast<size_t>(v)] = frame_rotation(field.frame(best));
        coincident[static_cast<size_t>(v)] = best_dist <= coincide;
    }

    const auto neighbors = coarse.vertex_neighbors();
    for (Eigen::Index v = 0; v < n; ++v) {
        const auto& q0 = nearest[static_cast<size_t>(v)];
        if (coincident[static_cast<size_t>(v)]) {
            frames.push_back(OdecoFrame::from_rotation(q0));
            continue;
        }
        Eigen::Vector4d sum = q0.coeffs();
        for (int u : neighbors[static_cast<size_t>(v)]) sum += match_symmetry(q0, nearest[static_cast<size_t>(u)]).coeffs();
        Eigen::Quaterniond avg;
        avg.coeffs() = sum.normalized();
        frames.push_back(OdecoFrame::from_rotation(avg));
    }
    return FrameField::from_frames(std::move(frames));
}

void write_field_csv(const FrameField& field, std::ostream& out)
{
    out << std::setprecision(17);
    if (field.dim() == 2) {
        out << "theta,w1,w2\n";
        for (const auto& f : field.frames()) {
            const double theta = std::atan2(f.components(1, 0), f.components(0, 0));
            out << theta << ',' << f.weights[0] << ',' << f.weights[1] << '\n';
        }
    } else {
        out << "qw,qx,qy,qz,w1,w2,w3\n";
        for (const auto& f : field.frames()) {
            const Eigen::Quaterniond q = frame_rotation(f);
            out << q.w() << ',' << q.x() << ',' << q.y() << ',' << q.z() << ',' << f.weights[0] << ','
                << f.weights[1] << ',' << f.weights[2] << '\n';
        }
    }
}

void save_field(const FrameField& field, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    write_field_csv(field, out);
    if (!out) throw Error("failed writing '" + path.string() + "'");
}

FrameField read_field_csv(std::istream& in, int dim)
{
    if (dim != 2 && dim != 3) throw InvalidArgument("field dimension must be 2 or 3");
    const size_t columns = dim == 2 ? 3 : 7;
    std::vector<OdecoFrame> frames;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        if (line_no == 1 && is_header(line)) continue;
        const auto tokens = split_csv(line);
        if (tokens.size() != columns) {
            throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(columns) +
                             " columns, found " + std::to_string(tokens.size()));
        }
        std::vector<double> x;
        for (const auto& t : tokens) x.push_back(parse_number(t, line_no));
        OdecoFrame frame;
        if (dim == 2) {
            frame = OdecoFrame::from_angle(x[0], x[1], x[2]);
        } else {
            const Eigen::Quaterniond q(x[0], x[1], x[2], x[3]);
            if (!(q.norm() > 1e-12)) throw ParseError("line " + std::to_string(line_no) + ": zero quaternion");
            frame = OdecoFrame::from_rotation(q, Eigen::Vector3d(x[4], x[5], x[6]));
        }
        if (!(frame.weights.minCoeff() >= 0)) {
            throw ParseError("line " + std::to_string(line_no) + ": negative frame weight");
        }
        frames.push_back(std::move(frame));
    }
    if (frames.empty()) throw ParseError("field file contains no frames");
    return FrameField::from_frames(std::move(frames));
}

FrameField load_field(const std::filesystem::path& path, int dim)
{
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open field file '" + path.string() + "'");
    return read_field_csv(in, dim);
}

void write_forms_csv(const std::vector<Sym4Form>& forms, std::ostream& out)
{
    out << std::setprecision(17);
    for (const auto& T : forms) {
        out << T.dim;
        for (Eigen::Index a = 0; a < T.q.rows(); ++a) {
            for (Eigen::Index b = a; b < T.q.cols(); ++b) out << ',' << T.q(a, b);
        }
        out << '\n';
    }
}

std::vector<Sym4Form> read_forms_csv(std::istream& in)
{
    std::vector<Sym4Form> forms;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto tokens = split_csv(line);
        const int dim = static_cast<int>(parse_number(tokens.front(), line_no));
        if (dim != 2 && dim != 3) throw ParseError("line " + std::to_string(line_no) + ": bad dimension");
        const int m = mandel_size(dim);
        if (tokens.size() != static_cast<size_t>(1 + m * (m + 1) / 2)) {
            throw ParseError("line " + std::to_string(line_no) + ": wrong number of coefficients");
        }
        Sym4Form T = Sym4Form::zero(dim);
        size_t t = 1;
        for (int a = 0; a < m; ++a) {
            for (int b = a; b < m; ++b) {
                T.q(a, b) = T.q(b, a) = parse_number(tokens[t++], line_no);
            }
        }
        T.fully_symmetric = is_fully_symmetric(T, 1e-12);
        forms.push_back(std::move(T));
    }
    return forms;
}

std::uint64_t field_fingerprint(const FrameField& field)
{
    std::ostringstream ss;
    write_field_csv(field, ss);
    return fnv1a(ss.str());
}

} // namespace ffop
