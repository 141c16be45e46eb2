#include <ffop/error.h>
#include <ffop/mesh_io.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace ffop {

namespace {

constexpr double kPlanarTolerance = 1e-9;

std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

// Strips '#' comments and tokenizes the remaining stream.
class TokenReader
{
public:
    explicit TokenReader(std::istream& in)
    {
        std::string line;
        while (std::getline(in, line)) {
            if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            std::istringstream ls(line);
            std::string tok;
            while (ls >> tok) m_tokens.push_back(tok);
        }
    }

    bool done() const { return m_pos >= m_tokens.size(); }

    std::string next(const char* what)
    {
        if (done()) throw ParseError(std::string("unexpected end of file while reading ") + what);
        return m_tokens[m_pos++];
    }

    double next_double(const char* what)
    {
        const std::string tok = next(what);
        try {
            size_t used = 0;
            const double v = std::stod(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            return v;
        } catch (const std::exception&) {
            throw ParseError(std::string("expected a number for ") + what + ", got '" + tok + "'");
        }
    }

    long next_int(const char* what)
    {
        const std::string tok = next(what);
        try {
            size_t used = 0;
            const long v = std::stol(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            return v;
        } catch (const std::exception&) {
            throw ParseError(std::string("expected an integer for ") + what + ", got '" + tok + "'");
        }
    }

private:
    std::vector<std::string> m_tokens;
    size_t m_pos = 0;
};

Eigen::MatrixXd drop_z(const std::vector<std::array<double, 3>>& pts)
{
    Eigen::MatrixXd V(static_cast<Eigen::Index>(pts.size()), 2);
    for (size_t i = 0; i < pts.size(); ++i) {
        if (std::abs(pts[i][2]) > kPlanarTolerance) {
            throw GeometryError("non-planar input: vertex " + std::to_string(i) + " has z = " +
                                std::to_string(pts[i][2]));
        }
        V(static_cast<Eigen::Index>(i), 0) = pts[i][0];
        V(static_cast<Eigen::Index>(i), 1) = pts[i][1];
    }
    return V;
}

Eigen::MatrixXi to_matrix(const std::vector<std::array<int, 4>>& cells, int arity)
{
    Eigen::MatrixXi E(static_cast<Eigen::Index>(cells.size()), arity);
    for (size_t i = 0; i < cells.size(); ++i) {
        for (int k = 0; k < arity; ++k) E(static_cast<Eigen::Index>(i), k) = cells[i][static_cast<size_t>(k)];
    }
    return E;
}

void require_stream(const std::ios& s, const std::filesystem::path& path)
{
    if (!s) throw ParseError("cannot open " + path.string());
}

std::ostream& precise(std::ostream& out)
{
    return out << std::setprecision(17);
}

} // namespace

MeshFormat mesh_format_from_path(const std::filesystem::path& path)
{
    const std::string ext = lower(path.extension().string());
    if (ext == ".off") return MeshFormat::OFF;
    if (ext == ".obj") return MeshFormat::OBJ;
    if (ext == ".mesh") return MeshFormat::MEDIT;
    throw ParseError("unknown mesh extension '" + ext + "' (expected .off, .obj or .mesh)");
}

SimplicialMesh read_off(std::istream& in)
{
    TokenReader r(in);
    const std::string header = r.next("OFF header");
    if (header != "OFF") throw ParseError("missing OFF header");
    const long nv = r.next_int("vertex count");
    const long nf = r.next_int("face count");
    r.next_int("edge count");
    if (nv <= 0 || nf <= 0) throw ParseError("OFF file has no vertices or faces");

    std::vector<std::array<double, 3>> pts(static_cast<size_t>(nv));
    for (auto& p : pts) {
        for (auto& c : p) c = r.next_double("vertex coordinate");
    }
    std::vector<std::array<int, 4>> faces(static_cast<size_t>(nf));
    for (auto& f : faces) {
        if (r.next_int("face arity") != 3) throw ParseError("only triangle faces are supported");
        for (int k = 0; k < 3; ++k) f[static_cast<size_t>(k)] = static_cast<int>(r.next_int("face index"));
    }
    return SimplicialMesh::create(drop_z(pts), to_matrix(faces, 3));
}

SimplicialMesh read_obj(std::istream& in)
{
    std::vector<std::array<double, 3>> pts;
    std::vector<std::array<int, 4>> faces;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag)) continue;
        if (tag == "v") {
            std::array<double, 3> p{0, 0, 0};
            if (!(ls >> p[0] >> p[1])) throw ParseError("bad vertex on line " + std::to_string(lineno));
            ls >> p[2];
            pts.push_back(p);
        } else if (tag == "f") {
            std::vector<int> ids;
            std::string tok;
            while (ls >> tok) {
                const std::string head = tok.substr(0, tok.find('/'));
                try {
                    long id = std::stol(head);
                    if (id < 0) id += static_cast<long>(pts.size()) + 1;
                    ids.push_back(static_cast<int>(id - 1));
                } catch (const std::exception&) {
                    throw ParseError("bad face index '" + tok + "' on line " + std::to_string(lineno));
                }
            }
            if (ids.size() != 3) throw ParseError("only triangle faces are supported (line " + std::to_string(lineno) + ")");
            faces.push_back({ids[0], ids[1], ids[2], -1});
        }
        // Other records (vn, vt, g, o, s, usemtl, ...) are ignored.
    }
    if (pts.empty() || faces.empty()) throw ParseError("OBJ file has no vertices or faces");
    return SimplicialMesh::create(drop_z(pts), to_matrix(faces, 3));
}

SimplicialMesh read_medit(std::istream& in)
{
    TokenReader r(in);
    int dim = 3;
    std::vector<std::array<double, 3>> pts;
    std::vector<std::array<int, 4>> tets;

    auto skip_records = [&](long count, int arity) {
        for (long i = 0; i < count * arity; ++i) r.next("record");
    };

    while (!r.done()) {
        const std::string kw = r.next("keyword");
        if (kw == "MeshVersionFormatted") {
            r.next_int("version");
        } else if (kw == "Dimension") {
            dim = static_cast<int>(r.next_int("dimension"));
            if (dim != 3) throw ParseError("MEDIT input must be 3-dimensional");
        } else if (kw == "Vertices") {
            const long n = r.next_int("vertex count");
            pts.resize(static_cast<size_t>(n));
            for (auto& p : pts) {
                for (int k = 0; k < 3; ++k) p[static_cast<size_t>(k)] = r.next_double("vertex coordinate");
                r.next_int("vertex reference");
            }
        } else if (kw == "Tetrahedra") {
            const long n = r.next_int("tetrahedron count");
            tets.resize(static_cast<size_t>(n));
            for (auto& t : tets) {
                for (int k = 0; k < 4; ++k) t[static_cast<size_t>(k)] = static_cast<int>(r.next_int("tetrahedron index") - 1);
                r.next_int("tetrahedron reference");
            }
        } else if (kw == "Triangles") {
            skip_records(r.next_int("triangle count"), 4);
        } else if (kw == "Edges") {
            skip_records(r.next_int("edge count"), 3);
        } else if (kw == "Quadrilaterals") {
            skip_records(r.next_int("quad count"), 5);
        } else if (kw == "Hexahedra") {
            skip_records(r.next_int("hexahedron count"), 9);
        } else if (kw == "Corners" || kw == "Ridges" || kw == "RequiredVertices" || kw == "RequiredEdges") {
            skip_records(r.next_int("index count"), 1);
        } else if (kw == "End") {
            break;
        } else {
            throw ParseError("unsupported MEDIT section '" + kw + "'");
        }
    }
    if (pts.empty()) throw ParseError("MEDIT file has no Vertices section");
    if (tets.empty()) throw ParseError("MEDIT file has no Tetrahedra section");

    Eigen::MatrixXd V(static_cast<Eigen::Index>(pts.size()), 3);
    for (size_t i = 0; i < pts.size(); ++i) {
        for (int k = 0; k < 3; ++k) V(static_cast<Eigen::Index>(i), k) = pts[i][static_cast<size_t>(k)];
    }
    return SimplicialMesh::create(std::move(V), to_matrix(tets, 4));
}

SimplicialMesh load_mesh(const std::filesystem::path& path, MeshFormat format)
{
    std::ifstream in(path);
    require_stream(in, path);
    switch (format) {
    case MeshFormat::OFF: return read_off(in);
    case MeshFormat::OBJ: return read_obj(in);
    case MeshFormat::MEDIT: return read_medit(in);
    }
    throw ParseError("unknown mesh format");
}

SimplicialMesh load_mesh(const std::filesystem::path& path)
{
    return load_mesh(path, mesh_format_from_path(path));
}

void write_off(const SimplicialMesh& mesh, std::ostream& out)
{
    if (mesh.dim() != 2) throw InvalidArgument("OFF output requires a triangle mesh");
    precise(out) << "OFF\n" << mesh.num_vertices() << ' ' << mesh.num_elements() << " 0\n";
    for (Eigen::Index v = 0; v < mesh.num_vertices(); ++v) {
        out << mesh.vertices()(v, 0) << ' ' << mesh.vertices()(v, 1) << " 0\n";
    }
    for (Eigen::Index e = 0; e < mesh.num_elements(); ++e) {
        out << "3 " << mesh.elements()(e, 0) << ' ' << mesh.elements()(e, 1) << ' ' << mesh.elements()(e, 2) << '\n';
    }
}

void write_obj(const SimplicialMesh& mesh, std::ostream& out)
{
    if (mesh.dim() != 2) throw InvalidArgument("OBJ output requires a triangle mesh");
    precise(out);
    for (Eigen::Index v = 0; v < mesh.num_vertices(); ++v) {
        out << "v " << mesh.vertices()(v, 0) << ' ' << mesh.vertices()(v, 1) << " 0\n";
    }
    for (Eigen::Index e = 0; e < mesh.num_elements(); ++e) {
        out << "f " << mesh.elements()(e, 0) + 1 << ' ' << mesh.elements()(e, 1) + 1 << ' '
            << mesh.elements()(e, 2) + 1 << '\n';
    }
}

void write_medit(const SimplicialMesh& mesh, std::ostream& out)
{
    if (mesh.dim() != 3) throw InvalidArgument("MEDIT output requires a tetrahedral mesh");
    precise(out) << "MeshVersionFormatted 1\nDimension 3\nVertices\n" << mesh.num_vertices() << '\n';
    for (Eigen::Index v = 0; v < mesh.num_vertices(); ++v) {
        out << mesh.vertices()(v, 0) << ' ' << mesh.vertices()(v, 1) << ' ' << mesh.vertices()(v, 2) << " 0\n";
    }
    out << "Tetrahedra\n" << mesh.num_elements() << '\n';
    for (Eigen::Index e = 0; e < mesh.num_elements(); ++e) {
        for (int k = 0; k < 4; ++k) out << mesh.elements()(e, k) + 1 << ' ';
        out << "1\n";
    }
    out << "Triangles\n" << mesh.num_boundary_facets() << '\n';
    for (Eigen::Index f = 0; f < mesh.num_boundary_facets(); ++f) {
        for (int k = 0; k < 3; ++k) out << mesh.boundary_facets()(f, k) + 1 << ' ';
        out << "1\n";
    }
    out << "End\n";
}

void save_mesh(const SimplicialMesh& mesh, const std::filesystem::path& path, MeshFormat format)
{
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path.string());
    switch (format) {
    case MeshFormat::OFF: write_off(mesh, out); break;
    case MeshFormat::OBJ: write_obj(mesh, out); break;
    case MeshFormat::MEDIT: write_medit(mesh, out); break;
    }
}

void save_mesh(const SimplicialMesh& mesh, const std::filesystem::path& path)
{
    save_mesh(mesh, path, mesh_format_from_path(path));
}

} // namespace ffop
