#include <ffop/apps.h>
#include <ffop/error.h>
#include <ffop/export.h>

#include <fstream>
#include <iomanip>
#include <sstream>

namespace ffop {

namespace {

std::ofstream open_output(const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << std::setprecision(17);
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path)
{
    out.flush();
    if (!out) throw Error("failed writing '" + path.string() + "'");
}

void require_rows(const PointData& data, Eigen::Index n)
{
    for (const auto& [name, values] : data) {
        if (values.rows() != n) throw InvalidArgument("point data '" + name + "' has the wrong number of rows");
    }
}

} // namespace

void write_vtk(std::ostream& out, const SimplicialMesh& mesh, const PointData& data)
{
    const Eigen::Index n = mesh.num_vertices();
    require_rows(data, n);
    const int dim = mesh.dim();
    out << std::setprecision(17);
    out << "# vtk DataFile Version 3.0\nffop\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << n << " double\n";
    for (Eigen::Index v = 0; v < n; ++v) {
        out << mesh.vertices()(v, 0) << ' ' << mesh.vertices()(v, 1) << ' ' << (dim == 3 ? mesh.vertices()(v, 2) : 0.0)
            << '\n';
    }
    const Eigen::Index ne = mesh.num_elements();
    out << "CELLS " << ne << ' ' << ne * (dim + 2) << '\n';
    for (Eigen::Index e = 0; e < ne; ++e) {
        out << dim + 1;
        for (int k = 0; k <= dim; ++k) out << ' ' << mesh.elements()(e, k);
        out << '\n';
    }
    out << "CELL_TYPES " << ne << '\n';
    for (Eigen::Index e = 0; e < ne; ++e) out << (dim == 2 ? 5 : 10) << '\n';
    if (data.empty()) return;
    out << "POINT_DATA " << n << '\n';
    for (const auto& [name, values] : data) {
        if (values.cols() == 1) {
            out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
            for (Eigen::Index v = 0; v < n; ++v) out << values(v, 0) << '\n';
        } else {
            out << "VECTORS " << name << " double\n";
            for (Eigen::Index v = 0; v < n; ++v) {
                for (Eigen::Index c = 0; c < 3; ++c) out << (c ? " " : "") << (c < values.cols() ? values(v, c) : 0.0);
                out << '\n';
            }
        }
    }
}

void save_vtk(const std::filesystem::path& path, const SimplicialMesh& mesh, const PointData& data)
{
    auto out = open_output(path);
    write_vtk(out, mesh, data);
    finish(out, path);
}

void save_vertex_csv(const std::filesystem::path& path, const PointData& data)
{
    if (data.empty()) throw InvalidArgument("no data to write");
    const Eigen::Index n = data.front().second.rows();
    require_rows(data, n);
    auto out = open_output(path);
    out << "vertex";
    for (const auto& [name, values] : data) {
        if (values.cols() == 1) {
            out << ',' << name;
        } else {
            for (Eigen::Index c = 0; c < values.cols(); ++c) out << ',' << name << '_' << c;
        }
    }
    out << '\n';
    for (Eigen::Index v = 0; v < n; ++v) {
        out << v;
        for (const auto& entry : data) {
            for (Eigen::Index c = 0; c < entry.second.cols(); ++c) out << ',' << entry.second(v, c);
        }
        out << '\n';
    }
    finish(out, path);
}

void write_matrix_market(std::ostream& out, const SparseMatrix& A, bool symmetric)
{
    std::vector<Triplet> entries;
    for (Eigen::Index k = 0; k < A.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(A, k); it; ++it) {
            if (!symmetric || it.row() >= it.col()) entries.emplace_back(it.row(), it.col(), it.value());
        }
    }
    out << std::setprecision(17);
    out << "%%MatrixMarket matrix coordinate real " << (symmetric ? "symmetric" : "general") << '\n';
    out << A.rows() << ' ' << A.cols() << ' ' << entries.size() << '\n';
    for (const auto& t : entries) out << t.row() + 1 << ' ' << t.col() + 1 << ' ' << t.value() << '\n';
}

void save_matrix_market(const std::filesystem::path& path, const SparseMatrix& A, bool symmetric)
{
    auto out = open_output(path);
    write_matrix_market(out, A, symmetric);
    finish(out, path);
}

SparseMatrix read_matrix_market(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || line.rfind("%%MatrixMarket", 0) != 0) throw ParseError("missing MatrixMarket banner");
    const bool symmetric = line.find("symmetric") != std::string::npos;
    if (line.find("coordinate") == std::string::npos) throw ParseError("only coordinate MatrixMarket files are supported");
    while (std::getline(in, line) && !line.empty() && line[0] == '%') {
    }
    std::istringstream header(line);
    long rows = 0;
    long cols = 0;
    long nnz = 0;
    if (!(header >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0) throw ParseError("bad MatrixMarket size line");
    std::vector<Triplet> t;
    for (long i = 0; i < nnz; ++i) {
        long r = 0;
        long c = 0;
        double v = 0;
        if (!(in >> r >> c >> v)) throw ParseError("truncated MatrixMarket data");
        if (r < 1 || r > rows || c < 1 || c > cols) throw ParseError("MatrixMarket index out of range");
        t.emplace_back(r - 1, c - 1, v);
        if (symmetric && r != c) t.emplace_back(c - 1, r - 1, v);
    }
    SparseMatrix A(rows, cols);
    A.setFromTriplets(t.begin(), t.end());
    return A;
}

SparseMatrix load_matrix_market(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path.string() + "'");
    return read_matrix_market(in);
}

void save_diagonal_matrix_market(const std::filesystem::path& path, const Eigen::VectorXd& diagonal)
{
    SparseMatrix D(diagonal.size(), diagonal.size());
    std::vector<Triplet> t;
    for (Eigen::Index i = 0; i < diagonal.size(); ++i) t.emplace_back(i, i, diagonal[i]);
    D.setFromTriplets(t.begin(), t.end());
    save_matrix_market(path, D, true);
}

void save_eigen_csv(const std::filesystem::path& path, const EigenResult& result)
{
    const auto keep = nonzero_modes(result.eigenvalues);
    std::vector<bool> nonzero(static_cast<size_t>(result.eigenvalues.size()), false);
    for (int i : keep) nonzero[static_cast<size_t>(i)] = true;

    auto out = open_output(path);
    out << "mode,eigenvalue,residual,zero_mode";
    for (Eigen::Index v = 0; v < result.eigenvectors.rows(); ++v) out << ",v" << v;
    out << '\n';
    for (Eigen::Index i = 0; i < result.eigenvalues.size(); ++i) {
        out << i << ',' << result.eigenvalues[i] << ',' << result.residuals[i] << ','
            << (nonzero[static_cast<size_t>(i)] ? 0 : 1);
        for (Eigen::Index v = 0; v < result.eigenvectors.rows(); ++v) out << ',' << result.eigenvectors(v, i);
        out << '\n';
    }
    finish(out, path);
}

void save_polylines_obj(const std::filesystem::path& path, const SimplicialMesh& mesh,
                        const std::vector<std::vector<int>>& paths)
{
    auto out = open_output(path);
    long next = 1;
    for (const auto& p : paths) {
        for (int v : p) {
            out << 'v';
            for (int k = 0; k < 3; ++k) out << ' ' << (k < mesh.dim() ? mesh.vertices()(v, k) : 0.0);
            out << '\n';
        }
        if (p.size() >= 2) {
            out << 'l';
            for (size_t i = 0; i < p.size(); ++i) out << ' ' << next + static_cast<long>(i);
            out << '\n';
        }
        next += static_cast<long>(p.size());
    }
    finish(out, path);
}

std::uint64_t fnv1a(const std::string& bytes)
{
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

std::string file_hash(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    std::ostringstream hex;
    hex << std::hex << std::setw(16) << std::setfill('0') << fnv1a(ss.str());
    return hex.str();
}

void save_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw Error("failed writing '" + path.string() + "'");
}

} // namespace ffop
