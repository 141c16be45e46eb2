#pragma once

#include <ffop/mesh.h>
#include <ffop/solve.h>

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace ffop {

/// Named per-vertex data; columns > 1 are written as VTK vectors (padded to 3) or multi-column CSV.
using PointData = std::vector<std::pair<std::string, Eigen::MatrixXd>>;

/// Legacy ASCII VTK unstructured grid with point data.
void write_vtk(std::ostream& out, const SimplicialMesh& mesh, const PointData& data);
void save_vtk(const std::filesystem::path& path, const SimplicialMesh& mesh, const PointData& data);

/// Per-vertex CSV: header `vertex,<names...>`, one row per vertex.
void save_vertex_csv(const std::filesystem::path& path, const PointData& data);

/// MatrixMarket coordinate real; `symmetric` stores the lower triangle only.
void write_matrix_market(std::ostream& out, const SparseMatrix& A, bool symmetric);
void save_matrix_market(const std::filesystem::path& path, const SparseMatrix& A, bool symmetric);
SparseMatrix read_matrix_market(std::istream& in);
SparseMatrix load_matrix_market(const std::filesystem::path& path);

/// Diagonal as a MatrixMarket coordinate matrix.
void save_diagonal_matrix_market(const std::filesystem::path& path, const Eigen::VectorXd& diagonal);

///
/// One row per mode: `mode,eigenvalue,residual,zero_mode,v0,v1,...`.
///
/// `zero_mode` is 1 for discarded modes (eigenvalue <= 1e-8 * largest).
///
void save_eigen_csv(const std::filesystem::path& path, const EigenResult& result);

/// Polylines through the given vertices as OBJ `v` / `l` records.
void save_polylines_obj(const std::filesystem::path& path, const SimplicialMesh& mesh,
                        const std::vector<std::vector<int>>& paths);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes);
/// FNV-1a of a file's contents as 16 hex digits.
std::string file_hash(const std::filesystem::path& path);

/// Writes `text` to `path`, throwing Error on failure.
void save_text(const std::filesystem::path& path, const std::string& text);

} // namespace ffop
