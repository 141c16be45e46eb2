#pragma once

#include <ffop/mesh.h>

#include <filesystem>
#include <iosfwd>

namespace ffop {

enum class MeshFormat { OFF, OBJ, MEDIT };

/// Format from the file extension (.off, .obj, .mesh); throws ParseError otherwise.
MeshFormat mesh_format_from_path(const std::filesystem::path& path);

///
/// Read an ASCII mesh.
///
/// OFF and OBJ carry planar triangle meshes: every z coordinate must be
/// within 1e-9 of zero and is dropped. MEDIT carries tetrahedral meshes
/// (Vertices / Tetrahedra sections; Triangles are accepted and ignored since
/// the boundary is recomputed).
///
SimplicialMesh load_mesh(const std::filesystem::path& path, MeshFormat format);
SimplicialMesh load_mesh(const std::filesystem::path& path);

SimplicialMesh read_off(std::istream& in);
SimplicialMesh read_obj(std::istream& in);
SimplicialMesh read_medit(std::istream& in);

void save_mesh(const SimplicialMesh& mesh, const std::filesystem::path& path, MeshFormat format);
void save_mesh(const SimplicialMesh& mesh, const std::filesystem::path& path);

void write_off(const SimplicialMesh& mesh, std::ostream& out);
void write_obj(const SimplicialMesh& mesh, std::ostream& out);
void write_medit(const SimplicialMesh& mesh, std::ostream& out);

} // namespace ffop
