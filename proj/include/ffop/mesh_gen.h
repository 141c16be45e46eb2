#pragma once

#include <ffop/mesh.h>

namespace ffop {

/// Structured triangulation of [x0,x1] x [y0,y1] with nx x ny cells, each cut
/// along its (lower-left, upper-right) diagonal except the lower-right and
/// upper-left corner cells, so every triangle has an interior vertex when
/// nx, ny >= 2.
SimplicialMesh make_rectangle(int nx, int ny, double x0, double x1, double y0, double y1);

/// [-1,1]^2 with n x n cells.
SimplicialMesh make_square(int n);

/// Disk of radius `radius` built from `rings` concentric rings; ring i holds 6i vertices.
SimplicialMesh make_disk(int rings, double radius = 1.0);

/// Annulus between `inner_radius` and 1, `rings` layers of roughly equilateral triangles.
SimplicialMesh make_annulus(int rings, double inner_radius);

/// Ball of unit radius: n^3 cube grid with 6 tetrahedra per cell, mapped onto the ball.
SimplicialMesh make_ball(int n);

/// Cube [-1,1]^3 with n^3 cells and 6 tetrahedra per cell.
SimplicialMesh make_cube(int n);

/// Standard corner tetrahedron (0,0,0),(1,0,0),(0,1,0),(0,0,1).
SimplicialMesh make_unit_tetrahedron();

} // namespace ffop
