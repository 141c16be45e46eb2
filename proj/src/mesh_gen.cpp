#include <ffop/error.h>
#include <ffop/mesh_gen.h>

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

namespace ffop {

namespace {

constexpr double kPi = std::numbers::pi;

void orient_positive(const Eigen::MatrixXd& V, Eigen::MatrixXi& E)
{
    const int dim = static_cast<int>(V.cols());
    for (Eigen::Index t = 0; t < E.rows(); ++t) {
        Eigen::MatrixXd J(dim, dim);
        for (int k = 0; k < dim; ++k) J.col(k) = (V.row(E(t, k + 1)) - V.row(E(t, 0))).transpose();
        if (J.determinant() < 0) std::swap(E(t, 0), E(t, 1));
    }
}

Eigen::MatrixXi to_matrix(const std::vector<std::array<int, 4>>& cells, int arity)
{
    Eigen::MatrixXi E(static_cast<Eigen::Index>(cells.size()), arity);
    for (size_t i = 0; i < cells.size(); ++i) {
        for (int k = 0; k < arity; ++k) E(static_cast<Eigen::Index>(i), k) = cells[i][static_cast<size_t>(k)];
    }
    return E;
}

// Triangulate the band between two closed rings of vertices, merging by angle.
void stitch_rings(const std::vector<int>& inner, const std::vector<double>& inner_angle,
                  const std::vector<int>& outer, const std::vector<double>& outer_angle,
                  std::vector<std::array<int, 4>>& tris)
{
    const size_t ni = inner.size();
    const size_t no = outer.size();
    size_t a = 0, b = 0;
    // Angles are unwrapped so that index ni / no corresponds to angle + 2 pi.
    auto ang_in = [&](size_t i) { return inner_angle[i % ni] + 2 * kPi * static_cast<double>(i / ni); };
    auto ang_out = [&](size_t i) { return outer_angle[i % no] + 2 * kPi * static_cast<double>(i / no); };
    while (a < ni || b < no) {
        const bool advance_inner =
            b >= no || (a < ni && ang_in(a + 1) < ang_out(b + 1));
        if (advance_inner) {
            tris.push_back({inner[a % ni], outer[b % no], inner[(a + 1) % ni], -1});
            ++a;
        } else {
            tris.push_back({inner[a % ni], outer[b % no], outer[(b + 1) % no], -1});
            ++b;
        }
    }
}

} // namespace

SimplicialMesh make_rectangle(int nx, int ny, double x0, double x1, double y0, double y1)
{
    if (nx < 1 || ny < 1) throw InvalidArgument("rectangle needs at least one cell per axis");
    Eigen::MatrixXd V((nx + 1) * (ny + 1), 2);
    for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i <= nx; ++i) {
            V(j * (nx + 1) + i, 0) = x0 + (x1 - x0) * i / nx;
            V(j * (nx + 1) + i, 1) = y0 + (y1 - y0) * j / ny;
        }
    }
    Eigen::MatrixXi E(2 * nx * ny, 3);
    int t = 0;
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int v00 = j * (nx + 1) + i;
            const int v10 = v00 + 1;
            const int v01 = v00 + nx + 1;
            const int v11 = v01 + 1;
            // The two corner cells cut by the other diagonal would hold a
            // triangle with no interior vertex; flip them.
            const bool flip = nx > 1 && ny > 1 && ((i == nx - 1 && j == 0) || (i == 0 && j == ny - 1));
            if (flip) {
                E.row(t++) << v00, v10, v01;
                E.row(t++) << v10, v11, v01;
            } else {
                E.row(t++) << v00, v10, v11;
                E.row(t++) << v00, v11, v01;
            }
        }
    }
    return SimplicialMesh::create(std::move(V), std::move(E));
}

SimplicialMesh make_square(int n)
{
    return make_rectangle(n, n, -1, 1, -1, 1);
}

SimplicialMesh make_disk(int rings, double radius)
{
    if (rings < 1) throw InvalidArgument("disk needs at least one ring");
    std::vector<std::array<double, 2>> pts{{0, 0}};
    std::vector<std::vector<int>> ring_ids{{0}};
    std::vector<std::vector<double>> ring_angles{{0}};
    for (int r = 1; r <= rings; ++r) {
        const int count = 6 * r;
        std::vector<int> ids;
        std::vector<double> angles;
        for (int j = 0; j < count; ++j) {
            const double theta = 2 * kPi * j / count;
            const double rho = radius * r / rings;
            ids.push_back(static_cast<int>(pts.size()));
            angles.push_back(theta);
            pts.push_back({rho * std::cos(theta), rho * std::sin(theta)});
        }
        ring_ids.push_back(std::move(ids));
        ring_angles.push_back(std::move(angles));
    }

    std::vector<std::array<int, 4>> tris;
    for (int j = 0; j < 6; ++j) tris.push_back({0, ring_ids[1][static_cast<size_t>(j)], ring_ids[1][static_cast<size_t>((j + 1) % 6)], -1});
    for (int r = 2; r <= rings; ++r) {
        stitch_rings(ring_ids[static_cast<size_t>(r - 1)], ring_angles[static_cast<size_t>(r - 1)],
                     ring_ids[static_cast<size_t>(r)], ring_angles[static_cast<size_t>(r)], tris);
    }

    Eigen::MatrixXd V(static_cast<Eigen::Index>(pts.size()), 2);
    for (size_t i = 0; i < pts.size(); ++i) V.row(static_cast<Eigen::Index>(i)) << pts[i][0], pts[i][1];
    Eigen::MatrixXi E = to_matrix(tris, 3);
    orient_positive(V, E);
    return SimplicialMesh::create(std::move(V), std::move(E));
}

SimplicialMesh make_annulus(int rings, double inner_radius)
{
    if (rings < 1 || !(inner_radius > 0 && inner_radius < 1)) {
        throw InvalidArgument("annulus needs rings >= 1 and 0 < inner_radius < 1");
    }
    const double h = (1 - inner_radius) / rings;
    std::vector<std::array<double, 2>> pts;
    std::vector<std::vector<int>> ring_ids;
    std::vector<std::vector<double>> ring_angles;
    for (int r = 0; r <= rings; ++r) {
        const double rho = inner_radius + r * h;
        const int count = std::max(6, static_cast<int>(std::lround(2 * kPi * rho / h)));
        // Stagger alternate rings by half a step for better triangle shapes.
        const double offset = (r % 2) * kPi / count;
        std::vector<int> ids;
        std::vector<double> angles;
        for (int j = 0; j < count; ++j) {
            const double theta = offset + 2 * kPi * j / count;
            ids.push_back(static_cast<int>(pts.size()));
            angles.push_back(theta);
            pts.push_back({rho * std::cos(theta), rho * std::sin(theta)});
        }
        ring_ids.push_back(std::move(ids));
        ring_angles.push_back(std::move(angles));
    }
    std::vector<std::array<int, 4>> tris;
    for (int r = 1; r <= rings; ++r) {
        stitch_rings(ring_ids[static_cast<size_t>(r - 1)], ring_angles[static_cast<size_t>(r - 1)],
                     ring_ids[static_cast<size_t>(r)], ring_angles[static_cast<size_t>(r)], tris);
    }
    Eigen::MatrixXd V(static_cast<Eigen::Index>(pts.size()), 2);
    for (size_t i = 0; i < pts.size(); ++i) V.row(static_cast<Eigen::Index>(i)) << pts[i][0], pts[i][1];
    Eigen::MatrixXi E = to_matrix(tris, 3);
    orient_positive(V, E);
    return SimplicialMesh::create(std::move(V), std::move(E));
}

SimplicialMesh make_cube(int n)
{
    if (n < 1) throw InvalidArgument("cube needs at least one cell per axis");
    const int m = n + 1;
    Eigen::MatrixXd V(m * m * m, 3);
    auto id = [m](int i, int j, int k) { return (k * m + j) * m + i; };
    for (int k = 0; k < m; ++k) {
        for (int j = 0; j < m; ++j) {
            for (int i = 0; i < m; ++i) {
                V.row(id(i, j, k)) << -1 + 2.0 * i / n, -1 + 2.0 * j / n, -1 + 2.0 * k / n;
            }
        }
    }
    // Kuhn subdivision: one tetrahedron per axis permutation, all sharing the
    // cell diagonal; neighbouring cells split shared faces identically.
    static const std::array<std::array<int, 3>, 6> perms{
        {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
    std::vector<std::array<int, 4>> tets;
    for (int k = 0; k < n; ++k) {
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) {
                for (const auto& p : perms) {
                    std::array<int, 3> c{i, j, k};
                    std::array<int, 4> t{};
                    t[0] = id(c[0], c[1], c[2]);
                    for (int s = 0; s < 3; ++s) {
                        ++c[static_cast<size_t>(p[static_cast<size_t>(s)])];
                        t[static_cast<size_t>(s + 1)] = id(c[0], c[1], c[2]);
                    }
                    tets.push_back(t);
                }
            }
        }
    }
    Eigen::MatrixXi E = to_matrix(tets, 4);
    orient_positive(V, E);
    return SimplicialMesh::create(std::move(V), std::move(E));
}

SimplicialMesh make_ball(int n)
{
    const SimplicialMesh cube = make_cube(n);
    Eigen::MatrixXd V = cube.vertices();
    // Volume-filling cube-to-ball map.
    for (Eigen::Index v = 0; v < V.rows(); ++v) {
        const double x = V(v, 0), y = V(v, 1), z = V(v, 2);
        const double x2 = x * x, y2 = y * y, z2 = z * z;
        V(v, 0) = x * std::sqrt(1 - y2 / 2 - z2 / 2 + y2 * z2 / 3);
        V(v, 1) = y * std::sqrt(1 - z2 / 2 - x2 / 2 + z2 * x2 / 3);
        V(v, 2) = z * std::sqrt(1 - x2 / 2 - y2 / 2 + x2 * y2 / 3);
    }
    Eigen::MatrixXi E = cube.elements();
    orient_positive(V, E);
    return SimplicialMesh::create(std::move(V), std::move(E));
}

SimplicialMesh make_unit_tetrahedron()
{
    Eigen::MatrixXd V(4, 3);
    V << 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1;
    Eigen::MatrixXi E(1, 4);
    E << 0, 1, 2, 3;
    return SimplicialMesh::create(std::move(V), std::move(E));
}

} // namespace ffop
