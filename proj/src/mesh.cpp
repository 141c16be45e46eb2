#include <ffop/error.h>
#include <ffop/mesh.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

namespace ffop {

namespace {

using Facet = std::array<int, 3>;

// Facets of a positively oriented simplex, listed so that the facet normal
// points away from the opposite vertex.
std::vector<std::vector<int>> local_facets(int dim)
{
    if (dim == 2) return {{1, 2}, {2, 0}, {0, 1}};
    return {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};
}

Facet sorted_key(const std::vector<int>& f)
{
    Facet key{-1, -1, -1};
    for (size_t i = 0; i < f.size(); ++i) key[i] = f[i];
    std::sort(key.begin(), key.begin() + static_cast<long>(f.size()));
    return key;
}

double factorial(int n)
{
    double f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

} // namespace

SimplicialMesh SimplicialMesh::create(Eigen::MatrixXd vertices, Eigen::MatrixXi elements)
{
    const int dim = static_cast<int>(vertices.cols());
    if (dim != 2 && dim != 3) {
        throw GeometryError("mesh dimension must be 2 or 3, got " + std::to_string(dim));
    }
    if (elements.cols() != dim + 1) {
        throw GeometryError("elements must have dim+1 vertices");
    }
    if (elements.rows() == 0) throw GeometryError("mesh has no elements");

    SimplicialMesh mesh;
    mesh.m_dim = dim;
    mesh.m_vertices = std::move(vertices);
    mesh.m_elements = std::move(elements);

    const Eigen::Index nv = mesh.num_vertices();
    const Eigen::Index ne = mesh.num_elements();
    std::vector<int> valence(static_cast<size_t>(nv), 0);
    for (Eigen::Index e = 0; e < ne; ++e) {
        for (int k = 0; k <= dim; ++k) {
            const int v = mesh.m_elements(e, k);
            if (v < 0 || v >= nv) {
                throw GeometryError("element " + std::to_string(e) + " references vertex " +
                                    std::to_string(v) + " out of range");
            }
            ++valence[static_cast<size_t>(v)];
        }
    }
    for (Eigen::Index v = 0; v < nv; ++v) {
        if (valence[static_cast<size_t>(v)] == 0) {
            throw GeometryError("vertex " + std::to_string(v) + " is not used by any element");
        }
    }

    // Orientation and degeneracy, relative to the local edge scale.
    for (Eigen::Index e = 0; e < ne; ++e) {
        double h = 0;
        for (int a = 0; a <= dim; ++a) {
            for (int b = a + 1; b <= dim; ++b) {
                h = std::max(h, (mesh.m_vertices.row(mesh.m_elements(e, a)) -
                                 mesh.m_vertices.row(mesh.m_elements(e, b)))
                                    .norm());
            }
        }
        const double vol = mesh.signed_volume(e);
        const double scale = std::pow(h, dim) / factorial(dim);
        if (!(std::abs(vol) > 1e-12 * scale) || !(h > 0)) {
            throw GeometryError("element " + std::to_string(e) + " is degenerate");
        }
        if (vol < 0) throw GeometryError("element " + std::to_string(e) + " is inverted");
    }

    // Facet incidence counting.
    struct Incidence
    {
        int count = 0;
        std::vector<int> oriented;
    };
    std::map<Facet, Incidence> facets;
    std::map<std::array<int, 4>, int> seen;
    const auto templates = local_facets(dim);
    for (Eigen::Index e = 0; e < ne; ++e) {
        std::array<int, 4> ekey{-1, -1, -1, -1};
        for (int k = 0; k <= dim; ++k) ekey[static_cast<size_t>(k)] = mesh.m_elements(e, k);
        std::sort(ekey.begin(), ekey.begin() + dim + 1);
        if (seen[ekey]++ > 0) throw GeometryError("duplicate element " + std::to_string(e));

        for (const auto& t : templates) {
            std::vector<int> f;
            for (int k : t) f.push_back(mesh.m_elements(e, k));
            auto& inc = facets[sorted_key(f)];
            ++inc.count;
            inc.oriented = f;
            if (inc.count > 2) {
                throw GeometryError("non-manifold facet shared by more than two elements");
            }
        }
    }

    std::vector<std::vector<int>> boundary;
    for (const auto& [key, inc] : facets) {
        if (inc.count == 1) boundary.push_back(inc.oriented);
    }
    mesh.m_boundary_facets.resize(static_cast<Eigen::Index>(boundary.size()), dim);
    for (size_t i = 0; i < boundary.size(); ++i) {
        for (int k = 0; k < dim; ++k) {
            mesh.m_boundary_facets(static_cast<Eigen::Index>(i), k) = boundary[i][static_cast<size_t>(k)];
        }
    }

    mesh.m_boundary_index.assign(static_cast<size_t>(nv), -1);
    for (Eigen::Index f = 0; f < mesh.m_boundary_facets.rows(); ++f) {
        for (int k = 0; k < dim; ++k) mesh.m_boundary_index[static_cast<size_t>(mesh.m_boundary_facets(f, k))] = 0;
    }
    for (Eigen::Index v = 0; v < nv; ++v) {
        if (mesh.m_boundary_index[static_cast<size_t>(v)] == 0) {
            mesh.m_boundary_index[static_cast<size_t>(v)] = static_cast<int>(mesh.m_boundary_vertices.size());
            mesh.m_boundary_vertices.push_back(static_cast<int>(v));
        }
    }
    return mesh;
}

double SimplicialMesh::signed_volume(Eigen::Index e) const
{
    Eigen::MatrixXd J(m_dim, m_dim);
    const Eigen::VectorXd x0 = m_vertices.row(m_elements(e, 0)).transpose();
    for (int k = 0; k < m_dim; ++k) {
        J.col(k) = m_vertices.row(m_elements(e, k + 1)).transpose() - x0;
    }
    return J.determinant() / factorial(m_dim);
}

std::vector<std::pair<int, int>> SimplicialMesh::edges() const
{
    std::vector<std::pair<int, int>> result;
    result.reserve(static_cast<size_t>(num_elements() * (m_dim == 2 ? 3 : 6)));
    for (Eigen::Index e = 0; e < num_elements(); ++e) {
        for (int a = 0; a <= m_dim; ++a) {
            for (int b = a + 1; b <= m_dim; ++b) {
                int i = m_elements(e, a);
                int j = m_elements(e, b);
                if (i > j) std::swap(i, j);
                result.emplace_back(i, j);
            }
        }
    }
    std::sort(result.begin(), result.end());
    result.erase(std::unique(result.begin(), result.end()), result.end());
    return result;
}

std::vector<std::vector<int>> SimplicialMesh::vertex_neighbors() const
{
    std::vector<std::vector<int>> nbrs(static_cast<size_t>(num_vertices()));
    for (const auto& [i, j] : edges()) {
        nbrs[static_cast<size_t>(i)].push_back(j);
        nbrs[static_cast<size_t>(j)].push_back(i);
    }
    for (auto& n : nbrs) std::sort(n.begin(), n.end());
    return nbrs;
}

MeshMeasures compute_measures(const SimplicialMesh& mesh)
{
    const int dim = mesh.dim();
    const Eigen::Index nv = mesh.num_vertices();
    const Eigen::Index ne = mesh.num_elements();

    MeshMeasures m;
    m.element_volumes.resize(ne);
    m.dual_volumes = Eigen::VectorXd::Zero(nv);
    for (Eigen::Index e = 0; e < ne; ++e) {
        const double vol = mesh.signed_volume(e);
        if (!(vol > 0)) throw GeometryError("zero-measure element " + std::to_string(e));
        m.element_volumes[e] = vol;
        for (int k = 0; k <= dim; ++k) m.dual_volumes[mesh.elements()(e, k)] += vol / (dim + 1);
    }

    const auto& bverts = mesh.boundary_vertices();
    const Eigen::Index nb = static_cast<Eigen::Index>(bverts.size());
    m.boundary_normals = Eigen::MatrixXd::Zero(nb, dim);
    m.boundary_areas = Eigen::VectorXd::Zero(nb);

    const auto& V = mesh.vertices();
    for (Eigen::Index f = 0; f < mesh.num_boundary_facets(); ++f) {
        const auto facet = mesh.boundary_facets().row(f);
        Eigen::VectorXd area_normal(dim);
        if (dim == 2) {
            const Eigen::Vector2d d = (V.row(facet(1)) - V.row(facet(0))).transpose();
            area_normal << d.y(), -d.x();
        } else {
            const Eigen::Vector3d a = V.row(facet(0)).transpose();
            const Eigen::Vector3d b = V.row(facet(1)).transpose();
            const Eigen::Vector3d c = V.row(facet(2)).transpose();
            area_normal = 0.5 * (b - a).cross(c - a);
        }
        const double area = area_normal.norm();
        for (int k = 0; k < dim; ++k) {
            const int bi = mesh.boundary_index(facet(k));
            m.boundary_normals.row(bi) += area_normal.transpose();
            m.boundary_areas[bi] += area / dim;
        }
    }

    m.boundary_tangents.resize(static_cast<size_t>(nb));
    for (Eigen::Index b = 0; b < nb; ++b) {
        const double len = m.boundary_normals.row(b).norm();
        if (!(len > 0)) {
            throw GeometryError("boundary normal vanishes at vertex " + std::to_string(bverts[static_cast<size_t>(b)]));
        }
        m.boundary_normals.row(b) /= len;
        const Eigen::VectorXd n = m.boundary_normals.row(b).transpose();
        Eigen::MatrixXd t(dim, dim - 1);
        if (dim == 2) {
            t.col(0) << -n[1], n[0];
        } else {
            Eigen::Vector3d n3 = n;
            Eigen::Index axis;
            n3.cwiseAbs().minCoeff(&axis);
            const Eigen::Vector3d t1 = n3.cross(Eigen::Vector3d::Unit(axis)).normalized();
            t.col(0) = t1;
            t.col(1) = n3.cross(t1);
        }
        m.boundary_tangents[static_cast<size_t>(b)] = t;
    }
    return m;
}

Eigen::MatrixXd element_shape_gradients(const SimplicialMesh& mesh, Eigen::Index e)
{
    const int dim = mesh.dim();
    const auto& V = mesh.vertices();
    Eigen::MatrixXd J(dim, dim);
    for (int k = 0; k < dim; ++k) {
        J.col(k) = (V.row(mesh.elements()(e, k + 1)) - V.row(mesh.elements()(e, 0))).transpose();
    }
    // Columns 1..dim of J^{-T} are the gradients of barycentric coordinates 1..dim.
    const Eigen::MatrixXd JinvT = J.inverse().transpose();
    Eigen::MatrixXd grads(dim, dim + 1);
    grads.rightCols(dim) = JinvT;
    grads.col(0) = -JinvT.rowwise().sum();
    return grads;
}

SparseMatrix gradient_matrix(const SimplicialMesh& mesh)
{
    const int dim = mesh.dim();
    std::vector<Triplet> triplets;
    triplets.reserve(static_cast<size_t>(mesh.num_elements() * dim * (dim + 1)));
    for (Eigen::Index e = 0; e < mesh.num_elements(); ++e) {
        const Eigen::MatrixXd grads = element_shape_gradients(mesh, e);
        for (int a = 0; a <= dim; ++a) {
            for (int k = 0; k < dim; ++k) {
                triplets.emplace_back(static_cast<int>(e * dim + k), mesh.elements()(e, a), grads(k, a));
            }
        }
    }
    SparseMatrix G(mesh.num_elements() * dim, mesh.num_vertices());
    G.setFromTriplets(triplets.begin(), triplets.end());
    return G;
}

SparseMatrix stiffness_matrix(const SimplicialMesh& mesh)
{
    const int dim = mesh.dim();
    std::vector<Triplet> triplets;
    for (Eigen::Index e = 0; e < mesh.num_elements(); ++e) {
        const Eigen::MatrixXd grads = element_shape_gradients(mesh, e);
        const Eigen::MatrixXd local = mesh.signed_volume(e) * grads.transpose() * grads;
        for (int a = 0; a <= dim; ++a) {
            for (int b = 0; b <= dim; ++b) {
                triplets.emplace_back(mesh.elements()(e, a), mesh.elements()(e, b), local(a, b));
            }
        }
    }
    SparseMatrix L(mesh.num_vertices(), mesh.num_vertices());
    L.setFromTriplets(triplets.begin(), triplets.end());
    return L;
}

SimplicialMesh refine_uniform(const SimplicialMesh& mesh)
{
    const int dim = mesh.dim();
    const auto edges = mesh.edges();
    const Eigen::Index nv = mesh.num_vertices();

    std::map<std::pair<int, int>, int> midpoint;
    Eigen::MatrixXd V(nv + static_cast<Eigen::Index>(edges.size()), dim);
    V.topRows(nv) = mesh.vertices();
    for (size_t i = 0; i < edges.size(); ++i) {
        const auto [a, b] = edges[i];
        const Eigen::Index id = nv + static_cast<Eigen::Index>(i);
        V.row(id) = 0.5 * (mesh.vertices().row(a) + mesh.vertices().row(b));
        midpoint[edges[i]] = static_cast<int>(id);
    }
    auto mid = [&](int a, int b) { return midpoint.at({std::min(a, b), std::max(a, b)}); };

    const int children = dim == 2 ? 4 : 8;
    Eigen::MatrixXi E(mesh.num_elements() * children, dim + 1);
    Eigen::Index row = 0;
    auto emit = [&](std::initializer_list<int> ids) {
        int k = 0;
        for (int id : ids) E(row, k++) = id;
        ++row;
    };

    for (Eigen::Index e = 0; e < mesh.num_elements(); ++e) {
        const auto el = mesh.elements().row(e);
        if (dim == 2) {
            const int v0 = el(0), v1 = el(1), v2 = el(2);
            const int m01 = mid(v0, v1), m12 = mid(v1, v2), m20 = mid(v2, v0);
            emit({v0, m01, m20});
            emit({v1, m12, m01});
            emit({v2, m20, m12});
            emit({m01, m12, m20});
        } else {
            const int v0 = el(0), v1 = el(1), v2 = el(2), v3 = el(3);
            const int m01 = mid(v0, v1), m02 = mid(v0, v2), m03 = mid(v0, v3);
            const int m12 = mid(v1, v2), m13 = mid(v1, v3), m23 = mid(v2, v3);
            emit({v0, m01, m02, m03});
            emit({m01, v1, m12, m13});
            emit({m02, m12, v2, m23});
            emit({m03, m13, m23, v3});

            // Inner octahedron: opposite vertex pairs (m01,m23), (m02,m13), (m03,m12).
            const std::array<std::array<int, 2>, 3> diagonals{{{m01, m23}, {m02, m13}, {m03, m12}}};
            int best = 0;
            double best_len = std::numeric_limits<double>::infinity();
            for (int d = 0; d < 3; ++d) {
                const double len = (V.row(diagonals[d][0]) - V.row(diagonals[d][1])).norm();
                if (len < best_len - 1e-14 * len) {
                    best_len = len;
                    best = d;
                }
            }
            const int p = diagonals[best][0];
            const int q = diagonals[best][1];
            // The four remaining octahedron vertices form a cycle around the diagonal.
            std::array<int, 4> ring;
            if (best == 0) ring = {m02, m03, m13, m12};
            else if (best == 1) ring = {m01, m03, m23, m12};
            else ring = {m01, m02, m23, m13};
            for (int k = 0; k < 4; ++k) emit({p, q, ring[k], ring[(k + 1) % 4]});
        }
    }

    // Fix orientation of children in place.
    for (Eigen::Index t = 0; t < E.rows(); ++t) {
        Eigen::MatrixXd J(dim, dim);
        for (int k = 0; k < dim; ++k) J.col(k) = (V.row(E(t, k + 1)) - V.row(E(t, 0))).transpose();
        if (J.determinant() < 0) std::swap(E(t, 0), E(t, 1));
    }
    return SimplicialMesh::create(std::move(V), std::move(E));
}

double mean_edge_length(const SimplicialMesh& mesh)
{
    const auto edges = mesh.edges();
    double total = 0;
    for (const auto& [a, b] : edges) total += (mesh.vertices().row(a) - mesh.vertices().row(b)).norm();
    return total / static_cast<double>(edges.size());
}

PointLocator::PointLocator(const SimplicialMesh& mesh)
: m_mesh(&mesh)
{
    const int dim = mesh.dim();
    const auto& V = mesh.vertices();
    m_lo = V.colwise().minCoeff().transpose();
    const Eigen::VectorXd hi = V.colwise().maxCoeff().transpose();
    const Eigen::VectorXd extent = (hi - m_lo).cwiseMax(1e-300);

    // About one element per bucket.
    const double per_axis = std::pow(static_cast<double>(mesh.num_elements()), 1.0 / dim);
    m_cell.resize(dim);
    const double volume = extent.prod();
    const double cell = std::pow(volume / std::max<double>(1, static_cast<double>(mesh.num_elements())), 1.0 / dim);
    for (int k = 0; k < dim; ++k) {
        m_res[static_cast<size_t>(k)] = std::clamp(static_cast<int>(std::ceil(extent[k] / cell)), 1,
                                                   static_cast<int>(4 * per_axis) + 1);
        m_cell[k] = extent[k] / m_res[static_cast<size_t>(k)];
    }
    m_buckets.resize(static_cast<size_t>(m_res[0]) * static_cast<size_t>(m_res[1]) * static_cast<size_t>(m_res[2]));

    for (Eigen::Index e = 0; e < mesh.num_elements(); ++e) {
        Eigen::VectorXd lo = V.row(mesh.elements()(e, 0)).transpose();
        Eigen::VectorXd hi_e = lo;
        for (int k = 1; k <= dim; ++k) {
            lo = lo.cwiseMin(V.row(mesh.elements()(e, k)).transpose());
            hi_e = hi_e.cwiseMax(V.row(mesh.elements()(e, k)).transpose());
        }
        std::array<int, 3> a{0, 0, 0}, b{0, 0, 0};
        for (int k = 0; k < dim; ++k) {
            const auto kk = static_cast<size_t>(k);
            a[kk] = std::clamp(static_cast<int>(std::floor((lo[k] - m_lo[k]) / m_cell[k])), 0, m_res[kk] - 1);
            b[kk] = std::clamp(static_cast<int>(std::floor((hi_e[k] - m_lo[k]) / m_cell[k])), 0, m_res[kk] - 1);
        }
        for (int i = a[0]; i <= b[0]; ++i) {
            for (int j = a[1]; j <= b[1]; ++j) {
                for (int l = a[2]; l <= b[2]; ++l) {
                    m_buckets[static_cast<size_t>((l * m_res[1] + j) * m_res[0] + i)].push_back(static_cast<int>(e));
                }
            }
        }
    }
}

Eigen::Index PointLocator::bucket_of(const Eigen::VectorXd& p) const
{
    std::array<int, 3> c{0, 0, 0};
    for (int k = 0; k < m_mesh->dim(); ++k) {
        const auto kk = static_cast<size_t>(k);
        c[kk] = std::clamp(static_cast<int>(std::floor((p[k] - m_lo[k]) / m_cell[k])), 0, m_res[kk] - 1);
    }
    return (c[2] * m_res[1] + c[1]) * m_res[0] + c[0];
}

Eigen::VectorXd PointLocator::barycentric(Eigen::Index e, const Eigen::VectorXd& p) const
{
    const int dim = m_mesh->dim();
    const auto& V = m_mesh->vertices();
    const auto el = m_mesh->elements().row(e);
    Eigen::MatrixXd J(dim, dim);
    for (int k = 0; k < dim; ++k) J.col(k) = (V.row(el(k + 1)) - V.row(el(0))).transpose();
    const Eigen::VectorXd local = J.partialPivLu().solve(p - V.row(el(0)).transpose());
    Eigen::VectorXd bary(dim + 1);
    bary[0] = 1 - local.sum();
    bary.tail(dim) = local;
    return bary;
}

PointLocator::Location PointLocator::locate(const Eigen::VectorXd& p) const
{
    Location best;
    best.min_coordinate = -std::numeric_limits<double>::infinity();
    auto consider = [&](Eigen::Index e) {
        Eigen::VectorXd bary = barycentric(e, p);
        const double mc = bary.minCoeff();
        if (mc > best.min_coordinate) {
            best.element = e;
            best.barycentric = std::move(bary);
            best.min_coordinate = mc;
        }
    };
    for (int e : m_buckets[static_cast<size_t>(bucket_of(p))]) {
        consider(e);
        if (best.min_coordinate >= 0) return best;
    }
    if (best.min_coordinate >= -1e-12) return best;
    // Outside every candidate: fall back to a scan for the least-violating element.
    for (Eigen::Index e = 0; e < m_mesh->num_elements(); ++e) consider(e);
    return best;
}

} // namespace ffop
