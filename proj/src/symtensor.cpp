#include <ffop/error.h>
#include <ffop/symtensor.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace ffop {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

constexpr std::array<std::array<int, 2>, 3> kPairs2{{{0, 0}, {1, 1}, {0, 1}}};
constexpr std::array<std::array<int, 2>, 6> kPairs3{{{0, 0}, {1, 1}, {2, 2}, {1, 2}, {0, 2}, {0, 1}}};

void require_dim(int dim)
{
    if (dim != 2 && dim != 3) throw InvalidArgument("tensor dimension must be 2 or 3");
}

double mandel_scale(int dim, int a)
{
    return a < dim ? 1.0 : kSqrt2;
}

// Directions sampled quasi-uniformly over the half circle / sphere.
std::vector<Eigen::VectorXd> sphere_samples(int dim, int count)
{
    std::vector<Eigen::VectorXd> out;
    out.reserve(static_cast<size_t>(count));
    if (dim == 2) {
        for (int i = 0; i < count; ++i) {
            const double t = std::numbers::pi * (i + 0.5) / count;
            out.emplace_back(Eigen::Vector2d(std::cos(t), std::sin(t)));
        }
    } else {
        const double golden = std::numbers::pi * (3 - std::sqrt(5.0));
        for (int i = 0; i < count; ++i) {
            const double z = 1 - 2 * (i + 0.5) / count;
            const double r = std::sqrt(std::max(0.0, 1 - z * z));
            const double phi = golden * i;
            out.emplace_back(Eigen::Vector3d(r * std::cos(phi), r * std::sin(phi), z));
        }
    }
    return out;
}

double quartic(const Sym4Form& T, const Eigen::VectorXd& v)
{
    const Eigen::VectorXd m = to_mandel(v * v.transpose());
    return m.dot(T.q * m);
}

} // namespace

int mandel_size(int dim)
{
    require_dim(dim);
    return dim == 2 ? 3 : 6;
}

std::array<int, 2> mandel_pair(int dim, int a)
{
    require_dim(dim);
    return dim == 2 ? kPairs2[static_cast<size_t>(a)] : kPairs3[static_cast<size_t>(a)];
}

int mandel_index(int dim, int i, int j)
{
    if (i > j) std::swap(i, j);
    const int m = mandel_size(dim);
    for (int a = 0; a < m; ++a) {
        const auto p = mandel_pair(dim, a);
        if (p[0] == i && p[1] == j) return a;
    }
    throw InvalidArgument("matrix index out of range");
}

Eigen::VectorXd to_mandel(const Eigen::MatrixXd& S)
{
    const int dim = static_cast<int>(S.rows());
    if (S.cols() != dim) throw InvalidArgument("Mandel vectorization needs a square matrix");
    const int m = mandel_size(dim);
    Eigen::VectorXd v(m);
    for (int a = 0; a < m; ++a) {
        const auto [i, j] = mandel_pair(dim, a);
        v[a] = i == j ? S(i, i) : 0.5 * kSqrt2 * (S(i, j) + S(j, i));
    }
    return v;
}

Eigen::MatrixXd from_mandel(const Eigen::VectorXd& v)
{
    const int dim = v.size() == 3 ? 2 : v.size() == 6 ? 3 : 0;
    require_dim(dim);
    Eigen::MatrixXd S(dim, dim);
    for (int a = 0; a < v.size(); ++a) {
        const auto [i, j] = mandel_pair(dim, a);
        const double s = v[a] / mandel_scale(dim, a);
        S(i, j) = s;
        S(j, i) = s;
    }
    return S;
}

Sym4Form Sym4Form::zero(int dim)
{
    const int m = mandel_size(dim);
    return {dim, Eigen::MatrixXd::Zero(m, m), true};
}

Sym4Form Sym4Form::identity(int dim)
{
    const int m = mandel_size(dim);
    return {dim, Eigen::MatrixXd::Identity(m, m), false};
}

OdecoFrame OdecoFrame::axis_aligned(int dim, double weight)
{
    require_dim(dim);
    return {Eigen::MatrixXd::Identity(dim, dim), Eigen::VectorXd::Constant(dim, weight)};
}

OdecoFrame OdecoFrame::from_angle(double theta, double w1, double w2)
{
    Eigen::Matrix2d R;
    R << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    return {R, Eigen::Vector2d(w1, w2)};
}

OdecoFrame OdecoFrame::from_rotation(const Eigen::Quaterniond& q, const Eigen::Vector3d& weights)
{
    return {q.normalized().toRotationMatrix(), weights};
}

void validate_frame(const OdecoFrame& frame, double tol)
{
    const int dim = frame.dim();
    require_dim(dim);
    if (frame.components.cols() != dim || frame.weights.size() != dim) {
        throw InvalidArgument("frame must have dim components and dim weights");
    }
    const Eigen::MatrixXd gram = frame.components.transpose() * frame.components;
    const double err = (gram - Eigen::MatrixXd::Identity(dim, dim)).cwiseAbs().maxCoeff();
    if (!(err <= tol)) {
        throw InvalidArgument("frame components are not orthonormal (error " + std::to_string(err) + ")");
    }
    if (!(frame.weights.minCoeff() >= 0)) throw InvalidArgument("frame weights must be nonnegative");
}

Sym4Form odeco_to_form(const OdecoFrame& frame)
{
    validate_frame(frame);
    const int dim = frame.dim();
    Sym4Form T = Sym4Form::zero(dim);
    for (int a = 0; a < dim; ++a) {
        const Eigen::VectorXd xi = frame.components.col(a);
        const Eigen::VectorXd m = to_mandel(xi * xi.transpose());
        T.q += frame.weights[a] * m * m.transpose();
    }
    T.fully_symmetric = true;
    return T;
}

Sym2 contract(const Sym2& A, const Sym4Form& T)
{
    if (A.dim != T.dim) throw InvalidArgument("contract: dimension mismatch");
    return {A.dim, T.q * A.mandel};
}

double spectral_norm(const OdecoFrame& frame)
{
    return frame.weights.cwiseAbs().maxCoeff();
}

double spectral_norm(const Sym4Form& T)
{
    const int dim = T.dim;
    const auto samples = sphere_samples(dim, 1024);

    std::vector<std::pair<double, int>> ranked;
    ranked.reserve(samples.size());
    for (size_t i = 0; i < samples.size(); ++i) ranked.emplace_back(quartic(T, samples[i]), static_cast<int>(i));
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

    const double scale = std::max(T.q.cwiseAbs().maxCoeff(), 1e-300);
    double best = ranked.front().first;
    // Seeds are the best samples that are pairwise apart, so each local maximum near the top gets its own ascent.
    std::vector<int> seeds;
    for (const auto& [value, id] : ranked) {
        if (seeds.size() == 16) break;
        const Eigen::VectorXd& u = samples[static_cast<size_t>(id)];
        bool separated = true;
        for (int s : seeds) separated = separated && std::abs(u.dot(samples[static_cast<size_t>(s)])) < 0.9;
        if (separated) seeds.push_back(id);
    }
    for (int id : seeds) {
        Eigen::VectorXd v = samples[static_cast<size_t>(id)];
        double f = quartic(T, v);
        double step = 1.0 / scale;
        for (int iter = 0; iter < 500; ++iter) {
            const Eigen::MatrixXd C = from_mandel(T.q * to_mandel(v * v.transpose()));
            Eigen::VectorXd grad = 4 * C * v;
            grad -= grad.dot(v) * v;
            if (grad.norm() <= 1e-10 * std::max(1.0, std::abs(f)) * scale) break;
            // Best of the step halvings; the first improving step tends to overshoot across the maximum.
            double best_f = f, best_step = 0;
            Eigen::VectorXd best_v = v;
            for (int halving = 0; halving < 60; ++halving, step *= 0.5) {
                const Eigen::VectorXd trial = (v + step * grad).normalized();
                const double ft = quartic(T, trial);
                if (ft > best_f) {
                    best_f = ft;
                    best_step = step;
                    best_v = trial;
                } else if (best_step > 0) {
                    break;
                }
            }
            if (best_step == 0) break;
            v = best_v;
            f = best_f;
            step = 4 * best_step;
        }
        best = std::max(best, f);
    }
    return best;
}

Sym4Form modify_epsilon(const Sym4Form& T, double normT, double epsilon)
{
    if (!(epsilon > 0 && epsilon <= 1)) {
        throw InvalidArgument("epsilon must lie in (0, 1], got " + std::to_string(epsilon));
    }
    if (!(normT >= 0)) throw InvalidArgument("tensor norm must be nonnegative");
    const int m = mandel_size(T.dim);
    return {T.dim, normT * Eigen::MatrixXd::Identity(m, m) - (1 - epsilon) * T.q, false};
}

double principal_symbol(const Sym4Form& T, const Eigen::VectorXd& zeta)
{
    if (zeta.size() != T.dim) throw InvalidArgument("principal_symbol: dimension mismatch");
    return quartic(T, zeta);
}

double alignment_quadratic(const Sym2& S, const Sym4Form& T)
{
    if (S.dim != T.dim) throw InvalidArgument("alignment_quadratic: dimension mismatch");
    return S.mandel.dot(T.q * S.mandel);
}

std::vector<double> full_tensor(const Sym4Form& T)
{
    const int d = T.dim;
    std::vector<double> out(static_cast<size_t>(d * d * d * d));
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            const int a = mandel_index(d, i, j);
            for (int k = 0; k < d; ++k) {
                for (int l = 0; l < d; ++l) {
                    const int b = mandel_index(d, k, l);
                    out[static_cast<size_t>(((i * d + j) * d + k) * d + l)] =
                        T.q(a, b) / (mandel_scale(d, a) * mandel_scale(d, b));
                }
            }
        }
    }
    return out;
}

bool is_fully_symmetric(const Sym4Form& T, double tol)
{
    const int d = T.dim;
    const auto t = full_tensor(T);
    const double scale = std::max(1.0, T.q.cwiseAbs().maxCoeff());
    auto at = [&](std::array<int, 4> idx) {
        return t[static_cast<size_t>(((idx[0] * d + idx[1]) * d + idx[2]) * d + idx[3])];
    };
    std::array<int, 4> idx{};
    for (idx[0] = 0; idx[0] < d; ++idx[0]) {
        for (idx[1] = 0; idx[1] < d; ++idx[1]) {
            for (idx[2] = 0; idx[2] < d; ++idx[2]) {
                for (idx[3] = 0; idx[3] < d; ++idx[3]) {
                    std::array<int, 4> p = idx;
                    std::sort(p.begin(), p.end());
                    const double ref = at(idx);
                    do {
                        if (std::abs(at(p) - ref) > tol * scale) return false;
                    } while (std::next_permutation(p.begin(), p.end()));
                }
            }
        }
    }
    return true;
}

const std::vector<Eigen::Quaterniond>& octahedral_symmetries()
{
    static const std::vector<Eigen::Quaterniond> group = [] {
        std::vector<Eigen::Quaterniond> g;
        // Signed permutation matrices with determinant +1.
        std::array<int, 3> perm{0, 1, 2};
        do {
            for (int signs = 0; signs < 8; ++signs) {
                Eigen::Matrix3d R = Eigen::Matrix3d::Zero();
                for (int r = 0; r < 3; ++r) R(r, perm[static_cast<size_t>(r)]) = (signs >> r) & 1 ? -1.0 : 1.0;
                if (R.determinant() > 0) g.emplace_back(R);
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
        return g;
    }();
    return group;
}

Eigen::Quaterniond frame_rotation(const OdecoFrame& frame)
{
    if (frame.dim() != 3) throw InvalidArgument("frame_rotation requires a 3D frame");
    Eigen::Matrix3d R = frame.components;
    if (R.determinant() < 0) R.col(2) *= -1;
    // Re-orthonormalize to absorb round-off before conversion.
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
    R = svd.matrixU() * svd.matrixV().transpose();
    return Eigen::Quaterniond(R).normalized();
}

} // namespace ffop
