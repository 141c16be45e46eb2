#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <vector>

namespace ffop {

// Mandel vectorization of symmetric dim x dim matrices:
//   2D: (S11, S22, sqrt2 S12)
//   3D: (S11, S22, S33, sqrt2 S23, sqrt2 S13, sqrt2 S12)
// so that the Euclidean dot product equals the Frobenius inner product.

/// Number of Mandel coordinates: 3 in 2D, 6 in 3D.
int mandel_size(int dim);

/// Matrix index pair (i, j), i <= j, of Mandel coordinate `a`.
std::array<int, 2> mandel_pair(int dim, int a);

/// Mandel coordinate of the matrix entry (i, j).
int mandel_index(int dim, int i, int j);

Eigen::VectorXd to_mandel(const Eigen::MatrixXd& S);
Eigen::MatrixXd from_mandel(const Eigen::VectorXd& m);

/// Symmetric second-order tensor in Mandel coordinates.
struct Sym2
{
    int dim = 0;
    Eigen::VectorXd mandel;

    static Sym2 from_matrix(const Eigen::MatrixXd& S) { return {static_cast<int>(S.rows()), to_mandel(S)}; }
    Eigen::MatrixXd matrix() const { return from_mandel(mandel); }
};

///
/// Fourth-order tensor with (ij)<->(kl) pair symmetry, stored as its quadratic
/// form on Mandel vectors: S : T : S = mandel(S)^T q mandel(S).
///
struct Sym4Form
{
    int dim = 0;
    Eigen::MatrixXd q;
    /// Set for forms invariant under all index permutations (odeco tensors).
    bool fully_symmetric = false;

    static Sym4Form zero(int dim);
    /// Pairwise-symmetrized identity: I : S = S.
    static Sym4Form identity(int dim);
};

///
/// Orthogonally decomposable tensor sum_a w_a (xi_a)^{x4}.
///
/// `components` holds the orthonormal xi_a as columns.
///
struct OdecoFrame
{
    Eigen::MatrixXd components;
    Eigen::VectorXd weights;

    int dim() const { return static_cast<int>(components.rows()); }

    static OdecoFrame axis_aligned(int dim, double weight = 1.0);
    static OdecoFrame from_angle(double theta, double w1 = 1.0, double w2 = 1.0);
    static OdecoFrame from_rotation(const Eigen::Quaterniond& q, const Eigen::Vector3d& weights = Eigen::Vector3d::Ones());
};

/// Throws InvalidArgument unless components are orthonormal within `tol` and weights are >= 0.
void validate_frame(const OdecoFrame& frame, double tol = 1e-10);

Sym4Form odeco_to_form(const OdecoFrame& frame);

/// (A : T)_kl = A_ij T_ijkl, i.e. mandel(result) = q mandel(A).
Sym2 contract(const Sym2& A, const Sym4Form& T);

/// max_a |w_a|.
double spectral_norm(const OdecoFrame& frame);

///
/// max over unit v of T(v,v,v,v), estimated by 1024 quasi-random unit
/// samples refined by projected gradient ascent on the sphere.
///
double spectral_norm(const Sym4Form& T);

/// T^eps = normT * I - (1 - eps) T. Throws InvalidArgument for eps outside (0, 1] or normT < 0.
Sym4Form modify_epsilon(const Sym4Form& T, double normT, double epsilon);

/// T_ijkl zeta_i zeta_j zeta_k zeta_l.
double principal_symbol(const Sym4Form& T, const Eigen::VectorXd& zeta);

/// S : T : S.
double alignment_quadratic(const Sym2& S, const Sym4Form& T);

/// Expand to the full dim^4 coefficient array, index ((i*dim + j)*dim + k)*dim + l.
std::vector<double> full_tensor(const Sym4Form& T);

/// Checks invariance of the full tensor under every index permutation.
bool is_fully_symmetric(const Sym4Form& T, double tol = 1e-12);

/// The 24 rotations mapping the coordinate axes onto themselves (as unit quaternions).
const std::vector<Eigen::Quaterniond>& octahedral_symmetries();

/// Rotation whose columns are the frame components, after fixing the handedness.
Eigen::Quaterniond frame_rotation(const OdecoFrame& frame);

} // namespace ffop
