#ifndef HARMGAP_LINALG_HPP
#define HARMGAP_LINALG_HPP

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace harmgap {

using MatrixC = Eigen::MatrixXcd;
using VectorC = Eigen::VectorXcd;
using VectorR = Eigen::VectorXd;

/// Amplitude solves are flagged unreliable above this condition estimate.
inline constexpr double kConditionWarnThreshold = 1e8;

/// Dominant singular triplets of a complex matrix.
struct SvdTruncation {
    MatrixC left_vectors;     ///< rows x r, orthonormal columns
    VectorR singular_values;  ///< length r, nonincreasing
    MatrixC right_vectors;    ///< cols x r, orthonormal columns
};

/// r dominant singular triplets of a. Dense full decomposition, then
/// truncation; the matrices here are small enough that nothing iterative is
/// warranted. Throws std::invalid_argument for r outside [1, min(rows, cols)].
SvdTruncation svd_truncated(const MatrixC& a, Eigen::Index r);

/// All singular values of a, nonincreasing.
VectorR singular_values(const MatrixC& a);

struct LstsqResult {
    VectorC solution;
    double condition = 0.0;       ///< sigma_max / sigma_min; +inf when singular
    bool rank_deficient = false;  ///< numerical rank < columns
};

/// Minimum-norm least-squares solution of a x = b, with a condition estimate.
/// Rank deficiency is reported, never thrown.
LstsqResult lstsq(const MatrixC& a, const VectorC& b);

/// Column-wise least-squares solve a X = b.
MatrixC lstsq_matrix(const MatrixC& a, const MatrixC& b);

/// All eigenvalues of a square matrix, unordered.
std::vector<std::complex<double>> eig_square(const MatrixC& a);

}  // namespace harmgap

#endif  // HARMGAP_LINALG_HPP
