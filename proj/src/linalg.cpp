#include "harmgap/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <limits>
#include <stdexcept>

namespace harmgap {

namespace {

double rank_threshold(const MatrixC& a) {
    return std::numeric_limits<double>::epsilon() *
           static_cast<double>(std::max(a.rows(), a.cols()));
}

}  // namespace

SvdTruncation svd_truncated(const MatrixC& a, Eigen::Index r) {
    if (a.size() == 0) throw std::invalid_argument("svd_truncated: empty matrix");
    if (r < 1 || r > std::min(a.rows(), a.cols())) {
        throw std::invalid_argument("svd_truncated: rank out of range");
    }
    Eigen::JacobiSVD<MatrixC> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    SvdTruncation out;
    out.left_vectors = svd.matrixU().leftCols(r);
    out.singular_values = svd.singularValues().head(r);
    out.right_vectors = svd.matrixV().leftCols(r);
    return out;
}

VectorR singular_values(const MatrixC& a) {
    if (a.size() == 0) throw std::invalid_argument("singular_values: empty matrix");
    return Eigen::JacobiSVD<MatrixC>(a).singularValues();
}

LstsqResult lstsq(const MatrixC& a, const VectorC& b) {
    if (a.size() == 0) throw std::invalid_argument("lstsq: empty matrix");
    if (a.rows() != b.size()) throw std::invalid_argument("lstsq: dimension mismatch");

    Eigen::JacobiSVD<MatrixC> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(rank_threshold(a));

    LstsqResult out;
    out.solution = svd.solve(b);
    const VectorR& sv = svd.singularValues();
    const double smax = sv(0);
    const double smin = sv(sv.size() - 1);
    out.condition = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
    out.rank_deficient = svd.rank() < a.cols();
    return out;
}

MatrixC lstsq_matrix(const MatrixC& a, const MatrixC& b) {
    if (a.size() == 0) throw std::invalid_argument("lstsq_matrix: empty matrix");
    if (a.rows() != b.rows()) throw std::invalid_argument("lstsq_matrix: dimension mismatch");
    Eigen::JacobiSVD<MatrixC> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(rank_threshold(a));
    return svd.solve(b);
}

std::vector<std::complex<double>> eig_square(const MatrixC& a) {
    if (a.rows() == 0 || a.rows() != a.cols()) {
        throw std::invalid_argument("eig_square: matrix must be square and nonempty");
    }
    Eigen::ComplexEigenSolver<MatrixC> solver(a, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("eig_square: eigendecomposition did not converge");
    }
    const VectorC& ev = solver.eigenvalues();
    return {ev.data(), ev.data() + ev.size()};
}

}  // namespace harmgap
