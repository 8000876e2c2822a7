#include "dirac_bvp/linalg.hpp"

#include "dirac_bvp/error.hpp"

namespace dbvp {

Eigen::VectorXd solve_tridiagonal(const Eigen::VectorXd& diag, const Eigen::VectorXd& off,
                                  const Eigen::VectorXd& rhs) {
    const Eigen::Index n = diag.size();
    if (rhs.size() != n || (n > 0 && off.size() != n - 1)) {
        throw Error(ErrorKind::InvalidArgument, "tridiagonal system size mismatch");
    }
    Eigen::VectorXd c(n), d(n), x(n);
    if (n == 0) return x;
    double denom = diag(0);
    c(0) = n > 1 ? off(0) / denom : 0.0;
    d(0) = rhs(0) / denom;
    for (Eigen::Index i = 1; i < n; ++i) {
        denom = diag(i) - off(i - 1) * c(i - 1);
        c(i) = i + 1 < n ? off(i) / denom : 0.0;
        d(i) = (rhs(i) - off(i - 1) * d(i - 1)) / denom;
    }
    x(n - 1) = d(n - 1);
    for (Eigen::Index i = n - 2; i >= 0; --i) x(i) = d(i) - c(i) * x(i + 1);
    return x;
}

Eigen::MatrixXd null_space(const Eigen::MatrixXd& m, double rel_tol) {
    const Eigen::Index cols = m.cols();
    if (m.rows() == 0) return Eigen::MatrixXd::Identity(cols, cols);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
    const Eigen::VectorXd& s = svd.singularValues();
    const double cutoff = rel_tol * (s.size() > 0 ? s(0) : 0.0);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > cutoff) ++rank;
    }
    if (s.size() > 0 && s(0) == 0.0) rank = 0;
    return svd.matrixV().rightCols(cols - rank);
}

Eigen::MatrixXd orthonormal_span(const Eigen::MatrixXd& m, double rel_tol) {
    if (m.cols() == 0) return Eigen::MatrixXd(m.rows(), 0);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU);
    const Eigen::VectorXd& s = svd.singularValues();
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > rel_tol * s(0)) ++rank;
    }
    return svd.matrixU().leftCols(rank);
}

double subspace_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    const Eigen::MatrixXd diff = a * a.transpose() - b * b.transpose();
    if (diff.size() == 0) return 0.0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(diff);
    return svd.singularValues()(0);
}

} // namespace dbvp
