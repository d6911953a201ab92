#include "pglab/linalg.hpp"

#include "pglab/errors.hpp"

namespace pglab {

MinNormSolution min_norm_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& c,
                               double relative_cutoff) {
    if (A.rows() != c.size())
        throw ContractViolation("min_norm_solve: dimension mismatch between A and c");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(relative_cutoff);
    MinNormSolution out;
    out.x = svd.solve(c);
    out.rank = static_cast<int>(svd.rank());
    out.residual = (A * out.x - c).norm();
    return out;
}

} // namespace pglab
