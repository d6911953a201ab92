#pragma once

#include <Eigen/Dense>

namespace pglab {

/// Result of a minimum-norm least-squares solve.
struct MinNormSolution {
    Eigen::VectorXd x;      ///< Minimum-Euclidean-norm solution of A x = c (least squares).
    int rank = 0;           ///< Numerical rank of A at the cutoff used.
    double residual = 0.0;  ///< ||A x - c||_2 after the solve.
};

/// Solves A x = c in the least-squares sense and returns the minimum-norm
/// solution, computed via SVD with singular values below
/// `relative_cutoff * sigma_max` treated as zero.  A must be square and
/// symmetric-shaped in our uses but the routine only requires A.rows() ==
/// c.size().
MinNormSolution min_norm_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& c,
                               double relative_cutoff = 1e-10);

} // namespace pglab
