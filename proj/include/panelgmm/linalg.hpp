#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace panelgmm {

inline constexpr double kRankTolerance = 1e-10;

// Least-squares fit through a column-pivoting QR decomposition. Columns whose
// pivot falls below kRankTolerance times the largest pivot are treated as
// linearly dependent.
struct LeastSquaresFit {
    Eigen::VectorXd beta;        // coefficients of the kept columns
    Eigen::MatrixXd xtx_inv;     // (X'X)^{-1} restricted to kept columns
    Eigen::VectorXd fitted;
    Eigen::VectorXd residuals;
    double ssr = 0.0;
    std::vector<Eigen::Index> kept;     // original column indices, ascending
    std::vector<Eigen::Index> dropped;  // original column indices, ascending
};

// Throws NumericalError listing the dependent columns (by `names`, when given)
// if X is rank deficient and `allow_drop` is false.
LeastSquaresFit least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, bool allow_drop = false,
                              const std::vector<std::string>& names = {});

// Moore-Penrose pseudo-inverse of a symmetric matrix; eigenvalues with
// |lambda| <= tol * max|lambda| are zeroed. `rank` receives the retained count.
Eigen::MatrixXd symmetric_pinv(const Eigen::MatrixXd& a, Eigen::Index* rank = nullptr, double tol = 1e-10);

// Inverse of a symmetric positive definite matrix; throws NumericalError with
// `what` in the message when the matrix is singular to working precision.
Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& a, const std::string& what);

// Pairwise (cascade) summation so reductions do not depend on accumulation order.
double pairwise_sum(const double* values, std::size_t n);

}  // namespace panelgmm
