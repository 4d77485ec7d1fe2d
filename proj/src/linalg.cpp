#include "panelgmm/linalg.hpp"

#include "panelgmm/errors.hpp"

#include <algorithm>
#include <cmath>

namespace panelgmm {

LeastSquaresFit least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, bool allow_drop,
                              const std::vector<std::string>& names) {
    const Eigen::Index n = x.rows();
    const Eigen::Index k = x.cols();
    if (y.size() != n) throw NumericalError("least_squares: row mismatch between design and response");

    LeastSquaresFit fit;
    if (k == 0) {
        fit.fitted = Eigen::VectorXd::Zero(n);
        fit.residuals = y;
        fit.ssr = y.squaredNorm();
        return fit;
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    qr.setThreshold(kRankTolerance);
    const Eigen::Index rank = qr.rank();
    const auto& perm = qr.colsPermutation().indices();

    for (Eigen::Index j = 0; j < k; ++j) {
        if (j < rank)
            fit.kept.push_back(perm(j));
        else
            fit.dropped.push_back(perm(j));
    }
    std::sort(fit.kept.begin(), fit.kept.end());
    std::sort(fit.dropped.begin(), fit.dropped.end());

    if (!fit.dropped.empty() && !allow_drop) {
        std::string cols;
        for (auto j : fit.dropped) {
            if (!cols.empty()) cols += ", ";
            cols += (static_cast<std::size_t>(j) < names.size()) ? names[j] : "column " + std::to_string(j);
        }
        throw NumericalError("rank-deficient design: linearly dependent column set {" + cols + "}");
    }

    Eigen::MatrixXd xk(n, static_cast<Eigen::Index>(fit.kept.size()));
    for (std::size_t j = 0; j < fit.kept.size(); ++j) xk.col(static_cast<Eigen::Index>(j)) = x.col(fit.kept[j]);

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qrk(xk);
    fit.beta = qrk.solve(y);

    // (X'X)^{-1} = P R^{-1} R^{-T} P'
    const Eigen::Index kk = xk.cols();
    Eigen::MatrixXd r = qrk.matrixR().topLeftCorner(kk, kk).triangularView<Eigen::Upper>();
    Eigen::MatrixXd rinv = r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(kk, kk));
    Eigen::MatrixXd inner = rinv * rinv.transpose();
    const auto& p = qrk.colsPermutation();
    fit.xtx_inv = p * inner * p.transpose();
    fit.xtx_inv = 0.5 * (fit.xtx_inv + fit.xtx_inv.transpose()).eval();

    fit.fitted = xk * fit.beta;
    fit.residuals = y - fit.fitted;
    fit.ssr = fit.residuals.squaredNorm();
    return fit;
}

Eigen::MatrixXd symmetric_pinv(const Eigen::MatrixXd& a, Eigen::Index* rank, double tol) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (a + a.transpose()));
    const Eigen::VectorXd& ev = es.eigenvalues();
    const double scale = ev.size() ? ev.cwiseAbs().maxCoeff() : 0.0;
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (scale > 0.0 && std::fabs(ev(i)) > tol * scale) {
            inv(i) = 1.0 / ev(i);
            ++r;
        }
    }
    if (rank) *rank = r;
    return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& a, const std::string& what) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (a + a.transpose()));
    const Eigen::VectorXd& ev = es.eigenvalues();
    if (ev.size() == 0) return Eigen::MatrixXd(0, 0);
    const double top = ev.cwiseAbs().maxCoeff();
    if (!(top > 0.0) || ev.minCoeff() <= 1e-12 * top)
        throw NumericalError(what + " is singular to working precision (min/max eigenvalue " +
                             std::to_string(top > 0.0 ? ev.minCoeff() / top : 0.0) + ")");
    return es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
}

double pairwise_sum(const double* values, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += values[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(values, half) + pairwise_sum(values + half, n - half);
}

}  // namespace panelgmm
