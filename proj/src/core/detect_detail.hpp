#pragma once

#include "detect.hpp"

namespace lsad::detail {

/// Forward/back substitution against a lower Cholesky factor.
inline Eigen::VectorXd spd_solve(const CholeskyResult& chol, const Eigen::VectorXd& rhs) {
    Eigen::VectorXd y = chol.lower.triangularView<Eigen::Lower>().solve(rhs);
    return chol.lower.transpose().triangularView<Eigen::Upper>().solve(y);
}

inline Eigen::MatrixXd spd_inverse(const CholeskyResult& chol) {
    const int n = static_cast<int>(chol.lower.rows());
    Eigen::MatrixXd y = chol.lower.triangularView<Eigen::Lower>().solve(
        Eigen::MatrixXd::Identity(n, n));
    return chol.lower.transpose().triangularView<Eigen::Upper>().solve(y);
}

/// Cached evaluator for repeated log-density queries under one model.
struct GaussView {
    Eigen::VectorXd mean;
    Eigen::MatrixXd lower;
    double log_det = 0.0;

    static std::optional<GaussView> make(const Eigen::VectorXd& mean,
                                         const Eigen::MatrixXd& cov) {
        auto chol = cholesky_logdet(cov);
        if (!chol) return std::nullopt;
        return GaussView{mean, std::move(chol->lower), chol->log_det};
    }

    double log_pdf(const Eigen::VectorXd& z) const {
        static const double kLogTwoPi = std::log(6.283185307179586476925286766559);
        const Eigen::VectorXd y = lower.triangularView<Eigen::Lower>().solve(z - mean);
        return -0.5 * (mean.size() * kLogTwoPi + log_det + y.squaredNorm());
    }
};

/// Per-dimension standardization (x - mu) / sigma by the H0 MLE.
struct Standardized {
    Eigen::MatrixXd data;       // N x K
    Eigen::VectorXd mu, sigma;  // original-unit location/scale per dimension
};

inline Standardized standardize(const MeasurementWindow& window) {
    const GaussianModel h0 = h0_mle_diagonal(window);
    Standardized s;
    s.mu = h0.mean;
    s.sigma = h0.covariance.diag().array().sqrt();
    s.data = (window.data().colwise() - s.mu).array().colwise() / s.sigma.array();
    return s;
}

/// Whitening L^-1 (x - mu) by the full-covariance H0 MLE.
struct Whitened {
    Eigen::MatrixXd data;   // N x K
    Eigen::VectorXd mu;
    Eigen::MatrixXd lower;  // Sigma0_hat = lower * lower^T
};

inline Whitened whiten(const MeasurementWindow& window) {
    const GaussianModel h0 = h0_mle_full(window);
    const auto chol = cholesky_logdet(h0.covariance.matrix());
    if (!chol) throw DegenerateWindow("whiten: H0 covariance not positive definite");
    Whitened w;
    w.mu = h0.mean;
    w.lower = chol->lower;
    w.data = w.lower.triangularView<Eigen::Lower>().solve(
        (window.data().colwise() - w.mu).eval());
    return w;
}

/// Running first/second moments over column prefixes: sums[k], sq[k] cover
/// columns [0, k).
struct PrefixMoments {
    Eigen::MatrixXd sums;  // N x (K+1)
    Eigen::MatrixXd sq;    // N x (K+1)

    explicit PrefixMoments(const Eigen::MatrixXd& data) {
        const auto n = data.rows();
        const auto k = data.cols();
        sums.setZero(n, k + 1);
        sq.setZero(n, k + 1);
        for (Eigen::Index j = 0; j < k; ++j) {
            sums.col(j + 1) = sums.col(j) + data.col(j);
            sq.col(j + 1) = sq.col(j) + data.col(j).cwiseAbs2();
        }
    }
};

/// Prefix vector sums and outer-product sums for the correlated detectors.
struct PrefixScatter {
    Eigen::MatrixXd sums;              // N x (K+1)
    std::vector<Eigen::MatrixXd> outer;  // K+1 matrices, N x N

    explicit PrefixScatter(const Eigen::MatrixXd& data) {
        const auto n = data.rows();
        const auto k = data.cols();
        sums.setZero(n, k + 1);
        outer.assign(k + 1, Eigen::MatrixXd::Zero(n, n));
        for (Eigen::Index j = 0; j < k; ++j) {
            sums.col(j + 1) = sums.col(j) + data.col(j);
            outer[j + 1] = outer[j] + data.col(j) * data.col(j).transpose();
        }
    }
};

}  // namespace lsad::detail
