#include <cmath>

#include "detect_detail.hpp"

namespace lsad {

using detail::PrefixMoments;
using detail::PrefixScatter;

DetectionOutcome sp_um_statistic(const MeasurementWindow& window,
                                 const ChangePointDomain& domain) {
    const int n_dims = window.n_dims();
    const int k_total = window.n_samples();
    domain.validate(k_total);
    const auto std_win = detail::standardize(window);
    const PrefixMoments pm(std_win.data);

    const Eigen::VectorXd a_full = pm.sums.col(k_total);
    const Eigen::VectorXd b_full = pm.sq.col(k_total);
    Eigen::VectorXd log_r0(n_dims);
    for (int n = 0; n < n_dims; ++n)
        log_r0[n] = std::log(
            std::max((b_full[n] - a_full[n] * a_full[n] / k_total) / k_total, 1e-300));

    DetectionOutcome out;
    double best = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_m1, best_m2, best_var;

    for (int k0 : domain.candidates) {
        const int k1 = k_total - k0;
        double value = 0.0;
        Eigen::VectorXd m1(n_dims), m2(n_dims), var(n_dims);
        for (int n = 0; n < n_dims; ++n) {
            const double a0 = pm.sums(n, k0), b0 = pm.sq(n, k0);
            const double a1 = a_full[n] - a0, b1 = b_full[n] - b0;
            const double r_pre = std::max(b0 - a0 * a0 / k0, 0.0);
            const double r_post = std::max(b1 - a1 * a1 / k1, 0.0);
            const double split = std::max((r_pre + r_post) / k_total, 1e-300);
            value += 0.5 * k_total * (log_r0[n] - std::log(split));
            m1[n] = a0 / k0;
            m2[n] = a1 / k1;
            var[n] = split;
        }
        if (value > best) {
            best = value;
            out.k0_hat = k0;
            best_m1 = m1;
            best_m2 = m2;
            best_var = var;
        }
    }

    out.statistic = best;
    const Eigen::VectorXd scale2 = std_win.sigma.array().square();
    const Eigen::VectorXd var_orig = (scale2.array() * best_var.array()).max(1e-300);
    out.h1_pre = GaussianModel{
        std_win.mu.array() + std_win.sigma.array() * best_m1.array(),
        CovMatrix::diagonal(var_orig)};
    out.h1_post = GaussianModel{
        std_win.mu.array() + std_win.sigma.array() * best_m2.array(),
        CovMatrix::diagonal(var_orig)};
    return out;
}

DetectionOutcome sp_cm_statistic(const MeasurementWindow& window,
                                 const ChangePointDomain& domain) {
    const int k_total = window.n_samples();
    domain.validate(k_total);
    const auto wht = detail::whiten(window);
    const PrefixScatter ps(wht.data);

    const Eigen::VectorXd mean_w = ps.sums.col(k_total) / k_total;
    double h0_term = 0.0;
    {
        const Eigen::MatrixXd s = ps.outer[k_total] -
                                  ps.sums.col(k_total) * mean_w.transpose() -
                                  mean_w * ps.sums.col(k_total).transpose() +
                                  static_cast<double>(k_total) * mean_w * mean_w.transpose();
        if (const auto ch = cholesky_logdet(s / k_total)) h0_term = 0.5 * k_total * ch->log_det;
    }

    DetectionOutcome out;
    double best = -std::numeric_limits<double>::infinity();
    int best_k0 = 0;

    for (int k0 : domain.candidates) {
        const int k1 = k_total - k0;
        const Eigen::VectorXd s0 = ps.sums.col(k0);
        const Eigen::VectorXd s1 = ps.sums.col(k_total) - s0;
        // split scatter about the two segment means
        const Eigen::MatrixXd split =
            ps.outer[k_total] - s0 * s0.transpose() / static_cast<double>(k0) -
            s1 * s1.transpose() / static_cast<double>(k1);
        const auto chol = cholesky_logdet(split / k_total);
        if (!chol) continue;
        const double value = h0_term - 0.5 * k_total * chol->log_det;
        if (value > best) {
            best = value;
            best_k0 = k0;
        }
    }

    if (!std::isfinite(best)) {
        out.statistic = 0.0;
        return out;
    }
    out.statistic = best;
    out.k0_hat = best_k0;

    const int k1 = k_total - best_k0;
    const Eigen::VectorXd s0 = ps.sums.col(best_k0);
    const Eigen::VectorXd s1 = ps.sums.col(k_total) - s0;
    const Eigen::MatrixXd split = ps.outer[k_total] -
                                  s0 * s0.transpose() / static_cast<double>(best_k0) -
                                  s1 * s1.transpose() / static_cast<double>(k1);
    const Eigen::MatrixXd cov = wht.lower * (split / k_total) * wht.lower.transpose();
    out.h1_pre = GaussianModel{wht.mu + wht.lower * (s0 / best_k0), CovMatrix::full(cov)};
    out.h1_post = GaussianModel{wht.mu + wht.lower * (s1 / k1), CovMatrix::full(cov)};
    return out;
}

}  // namespace lsad
