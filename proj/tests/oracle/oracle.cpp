#include "oracle.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

namespace lsad::oracle {

namespace {
constexpr double kLogTwoPi = 1.8378770664093454835606594728112;
}

Eigen::VectorXd naive_mean(const Eigen::MatrixXd& data, int first, int last) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(data.rows());
    for (int k = first; k < last; ++k)
        for (int n = 0; n < data.rows(); ++n) acc[n] += data(n, k);
    return acc / (last - first);
}

Eigen::MatrixXd naive_scatter(const Eigen::MatrixXd& data, int first, int last,
                              const Eigen::VectorXd& center) {
    const int n = static_cast<int>(data.rows());
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
    for (int k = first; k < last; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                acc(i, j) += (data(i, k) - center[i]) * (data(j, k) - center[j]);
    return acc;
}

std::optional<double> eigen_logdet(const Eigen::MatrixXd& matrix) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(matrix);
    if (es.info() != Eigen::Success) return std::nullopt;
    double acc = 0.0;
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
        if (es.eigenvalues()[i] <= 0.0) return std::nullopt;
        acc += std::log(es.eigenvalues()[i]);
    }
    return acc;
}

double explicit_inverse_log_pdf(const Eigen::VectorXd& z, const Eigen::VectorXd& mean,
                                const Eigen::MatrixXd& cov) {
    const Eigen::MatrixXd inv = cov.inverse();
    const Eigen::VectorXd d = z - mean;
    return -0.5 * (z.size() * kLogTwoPi + std::log(cov.determinant()) +
                   d.dot(inv * d));
}

std::vector<double> companion_cubic_roots(double c3, double c2, double c1, double c0,
                                          double imag_tol) {
    Eigen::Matrix3d companion = Eigen::Matrix3d::Zero();
    companion(1, 0) = 1.0;
    companion(2, 1) = 1.0;
    companion(0, 2) = -c0 / c3;
    companion(1, 2) = -c1 / c3;
    companion(2, 2) = -c2 / c3;
    Eigen::EigenSolver<Eigen::Matrix3d> es(companion);
    std::vector<double> roots;
    for (int i = 0; i < 3; ++i) {
        const auto ev = es.eigenvalues()[i];
        if (std::abs(ev.imag()) < imag_tol) roots.push_back(ev.real());
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

namespace {

struct SegmentSums {
    double a0, b0, a1, b1;
    int k0, k1;
};

SegmentSums segment_sums(const Eigen::MatrixXd& data, int dim, int k0) {
    SegmentSums s{0, 0, 0, 0, k0, static_cast<int>(data.cols()) - k0};
    for (int k = 0; k < k0; ++k) {
        s.a0 += data(dim, k);
        s.b0 += data(dim, k) * data(dim, k);
    }
    for (int k = k0; k < data.cols(); ++k) {
        s.a1 += data(dim, k);
        s.b1 += data(dim, k) * data(dim, k);
    }
    return s;
}

/// H1 log-likelihood terms for one dimension at (m, v1, v2), constants kept.
double nlj_dim_loglik(const SegmentSums& s, double m, double v1, double v2) {
    const double q0 = s.b0 - 2 * m * s.a0 + s.k0 * m * m;
    const double q1 = s.b1 - 2 * m * s.a1 + s.k1 * m * m;
    return -0.5 * s.k0 * std::log(v1) - 0.5 * q0 / v1 - 0.5 * s.k1 * std::log(v2) -
           0.5 * q1 / v2;
}

double h0_dim_loglik(const SegmentSums& s) {
    const int k = s.k0 + s.k1;
    const double mean = (s.a0 + s.a1) / k;
    const double var = (s.b0 + s.b1 - 2 * mean * (s.a0 + s.a1) + k * mean * mean) / k;
    return -0.5 * k * std::log(var) - 0.5 * k;
}

std::vector<double> linear_grid(double lo, double hi, int points) {
    std::vector<double> g(points);
    for (int i = 0; i < points; ++i) g[i] = lo + (hi - lo) * i / (points - 1);
    return g;
}

std::vector<double> log_grid(double lo, double hi, int points) {
    std::vector<double> g(points);
    const double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i < points; ++i)
        g[i] = std::exp(llo + (lhi - llo) * i / (points - 1));
    return g;
}

}  // namespace

double nlj_um_grid_statistic(const Eigen::MatrixXd& data, const std::vector<int>& omega0,
                             int grid_points, int zoom_passes) {
    const int k_total = static_cast<int>(data.cols());
    double best = 0.0;
    for (int k0 : omega0) {
        double value = 0.0;
        for (int dim = 0; dim < data.rows(); ++dim) {
            const SegmentSums s = segment_sums(data, dim, k0);
            const double pooled_var =
                (s.b0 + s.b1) / k_total -
                std::pow((s.a0 + s.a1) / k_total, 2);
            double m_lo = data.row(dim).minCoeff(), m_hi = data.row(dim).maxCoeff();
            double v_lo = std::max(pooled_var * 1e-3, 1e-12);
            double v_hi = pooled_var * 1e3;
            double best_ll = -std::numeric_limits<double>::infinity();
            double bm = 0, bv1 = pooled_var, bv2 = pooled_var;
            for (int pass = 0; pass < zoom_passes; ++pass) {
                const auto ms = linear_grid(m_lo, m_hi, grid_points);
                const auto vs = log_grid(v_lo, v_hi, grid_points);
                for (double m : ms)
                    for (double v1 : vs)
                        for (double v2 : vs) {
                            if (v2 < v1) continue;  // variance may only increase
                            const double ll = nlj_dim_loglik(s, m, v1, v2);
                            if (ll > best_ll) {
                                best_ll = ll;
                                bm = m;
                                bv1 = v1;
                                bv2 = v2;
                            }
                        }
                const double mw = (m_hi - m_lo) / (grid_points - 1);
                m_lo = bm - 2 * mw;
                m_hi = bm + 2 * mw;
                const double vr = std::pow(v_hi / v_lo, 1.0 / (grid_points - 1));
                v_lo = bv1 / (vr * vr);
                v_hi = bv2 * (vr * vr);
            }
            value += best_ll - h0_dim_loglik(s);
        }
        best = std::max(best, value);
    }
    return best;
}

namespace {

Eigen::MatrixXd scatter_about(const Eigen::MatrixXd& data, int first, int last,
                              const Eigen::VectorXd& m) {
    return naive_scatter(data, first, last, m);
}

std::optional<double> cm_candidate_value(const Eigen::MatrixXd& data, int k0,
                                         const Eigen::VectorXd& m) {
    const int k_total = static_cast<int>(data.cols());
    const int k1 = k_total - k0;
    const auto ld0 = eigen_logdet(scatter_about(data, 0, k0, m) / k0);
    const auto ld1 = eigen_logdet(scatter_about(data, k0, k_total, m) / k1);
    if (!ld0 || !ld1) return std::nullopt;
    const Eigen::VectorXd mean = naive_mean(data, 0, k_total);
    const auto ldh0 = eigen_logdet(scatter_about(data, 0, k_total, mean) / k_total);
    if (!ldh0) return std::nullopt;
    return 0.5 * k_total * *ldh0 - 0.5 * k0 * *ld0 - 0.5 * k1 * *ld1;
}

}  // namespace

std::optional<CmCandidateOracle> nlj_cm_grid_candidate(const Eigen::MatrixXd& data, int k0,
                                                       int grid_points, int zoom_passes) {
    const int n = static_cast<int>(data.rows());
    const int k_total = static_cast<int>(data.cols());
    const int k1 = k_total - k0;

    Eigen::VectorXd lo(n), hi(n);
    for (int d = 0; d < n; ++d) {
        lo[d] = data.row(d).minCoeff();
        hi[d] = data.row(d).maxCoeff();
        const double pad = 0.5 * (hi[d] - lo[d]);
        lo[d] -= pad;
        hi[d] += pad;
    }

    Eigen::VectorXd best_m = 0.5 * (lo + hi);
    auto best_v = cm_candidate_value(data, k0, best_m);
    if (n > 2) return std::nullopt;  // grid oracle kept to N <= 2

    for (int pass = 0; pass < zoom_passes; ++pass) {
        Eigen::VectorXd trial(n);
        if (n == 1) {
            for (double x : linear_grid(lo[0], hi[0], grid_points)) {
                trial[0] = x;
                const auto v = cm_candidate_value(data, k0, trial);
                if (v && (!best_v || *v > *best_v)) {
                    best_v = v;
                    best_m = trial;
                }
            }
        } else {
            for (double x : linear_grid(lo[0], hi[0], grid_points))
                for (double y : linear_grid(lo[1], hi[1], grid_points)) {
                    trial[0] = x;
                    trial[1] = y;
                    const auto v = cm_candidate_value(data, k0, trial);
                    if (v && (!best_v || *v > *best_v)) {
                        best_v = v;
                        best_m = trial;
                    }
                }
        }
        for (int d = 0; d < n; ++d) {
            const double w = (hi[d] - lo[d]) / (grid_points - 1);
            lo[d] = best_m[d] - 2 * w;
            hi[d] = best_m[d] + 2 * w;
        }
    }
    if (!best_v) return std::nullopt;

    const Eigen::MatrixXd gap = scatter_about(data, k0, k_total, best_m) / k1 -
                                scatter_about(data, 0, k0, best_m) / k0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gap);
    const bool gate_ok = es.eigenvalues().minCoeff() > 0.0;
    return CmCandidateOracle{best_m, *best_v, gate_ok};
}

double nlj_cm_grid_statistic(const Eigen::MatrixXd& data, const std::vector<int>& omega0) {
    double best = -std::numeric_limits<double>::infinity();
    for (int k0 : omega0) {
        const auto cand = nlj_cm_grid_candidate(data, k0);
        if (!cand || !cand->gate_ok) continue;
        best = std::max(best, cand->value);
    }
    return std::isfinite(best) ? best : 0.0;
}

double sp_um_grid_statistic(const Eigen::MatrixXd& data, const std::vector<int>& omega0,
                            int grid_points, int zoom_passes) {
    const int k_total = static_cast<int>(data.cols());
    double best = -std::numeric_limits<double>::infinity();
    for (int k0 : omega0) {
        double value = 0.0;
        for (int dim = 0; dim < data.rows(); ++dim) {
            const SegmentSums s = segment_sums(data, dim, k0);
            const double pooled_var =
                (s.b0 + s.b1) / k_total - std::pow((s.a0 + s.a1) / k_total, 2);
            double m_lo = data.row(dim).minCoeff(), m_hi = data.row(dim).maxCoeff();
            double m2_lo = m_lo, m2_hi = m_hi;
            double v_lo = std::max(pooled_var * 1e-3, 1e-12), v_hi = pooled_var * 1e3;
            double best_ll = -std::numeric_limits<double>::infinity();
            double bm1 = 0, bm2 = 0, bv = pooled_var;
            for (int pass = 0; pass < zoom_passes; ++pass) {
                for (double m1 : linear_grid(m_lo, m_hi, grid_points))
                    for (double m2 : linear_grid(m2_lo, m2_hi, grid_points))
                        for (double v : log_grid(v_lo, v_hi, grid_points)) {
                            const double q0 = s.b0 - 2 * m1 * s.a0 + s.k0 * m1 * m1;
                            const double q1 = s.b1 - 2 * m2 * s.a1 + s.k1 * m2 * m2;
                            const double ll =
                                -0.5 * k_total * std::log(v) - 0.5 * (q0 + q1) / v;
                            if (ll > best_ll) {
                                best_ll = ll;
                                bm1 = m1;
                                bm2 = m2;
                                bv = v;
                            }
                        }
                const double w1 = (m_hi - m_lo) / (grid_points - 1);
                m_lo = bm1 - 2 * w1;
                m_hi = bm1 + 2 * w1;
                const double w2 = (m2_hi - m2_lo) / (grid_points - 1);
                m2_lo = bm2 - 2 * w2;
                m2_hi = bm2 + 2 * w2;
                const double vr = std::pow(v_hi / v_lo, 2.0 / (grid_points - 1));
                v_lo = bv / vr;
                v_hi = bv * vr;
            }
            value += best_ll - h0_dim_loglik(s);
        }
        best = std::max(best, value);
    }
    return best;
}

namespace {

double sp_cm_split_value(const Eigen::MatrixXd& data, int k0, const Eigen::VectorXd& m1,
                         const Eigen::VectorXd& m2) {
    const int k_total = static_cast<int>(data.cols());
    const Eigen::MatrixXd split = scatter_about(data, 0, k0, m1) +
                                  scatter_about(data, k0, k_total, m2);
    const auto ld = eigen_logdet(split / k_total);
    return ld ? -0.5 * k_total * *ld : -std::numeric_limits<double>::infinity();
}

}  // namespace

double sp_cm_grid_statistic(const Eigen::MatrixXd& data, const std::vector<int>& omega0,
                            int grid_points, int zoom_passes) {
    const int n = static_cast<int>(data.rows());
    const int k_total = static_cast<int>(data.cols());
    const Eigen::VectorXd mean = naive_mean(data, 0, k_total);
    const auto ldh0 = eigen_logdet(scatter_about(data, 0, k_total, mean) / k_total);
    if (!ldh0 || n > 2) return std::numeric_limits<double>::quiet_NaN();

    double best = -std::numeric_limits<double>::infinity();
    for (int k0 : omega0) {
        Eigen::VectorXd m1 = naive_mean(data, 0, k0);
        Eigen::VectorXd m2 = naive_mean(data, k0, k_total);
        Eigen::VectorXd lo1(n), hi1(n), lo2(n), hi2(n);
        for (int d = 0; d < n; ++d) {
            const double span = data.row(d).maxCoeff() - data.row(d).minCoeff() + 1e-9;
            lo1[d] = m1[d] - span;
            hi1[d] = m1[d] + span;
            lo2[d] = m2[d] - span;
            hi2[d] = m2[d] + span;
        }
        // alternate zooming over the two segment means
        for (int pass = 0; pass < zoom_passes; ++pass) {
            for (int which = 0; which < 2; ++which) {
                Eigen::VectorXd& target = which == 0 ? m1 : m2;
                Eigen::VectorXd& lo = which == 0 ? lo1 : lo2;
                Eigen::VectorXd& hi = which == 0 ? hi1 : hi2;
                double local_best = sp_cm_split_value(data, k0, m1, m2);
                Eigen::VectorXd trial = target;
                Eigen::VectorXd best_t = target;
                if (n == 1) {
                    for (double x : linear_grid(lo[0], hi[0], grid_points)) {
                        trial[0] = x;
                        const double v = which == 0 ? sp_cm_split_value(data, k0, trial, m2)
                                                    : sp_cm_split_value(data, k0, m1, trial);
                        if (v > local_best) {
                            local_best = v;
                            best_t = trial;
                        }
                    }
                } else {
                    for (double x : linear_grid(lo[0], hi[0], grid_points))
                        for (double y : linear_grid(lo[1], hi[1], grid_points)) {
                            trial[0] = x;
                            trial[1] = y;
                            const double v = which == 0
                                                 ? sp_cm_split_value(data, k0, trial, m2)
                                                 : sp_cm_split_value(data, k0, m1, trial);
                            if (v > local_best) {
                                local_best = v;
                                best_t = trial;
                            }
                        }
                }
                target = best_t;
                for (int d = 0; d < n; ++d) {
                    const double w = (hi[d] - lo[d]) / (grid_points - 1);
                    lo[d] = target[d] - 2 * w;
                    hi[d] = target[d] + 2 * w;
                }
            }
        }
        best = std::max(best, 0.5 * k_total * *ldh0 + sp_cm_split_value(data, k0, m1, m2));
    }
    return best;
}

// ---- scalar EM ---------------------------------------------------------------

namespace {

double scalar_normal_logpdf(double z, double m, double var) {
    const double d = z - m;
    return -0.5 * (kLogTwoPi + std::log(var) + d * d / var);
}

struct ScalarResp {
    std::vector<double> q1;
    double tot1 = 0, tot2 = 0;
};

template <typename L1, typename L2>
ScalarResp scalar_e_step(const std::vector<double>& z, double pi1, double pi2, L1 l1,
                         L2 l2) {
    ScalarResp r;
    r.q1.resize(z.size());
    for (size_t k = 0; k < z.size(); ++k) {
        const double a = std::log(pi1) + l1(z[k]);
        const double b = std::log(pi2) + l2(z[k]);
        const double mx = std::max(a, b);
        const double wa = std::exp(a - mx), wb = std::exp(b - mx);
        r.q1[k] = wa / (wa + wb);
        r.tot1 += r.q1[k];
        r.tot2 += 1.0 - r.q1[k];
    }
    return r;
}

}  // namespace

ScalarNljEmState scalar_nlj_em_init(const std::vector<double>& z) {
    const int k = static_cast<int>(z.size());
    double mean = 0;
    for (double v : z) mean += v;
    mean /= k;
    double var = 0;
    for (double v : z) var += (v - mean) * (v - mean);
    var /= k;
    return ScalarNljEmState{0.5, 0.5, mean, 0.5 * var, 1.5 * var};
}

ScalarNljEmState scalar_nlj_em_step(const std::vector<double>& z,
                                    const ScalarNljEmState& s) {
    const int k = static_cast<int>(z.size());
    const auto r = scalar_e_step(
        z, s.pi1, s.pi2, [&](double x) { return scalar_normal_logpdf(x, s.mean, s.var1); },
        [&](double x) { return scalar_normal_logpdf(x, s.mean, s.var2); });
    ScalarNljEmState next{};
    next.pi1 = r.tot1 / k;
    next.pi2 = r.tot2 / k;
    double s1 = 0, s2 = 0, w1 = 0, w2 = 0;
    for (size_t i = 0; i < z.size(); ++i) {
        const double d = z[i] - s.mean;
        w1 += r.q1[i] * d * d;
        w2 += (1 - r.q1[i]) * d * d;
        s1 += r.q1[i] * z[i];
        s2 += (1 - r.q1[i]) * z[i];
    }
    next.var1 = w1 / r.tot1;
    next.var2 = w2 / r.tot2;
    next.mean = (s1 / next.var1 + s2 / next.var2) /
                (r.tot1 / next.var1 + r.tot2 / next.var2);
    return next;
}

double scalar_nlj_em_loglik(const std::vector<double>& z, const ScalarNljEmState& s) {
    double acc = 0;
    for (double x : z) {
        const double a = std::log(s.pi1) + scalar_normal_logpdf(x, s.mean, s.var1);
        const double b = std::log(s.pi2) + scalar_normal_logpdf(x, s.mean, s.var2);
        const double mx = std::max(a, b);
        acc += mx + std::log(std::exp(a - mx) + std::exp(b - mx));
    }
    return acc;
}

ScalarSpEmState scalar_sp_em_init(const std::vector<double>& z) {
    const int k = static_cast<int>(z.size());
    double mean = 0;
    for (double v : z) mean += v;
    mean /= k;
    double var = 0;
    for (double v : z) var += (v - mean) * (v - mean);
    var /= k;
    double m1 = 0, m2 = 0;
    const int half = k / 2;
    for (int i = 0; i < half; ++i) m1 += z[i];
    for (int i = half; i < k; ++i) m2 += z[i];
    return ScalarSpEmState{0.5, 0.5, m1 / half, m2 / (k - half), var};
}

ScalarSpEmState scalar_sp_em_step(const std::vector<double>& z, const ScalarSpEmState& s) {
    const int k = static_cast<int>(z.size());
    const auto r = scalar_e_step(
        z, s.pi1, s.pi2, [&](double x) { return scalar_normal_logpdf(x, s.mean1, s.var); },
        [&](double x) { return scalar_normal_logpdf(x, s.mean2, s.var); });
    ScalarSpEmState next{};
    next.pi1 = r.tot1 / k;
    next.pi2 = r.tot2 / k;
    double s1 = 0, s2 = 0;
    for (size_t i = 0; i < z.size(); ++i) {
        s1 += r.q1[i] * z[i];
        s2 += (1 - r.q1[i]) * z[i];
    }
    next.mean1 = s1 / r.tot1;
    next.mean2 = s2 / r.tot2;
    double w = 0;
    for (size_t i = 0; i < z.size(); ++i) {
        w += r.q1[i] * (z[i] - next.mean1) * (z[i] - next.mean1);
        w += (1 - r.q1[i]) * (z[i] - next.mean2) * (z[i] - next.mean2);
    }
    next.var = w / k;
    return next;
}

double scalar_sp_em_loglik(const std::vector<double>& z, const ScalarSpEmState& s) {
    double acc = 0;
    for (double x : z) {
        const double a = std::log(s.pi1) + scalar_normal_logpdf(x, s.mean1, s.var);
        const double b = std::log(s.pi2) + scalar_normal_logpdf(x, s.mean2, s.var);
        const double mx = std::max(a, b);
        acc += mx + std::log(std::exp(a - mx) + std::exp(b - mx));
    }
    return acc;
}

namespace {

double scalar_h0_loglik(const std::vector<double>& z) {
    const int k = static_cast<int>(z.size());
    double mean = 0;
    for (double v : z) mean += v;
    mean /= k;
    double var = 0;
    for (double v : z) var += (v - mean) * (v - mean);
    var /= k;
    double acc = 0;
    for (double v : z) acc += scalar_normal_logpdf(v, mean, var);
    return acc;
}

template <typename State, typename Init, typename Step, typename Loglik>
ScalarLvmRun scalar_lvm_run(const std::vector<double>& z, int n_iters, Init init,
                            Step step, Loglik loglik) {
    State s = init(z);
    double ll = loglik(z, s);
    ScalarLvmRun run;
    for (int h = 0; h < n_iters; ++h) {
        s = step(z, s);
        const double ll_next = loglik(z, s);
        run.loglik_trace.push_back(ll_next);
        const bool converged = std::abs(ll_next - ll) <= 1e-8 * std::abs(ll_next);
        ll = ll_next;
        if (converged) break;
    }
    run.statistic = ll - scalar_h0_loglik(z);
    return run;
}

}  // namespace

ScalarLvmRun scalar_nlj_lvm_run(const std::vector<double>& z, int n_iters) {
    return scalar_lvm_run<ScalarNljEmState>(z, n_iters, scalar_nlj_em_init,
                                            scalar_nlj_em_step, scalar_nlj_em_loglik);
}

ScalarLvmRun scalar_sp_lvm_run(const std::vector<double>& z, int n_iters) {
    return scalar_lvm_run<ScalarSpEmState>(z, n_iters, scalar_sp_em_init,
                                           scalar_sp_em_step, scalar_sp_em_loglik);
}

}  // namespace lsad::oracle
