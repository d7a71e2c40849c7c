#include <cmath>

#include "detect_detail.hpp"

namespace lsad {

using detail::PrefixMoments;
using detail::PrefixScatter;

ChangePointDomain ChangePointDomain::range(int lo, int hi) {
    ChangePointDomain d;
    for (int k = lo; k <= hi; ++k) d.candidates.push_back(k);
    return d;
}

ChangePointDomain ChangePointDomain::nlj_um_default(int n_dims, int n_samples) {
    const int floor = std::max(2, n_dims);
    return range(floor, n_samples - floor);
}

ChangePointDomain ChangePointDomain::nlj_cm_default(int n_dims, int n_samples) {
    return range(n_dims, n_samples - n_dims);
}

ChangePointDomain ChangePointDomain::sp_um_default(int n_samples) {
    return range(2, n_samples - 2);
}

ChangePointDomain ChangePointDomain::sp_cm_default(int n_dims, int n_samples) {
    return range(n_dims, n_samples - n_dims);
}

void ChangePointDomain::validate(int n_samples) const {
    if (candidates.empty())
        throw ConfigError("change-point domain is empty");
    for (size_t i = 0; i < candidates.size(); ++i) {
        if (candidates[i] < 1 || candidates[i] > n_samples - 1)
            throw ConfigError("change-point candidate outside 1..K-1");
        if (i > 0 && candidates[i] <= candidates[i - 1])
            throw ConfigError("change-point candidates must be strictly increasing");
    }
}

namespace {

constexpr double kVarFloor = 1e-300;

/// Split second moments of one dimension about a trial mean m.
struct SegmentFit {
    double v_pre, v_post;  // biased segment variances about m
};

SegmentFit segment_variances(double a0, double b0, int k0, double a1, double b1, int k1,
                             double m) {
    const double q0 = std::max(b0 - 2.0 * m * a0 + k0 * m * m, kVarFloor);
    const double q1 = std::max(b1 - 2.0 * m * a1 + k1 * m * m, kVarFloor);
    return {q0 / k0, q1 / k1};
}

}  // namespace

DetectionOutcome nlj_um_statistic(const MeasurementWindow& window,
                                  const ChangePointDomain& domain) {
    const int n_dims = window.n_dims();
    const int k_total = window.n_samples();
    domain.validate(k_total);
    const auto std_win = detail::standardize(window);
    const PrefixMoments pm(std_win.data);

    const Eigen::VectorXd a_full = pm.sums.col(k_total);
    const Eigen::VectorXd b_full = pm.sq.col(k_total);
    // H0 per-dimension variance of the standardized data (1 up to rounding)
    Eigen::VectorXd log_v0(n_dims);
    for (int n = 0; n < n_dims; ++n) {
        const double m0 = a_full[n] / k_total;
        log_v0[n] = std::log(std::max(
            (b_full[n] - 2.0 * m0 * a_full[n] + k_total * m0 * m0) / k_total, kVarFloor));
    }

    DetectionOutcome out;
    double best = -std::numeric_limits<double>::infinity();
    std::vector<int> best_active;
    Eigen::VectorXd best_m1, best_v1, best_v2;

    std::vector<double> candidates;
    for (int k0 : domain.candidates) {
        const int k1 = k_total - k0;
        double value = 0.0;
        std::vector<int> active;
        Eigen::VectorXd m1_hat(n_dims), v1_hat(n_dims), v2_hat(n_dims);
        for (int n = 0; n < n_dims; ++n) {
            const double a0 = pm.sums(n, k0), b0 = pm.sq(n, k0);
            const double a1 = a_full[n] - a0, b1 = b_full[n] - b0;
            const double m0n = a_full[n] / k_total;

            CubicCoefficients c;
            c.c3 = -static_cast<double>(k_total);
            c.c2 = a0 + a1 + 2.0 * k0 / k1 * a1 + 2.0 * k1 / k0 * a0;
            c.c1 = -(static_cast<double>(k0) / k1) * b1 - (static_cast<double>(k1) / k0) * b0 -
                   (2.0 / k1 + 2.0 / k0) * a1 * a0;
            c.c0 = b1 * a0 / k1 + b0 * a1 / k0;

            candidates = solve_cubic_real(c);
            candidates.push_back(m0n);

            double best_phi = -std::numeric_limits<double>::infinity();
            double m_hat = m0n, v1 = 1.0, v2 = 1.0;
            for (double m : candidates) {
                const auto [vp, vq] = segment_variances(a0, b0, k0, a1, b1, k1, m);
                const double phi = -0.5 * k0 * std::log(vp) - 0.5 * k1 * std::log(vq);
                if (phi > best_phi) {
                    best_phi = phi;
                    m_hat = m;
                    v1 = vp;
                    v2 = vq;
                }
            }
            if (v2 - v1 > 0.0) {
                active.push_back(n);
                value += 0.5 * k_total * log_v0[n] - 0.5 * k0 * std::log(v1) -
                         0.5 * k1 * std::log(v2);
                m1_hat[n] = m_hat;
                v1_hat[n] = v1;
                v2_hat[n] = v2;
            } else {
                // no variance increase: this dimension reverts to the pooled fit
                const auto [vp, vq] =
                    segment_variances(a0, b0, k0, a1, b1, k1, m0n);
                m1_hat[n] = m0n;
                v1_hat[n] = (k0 * vp + k1 * vq) / k_total;
                v2_hat[n] = v1_hat[n];
            }
        }
        if (value > best) {
            best = value;
            out.k0_hat = k0;
            best_active = std::move(active);
            best_m1 = m1_hat;
            best_v1 = v1_hat;
            best_v2 = v2_hat;
        }
    }

    out.statistic = best_active.empty() ? 0.0 : best;
    out.active_set = std::move(best_active);
    // nuisance estimates in original units
    const Eigen::VectorXd m1_orig = std_win.mu.array() + std_win.sigma.array() * best_m1.array();
    const Eigen::VectorXd scale2 = std_win.sigma.array().square();
    out.h1_pre = GaussianModel{m1_orig,
                               CovMatrix::diagonal((scale2.array() * best_v1.array()).max(kVarFloor))};
    out.h1_post = GaussianModel{m1_orig,
                                CovMatrix::diagonal((scale2.array() * best_v2.array()).max(kVarFloor))};
    return out;
}

namespace {

/// Profile objective for the correlated variance-change fit at one candidate:
/// scatter assembly, value, and ascent machinery for the shared mean.
struct CmCandidateContext {
    const Eigen::MatrixXd &outer_pre, &outer_post;
    const Eigen::VectorXd &sum_pre, &sum_post;
    int k0, k1, n;

    Eigen::MatrixXd scatter_pre(const Eigen::VectorXd& m) const {
        return outer_pre - sum_pre * m.transpose() - m * sum_pre.transpose() +
               static_cast<double>(k0) * m * m.transpose();
    }
    Eigen::MatrixXd scatter_post(const Eigen::VectorXd& m) const {
        return outer_post - sum_post * m.transpose() - m * sum_post.transpose() +
               static_cast<double>(k1) * m * m.transpose();
    }

    std::optional<double> value(const Eigen::VectorXd& m) const {
        const auto c0 = cholesky_logdet(scatter_pre(m));
        if (!c0) return std::nullopt;
        const auto c1 = cholesky_logdet(scatter_post(m));
        if (!c1) return std::nullopt;
        return -0.5 * k0 * (c0->log_det - n * std::log(double(k0))) -
               0.5 * k1 * (c1->log_det - n * std::log(double(k1)));
    }

    /// Damped Newton ascent from a seed; returns the reached (value, point).
    std::pair<double, Eigen::VectorXd> ascend(Eigen::VectorXd m) const {
        auto val = value(m);
        if (!val) return {-std::numeric_limits<double>::infinity(), m};
        for (int iter = 0; iter < 40; ++iter) {
            const auto c0 = cholesky_logdet(scatter_pre(m));
            const auto c1 = cholesky_logdet(scatter_post(m));
            if (!c0 || !c1) break;
            const Eigen::VectorXd r0 = sum_pre - static_cast<double>(k0) * m;
            const Eigen::VectorXd r1 = sum_post - static_cast<double>(k1) * m;
            const Eigen::VectorXd w0 = detail::spd_solve(*c0, r0);
            const Eigen::VectorXd w1 = detail::spd_solve(*c1, r1);
            const Eigen::VectorXd grad = k0 * w0 + k1 * w1;
            const Eigen::MatrixXd inv0 = detail::spd_inverse(*c0);
            const Eigen::MatrixXd inv1 = detail::spd_inverse(*c1);
            const Eigen::MatrixXd hess =
                k0 * (w0 * w0.transpose() + r0.dot(w0) * inv0 - k0 * inv0) +
                k1 * (w1 * w1.transpose() + r1.dot(w1) * inv1 - k1 * inv1);
            Eigen::VectorXd dir;
            const auto neg_h = cholesky_logdet(-hess);
            if (neg_h)
                dir = detail::spd_solve(*neg_h, grad);
            else
                dir = grad / std::max(grad.norm(), 1e-300);
            double t = 1.0;
            bool moved = false;
            while (t > 1e-10) {
                const Eigen::VectorXd trial = m + t * dir;
                const auto tv = value(trial);
                if (tv && *tv > *val) {
                    m = trial;
                    val = tv;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if (!moved || t * dir.norm() < 1e-13 * (1.0 + m.norm())) break;
        }
        return {*val, m};
    }
};

}  // namespace

DetectionOutcome nlj_cm_statistic(const MeasurementWindow& window,
                                  const ChangePointDomain& domain,
                                  CmMeanUpdate mean_update) {
    const int n_dims = window.n_dims();
    const int k_total = window.n_samples();
    domain.validate(k_total);
    const auto wht = detail::whiten(window);
    const PrefixScatter ps(wht.data);

    // H0 compressed term on the whitened data (zero up to rounding)
    const Eigen::VectorXd mean_w = ps.sums.col(k_total) / k_total;
    double h0_term = 0.0;
    {
        const Eigen::MatrixXd s = ps.outer[k_total] - ps.sums.col(k_total) * mean_w.transpose() -
                                  mean_w * ps.sums.col(k_total).transpose() +
                                  static_cast<double>(k_total) * mean_w * mean_w.transpose();
        if (const auto ch = cholesky_logdet(s / k_total)) h0_term = 0.5 * k_total * ch->log_det;
    }

    DetectionOutcome out;
    double best = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_m;
    int best_k0 = 0;

    for (int k0 : domain.candidates) {
        const int k1 = k_total - k0;
        const Eigen::VectorXd s0 = ps.sums.col(k0);
        const Eigen::VectorXd s1 = ps.sums.col(k_total) - s0;
        const Eigen::MatrixXd m_pre =
            ps.outer[k0] - s0 * s0.transpose() / static_cast<double>(k0);
        const Eigen::MatrixXd m_post = (ps.outer[k_total] - ps.outer[k0]) -
                                       s1 * s1.transpose() / static_cast<double>(k1);
        const auto chol_pre = cholesky_logdet(m_pre);
        const auto chol_post = cholesky_logdet(m_post);
        if (!chol_pre || !chol_post) continue;  // segment scatter singular

        const Eigen::MatrixXd inv_pre = detail::spd_inverse(*chol_pre);
        const Eigen::MatrixXd inv_post = detail::spd_inverse(*chol_post);
        const Eigen::MatrixXd lhs = k0 * inv_pre + k1 * inv_post;
        const Eigen::VectorXd rhs = inv_pre * s0 + inv_post * s1;
        const auto chol_lhs = cholesky_logdet(lhs);
        if (!chol_lhs) continue;
        const Eigen::VectorXd m_closed = detail::spd_solve(*chol_lhs, rhs);

        const CmCandidateContext ctx{ps.outer[k0], ps.outer[k_total] - ps.outer[k0],
                                     s0, s1, k0, k1, n_dims};
        Eigen::VectorXd m_hat;
        double val;
        if (mean_update == CmMeanUpdate::ClosedForm) {
            const auto v = ctx.value(m_closed);
            if (!v) continue;
            m_hat = m_closed;
            val = *v;
        } else {
            const Eigen::VectorXd mu_pre = s0 / k0;
            const Eigen::VectorXd mu_post = s1 / k1;
            std::vector<Eigen::VectorXd> seeds{m_closed, mu_pre, mu_post, mean_w,
                                               0.5 * (mu_pre + mu_post),
                                               0.25 * mu_pre + 0.75 * mu_post,
                                               0.75 * mu_pre + 0.25 * mu_post};
            val = -std::numeric_limits<double>::infinity();
            for (const auto& seed : seeds) {
                const auto [v, m] = ctx.ascend(seed);
                if (v > val) {
                    val = v;
                    m_hat = m;
                }
            }
            if (!std::isfinite(val)) continue;
        }

        // variance-increase gate on the fitted segment covariances
        const Eigen::MatrixXd gap =
            ctx.scatter_post(m_hat) / k1 - ctx.scatter_pre(m_hat) / k0;
        if (!cholesky_logdet(gap)) continue;

        const double candidate = h0_term + val;
        if (candidate > best) {
            best = candidate;
            best_k0 = k0;
            best_m = m_hat;
        }
    }

    if (!std::isfinite(best)) {
        out.statistic = 0.0;
        return out;
    }
    out.statistic = best;
    out.k0_hat = best_k0;
    const int k1 = k_total - best_k0;
    const CmCandidateContext ctx{ps.outer[best_k0], ps.outer[k_total] - ps.outer[best_k0],
                                 ps.sums.col(best_k0),
                                 ps.sums.col(k_total) - ps.sums.col(best_k0),
                                 best_k0, k1, n_dims};
    const Eigen::VectorXd m_orig = wht.mu + wht.lower * best_m;
    const Eigen::MatrixXd lw = wht.lower;
    out.h1_pre = GaussianModel{
        m_orig, CovMatrix::full(lw * (ctx.scatter_pre(best_m) / best_k0) * lw.transpose())};
    out.h1_post = GaussianModel{
        m_orig, CovMatrix::full(lw * (ctx.scatter_post(best_m) / k1) * lw.transpose())};
    return out;
}

namespace {

struct EStepResult {
    Eigen::MatrixXd resp;      // K x 2
    Eigen::Vector2d totals;    // column sums
};

std::optional<EStepResult> e_step(const Eigen::MatrixXd& data,
                                  const MixtureState& state) {
    const int k_total = static_cast<int>(data.cols());
    std::array<std::optional<detail::GaussView>, 2> views;
    for (int a = 0; a < 2; ++a)
        views[a] = detail::GaussView::make(state.means[a], state.covs[a].dense());
    if (!views[0] || !views[1]) return std::nullopt;

    EStepResult r;
    r.resp.resize(k_total, 2);
    r.totals.setZero();
    for (int k = 0; k < k_total; ++k) {
        double l0 = std::log(state.priors[0]) + views[0]->log_pdf(data.col(k));
        double l1 = std::log(state.priors[1]) + views[1]->log_pdf(data.col(k));
        const double mx = std::max(l0, l1);
        if (!std::isfinite(mx)) return std::nullopt;
        const double w0 = std::exp(l0 - mx), w1 = std::exp(l1 - mx);
        r.resp(k, 0) = w0 / (w0 + w1);
        r.resp(k, 1) = w1 / (w0 + w1);
    }
    r.totals = r.resp.colwise().sum();
    if (r.totals.minCoeff() < 1e-12 * k_total) return std::nullopt;
    return r;
}

double mixture_log_likelihood(const Eigen::MatrixXd& data, const MixtureState& state) {
    std::array<std::optional<detail::GaussView>, 2> views;
    for (int a = 0; a < 2; ++a)
        views[a] = detail::GaussView::make(state.means[a], state.covs[a].dense());
    if (!views[0] || !views[1]) return -std::numeric_limits<double>::infinity();
    double total = 0.0;
    for (int k = 0; k < static_cast<int>(data.cols()); ++k) {
        const double l0 = std::log(state.priors[0]) + views[0]->log_pdf(data.col(k));
        const double l1 = std::log(state.priors[1]) + views[1]->log_pdf(data.col(k));
        const double mx = std::max(l0, l1);
        total += mx + std::log(std::exp(l0 - mx) + std::exp(l1 - mx));
    }
    return total;
}

}  // namespace

MixtureState lvm_nlj_init(const MeasurementWindow& window) {
    const GaussianModel h0 = h0_mle_full(window);
    MixtureState s;
    s.priors = Eigen::Vector2d(0.5, 0.5);
    s.means = {h0.mean, h0.mean};
    s.covs = {CovMatrix::full(0.5 * h0.covariance.matrix()),
              CovMatrix::full(1.5 * h0.covariance.matrix())};
    s.responsibilities = Eigen::MatrixXd::Constant(window.n_samples(), 2, 0.5);
    s.iteration = 0;
    return s;
}

std::optional<MixtureState> lvm_nlj_em_step(const MeasurementWindow& window,
                                            const MixtureState& state) {
    const Eigen::MatrixXd& data = window.data();
    const int k_total = window.n_samples();
    const auto es = e_step(data, state);
    if (!es) return std::nullopt;

    MixtureState next;
    next.responsibilities = es->resp;
    next.priors = es->totals / k_total;

    // covariances about the current shared mean
    const Eigen::MatrixXd centered = data.colwise() - state.means[0];
    std::array<Eigen::MatrixXd, 2> cov{};
    std::array<std::optional<CholeskyResult>, 2> chol;
    for (int a = 0; a < 2; ++a) {
        cov[a] = (centered.array().rowwise() * es->resp.col(a).transpose().array()).matrix() *
                 centered.transpose() / es->totals[a];
        chol[a] = cholesky_logdet(cov[a]);
        if (!chol[a]) return std::nullopt;
    }

    // shared mean: exact maximizer given the refreshed covariances
    Eigen::MatrixXd lhs = Eigen::MatrixXd::Zero(window.n_dims(), window.n_dims());
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(window.n_dims());
    for (int a = 0; a < 2; ++a) {
        const Eigen::MatrixXd inv = detail::spd_inverse(*chol[a]);
        const Eigen::VectorXd weighted = data * es->resp.col(a);
        lhs += es->totals[a] * inv;
        rhs += inv * weighted;
    }
    const auto chol_lhs = cholesky_logdet(lhs);
    if (!chol_lhs) return std::nullopt;
    const Eigen::VectorXd mean = detail::spd_solve(*chol_lhs, rhs);

    next.means = {mean, mean};
    next.covs = {CovMatrix::full(std::move(cov[0])), CovMatrix::full(std::move(cov[1]))};
    next.iteration = state.iteration + 1;
    return next;
}

double lvm_nlj_log_likelihood(const MeasurementWindow& window, const MixtureState& state) {
    return mixture_log_likelihood(window.data(), state);
}

namespace {

/// Shared EM driver: iterate with early exit on relative likelihood change.
template <typename Step>
DetectionOutcome lvm_statistic_impl(const MeasurementWindow& window, int n_iters,
                                    MixtureState state, const Step& step) {
    if (n_iters < 1) throw std::invalid_argument("lvm statistic: n_iters must be >= 1");
    DetectionOutcome out;
    double ll = mixture_log_likelihood(window.data(), state);
    for (int h = 0; h < n_iters; ++h) {
        auto next = step(window, state);
        if (!next) {
            out.statistic = 0.0;
            out.em_collapsed = true;
            out.mixture = std::move(state);
            return out;
        }
        state = std::move(*next);
        const double ll_next = mixture_log_likelihood(window.data(), state);
        const bool converged = std::abs(ll_next - ll) <= 1e-8 * std::abs(ll_next);
        ll = ll_next;
        if (converged) break;
    }
    const GaussianModel h0 = h0_mle_full(window);
    double h0_ll = 0.0;
    for (int k = 0; k < window.n_samples(); ++k)
        h0_ll += gaussian_log_pdf(window.data().col(k), h0);
    out.statistic = ll - h0_ll;
    out.mixture = std::move(state);
    return out;
}

}  // namespace

DetectionOutcome lvm_nlj_statistic(const MeasurementWindow& window, int n_iters) {
    return lvm_statistic_impl(window, n_iters, lvm_nlj_init(window),
                              [](const MeasurementWindow& w, const MixtureState& s) {
                                  return lvm_nlj_em_step(w, s);
                              });
}

DetectionOutcome lvm_sp_statistic(const MeasurementWindow& window, int n_iters) {
    return lvm_statistic_impl(window, n_iters, lvm_sp_init(window),
                              [](const MeasurementWindow& w, const MixtureState& s) {
                                  return lvm_sp_em_step(w, s);
                              });
}

double lvm_sp_log_likelihood(const MeasurementWindow& window, const MixtureState& state) {
    return mixture_log_likelihood(window.data(), state);
}

MixtureState lvm_sp_init(const MeasurementWindow& window) {
    const GaussianModel h0 = h0_mle_full(window);
    const int k_total = window.n_samples();
    MixtureState s;
    s.priors = Eigen::Vector2d(0.5, 0.5);
    s.means = {sample_mean(window, 0, k_total / 2), sample_mean(window, k_total / 2, k_total)};
    s.covs = {CovMatrix::full(h0.covariance.matrix()),
              CovMatrix::full(h0.covariance.matrix())};
    s.responsibilities = Eigen::MatrixXd::Constant(k_total, 2, 0.5);
    s.iteration = 0;
    return s;
}

std::optional<MixtureState> lvm_sp_em_step(const MeasurementWindow& window,
                                           const MixtureState& state) {
    const Eigen::MatrixXd& data = window.data();
    const int k_total = window.n_samples();
    const auto es = e_step(data, state);
    if (!es) return std::nullopt;

    MixtureState next;
    next.responsibilities = es->resp;
    next.priors = es->totals / k_total;

    // exact joint M-step: responsibility-weighted means, then the shared
    // covariance about them
    std::array<Eigen::VectorXd, 2> means;
    for (int a = 0; a < 2; ++a) means[a] = (data * es->resp.col(a)) / es->totals[a];
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(window.n_dims(), window.n_dims());
    for (int a = 0; a < 2; ++a) {
        const Eigen::MatrixXd centered = data.colwise() - means[a];
        cov += (centered.array().rowwise() * es->resp.col(a).transpose().array()).matrix() *
               centered.transpose();
    }
    cov /= k_total;
    if (!cholesky_logdet(cov)) return std::nullopt;

    next.means = std::move(means);
    next.covs = {CovMatrix::full(cov), CovMatrix::full(cov)};
    next.iteration = state.iteration + 1;
    return next;
}

}  // namespace lsad
