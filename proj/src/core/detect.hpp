#pragma once

#include <array>
#include <optional>

#include "stat.hpp"

namespace lsad {

/// Admissible change-point candidates, expressed as the length of the
/// pre-attack segment (columns [0, k0) pre, [k0, K) post), so k0 in 1..K-1.
struct ChangePointDomain {
    std::vector<int> candidates;

    static ChangePointDomain range(int lo, int hi);

    /// Variance-change search: floor of 2 per segment, widened to N for
    /// multivariate windows so the search matches the correlated detector.
    static ChangePointDomain nlj_um_default(int n_dims, int n_samples);
    /// Correlated detectors: {N, ..., K-N}.
    static ChangePointDomain nlj_cm_default(int n_dims, int n_samples);
    /// Mean-change search with per-segment floor of 2.
    static ChangePointDomain sp_um_default(int n_samples);
    static ChangePointDomain sp_cm_default(int n_dims, int n_samples);

    void validate(int n_samples) const;
};

/// EM state for the two-component latent-variable detectors. The
/// covariance-mixture detector keeps a shared mean (means[0] == means[1]);
/// the mean-mixture detector keeps a shared covariance (covs[0] == covs[1]).
struct MixtureState {
    Eigen::Vector2d priors;
    std::array<Eigen::VectorXd, 2> means;
    std::array<CovMatrix, 2> covs;
    Eigen::MatrixXd responsibilities;  // K x 2, rows sum to 1
    int iteration = 0;
};

struct DetectionOutcome {
    double statistic = 0.0;
    /// Estimated change point (pre-segment length); absent for the EM
    /// detectors, whose mixture density does not depend on it.
    std::optional<int> k0_hat;
    /// Dimensions with an estimated variance increase at k0_hat
    /// (variance-change detector, uncorrelated case only).
    std::vector<int> active_set;
    /// Alternative-hypothesis parameter estimates at k0_hat: pre/post segment
    /// models for the GLRT detectors.
    std::optional<GaussianModel> h1_pre, h1_post;
    /// Final EM state for the latent-variable detectors.
    std::optional<MixtureState> mixture;
    bool em_collapsed = false;
    bool decision = false;
};

/// How the correlated variance-change detector estimates the shared mean:
/// the exact profile-likelihood maximizer (default), or the one-shot
/// closed form the derivation suggests (kept for comparability runs).
enum class CmMeanUpdate { Exact, ClosedForm };

DetectionOutcome nlj_um_statistic(const MeasurementWindow& window,
                                  const ChangePointDomain& domain);
DetectionOutcome nlj_cm_statistic(const MeasurementWindow& window,
                                  const ChangePointDomain& domain,
                                  CmMeanUpdate mean_update = CmMeanUpdate::Exact);

DetectionOutcome sp_um_statistic(const MeasurementWindow& window,
                                 const ChangePointDomain& domain);
DetectionOutcome sp_cm_statistic(const MeasurementWindow& window,
                                 const ChangePointDomain& domain);

MixtureState lvm_nlj_init(const MeasurementWindow& window);
MixtureState lvm_sp_init(const MeasurementWindow& window);

/// One EM iteration (E-step, then priors, covariances, shared mean).
/// Returns nullopt on responsibility collapse (a component covariance
/// losing positive definiteness).
std::optional<MixtureState> lvm_nlj_em_step(const MeasurementWindow& window,
                                            const MixtureState& state);
std::optional<MixtureState> lvm_sp_em_step(const MeasurementWindow& window,
                                           const MixtureState& state);

/// Mixture log-likelihood sum_k log sum_a pi_a f(z_k; ., .) for the given state.
double lvm_nlj_log_likelihood(const MeasurementWindow& window, const MixtureState& state);
double lvm_sp_log_likelihood(const MeasurementWindow& window, const MixtureState& state);

DetectionOutcome lvm_nlj_statistic(const MeasurementWindow& window, int n_iters = 10);
DetectionOutcome lvm_sp_statistic(const MeasurementWindow& window, int n_iters = 10);

}  // namespace lsad
