#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>

#include "detect.hpp"
#include "scenario.hpp"

namespace lsad {

enum class DetectorId { NljUm, NljCm, NljLvm, SpUm, SpCm, SpLvm };

DetectorId detector_from_string(const std::string& id);
std::string detector_to_string(DetectorId id);
bool detector_is_lvm(DetectorId id);

struct DetectorOptions {
    std::optional<ChangePointDomain> omega0;  // default per detector when unset
    int em_iters = 10;
    CmMeanUpdate cm_mean_update = CmMeanUpdate::Exact;

    ChangePointDomain domain_for(DetectorId id, int n_dims, int n_samples) const;
};

/// Run one detector on one window; threshold, when finite, fills `decision`.
DetectionOutcome run_detector(DetectorId id, const MeasurementWindow& window,
                              const DetectorOptions& options,
                              double threshold = std::numeric_limits<double>::quiet_NaN());

struct CalibrationResult {
    double threshold = 0.0;
    int n_trials = 0;
    int error_trials = 0;
    bool warning = false;  // more than 1% of trials errored
};

struct PdPoint {
    double level_db = 0.0;
    double pd = 0.0;
    int trials = 0;
    int errors = 0;
};

struct PdCurve {
    DetectorId detector;
    int n_samples = 0;
    int onset = 0;
    int n_dims = 0;
    std::string axis;  // "gamma_db" or "nu_db"
    std::vector<PdPoint> points;
    std::uint64_t seed = 0;
};

struct PfaPoint {
    double mismatch_db = 0.0;
    double pfa = 0.0;
    int trials = 0;
    int errors = 0;
};

struct PfaCurve {
    DetectorId detector;
    int n_samples = 0;
    int n_dims = 0;
    std::string mismatch;  // "mean" or "cov"
    std::vector<PfaPoint> points;
    std::uint64_t seed = 0;
};

struct EmConvergencePoint {
    int iteration = 0;       // h >= 2
    double rms_delta = 0.0;  // RMS over trials of |(t_h - t_{h-1}) / t_h|
    int trials_included = 0;
};

struct EmConvergenceCurve {
    DetectorId detector;
    std::vector<EmConvergencePoint> points;
    int trials = 0;
    int excluded = 0;
};

/// The ceil(M * (1 - pfa))-th order statistic (ascending, 1-based) of a
/// statistic sample; no interpolation.
double threshold_from_stats(std::vector<double> stats, double target_pfa);

/// Threshold from the ceil(n_trials * (1 - pfa))-th order statistic of the
/// detector statistic over seeded null-hypothesis windows. Requires
/// n_trials >= ceil(100 / pfa). Errored trials score zero and are counted.
CalibrationResult calibrate_threshold(DetectorId id, const AttackScenario& h0_scenario,
                                      int n_samples, double target_pfa, int n_trials,
                                      std::uint64_t seed, int threads,
                                      const DetectorOptions& options);

/// Fresh-draw estimate of the false-alarm probability at a given threshold.
CalibrationResult validate_pfa(DetectorId id, const AttackScenario& h0_scenario,
                               int n_samples, double threshold, int n_trials,
                               std::uint64_t seed, int threads,
                               const DetectorOptions& options);

/// Detection probability along an attack-level grid, common random numbers
/// across grid points.
PdCurve estimate_pd(DetectorId id, const AttackScenario& attack_template, int n_samples,
                    const std::vector<double>& level_db_grid, double threshold,
                    int n_trials, std::uint64_t seed, int threads,
                    const DetectorOptions& options);

/// Empirical false-alarm probability when the null model parameters are
/// scaled away from the calibration model (mean or covariance mismatch).
PfaCurve pfa_sensitivity(DetectorId id, const AttackScenario& h0_scenario, int n_samples,
                         const std::string& mismatch, const std::vector<double>& grid_db,
                         double threshold, int n_trials, std::uint64_t seed, int threads,
                         const DetectorOptions& options);

/// Per-iteration RMS of the relative change of the EM mixture log-likelihood.
EmConvergenceCurve em_convergence(DetectorId id, const AttackScenario& scenario,
                                  int n_samples, int n_trials, int max_iters,
                                  std::uint64_t seed, int threads);

std::string pd_curve_csv(const PdCurve& curve);
std::string pfa_curve_csv(const PfaCurve& curve);
std::string calibration_csv(DetectorId id, int n_samples, int n_dims, double pfa_target,
                            const CalibrationResult& result, std::uint64_t seed);
std::string em_convergence_csv(const EmConvergenceCurve& curve);

/// Calibrated thresholds keyed by everything that determines them.
class ThresholdTable {
public:
    struct Key {
        std::string detector;
        int n_dims = 0;
        int n_samples = 0;
        std::string omega0;
        double pfa = 0.0;
        std::uint64_t seed = 0;
        int n_trials = 0;
        auto operator<=>(const Key&) const = default;
    };

    void put(const Key& key, double threshold);
    std::optional<double> find(const Key& key) const;
    size_t size() const { return entries_.size(); }

private:
    std::map<Key, double> entries_;
};

/// Deterministic trial partitioning across worker threads; fn(trial) must
/// write only to per-trial slots.
void parallel_trials(int n_trials, int threads, const std::function<void(int)>& fn);

}  // namespace lsad
