#include "harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <thread>

namespace lsad {

DetectorId detector_from_string(const std::string& id) {
    if (id == "nlj-um") return DetectorId::NljUm;
    if (id == "nlj-cm") return DetectorId::NljCm;
    if (id == "nlj-lvm") return DetectorId::NljLvm;
    if (id == "sp-um") return DetectorId::SpUm;
    if (id == "sp-cm") return DetectorId::SpCm;
    if (id == "sp-lvm") return DetectorId::SpLvm;
    throw ConfigError("unknown detector id: " + id);
}

std::string detector_to_string(DetectorId id) {
    switch (id) {
        case DetectorId::NljUm: return "nlj-um";
        case DetectorId::NljCm: return "nlj-cm";
        case DetectorId::NljLvm: return "nlj-lvm";
        case DetectorId::SpUm: return "sp-um";
        case DetectorId::SpCm: return "sp-cm";
        case DetectorId::SpLvm: return "sp-lvm";
    }
    return "?";
}

bool detector_is_lvm(DetectorId id) {
    return id == DetectorId::NljLvm || id == DetectorId::SpLvm;
}

ChangePointDomain DetectorOptions::domain_for(DetectorId id, int n_dims,
                                              int n_samples) const {
    if (omega0) return *omega0;
    switch (id) {
        case DetectorId::NljUm: return ChangePointDomain::nlj_um_default(n_dims, n_samples);
        case DetectorId::NljCm: return ChangePointDomain::nlj_cm_default(n_dims, n_samples);
        case DetectorId::SpUm: return ChangePointDomain::sp_um_default(n_samples);
        case DetectorId::SpCm: return ChangePointDomain::sp_cm_default(n_dims, n_samples);
        default: return ChangePointDomain{};
    }
}

DetectionOutcome run_detector(DetectorId id, const MeasurementWindow& window,
                              const DetectorOptions& options, double threshold) {
    DetectionOutcome out;
    switch (id) {
        case DetectorId::NljUm:
            out = nlj_um_statistic(window,
                                   options.domain_for(id, window.n_dims(), window.n_samples()));
            break;
        case DetectorId::NljCm:
            out = nlj_cm_statistic(window,
                                   options.domain_for(id, window.n_dims(), window.n_samples()),
                                   options.cm_mean_update);
            break;
        case DetectorId::SpUm:
            out = sp_um_statistic(window,
                                  options.domain_for(id, window.n_dims(), window.n_samples()));
            break;
        case DetectorId::SpCm:
            out = sp_cm_statistic(window,
                                  options.domain_for(id, window.n_dims(), window.n_samples()));
            break;
        case DetectorId::NljLvm:
            out = lvm_nlj_statistic(window, options.em_iters);
            break;
        case DetectorId::SpLvm:
            out = lvm_sp_statistic(window, options.em_iters);
            break;
    }
    if (!std::isnan(threshold)) out.decision = out.statistic > threshold;
    return out;
}

void parallel_trials(int n_trials, int threads, const std::function<void(int)>& fn) {
    threads = std::max(1, threads);
    if (threads == 1 || n_trials < 2) {
        for (int t = 0; t < n_trials; ++t) fn(t);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const int per = (n_trials + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
        const int lo = w * per;
        const int hi = std::min(n_trials, lo + per);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi] {
            try {
                for (int t = lo; t < hi; ++t) fn(t);
            } catch (...) {
                std::lock_guard<std::mutex> g(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

namespace {

/// Statistic for one seeded trial; detector faults score zero.
double trial_statistic(DetectorId id, const AttackScenario& scenario, int n_samples,
                       std::uint64_t seed, int trial, std::uint32_t purpose,
                       const DetectorOptions& options, bool* errored) {
    *errored = false;
    try {
        RngStream stream = derive_stream(seed, trial, purpose);
        const MeasurementWindow window = generate_window(scenario, n_samples, stream);
        const DetectionOutcome out = run_detector(id, window, options);
        if (out.em_collapsed) *errored = true;
        return out.statistic;
    } catch (const DegenerateWindow&) {
        *errored = true;
        return 0.0;
    }
}

struct BatchResult {
    std::vector<double> stats;
    int errors = 0;
};

BatchResult run_batch(DetectorId id, const AttackScenario& scenario, int n_samples,
                      int n_trials, std::uint64_t seed, std::uint32_t purpose, int threads,
                      const DetectorOptions& options) {
    BatchResult r;
    r.stats.assign(n_trials, 0.0);
    std::vector<unsigned char> errs(n_trials, 0);
    parallel_trials(n_trials, threads, [&](int t) {
        bool e = false;
        r.stats[t] = trial_statistic(id, scenario, n_samples, seed, t, purpose, options, &e);
        errs[t] = e ? 1 : 0;
    });
    for (auto e : errs) r.errors += e;
    return r;
}

}  // namespace

double threshold_from_stats(std::vector<double> stats, double target_pfa) {
    if (stats.empty()) throw ConfigError("threshold_from_stats: empty sample");
    std::sort(stats.begin(), stats.end());
    const int n = static_cast<int>(stats.size());
    const int rank = static_cast<int>(std::ceil(n * (1.0 - target_pfa)));
    return stats[std::clamp(rank, 1, n) - 1];
}

CalibrationResult calibrate_threshold(DetectorId id, const AttackScenario& h0_scenario,
                                      int n_samples, double target_pfa, int n_trials,
                                      std::uint64_t seed, int threads,
                                      const DetectorOptions& options) {
    if (!(target_pfa > 0.0 && target_pfa < 1.0))
        throw ConfigError("calibrate: target_pfa must lie inside (0, 1)");
    const int min_trials = static_cast<int>(std::ceil(100.0 / target_pfa));
    if (n_trials < min_trials)
        throw ConfigError("calibrate: need at least ceil(100 / pfa) = " +
                          std::to_string(min_trials) + " trials");
    AttackScenario h0 = h0_scenario;
    h0.kind = AttackScenario::Kind::None;

    BatchResult batch =
        run_batch(id, h0, n_samples, n_trials, seed, kPurposeCalibration, threads, options);
    CalibrationResult result;
    result.threshold = threshold_from_stats(std::move(batch.stats), target_pfa);
    result.n_trials = n_trials;
    result.error_trials = batch.errors;
    result.warning = batch.errors > 0.01 * n_trials;
    return result;
}

CalibrationResult validate_pfa(DetectorId id, const AttackScenario& h0_scenario,
                               int n_samples, double threshold, int n_trials,
                               std::uint64_t seed, int threads,
                               const DetectorOptions& options) {
    AttackScenario h0 = h0_scenario;
    h0.kind = AttackScenario::Kind::None;
    const BatchResult batch =
        run_batch(id, h0, n_samples, n_trials, seed, kPurposeValidation, threads, options);
    int above = 0;
    for (double s : batch.stats) above += s > threshold;
    CalibrationResult result;
    result.threshold = static_cast<double>(above) / n_trials;  // empirical pfa
    result.n_trials = n_trials;
    result.error_trials = batch.errors;
    result.warning = batch.errors > 0.01 * n_trials;
    return result;
}

PdCurve estimate_pd(DetectorId id, const AttackScenario& attack_template, int n_samples,
                    const std::vector<double>& level_db_grid, double threshold,
                    int n_trials, std::uint64_t seed, int threads,
                    const DetectorOptions& options) {
    if (attack_template.kind == AttackScenario::Kind::None)
        throw ConfigError("estimate_pd: scenario must carry an attack kind");
    for (size_t i = 1; i < level_db_grid.size(); ++i)
        if (level_db_grid[i] <= level_db_grid[i - 1])
            throw ConfigError("estimate_pd: level grid must be strictly increasing");

    PdCurve curve;
    curve.detector = id;
    curve.n_samples = n_samples;
    curve.onset = attack_template.onset_for(n_samples);
    curve.n_dims = static_cast<int>(attack_template.base.mean.size());
    curve.axis = attack_template.kind == AttackScenario::Kind::NoiseJam ? "gamma_db" : "nu_db";
    curve.seed = seed;

    for (double level : level_db_grid) {
        AttackScenario scenario = attack_template.with_level(level);
        if (scenario.kind == AttackScenario::Kind::NoiseJam) {
            if (level < 0.0)
                throw ConfigError("estimate_pd: jamming grid levels must be >= 0 dB");
            if (level == 0.0) scenario.kind = AttackScenario::Kind::None;  // null point
        }
        const BatchResult batch = run_batch(id, scenario, n_samples, n_trials, seed,
                                            kPurposePdTrial, threads, options);
        int above = 0;
        for (double s : batch.stats) above += s > threshold;
        curve.points.push_back(PdPoint{level, static_cast<double>(above) / n_trials,
                                       n_trials, batch.errors});
    }
    return curve;
}

PfaCurve pfa_sensitivity(DetectorId id, const AttackScenario& h0_scenario, int n_samples,
                         const std::string& mismatch, const std::vector<double>& grid_db,
                         double threshold, int n_trials, std::uint64_t seed, int threads,
                         const DetectorOptions& options) {
    if (mismatch != "mean" && mismatch != "cov")
        throw ConfigError("pfa_sensitivity: mismatch must be 'mean' or 'cov'");
    PfaCurve curve;
    curve.detector = id;
    curve.n_samples = n_samples;
    curve.n_dims = static_cast<int>(h0_scenario.base.mean.size());
    curve.mismatch = mismatch;
    curve.seed = seed;

    for (double db : grid_db) {
        AttackScenario scenario = h0_scenario;
        scenario.kind = AttackScenario::Kind::None;
        const double factor = db_to_linear(db);
        if (mismatch == "mean") {
            scenario.base.mean *= factor;
        } else if (scenario.base.covariance.kind() == CovMatrix::Kind::Diagonal) {
            scenario.base.covariance = CovMatrix::diagonal(scenario.base.covariance.diag() * factor);
        } else {
            scenario.base.covariance = CovMatrix::full(scenario.base.covariance.matrix() * factor);
        }
        const BatchResult batch = run_batch(id, scenario, n_samples, n_trials, seed,
                                            kPurposePfaSweep, threads, options);
        int above = 0;
        for (double s : batch.stats) above += s > threshold;
        curve.points.push_back(PfaPoint{db, static_cast<double>(above) / n_trials, n_trials,
                                        batch.errors});
    }
    return curve;
}

EmConvergenceCurve em_convergence(DetectorId id, const AttackScenario& scenario,
                                  int n_samples, int n_trials, int max_iters,
                                  std::uint64_t seed, int threads) {
    if (!detector_is_lvm(id))
        throw ConfigError("em_convergence: detector must be nlj-lvm or sp-lvm");
    if (max_iters < 2) throw ConfigError("em_convergence: max_iters must be >= 2");

    const bool nlj = id == DetectorId::NljLvm;
    // per trial, the mixture log-likelihood trace across iterations
    std::vector<std::vector<double>> traces(n_trials);
    std::vector<unsigned char> excluded(n_trials, 0);
    parallel_trials(n_trials, threads, [&](int t) {
        try {
            RngStream stream = derive_stream(seed, t, kPurposeEmTrace);
            const MeasurementWindow window = generate_window(scenario, n_samples, stream);
            MixtureState state = nlj ? lvm_nlj_init(window) : lvm_sp_init(window);
            std::vector<double> trace;
            for (int h = 1; h <= max_iters; ++h) {
                auto next = nlj ? lvm_nlj_em_step(window, state) : lvm_sp_em_step(window, state);
                if (!next) {
                    excluded[t] = 1;
                    return;
                }
                state = std::move(*next);
                trace.push_back(nlj ? lvm_nlj_log_likelihood(window, state)
                                    : lvm_sp_log_likelihood(window, state));
            }
            traces[t] = std::move(trace);
        } catch (const DegenerateWindow&) {
            excluded[t] = 1;
        }
    });

    EmConvergenceCurve curve;
    curve.detector = id;
    curve.trials = n_trials;
    for (auto e : excluded) curve.excluded += e;
    for (int h = 2; h <= max_iters; ++h) {
        double sum_sq = 0.0;
        int included = 0;
        for (int t = 0; t < n_trials; ++t) {
            if (excluded[t]) continue;
            const double t_now = traces[t][h - 1];
            const double t_prev = traces[t][h - 2];
            if (t_now == 0.0) continue;
            const double delta = std::abs((t_now - t_prev) / t_now);
            sum_sq += delta * delta;
            ++included;
        }
        curve.points.push_back(EmConvergencePoint{
            h, included > 0 ? std::sqrt(sum_sq / included) : 0.0, included});
    }
    return curve;
}

namespace {
std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
}  // namespace

std::string pd_curve_csv(const PdCurve& curve) {
    std::string out = "detector,K,K0,N,axis,axis_db,pd,trials,errors,seed\n";
    for (const auto& p : curve.points) {
        out += detector_to_string(curve.detector) + "," + std::to_string(curve.n_samples) +
               "," + std::to_string(curve.onset) + "," + std::to_string(curve.n_dims) + "," +
               curve.axis + "," + format_double(p.level_db) + "," + format_double(p.pd) +
               "," + std::to_string(p.trials) + "," + std::to_string(p.errors) + "," +
               std::to_string(curve.seed) + "\n";
    }
    return out;
}

std::string pfa_curve_csv(const PfaCurve& curve) {
    std::string out = "detector,K,N,mismatch,mismatch_db,pfa,trials,seed\n";
    for (const auto& p : curve.points) {
        out += detector_to_string(curve.detector) + "," + std::to_string(curve.n_samples) +
               "," + std::to_string(curve.n_dims) + "," + curve.mismatch + "," +
               format_double(p.mismatch_db) + "," + format_double(p.pfa) + "," +
               std::to_string(p.trials) + "," + std::to_string(curve.seed) + "\n";
    }
    return out;
}

std::string calibration_csv(DetectorId id, int n_samples, int n_dims, double pfa_target,
                            const CalibrationResult& result, std::uint64_t seed) {
    std::string out = "detector,K,N,pfa_target,threshold,trials,seed\n";
    out += detector_to_string(id) + "," + std::to_string(n_samples) + "," +
           std::to_string(n_dims) + "," + format_double(pfa_target) + "," +
           format_double(result.threshold) + "," + std::to_string(result.n_trials) + "," +
           std::to_string(seed) + "\n";
    return out;
}

std::string em_convergence_csv(const EmConvergenceCurve& curve) {
    std::string out = "detector,h,rms_delta,trials_included\n";
    for (const auto& p : curve.points) {
        out += detector_to_string(curve.detector) + "," + std::to_string(p.iteration) + "," +
               format_double(p.rms_delta) + "," + std::to_string(p.trials_included) + "\n";
    }
    return out;
}

void ThresholdTable::put(const Key& key, double threshold) { entries_[key] = threshold; }

std::optional<double> ThresholdTable::find(const Key& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

}  // namespace lsad
