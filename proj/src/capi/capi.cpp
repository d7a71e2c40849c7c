#include "lsad.h"

#include <cmath>
#include <cstring>

#include "../core/harness.hpp"

using namespace lsad;

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

template <typename Fn>
lsad_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        set_error(e.what());
        return LSAD_ERR_CONFIG;
    } catch (const DegenerateWindow& e) {
        set_error(e.what());
        return LSAD_ERR_DEGENERATE;
    } catch (const std::invalid_argument& e) {
        set_error(e.what());
        return LSAD_ERR_ARGUMENT;
    } catch (const std::out_of_range& e) {
        set_error(e.what());
        return LSAD_ERR_ARGUMENT;
    } catch (const std::exception& e) {
        set_error(e.what());
        return LSAD_ERR_FAULT;
    }
}

DetectorOptions to_options(const lsad_detect_opts* opts) {
    DetectorOptions o;
    if (!opts) return o;
    if (opts->omega0_lo > 0 && opts->omega0_hi > 0)
        o.omega0 = ChangePointDomain::range(opts->omega0_lo, opts->omega0_hi);
    if (opts->em_iters > 0) o.em_iters = opts->em_iters;
    if (opts->cm_paper_mean) o.cm_mean_update = CmMeanUpdate::ClosedForm;
    return o;
}

/// Named numeric columns plus the exact CSV text.
struct ResultTable {
    std::string csv;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

}  // namespace

struct lsad_window {
    MeasurementWindow win;
};
struct lsad_scenario {
    AttackScenario scenario;
};
struct lsad_outcome {
    DetectionOutcome outcome;
};
struct lsad_result {
    ResultTable table;
};

extern "C" {

const char* lsad_last_error(void) { return g_last_error.c_str(); }

lsad_status lsad_window_create(const double* data, int n_dims, int n_samples,
                               lsad_window** out) {
    if (!data || !out) {
        set_error("null pointer");
        return LSAD_ERR_ARGUMENT;
    }
    return guarded([&] {
        Eigen::MatrixXd m = Eigen::Map<const Eigen::MatrixXd>(data, n_dims, n_samples);
        *out = new lsad_window{MeasurementWindow(std::move(m))};
        return LSAD_OK;
    });
}

void lsad_window_free(lsad_window* w) { delete w; }

int lsad_window_dims(const lsad_window* w) { return w ? w->win.n_dims() : 0; }
int lsad_window_samples(const lsad_window* w) { return w ? w->win.n_samples() : 0; }

lsad_status lsad_scenario_load(const char* path, lsad_scenario** out) {
    if (!path || !out) {
        set_error("null pointer");
        return LSAD_ERR_ARGUMENT;
    }
    return guarded([&] {
        *out = new lsad_scenario{load_scenario_file(path)};
        return LSAD_OK;
    });
}

lsad_status lsad_scenario_parse(const char* text, lsad_scenario** out) {
    if (!text || !out) {
        set_error("null pointer");
        return LSAD_ERR_ARGUMENT;
    }
    return guarded([&] {
        *out = new lsad_scenario{parse_scenario_text(text, "<inline>")};
        return LSAD_OK;
    });
}

void lsad_scenario_free(lsad_scenario* s) { delete s; }

lsad_status lsad_scenario_generate(const lsad_scenario* s, int n_samples, uint64_t seed,
                                   uint64_t trial, lsad_window** out) {
    if (!s || !out) {
        set_error("null pointer");
        return LSAD_ERR_ARGUMENT;
    }
    return guarded([&] {
        RngStream stream = derive_stream(seed, trial, kPurposePdTrial);
        *out = new lsad_window{generate_window(s->scenario, n_samples, stream)};
        return LSAD_OK;
    });
}

lsad_status lsad_detect(const char* detector, const lsad_window* w,
                        const lsad_detect_opts* opts, double threshold,
                        lsad_outcome** out) {
    if (!detector || !w || !out) {
        set_error("null pointer");
        return LSAD_ERR_ARGUMENT;
    }
    return guarded([&] {
        const DetectorId id = detector_from_string(detector);
        *out = new lsad_outcome{run_detector(id, w->win, to_options(opts), threshold)};
        return LSAD_OK;
    });
}

void lsad_outcome_free(lsad_outcome* o) { delete o; }

double lsad_outcome_statistic(const lsad_outcome* o) {
    return o ? o->outcome.statistic : std::nan("");
}

int lsad_outcome_changepoint(const lsad_outcome* o) {
    return o && o->outcome.k0_hat ? *o->outcome.k0_hat : 0;
}

int lsad_outcome_decision(const lsad_outcome* o) { return o && o->outcome.decision; }

int lsad_outcome_em_collapsed(const lsad_outcome* o) {
    return o && o->outcome.em_collapsed;
}

namespace {

ResultTable table_from_pd(const PdCurve& c) {
    ResultTable t;
    t.csv = pd_curve_csv(c);
    t.columns = {"K", "K0", "N", "axis_db", "pd", "trials", "errors", "seed"};
    for (const auto& p : c.points)
        t.rows.push_back({double(c.n_samples), double(c.onset), double(c.n_dims),
                          p.level_db, p.pd, double(p.trials), double(p.errors),
                          double(c.seed)});
    return t;
}

ResultTable table_from_pfa(const PfaCurve& c) {
    ResultTable t;
    t.csv = pfa_curve_csv(c);
    t.columns = {"K", "N", "mismatch_db", "pfa", "trials", "seed"};
    for (const auto& p : c.points)
        t.rows.push_back({double(c.n_samples), double(c.n_dims), p.mismatch_db, p.pfa,
                          double(p.trials), double(c.seed)});
    return t;
}

ResultTable table_from_em(const EmConvergenceCurve& c) {
    ResultTable t;
    t.csv = em_convergence_csv(c);
    t.columns = {"h", "rms_delta", "trials_included"};
    for (const auto& p : c.points)
        t.rows.push_back({double(p.iteration), p.rms_delta, double(p.trials_included)});
    return t;
}

}  // namespace

lsad_status lsad_calibrate(const char* detector, const lsad_scenario* h0, int n_samples,
                           double pfa, int trials, uint64_t seed, int threads,
                           const lsad_detect_opts* opts, double* threshold_out,
                           lsad_result** result_out) {
    if (!detector || !h0 || !threshold_out) {
        set_error("null pointer");
        return LSAD_ERR_ARGUMENT;
    }
    return guarded([&] {
        const DetectorId id = detector_from_string(detector);
        const CalibrationResult r = calibrate_threshold(id, h0->scenario, n_samples, pfa,
                                                        trials, seed, threads,
                                                        to_options(opts));
        *threshold_out = r.threshold;
        if (result_out) {
            ResultTable t;
            t.csv = calibration_csv(id, n_samples,
                                    static_cast<int>(h0->scenario.base.mean.size()), pfa, r,
                                    seed);
            t.columns = {"K", "N", "pfa_target", "threshold", "trials", "seed"};
            t.rows.push_back({double(n_samples), double(h0->scenario.base.mean.size()), pfa,
                              r.threshold, double(r.n_trials), double(seed)});
            *result_out = new lsad_result{std::move(t)};
        }
        return LSAD_OK;
    });
}

lsad_status lsad_validate_pfa(const char* detector, const lsad_scenario* h0,
                              int n_samples, double threshold, int trials, uint64_t seed,
                              int threads, const lsad_detect_opts* opts, double* pfa_out,
                              int* error_trials_out) {
    if (!detector || !h0 || !pfa_out) {
        set_error("null pointer");
        return LSAD_ERR_ARGUMENT;
    }
    return guarded([&] {
        const DetectorId id = detector_from_string(detector);
        const CalibrationResult r = validate_pfa(id, h0->scenario, n_samples, threshold,
                                                 trials, seed, threads, to_options(opts));
        *pfa_out = r.threshold;
        if (error_trials_out) *error_trials_out = r.error_trials;
        return LSAD_OK;
    });
}

lsad_status lsad_pd_curve(const char* detector, const lsad_scenario* attack,
                          int n_samples, const double* grid_db, int grid_len,
                          double threshold, int trials, uint64_t seed, int threads,
                          const lsad_detect_opts* opts, lsad_result** out) {
    if (!detector || !attack || !grid_db || grid_len < 1 || !out) {
        set_error("bad arguments");
        return LSAD_ERR_ARGUMENT;
    }
    return guarded([&] {
        const DetectorId id = detector_from_string(detector);
        const std::vector<double> grid(grid_db, grid_db + grid_len);
        const PdCurve c = estimate_pd(id, attack->scenario, n_samples, grid, threshold,
                                      trials, seed, threads, to_options(opts));
        *out = new lsad_result{table_from_pd(c)};
        return LSAD_OK;
    });
}

lsad_status lsad_pfa_sweep(const char* detector, const lsad_scenario* h0, int n_samples,
                           const char* mismatch, const double* grid_db, int grid_len,
                           double threshold, int trials, uint64_t seed, int threads,
                           const lsad_detect_opts* opts, lsad_result** out) {
    if (!detector || !h0 || !mismatch || !grid_db || grid_len < 1 || !out) {
        set_error("bad arguments");
        return LSAD_ERR_ARGUMENT;
    }
    return guarded([&] {
        const DetectorId id = detector_from_string(detector);
        const std::vector<double> grid(grid_db, grid_db + grid_len);
        const PfaCurve c = pfa_sensitivity(id, h0->scenario, n_samples, mismatch, grid,
                                           threshold, trials, seed, threads,
                                           to_options(opts));
        *out = new lsad_result{table_from_pfa(c)};
        return LSAD_OK;
    });
}

lsad_status lsad_em_convergence(const char* detector, const lsad_scenario* scenario,
                                int n_samples, int trials, int max_iters, uint64_t seed,
                                int threads, lsad_result** out) {
    if (!detector || !scenario || !out) {
        set_error("null pointer");
        return LSAD_ERR_ARGUMENT;
    }
    return guarded([&] {
        const DetectorId id = detector_from_string(detector);
        const EmConvergenceCurve c = em_convergence(id, scenario->scenario, n_samples,
                                                    trials, max_iters, seed, threads);
        *out = new lsad_result{table_from_em(c)};
        return LSAD_OK;
    });
}

void lsad_result_free(lsad_result* r) { delete r; }

const char* lsad_result_csv(const lsad_result* r) { return r ? r->table.csv.c_str() : ""; }

int lsad_result_rows(const lsad_result* r) {
    return r ? static_cast<int>(r->table.rows.size()) : 0;
}

lsad_status lsad_result_cell(const lsad_result* r, int row, const char* column,
                             double* value_out) {
    if (!r || !column || !value_out || row < 0 ||
        row >= static_cast<int>(r->table.rows.size())) {
        set_error("bad arguments");
        return LSAD_ERR_ARGUMENT;
    }
    for (size_t c = 0; c < r->table.columns.size(); ++c) {
        if (r->table.columns[c] == column) {
            *value_out = r->table.rows[row][c];
            return LSAD_OK;
        }
    }
    set_error(std::string("unknown column: ") + column);
    return LSAD_ERR_ARGUMENT;
}

}  // extern "C"
