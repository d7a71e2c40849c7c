#pragma once

#include <string>

#include "rng.hpp"
#include "stat.hpp"

namespace lsad {

/// Measurement scenario: nominal Gaussian model plus an optional attack that
/// rescales the covariance (noise-like jamming) or the mean (spoofing) from
/// the change point onward. dB levels convert as 10^(x/10).
struct AttackScenario {
    enum class Kind { None, NoiseJam, Spoof };

    Kind kind = Kind::None;
    double level_db = 0.0;
    double onset_fraction = 0.5;  // K0 = clamp(round(fraction * K), 1, K-1)
    GaussianModel base;

    int onset_for(int n_samples) const;
    AttackScenario with_level(double db) const;

    /// Nominal three-dimensional preset (range plus two angles) with the
    /// given per-dimension error standard deviations.
    static AttackScenario preset(double range_m, double sigma_range, double sigma_azimuth,
                                 double sigma_elevation);
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// Draw an N x K window: columns up to the onset from the base model, the
/// rest from the attacked model. Pure function of (scenario, K, stream).
MeasurementWindow generate_window(const AttackScenario& scenario, int n_samples,
                                  RngStream& stream);

/// Parse a scenario from key/value text (see README for the schema).
AttackScenario load_scenario_file(const std::string& path);
AttackScenario parse_scenario_text(const std::string& text, const std::string& origin);

}  // namespace lsad
