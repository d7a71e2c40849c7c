#include "scenario.hpp"

#include <algorithm>
#include <cmath>

#include "config.hpp"

namespace lsad {

int AttackScenario::onset_for(int n_samples) const {
    const int k0 = static_cast<int>(std::lround(onset_fraction * n_samples));
    return std::clamp(k0, 1, n_samples - 1);
}

AttackScenario AttackScenario::with_level(double db) const {
    AttackScenario s = *this;
    s.level_db = db;
    return s;
}

AttackScenario AttackScenario::preset(double range_m, double sigma_range,
                                      double sigma_azimuth, double sigma_elevation) {
    AttackScenario s;
    s.base.mean = Eigen::Vector3d(range_m, 0.0, 0.0);
    s.base.covariance = CovMatrix::diagonal(Eigen::Vector3d(
        sigma_range * sigma_range, sigma_azimuth * sigma_azimuth,
        sigma_elevation * sigma_elevation));
    return s;
}

MeasurementWindow generate_window(const AttackScenario& scenario, int n_samples,
                                  RngStream& stream) {
    if (n_samples < 2) throw std::invalid_argument("generate_window: need K >= 2");
    const int n = static_cast<int>(scenario.base.mean.size());

    // standard normal draws first, in (dimension, time) order, so that the
    // same stream yields common random numbers across attack levels and
    // nested draws across window lengths
    Eigen::MatrixXd noise(n, n_samples);
    for (int k = 0; k < n_samples; ++k)
        for (int d = 0; d < n; ++d) noise(d, k) = stream.normal();

    Eigen::MatrixXd lower;
    if (scenario.base.covariance.kind() == CovMatrix::Kind::Diagonal) {
        lower = Eigen::MatrixXd(
            scenario.base.covariance.diag().array().sqrt().matrix().asDiagonal());
    } else {
        const auto chol = cholesky_logdet(scenario.base.covariance.matrix());
        if (!chol)
            throw std::invalid_argument("generate_window: covariance not positive definite");
        lower = chol->lower;
    }

    const int onset =
        scenario.kind == AttackScenario::Kind::None ? n_samples : scenario.onset_for(n_samples);
    Eigen::VectorXd mean_post = scenario.base.mean;
    Eigen::MatrixXd lower_post = lower;
    if (scenario.kind == AttackScenario::Kind::NoiseJam) {
        const double gamma = db_to_linear(scenario.level_db);
        if (gamma <= 1.0)
            throw std::invalid_argument("generate_window: jamming level must be > 0 dB");
        lower_post *= std::sqrt(gamma);
    } else if (scenario.kind == AttackScenario::Kind::Spoof) {
        mean_post *= db_to_linear(scenario.level_db);
    }

    Eigen::MatrixXd data(n, n_samples);
    for (int k = 0; k < n_samples; ++k) {
        if (k < onset)
            data.col(k) = scenario.base.mean + lower * noise.col(k);
        else
            data.col(k) = mean_post + lower_post * noise.col(k);
    }
    return MeasurementWindow(std::move(data));
}

namespace {
AttackScenario parse_scenario(const KeyValueFile& kv) {
    const std::string& origin = kv.origin();
    AttackScenario s;

    const int n = static_cast<int>(kv.get_int("n_dims"));
    if (n < 1) throw ConfigError(origin + ": n_dims must be >= 1");

    const std::vector<double> mean = kv.get_double_list("mean");
    if (static_cast<int>(mean.size()) != n)
        throw ConfigError(origin + ": mean must list n_dims values");
    s.base.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), n);

    const double snr_db = kv.get_double("snr_db", 0.0);
    const double cov_scale = std::pow(10.0, -snr_db / 10.0);

    if (kv.has("cov_diag")) {
        const std::vector<double> d = kv.get_double_list("cov_diag");
        if (static_cast<int>(d.size()) != n)
            throw ConfigError(origin + ": cov_diag must list n_dims values");
        Eigen::VectorXd diag = Eigen::Map<const Eigen::VectorXd>(d.data(), n) * cov_scale;
        if ((diag.array() <= 0).any())
            throw ConfigError(origin + ": cov_diag entries must be > 0");
        s.base.covariance = CovMatrix::diagonal(std::move(diag));
    } else {
        Eigen::MatrixXd cov(n, n);
        for (int r = 0; r < n; ++r) {
            const std::string key = "cov_row_" + std::to_string(r + 1);
            if (!kv.has(key))
                throw ConfigError(origin + ": need cov_diag or cov_row_1..cov_row_N");
            const std::vector<double> row = kv.get_double_list(key);
            if (static_cast<int>(row.size()) != n)
                throw ConfigError(origin + ": " + key + " must list n_dims values");
            cov.row(r) = Eigen::Map<const Eigen::RowVectorXd>(row.data(), n);
        }
        try {
            s.base.covariance = CovMatrix::full(cov * cov_scale);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(origin + ": covariance rows: " + e.what());
        }
    }

    const std::string attack = kv.get_string("attack", "none");
    if (attack == "none") {
        s.kind = AttackScenario::Kind::None;
    } else if (attack == "noise-jam") {
        s.kind = AttackScenario::Kind::NoiseJam;
    } else if (attack == "spoof") {
        s.kind = AttackScenario::Kind::Spoof;
    } else {
        throw ConfigError(origin + ": attack must be none, noise-jam, or spoof");
    }

    s.level_db = kv.get_double("level_db", 0.0);
    if (s.kind == AttackScenario::Kind::NoiseJam && s.level_db <= 0.0)
        throw ConfigError(origin + ": noise-jam level_db must be > 0");
    s.onset_fraction = kv.get_double("onset_fraction", 0.5);
    if (s.onset_fraction <= 0.0 || s.onset_fraction >= 1.0)
        throw ConfigError(origin + ": onset_fraction must be inside (0, 1)");
    return s;
}
}  // namespace

AttackScenario parse_scenario_text(const std::string& text, const std::string& origin) {
    return parse_scenario(KeyValueFile::parse(text, origin));
}

AttackScenario load_scenario_file(const std::string& path) {
    return parse_scenario(KeyValueFile::load(path));
}

}  // namespace lsad
