#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace lsad {

/// Raised when a window is too degenerate for maximum-likelihood fitting
/// (e.g. a dimension with numerically zero variance).
class DegenerateWindow : public std::runtime_error {
public:
    explicit DegenerateWindow(const std::string& what) : std::runtime_error(what) {}
};

class InvalidCubic : public std::runtime_error {
public:
    explicit InvalidCubic(const std::string& what) : std::runtime_error(what) {}
};

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// An N x K block of location measurements. Row n is dimension n over time,
/// column k is the measurement vector acquired at time instant k.
class MeasurementWindow {
public:
    MeasurementWindow(Eigen::MatrixXd data) : data_(std::move(data)) {
        if (data_.rows() < 1 || data_.cols() < 2)
            throw std::invalid_argument("MeasurementWindow: need N >= 1 and K >= 2");
        if (!data_.allFinite())
            throw std::invalid_argument("MeasurementWindow: non-finite entries");
    }

    int n_dims() const { return static_cast<int>(data_.rows()); }
    int n_samples() const { return static_cast<int>(data_.cols()); }

    /// Measurement vector at time index k (0-based).
    Eigen::VectorXd column(int k) const {
        check_index(k);
        return data_.col(k);
    }

    const Eigen::MatrixXd& data() const { return data_; }

private:
    void check_index(int k) const {
        if (k < 0 || k >= n_samples())
            throw std::out_of_range("MeasurementWindow: time index out of range");
    }

    Eigen::MatrixXd data_;
};

}  // namespace lsad
