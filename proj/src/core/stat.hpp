#pragma once

#include <optional>
#include <vector>

#include "window.hpp"

namespace lsad {

/// Covariance matrix, either diagonal (independent measurements) or a full
/// symmetric positive definite matrix (correlated measurements).
class CovMatrix {
public:
    enum class Kind { Diagonal, Full };

    /// Empty placeholder; real instances come from the factories below.
    CovMatrix() = default;

    static CovMatrix diagonal(Eigen::VectorXd variances);
    static CovMatrix full(Eigen::MatrixXd matrix);

    Kind kind() const { return kind_; }
    int dim() const { return kind_ == Kind::Diagonal ? static_cast<int>(diag_.size())
                                                     : static_cast<int>(full_.rows()); }

    const Eigen::VectorXd& diag() const { return diag_; }
    const Eigen::MatrixXd& matrix() const { return full_; }

    /// Densified N x N view, regardless of kind.
    Eigen::MatrixXd dense() const;

private:
    Kind kind_ = Kind::Diagonal;
    Eigen::VectorXd diag_;
    Eigen::MatrixXd full_;
};

struct GaussianModel {
    Eigen::VectorXd mean;
    CovMatrix covariance;
};

struct CholeskyResult {
    Eigen::MatrixXd lower;
    double log_det = 0.0;
};

/// Lower Cholesky factor and log-determinant of a symmetric matrix.
/// Returns nullopt when any pivot falls at or below 1e-12 times the largest
/// diagonal entry; callers use that as a not-positive-definite signal.
std::optional<CholeskyResult> cholesky_logdet(const Eigen::MatrixXd& matrix);

/// Mean of columns [first, last) of the window.
Eigen::VectorXd sample_mean(const MeasurementWindow& window, int first, int last);

/// Unnormalized scatter sum_k (z_k - center)(z_k - center)^T over columns [first, last).
Eigen::MatrixXd scatter_matrix(const MeasurementWindow& window, int first, int last,
                               const Eigen::VectorXd& center);

/// log N(z; m, Sigma); the diagonal kind uses the per-dimension sum form.
double gaussian_log_pdf(const Eigen::VectorXd& z, const GaussianModel& model);

/// Null-hypothesis MLE with diagonal covariance: per-dimension mean and
/// biased (divide-by-K) variance. Throws DegenerateWindow when any variance
/// is below 1e-12 * (mean^2 + 1).
GaussianModel h0_mle_diagonal(const MeasurementWindow& window);

/// Null-hypothesis MLE with full covariance: overall mean and biased scatter
/// about it. Requires K >= N + 1; throws DegenerateWindow when the scatter is
/// not positive definite.
GaussianModel h0_mle_full(const MeasurementWindow& window);

struct CubicCoefficients {
    double c3 = 0, c2 = 0, c1 = 0, c0 = 0;
};

/// All real roots of c3 x^3 + c2 x^2 + c1 x + c0, ascending, multiple roots
/// collapsed. Depressed-cubic transform; trigonometric branch for three real
/// roots, Cardano radicals otherwise; one Newton polish pass per root.
/// Throws InvalidCubic when c3 == 0.
std::vector<double> solve_cubic_real(const CubicCoefficients& c);

}  // namespace lsad
