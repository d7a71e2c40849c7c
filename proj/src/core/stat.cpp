#include "stat.hpp"

#include <cmath>

namespace lsad {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kPivotRelTol = 1e-12;
}  // namespace

CovMatrix CovMatrix::diagonal(Eigen::VectorXd variances) {
    if (variances.size() < 1 || (variances.array() <= 0.0).any())
        throw std::invalid_argument("CovMatrix::diagonal: entries must be > 0");
    CovMatrix c;
    c.kind_ = Kind::Diagonal;
    c.diag_ = std::move(variances);
    return c;
}

CovMatrix CovMatrix::full(Eigen::MatrixXd matrix) {
    if (matrix.rows() != matrix.cols() || matrix.rows() < 1)
        throw std::invalid_argument("CovMatrix::full: square matrix required");
    const double scale = matrix.cwiseAbs().maxCoeff();
    if ((matrix - matrix.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(scale, 1.0))
        throw std::invalid_argument("CovMatrix::full: matrix not symmetric");
    if (!cholesky_logdet(matrix))
        throw std::invalid_argument("CovMatrix::full: matrix not positive definite");
    CovMatrix c;
    c.kind_ = Kind::Full;
    c.full_ = std::move(matrix);
    return c;
}

Eigen::MatrixXd CovMatrix::dense() const {
    if (kind_ == Kind::Full) return full_;
    return Eigen::MatrixXd(diag_.asDiagonal());
}

std::optional<CholeskyResult> cholesky_logdet(const Eigen::MatrixXd& matrix) {
    const int n = static_cast<int>(matrix.rows());
    const double tol = kPivotRelTol * std::max(matrix.diagonal().maxCoeff(), 0.0);
    Eigen::MatrixXd lower = Eigen::MatrixXd::Zero(n, n);
    double log_det = 0.0;
    for (int j = 0; j < n; ++j) {
        double pivot = matrix(j, j);
        for (int k = 0; k < j; ++k) pivot -= lower(j, k) * lower(j, k);
        if (pivot <= tol) return std::nullopt;
        const double ljj = std::sqrt(pivot);
        lower(j, j) = ljj;
        log_det += 2.0 * std::log(ljj);
        for (int i = j + 1; i < n; ++i) {
            double v = matrix(i, j);
            for (int k = 0; k < j; ++k) v -= lower(i, k) * lower(j, k);
            lower(i, j) = v / ljj;
        }
    }
    return CholeskyResult{std::move(lower), log_det};
}

namespace {
void check_range(const MeasurementWindow& w, int first, int last) {
    if (first < 0 || last > w.n_samples() || first >= last)
        throw std::out_of_range("window column range invalid");
}
}  // namespace

Eigen::VectorXd sample_mean(const MeasurementWindow& window, int first, int last) {
    check_range(window, first, last);
    return window.data().middleCols(first, last - first).rowwise().mean();
}

Eigen::MatrixXd scatter_matrix(const MeasurementWindow& window, int first, int last,
                               const Eigen::VectorXd& center) {
    check_range(window, first, last);
    if (center.size() != window.n_dims())
        throw std::invalid_argument("scatter_matrix: center length mismatch");
    const auto block = window.data().middleCols(first, last - first);
    const Eigen::MatrixXd centered = block.colwise() - center;
    return centered * centered.transpose();
}

double gaussian_log_pdf(const Eigen::VectorXd& z, const GaussianModel& model) {
    const int n = static_cast<int>(z.size());
    if (n != model.mean.size() || n != model.covariance.dim())
        throw std::invalid_argument("gaussian_log_pdf: dimension mismatch");
    const double norm = -0.5 * n * std::log(kTwoPi);
    if (model.covariance.kind() == CovMatrix::Kind::Diagonal) {
        const Eigen::VectorXd& var = model.covariance.diag();
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            const double d = z[i] - model.mean[i];
            acc += std::log(var[i]) + d * d / var[i];
        }
        return norm - 0.5 * acc;
    }
    const auto chol = cholesky_logdet(model.covariance.matrix());
    if (!chol)
        throw std::invalid_argument("gaussian_log_pdf: covariance not positive definite");
    const Eigen::VectorXd y =
        chol->lower.triangularView<Eigen::Lower>().solve(z - model.mean);
    return norm - 0.5 * chol->log_det - 0.5 * y.squaredNorm();
}

GaussianModel h0_mle_diagonal(const MeasurementWindow& window) {
    const int k = window.n_samples();
    const Eigen::VectorXd mean = sample_mean(window, 0, k);
    const Eigen::MatrixXd centered = window.data().colwise() - mean;
    Eigen::VectorXd var = centered.array().square().rowwise().sum() / k;
    for (int n = 0; n < window.n_dims(); ++n) {
        if (var[n] < 1e-12 * (mean[n] * mean[n] + 1.0))
            throw DegenerateWindow("h0_mle_diagonal: zero variance in dimension " +
                                   std::to_string(n));
    }
    return GaussianModel{mean, CovMatrix::diagonal(std::move(var))};
}

GaussianModel h0_mle_full(const MeasurementWindow& window) {
    const int k = window.n_samples();
    if (k < window.n_dims() + 1)
        throw std::invalid_argument("h0_mle_full: need K >= N + 1");
    const Eigen::VectorXd mean = sample_mean(window, 0, k);
    Eigen::MatrixXd cov = scatter_matrix(window, 0, k, mean) / k;
    if (!cholesky_logdet(cov))
        throw DegenerateWindow("h0_mle_full: scatter not positive definite");
    return GaussianModel{mean, CovMatrix::full(std::move(cov))};
}

namespace {
double eval_poly(const CubicCoefficients& c, double x) {
    return ((c.c3 * x + c.c2) * x + c.c1) * x + c.c0;
}

double eval_dpoly(const CubicCoefficients& c, double x) {
    return (3.0 * c.c3 * x + 2.0 * c.c2) * x + c.c1;
}
}  // namespace

std::vector<double> solve_cubic_real(const CubicCoefficients& c) {
    if (c.c3 == 0.0) throw InvalidCubic("solve_cubic_real: leading coefficient is zero");

    const double a = c.c2 / c.c3;
    const double b = c.c1 / c.c3;
    const double d = c.c0 / c.c3;
    // x = t - a/3 gives the depressed form t^3 + p t + q
    const double p = b - a * a / 3.0;
    const double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + d;
    const double shift = -a / 3.0;

    std::vector<double> roots;
    if (p == 0.0 && q == 0.0) {
        roots.push_back(shift);
    } else {
        const double disc = 0.25 * q * q + p * p * p / 27.0;
        if (disc < 0.0) {
            // three distinct real roots
            const double r = std::sqrt(-p / 3.0);
            const double phi = std::acos(std::clamp(-q / (2.0 * r * r * r), -1.0, 1.0));
            for (int i = 0; i < 3; ++i)
                roots.push_back(2.0 * r * std::cos((phi + kTwoPi * i) / 3.0) + shift);
        } else {
            const double sq = std::sqrt(disc);
            const double u3 = (q >= 0.0) ? (-q / 2.0 - sq) : (-q / 2.0 + sq);
            const double u = std::cbrt(u3);
            const double v = (u != 0.0) ? -p / (3.0 * u) : 0.0;
            roots.push_back(u + v + shift);
            if (disc == 0.0 && u != 0.0) roots.push_back(-(u + v) / 2.0 + shift);
        }
    }

    for (double& x : roots) {
        for (int it = 0; it < 2; ++it) {
            const double fp = eval_dpoly(c, x);
            if (fp == 0.0) break;
            const double step = eval_poly(c, x) / fp;
            if (!std::isfinite(step)) break;
            x -= step;
        }
    }
    std::sort(roots.begin(), roots.end());
    std::vector<double> out;
    for (double x : roots) {
        if (out.empty() || std::abs(x - out.back()) > 1e-8 * (1.0 + std::abs(x)))
            out.push_back(x);
    }
    return out;
}

}  // namespace lsad
