#pragma once

// The needlet kernel K_n(t) = sum_k eta(k/n) D_k^d / |S^d| P_k^{d+1}(t).

#include "needlet/special_functions.hpp"
#include "needlet/window.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace needlet {

struct SphericalQuadrature;

class NeedletKernel {
public:
    NeedletKernel(int n, int d, AdmissibleWindow window = AdmissibleWindow());

    int n() const { return n_; }
    int d() const { return d_; }
    const AdmissibleWindow& window() const { return window_; }

    /// c_k = eta(k/n) D_k^d / |S^d| for k = 0 .. max_degree().
    const std::vector<double>& coeffs() const { return coeffs_; }
    /// eta(k/n) for k = 0 .. max_degree().
    const std::vector<double>& weights() const { return weights_; }
    /// Largest degree with a positive weight; 2n - 1 for the standard windows.
    int max_degree() const { return static_cast<int>(coeffs_.size()) - 1; }

    double weight(int k) const;

    /// K_n(t) by Clenshaw summation of the Gegenbauer series.
    double operator()(double t) const;
    /// Same series summed term by term (reference path).
    double eval_direct(double t) const;

    /// K_n(1) = sum_k c_k.
    double diagonal() const { return diagonal_; }

private:
    int n_;
    int d_;
    AdmissibleWindow window_;
    std::vector<double> weights_;
    std::vector<double> coeffs_;
    double diagonal_ = 0.0;
};

/// Band-limited function on S^2 in the real harmonic basis.
class SpectralFunction {
public:
    SpectralFunction() = default;
    explicit SpectralFunction(int kmax) : kmax_(kmax), coeffs_(harmonic_count(kmax), 0.0) {}
    SpectralFunction(int kmax, std::vector<double> coeffs);

    static SpectralFunction single(int k, int m, double value = 1.0);

    int band_limit() const { return kmax_; }
    double& at(int k, int m) { return coeffs_[harmonic_index(k, m)]; }
    double at(int k, int m) const { return coeffs_[harmonic_index(k, m)]; }
    const std::vector<double>& coeffs() const { return coeffs_; }
    std::vector<double>& coeffs() { return coeffs_; }

    double operator()(const SpherePoint& x) const;
    std::vector<double> evaluate(std::span<const SpherePoint> pts) const;

    /// L^2 norm under the surface measure (root-sum-of-squares of coefficients).
    double l2_norm() const;
    /// Largest degree with a non-zero coefficient, -1 for the zero function.
    int effective_band() const;

    /// Zero-pads or truncates to a new band limit.
    SpectralFunction resized(int kmax) const;

private:
    int kmax_ = -1;
    std::vector<double> coeffs_;
};

/// Spectral convolution: (K_n * f)^_{k,j} = eta(k/n) f^_{k,j}.
SpectralFunction convolve(const NeedletKernel& K, const SpectralFunction& f);

/// Quadrature approximation of int K_n(x . y) f(y) dw(y). When declared_band is
/// given the rule must be exact to degree declared_band + max_degree().
double convolve_pointwise(const NeedletKernel& K, const std::function<double(const SpherePoint&)>& f,
                          const SphericalQuadrature& quad, const SpherePoint& x,
                          std::optional<int> declared_band = std::nullopt);

class DegenerateDegree : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// <f, g>_{K_n} = sum eta(k/n)^{-1} f^_{k,j} g^_{k,j}; degrees with eta = 0
/// carrying a non-zero coefficient throw DegenerateDegree.
double rkhs_inner(const NeedletKernel& K, const SpectralFunction& f, const SpectralFunction& g);

struct LocalizationRow {
    double theta;
    double magnitude;    // |K_n(cos theta)|
    double bound_ratio;  // |K_n(cos theta)| (1 + n theta)^k / n^d
};

std::vector<LocalizationRow> localization_profile(const NeedletKernel& K, std::span<const double> thetas,
                                                  int decay_order);

/// Gram matrix A_ij = K_n(x_i . x_j). Rows are filled in parallel; every entry
/// is computed once per unordered pair so the result does not depend on the
/// schedule.
Eigen::MatrixXd gram(const NeedletKernel& K, std::span<const SpherePoint> points);
Eigen::MatrixXd gram_serial(const NeedletKernel& K, std::span<const SpherePoint> points);

/// Cross kernel matrix B_ij = K_n(x_i . y_j).
Eigen::MatrixXd cross_gram(const NeedletKernel& K, std::span<const SpherePoint> xs,
                           std::span<const SpherePoint> ys);

/// Harmonic feature matrix Phi_{i,(k,m)} = Y_{k,m}(x_i) for degrees <= kmax (S^2).
Eigen::MatrixXd harmonic_matrix(int kmax, std::span<const SpherePoint> points);
Eigen::MatrixXd harmonic_matrix_serial(int kmax, std::span<const SpherePoint> points);

/// Square-root factor F = Phi diag(sqrt(eta(k/n))) with gram(K, x) = F F^T (S^2).
Eigen::MatrixXd kernel_features(const NeedletKernel& K, std::span<const SpherePoint> points);

/// Checks unit norm and matching dimension; throws PreconditionError.
void require_unit_points(std::span<const SpherePoint> points, int d);

}  // namespace needlet
