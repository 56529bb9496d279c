#include "needlet/kernel.hpp"

#include "needlet/parallel.hpp"
#include "needlet/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace needlet {

NeedletKernel::NeedletKernel(int n, int d, AdmissibleWindow window) : n_(n), d_(d), window_(std::move(window)) {
    if (n < 1) throw PreconditionError("needlet kernel needs n >= 1");
    if (d < 1 || d > 3) throw UnsupportedDimension("needlet kernel supports d in [1, 3]");
    const double area = sphere_area(d);
    // eta(k/n) vanishes for k >= 2n; keep the positive-weight prefix.
    for (int k = 0; k <= 2 * n; ++k) {
        const double w = window_(static_cast<double>(k) / n);
        if (w < 0.0 || w > 1.0) throw PreconditionError("window value outside [0, 1]");
        weights_.push_back(w);
        coeffs_.push_back(w * static_cast<double>(harmonic_dim(k, d)) / area);
    }
    while (!weights_.empty() && weights_.back() == 0.0) {
        weights_.pop_back();
        coeffs_.pop_back();
    }
    for (double c : coeffs_) diagonal_ += c;
}

double NeedletKernel::weight(int k) const {
    if (k < 0) throw PreconditionError("negative degree");
    return k <= max_degree() ? weights_[static_cast<std::size_t>(k)] : 0.0;
}

double NeedletKernel::operator()(double t) const {
    if (!(std::abs(t) <= 1.0 + 1e-12)) throw DomainError("kernel argument outside [-1, 1]");
    t = std::clamp(t, -1.0, 1.0);
    const int N = max_degree();
    if (N == 0) return coeffs_[0];
    const double d = d_;
    // phi_{k+1} = alpha_k phi_k + beta_k phi_{k-1}
    auto alpha = [&](int k) { return (2.0 * k + d - 1.0) * t / (k + d - 1.0); };
    auto beta = [&](int k) { return -static_cast<double>(k) / (k + d - 1.0); };
    double b1 = 0.0;  // b_{k+1}
    double b2 = 0.0;  // b_{k+2}
    for (int k = N; k >= 1; --k) {
        const double bk = coeffs_[static_cast<std::size_t>(k)] + alpha(k) * b1 + beta(k + 1) * b2;
        b2 = b1;
        b1 = bk;
    }
    return coeffs_[0] + b1 * t + beta(1) * b2;
}

double NeedletKernel::eval_direct(double t) const {
    const auto p = legendre_all(max_degree(), d_, t);
    double acc = 0.0;
    for (std::size_t k = 0; k < coeffs_.size(); ++k) acc += coeffs_[k] * p[k];
    return acc;
}

SpectralFunction::SpectralFunction(int kmax, std::vector<double> coeffs) : kmax_(kmax), coeffs_(std::move(coeffs)) {
    if (coeffs_.size() != harmonic_count(kmax)) throw PreconditionError("coefficient count does not match band limit");
}

SpectralFunction SpectralFunction::single(int k, int m, double value) {
    if (std::abs(m) > k) throw PreconditionError("order exceeds degree");
    SpectralFunction f(k);
    f.at(k, m) = value;
    return f;
}

double SpectralFunction::operator()(const SpherePoint& x) const {
    if (kmax_ < 0) return 0.0;
    const auto y = real_harmonics_all(kmax_, x);
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += coeffs_[i] * y[i];
    return acc;
}

std::vector<double> SpectralFunction::evaluate(std::span<const SpherePoint> pts) const {
    std::vector<double> out(pts.size(), 0.0);
    if (kmax_ < 0) return out;
    const Eigen::Map<const Eigen::VectorXd> c(coeffs_.data(), static_cast<Eigen::Index>(coeffs_.size()));
    // Chunked so the harmonic matrix stays small for high band limits.
    constexpr std::size_t kChunk = 512;
    for (std::size_t start = 0; start < pts.size(); start += kChunk) {
        const std::size_t len = std::min(kChunk, pts.size() - start);
        const Eigen::MatrixXd phi = harmonic_matrix(kmax_, pts.subspan(start, len));
        Eigen::Map<Eigen::VectorXd>(out.data() + start, static_cast<Eigen::Index>(len)) = phi * c;
    }
    return out;
}

double SpectralFunction::l2_norm() const {
    double acc = 0.0;
    for (double c : coeffs_) acc += c * c;
    return std::sqrt(acc);
}

int SpectralFunction::effective_band() const {
    for (int k = kmax_; k >= 0; --k) {
        for (int m = -k; m <= k; ++m) {
            if (at(k, m) != 0.0) return k;
        }
    }
    return -1;
}

SpectralFunction SpectralFunction::resized(int kmax) const {
    SpectralFunction out(kmax);
    const std::size_t n = std::min(out.coeffs_.size(), coeffs_.size());
    std::copy_n(coeffs_.begin(), n, out.coeffs_.begin());
    return out;
}

SpectralFunction convolve(const NeedletKernel& K, const SpectralFunction& f) {
    if (K.d() != 2) throw UnsupportedDimension("spectral convolution is implemented on S^2");
    const int band = std::min(f.band_limit(), K.max_degree());
    SpectralFunction g(band);
    for (int k = 0; k <= band; ++k) {
        const double w = K.weight(k);
        for (int m = -k; m <= k; ++m) g.at(k, m) = w * f.at(k, m);
    }
    return g;
}

double convolve_pointwise(const NeedletKernel& K, const std::function<double(const SpherePoint&)>& f,
                          const SphericalQuadrature& quad, const SpherePoint& x, std::optional<int> declared_band) {
    if (declared_band && quad.exact_degree < *declared_band + K.max_degree()) {
        throw PreconditionError("quadrature degree " + std::to_string(quad.exact_degree) +
                                " cannot resolve K_n * f (needs " + std::to_string(*declared_band + K.max_degree()) + ")");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < quad.size(); ++i) {
        acc += quad.weights[i] * K(std::clamp(x.dot(quad.nodes[i]), -1.0, 1.0)) * f(quad.nodes[i]);
    }
    return acc;
}

double rkhs_inner(const NeedletKernel& K, const SpectralFunction& f, const SpectralFunction& g) {
    const int band = std::max(f.band_limit(), g.band_limit());
    double acc = 0.0;
    for (int k = 0; k <= band; ++k) {
        const double w = K.weight(k);
        for (int m = -k; m <= k; ++m) {
            const double a = k <= f.band_limit() ? f.at(k, m) : 0.0;
            const double b = k <= g.band_limit() ? g.at(k, m) : 0.0;
            if (a == 0.0 && b == 0.0) continue;
            if (w <= 0.0) {
                throw DegenerateDegree("coefficient at degree " + std::to_string(k) +
                                       " where the window weight vanishes");
            }
            acc += a * b / w;
        }
    }
    return acc;
}

std::vector<LocalizationRow> localization_profile(const NeedletKernel& K, std::span<const double> thetas,
                                                  int decay_order) {
    std::vector<LocalizationRow> rows;
    rows.reserve(thetas.size());
    const double n = K.n();
    const double scale = std::pow(n, K.d());
    for (double theta : thetas) {
        if (theta < 0.0 || theta > std::numbers::pi + 1e-12) throw PreconditionError("theta outside [0, pi]");
        const double v = std::abs(K(std::cos(theta)));
        rows.push_back({theta, v, v * std::pow(1.0 + n * theta, decay_order) / scale});
    }
    return rows;
}

void require_unit_points(std::span<const SpherePoint> points, int d) {
    for (const auto& p : points) {
        if (p.dim() != d) throw PreconditionError("point dimension does not match the kernel");
        if (std::abs(std::sqrt(p.dot(p)) - 1.0) > SpherePoint::kUnitTolerance) {
            throw PreconditionError("point is not on the unit sphere");
        }
    }
}

namespace {

inline double kernel_at(const NeedletKernel& K, const SpherePoint& a, const SpherePoint& b) {
    return K(std::clamp(a.dot(b), -1.0, 1.0));
}

}  // namespace

Eigen::MatrixXd gram(const NeedletKernel& K, std::span<const SpherePoint> points) {
    require_unit_points(points, K.d());
    const auto m = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd A(m, m);
#pragma omp parallel for schedule(dynamic, 16)
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = i; j < m; ++j) {
            const double v = kernel_at(K, points[static_cast<std::size_t>(i)], points[static_cast<std::size_t>(j)]);
            A(i, j) = v;
            A(j, i) = v;
        }
    }
    return A;
}

Eigen::MatrixXd gram_serial(const NeedletKernel& K, std::span<const SpherePoint> points) {
    require_unit_points(points, K.d());
    const auto m = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd A(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = i; j < m; ++j) {
            const double v = kernel_at(K, points[static_cast<std::size_t>(i)], points[static_cast<std::size_t>(j)]);
            A(i, j) = v;
            A(j, i) = v;
        }
    }
    return A;
}

Eigen::MatrixXd cross_gram(const NeedletKernel& K, std::span<const SpherePoint> xs, std::span<const SpherePoint> ys) {
    const auto rows = static_cast<Eigen::Index>(xs.size());
    const auto cols = static_cast<Eigen::Index>(ys.size());
    Eigen::MatrixXd B(rows, cols);
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            B(i, j) = kernel_at(K, xs[static_cast<std::size_t>(i)], ys[static_cast<std::size_t>(j)]);
        }
    }
    return B;
}

Eigen::MatrixXd harmonic_matrix(int kmax, std::span<const SpherePoint> points) {
    const auto m = static_cast<Eigen::Index>(points.size());
    const auto D = static_cast<Eigen::Index>(harmonic_count(kmax));
    // Row-major scratch so each point writes a contiguous row.
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> phi(m, D);
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < m; ++i) {
        real_harmonics_all(kmax, points[static_cast<std::size_t>(i)],
                           std::span<double>(phi.row(i).data(), static_cast<std::size_t>(D)));
    }
    return phi;
}

Eigen::MatrixXd harmonic_matrix_serial(int kmax, std::span<const SpherePoint> points) {
    const auto m = static_cast<Eigen::Index>(points.size());
    const auto D = static_cast<Eigen::Index>(harmonic_count(kmax));
    Eigen::MatrixXd phi(m, D);
    std::vector<double> row(static_cast<std::size_t>(D));
    for (Eigen::Index i = 0; i < m; ++i) {
        real_harmonics_all(kmax, points[static_cast<std::size_t>(i)], row);
        for (Eigen::Index c = 0; c < D; ++c) phi(i, c) = row[static_cast<std::size_t>(c)];
    }
    return phi;
}

Eigen::MatrixXd kernel_features(const NeedletKernel& K, std::span<const SpherePoint> points) {
    if (K.d() != 2) throw UnsupportedDimension("harmonic features are implemented on S^2");
    require_unit_points(points, 2);
    Eigen::MatrixXd F = harmonic_matrix(K.max_degree(), points);
    for (int k = 0; k <= K.max_degree(); ++k) {
        const double s = std::sqrt(K.weight(k));
        F.middleCols(static_cast<Eigen::Index>(harmonic_index(k, -k)), 2 * k + 1) *= s;
    }
    return F;
}

}  // namespace needlet
