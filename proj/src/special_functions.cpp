#include "needlet/special_functions.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

namespace needlet {

namespace {

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
    std::uint64_t out = 0;
    if (__builtin_mul_overflow(a, b, &out)) {
        throw std::overflow_error("harmonic dimension overflows 64 bits");
    }
    return out;
}

void require_dimension(int d) {
    if (d < 1 || d > SpherePoint::kMaxAmbient - 1) {
        throw UnsupportedDimension("sphere dimension must be in [1, 3], got " + std::to_string(d));
    }
}

}  // namespace

SpherePoint::SpherePoint(std::span<const double> coords) {
    if (coords.size() < 2 || coords.size() > static_cast<std::size_t>(kMaxAmbient)) {
        throw UnsupportedDimension("SpherePoint needs 2..4 coordinates");
    }
    double norm2 = 0.0;
    for (double c : coords) norm2 += c * c;
    if (!(norm2 > 0.0) || !std::isfinite(norm2)) {
        throw DomainError("cannot normalize a zero or non-finite vector");
    }
    const double inv = 1.0 / std::sqrt(norm2);
    ambient_ = static_cast<int>(coords.size());
    coords_.fill(0.0);
    for (std::size_t i = 0; i < coords.size(); ++i) coords_[i] = coords[i] * inv;
}

SpherePoint::SpherePoint(double x, double y, double z)
    : SpherePoint(std::array<double, 3>{x, y, z}) {}

SpherePoint SpherePoint::from_unit(std::span<const double> coords) {
    double norm2 = 0.0;
    for (double c : coords) norm2 += c * c;
    if (std::abs(std::sqrt(norm2) - 1.0) > kUnitTolerance) {
        throw PreconditionError("point is not on the unit sphere");
    }
    SpherePoint p;
    if (coords.size() < 2 || coords.size() > static_cast<std::size_t>(kMaxAmbient)) {
        throw UnsupportedDimension("SpherePoint needs 2..4 coordinates");
    }
    p.ambient_ = static_cast<int>(coords.size());
    p.coords_.fill(0.0);
    std::copy(coords.begin(), coords.end(), p.coords_.begin());
    return p;
}

SpherePoint SpherePoint::from_polar(double theta, double phi) {
    const double s = std::sin(theta);
    return SpherePoint(s * std::cos(phi), s * std::sin(phi), std::cos(theta));
}

double SpherePoint::dot(const SpherePoint& other) const {
    double acc = 0.0;
    for (int i = 0; i < ambient_; ++i) acc += coords_[static_cast<std::size_t>(i)] * other.coords_[static_cast<std::size_t>(i)];
    return acc;
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t c = 1;
    for (std::uint64_t i = 0; i < k; ++i) {
        // c * (n - i) is divisible by (i + 1) at every step.
        const std::uint64_t g = std::gcd(c, i + 1);
        c = checked_mul(c / g, (n - i) / ((i + 1) / g));
    }
    return c;
}

std::uint64_t harmonic_dim(int k, int d) {
    if (k < 0 || d < 1) throw PreconditionError("harmonic_dim needs k >= 0, d >= 1");
    if (k == 0) return 1;
    const auto uk = static_cast<std::uint64_t>(k);
    const auto ud = static_cast<std::uint64_t>(d);
    // (2k+d-1)/(k+d-1) * C(k+d-1, k); the division is exact.
    const std::uint64_t c = binomial(uk + ud - 1, uk);
    const std::uint64_t num = checked_mul(2 * uk + ud - 1, c);
    return num / (uk + ud - 1);
}

std::uint64_t cumulative_dim(int n, int d) {
    if (n < 0 || d < 1) throw PreconditionError("cumulative_dim needs n >= 0, d >= 1");
    std::uint64_t total = 0;
    for (int k = 0; k <= n; ++k) {
        const std::uint64_t dk = harmonic_dim(k, d);
        if (__builtin_add_overflow(total, dk, &total)) {
            throw std::overflow_error("cumulative dimension overflows 64 bits");
        }
    }
    return total;
}

double sphere_area(int d) {
    if (d < 0) throw PreconditionError("sphere_area needs d >= 0");
    const double h = 0.5 * (d + 1);
    return 2.0 * std::pow(std::numbers::pi, h) / std::tgamma(h);
}

namespace {

void check_argument(double t) {
    if (!(std::abs(t) <= 1.0 + 1e-12)) {
        throw DomainError("Gegenbauer argument outside [-1, 1]");
    }
}

}  // namespace

double legendre(int k, int d, double t) {
    if (k < 0 || d < 1) throw PreconditionError("legendre needs k >= 0, d >= 1");
    check_argument(t);
    if (k == 0) return 1.0;
    double prev = 1.0;
    double cur = t;
    for (int j = 1; j < k; ++j) {
        const double next = ((2.0 * j + d - 1) * t * cur - j * prev) / (j + d - 1);
        prev = cur;
        cur = next;
    }
    return cur;
}

void legendre_all(int kmax, int d, double t, std::span<double> out) {
    if (kmax < 0 || d < 1) throw PreconditionError("legendre_all needs kmax >= 0, d >= 1");
    check_argument(t);
    if (out.size() < static_cast<std::size_t>(kmax + 1)) throw PreconditionError("output span too small");
    out[0] = 1.0;
    if (kmax == 0) return;
    out[1] = t;
    for (int j = 1; j < kmax; ++j) {
        out[static_cast<std::size_t>(j + 1)] =
            ((2.0 * j + d - 1) * t * out[static_cast<std::size_t>(j)] - j * out[static_cast<std::size_t>(j - 1)]) / (j + d - 1);
    }
}

std::vector<double> legendre_all(int kmax, int d, double t) {
    std::vector<double> out(static_cast<std::size_t>(std::max(kmax, 0) + 1));
    legendre_all(kmax, d, t, out);
    return out;
}

LineQuadrature gauss_legendre(int num_nodes) {
    return gauss_gegenbauer(num_nodes, 0.0);
}

LineQuadrature gauss_gegenbauer(int num_nodes, double alpha) {
    if (num_nodes < 1) throw PreconditionError("quadrature needs at least one node");
    if (!(alpha > -1.0)) throw PreconditionError("Gegenbauer weight exponent must exceed -1");
    // Golub-Welsch on the symmetric Jacobi matrix of the weight (1-t^2)^alpha.
    const int n = num_nodes;
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd off(std::max(n - 1, 0));
    for (int k = 1; k < n; ++k) {
        double b2;
        const double two_ka = 2.0 * k + 2.0 * alpha;
        if (std::abs(two_ka * two_ka - 1.0) < 1e-14) {
            b2 = 0.5;  // Chebyshev first kind, k = 1
        } else {
            b2 = k * (k + 2.0 * alpha) / (two_ka * two_ka - 1.0);
        }
        off[k - 1] = std::sqrt(b2);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
    eig.computeFromTridiagonal(diag, off, Eigen::ComputeEigenvectors);
    const double mu0 = std::sqrt(std::numbers::pi) * std::tgamma(alpha + 1.0) / std::tgamma(alpha + 1.5);

    LineQuadrature q;
    q.alpha = alpha;
    q.exact_degree = 2 * n - 1;
    q.nodes.resize(static_cast<std::size_t>(n));
    q.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        q.nodes[static_cast<std::size_t>(i)] = eig.eigenvalues()[i];
        const double v0 = eig.eigenvectors()(0, i);
        q.weights[static_cast<std::size_t>(i)] = mu0 * v0 * v0;
    }
    if (alpha == 0.0) {
        // Polish Legendre nodes with Newton steps; the eigensolver leaves ~1e-15 errors.
        for (int i = 0; i < n; ++i) {
            double x = q.nodes[static_cast<std::size_t>(i)];
            double dp = 1.0;
            for (int it = 0; it < 3; ++it) {
                double p0 = 1.0;
                double p1 = x;
                for (int j = 1; j < n; ++j) {
                    const double p2 = ((2.0 * j + 1.0) * x * p1 - j * p0) / (j + 1.0);
                    p0 = p1;
                    p1 = p2;
                }
                const double pn = n == 0 ? 1.0 : p1;
                const double pnm1 = n == 1 ? 1.0 : p0;
                dp = n * (x * pn - pnm1) / (x * x - 1.0);
                x -= pn / dp;
            }
            q.nodes[static_cast<std::size_t>(i)] = x;
            q.weights[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
    }
    return q;
}

LineQuadrature zonal_line_rule(int num_nodes, int d) {
    require_dimension(d);
    return gauss_gegenbauer(num_nodes, 0.5 * (d - 2));
}

double legendre_orthogonality_residual(int k, int j, int d, const LineQuadrature& quad) {
    if (std::abs(quad.alpha - 0.5 * (d - 2)) > 1e-15) {
        throw PreconditionError("line rule weight does not match the dimension");
    }
    if (quad.exact_degree < k + j) {
        throw PreconditionError("line rule not exact to degree k + j");
    }
    double integral = 0.0;
    for (std::size_t i = 0; i < quad.nodes.size(); ++i) {
        const double t = quad.nodes[i];
        integral += quad.weights[i] * legendre(k, d, t) * legendre(j, d, t);
    }
    const double expected =
        k == j ? sphere_area(d) / (sphere_area(d - 1) * static_cast<double>(harmonic_dim(k, d))) : 0.0;
    return std::abs(integral - expected);
}

std::vector<double> real_harmonic_basis(int k, const SpherePoint& x) {
    if (k < 0) throw PreconditionError("degree must be non-negative");
    std::vector<double> all = real_harmonics_all(k, x);
    return {all.begin() + static_cast<std::ptrdiff_t>(harmonic_index(k, -k)), all.end()};
}

void real_harmonics_all(int kmax, const SpherePoint& x, std::span<double> out) {
    if (x.dim() != 2) throw UnsupportedDimension("real spherical harmonics are implemented for S^2 only");
    if (kmax < 0) throw PreconditionError("degree must be non-negative");
    if (out.size() < harmonic_count(kmax)) throw PreconditionError("output span too small");

    // Fully normalized associated Legendre functions with the sin^m(theta)
    // factor divided out, so q_k^m * Re/Im((x + iy)^m) gives the harmonic
    // without any angle evaluation and without trouble at the poles.
    const double ct = x[2];
    const double px = x[0];
    const double py = x[1];
    double qmm = 1.0 / std::sqrt(4.0 * std::numbers::pi);
    double re = 1.0;  // Re (x + iy)^m
    double im = 0.0;  // Im (x + iy)^m
    constexpr double kSqrt2 = std::numbers::sqrt2;

    for (int m = 0; m <= kmax; ++m) {
        if (m > 0) {
            qmm *= std::sqrt((2.0 * m + 1.0) / (2.0 * m));
            const double nre = re * px - im * py;
            const double nim = re * py + im * px;
            re = nre;
            im = nim;
        }
        const double cre = m == 0 ? 1.0 : kSqrt2 * re;
        const double cim = kSqrt2 * im;

        double q_prev = 0.0;
        double q_cur = qmm;
        for (int k = m; k <= kmax; ++k) {
            if (k == m + 1) {
                q_prev = q_cur;
                q_cur = std::sqrt(2.0 * m + 3.0) * ct * qmm;
            } else if (k > m + 1) {
                const double kk = static_cast<double>(k);
                const double mm = static_cast<double>(m);
                const double a = std::sqrt((4.0 * kk * kk - 1.0) / (kk * kk - mm * mm));
                const double b = std::sqrt(((kk - 1.0) * (kk - 1.0) - mm * mm) / (4.0 * (kk - 1.0) * (kk - 1.0) - 1.0));
                const double q_next = a * (ct * q_cur - b * q_prev);
                q_prev = q_cur;
                q_cur = q_next;
            }
            out[harmonic_index(k, m)] = q_cur * cre;
            if (m > 0) out[harmonic_index(k, -m)] = q_cur * cim;
        }
    }
}

std::vector<double> real_harmonics_all(int kmax, const SpherePoint& x) {
    std::vector<double> out(harmonic_count(kmax));
    real_harmonics_all(kmax, x, out);
    return out;
}

}  // namespace needlet
