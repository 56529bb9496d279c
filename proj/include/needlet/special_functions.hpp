#pragma once

// Zonal polynomials, harmonic-space dimensions and the real spherical
// harmonic basis on S^2.
//
// Conventions: S^d is the unit sphere in R^{d+1}. P_k^{d+1} denotes the
// Gegenbauer polynomial normalized by P_k^{d+1}(1) = 1. Real harmonics on
// S^2 are orthonormal with respect to the (unnormalized) surface measure and
// are stored flat at index k*k + k + m, m in [-k, k].

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace needlet {

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class UnsupportedDimension : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Point on S^d, d in [1, 3]. Construction normalizes; from_unit() checks.
class SpherePoint {
public:
    static constexpr int kMaxAmbient = 4;
    static constexpr double kUnitTolerance = 1e-12;

    SpherePoint() = default;

    /// Normalizes the given direction. Throws DomainError on a zero vector.
    explicit SpherePoint(std::span<const double> coords);
    SpherePoint(double x, double y, double z);

    /// Takes coordinates that must already have unit norm within 1e-12.
    static SpherePoint from_unit(std::span<const double> coords);

    int dim() const { return ambient_ - 1; }
    int ambient() const { return ambient_; }
    double operator[](int i) const { return coords_[static_cast<std::size_t>(i)]; }
    std::span<const double> coords() const { return {coords_.data(), static_cast<std::size_t>(ambient_)}; }

    double dot(const SpherePoint& other) const;

    /// Polar coordinates on S^2 (requires dim() == 2).
    static SpherePoint from_polar(double theta, double phi);

private:
    std::array<double, kMaxAmbient> coords_{0.0, 0.0, 1.0, 0.0};
    int ambient_ = 3;
};

// Exact integer dimensions. Overflow throws std::overflow_error.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k);
std::uint64_t harmonic_dim(int k, int d);
std::uint64_t cumulative_dim(int n, int d);

/// |S^d| = 2 pi^{(d+1)/2} / Gamma((d+1)/2).
double sphere_area(int d);

/// P_k^{d+1}(t) by forward three-term recurrence.
double legendre(int k, int d, double t);

/// P_0 .. P_kmax at t, written into out (size kmax + 1).
void legendre_all(int kmax, int d, double t, std::span<double> out);
std::vector<double> legendre_all(int kmax, int d, double t);

/// Gauss quadrature on [-1, 1] for the weight (1 - t^2)^alpha.
struct LineQuadrature {
    std::vector<double> nodes;
    std::vector<double> weights;
    double alpha = 0.0;
    int exact_degree = -1;  // 2 * nodes.size() - 1
};

LineQuadrature gauss_legendre(int num_nodes);
/// Gauss-Gegenbauer rule with weight (1 - t^2)^alpha, alpha > -1.
LineQuadrature gauss_gegenbauer(int num_nodes, double alpha);
/// Rule matched to the Funk-Hecke weight of S^d: alpha = (d - 2) / 2.
LineQuadrature zonal_line_rule(int num_nodes, int d);

/// |int P_k P_j (1-t^2)^{(d-2)/2} dt - delta_kj |S^d| / (|S^{d-1}| D_k^d)|.
double legendre_orthogonality_residual(int k, int j, int d, const LineQuadrature& quad);

constexpr std::size_t harmonic_index(int k, int m) {
    return static_cast<std::size_t>(k * k + k + m);
}
constexpr std::size_t harmonic_count(int kmax) {
    return kmax < 0 ? 0 : static_cast<std::size_t>((kmax + 1) * (kmax + 1));
}

/// The 2k+1 real orthonormal harmonics of degree k at x (x on S^2).
std::vector<double> real_harmonic_basis(int k, const SpherePoint& x);

/// All harmonics of degree <= kmax at x into out (size harmonic_count(kmax)).
void real_harmonics_all(int kmax, const SpherePoint& x, std::span<double> out);
std::vector<double> real_harmonics_all(int kmax, const SpherePoint& x);

}  // namespace needlet
