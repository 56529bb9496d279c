#pragma once

// Exact product quadrature on S^2, least-norm cubature weights for random
// point sets, and empirical Marcinkiewicz-Zygmund / Nikolskii checks.

#include "needlet/kernel.hpp"
#include "needlet/special_functions.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace needlet {

struct SphericalQuadrature {
    std::vector<SpherePoint> nodes;
    std::vector<double> weights;
    int exact_degree = -1;

    std::size_t size() const { return nodes.size(); }
};

/// Gauss-Legendre in cos(theta) crossed with a uniform azimuthal grid; exact on
/// Pi_{exact_degree}^2. Uses ceil((deg+1)/2) x (deg+1) nodes.
SphericalQuadrature product_rule(int exact_degree);

/// Exact integral of a band-limited function: sqrt(4 pi) times its (0,0) coefficient.
double exact_integral(const SpectralFunction& f);

enum class CubatureTarget { surface_measure };

struct CubatureWeights {
    std::vector<SpherePoint> points;
    std::vector<double> weights;
    int degree = 0;
    double residual = 0.0;  // max |sum_i a_i Y_kj(t_i) - int Y_kj dw|
    int rank = 0;

    double l1_norm() const;
    double l2_squared() const;
    double sum() const;
};

class DegenerateConfiguration : public std::runtime_error {
public:
    DegenerateConfiguration(const std::string& what, int rank, int required)
        : std::runtime_error(what), rank_(rank), required_(required) {}
    int rank() const { return rank_; }
    int required() const { return required_; }

private:
    int rank_;
    int required_;
};

/// Minimum-l2 weights matching every moment of degree <= n. Singular values
/// below 1e-10 (relative to the largest) count as rank loss.
CubatureWeights cubature_weights(std::span<const SpherePoint> points, int n,
                                 CubatureTarget target = CubatureTarget::surface_measure);

struct MzReport {
    int degree = 0;
    int samples = 0;
    int trials = 0;
    int polys_per_trial = 50;
    double pass_frequency = 0.0;  // all 50 random polynomials inside [1/2, 3/2]
    /// Fraction of trials where the inequality holds on all of Pi_n (eigenvalue test).
    double uniform_pass_frequency = 0.0;
    std::vector<double> min_ratio;  // per trial, over the random polynomials
    std::vector<double> max_ratio;
};

/// Per trial: N uniform points, 50 random Q in Pi_n with ||Q||_rho = 1, checks
/// 1/2 <= (1/N) sum |Q(t_i)|^2 <= 3/2. Trials use independent derived streams.
MzReport mz_check(int n, int N, int trials, std::uint64_t seed);

/// Max over random Q in Pi_n of sup|Q| / ||Q||_2 (surface measure); sup is
/// taken on a dense grid. quad must be exact on Pi_{2n}.
double nikolskii_ratio(int n, int trials, const SphericalQuadrature& quad, std::uint64_t seed);

/// sup|f| / ||f||_2 for a given band-limited function, sup on a dense grid.
double sup_to_l2_ratio(const SpectralFunction& f, const SphericalQuadrature& quad);

/// Spiral (Fibonacci) point set with both poles, for sup-norm estimates.
std::vector<SpherePoint> fibonacci_grid(int count);

/// Grid size used for sup estimates of degree-n polynomials.
int dense_grid_size(int degree);

}  // namespace needlet
