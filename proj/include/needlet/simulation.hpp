#pragma once

// Synthetic regression problems on S^2: sampling designs, Sobolev-ball
// targets and bounded label noise.

#include "needlet/kernel.hpp"
#include "needlet/rng.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace needlet {

enum class DesignKind { uniform, cap_biased };

/// uniform, or von Mises-Fisher about the north pole with concentration kappa.
struct SamplingDesign {
    DesignKind kind = DesignKind::uniform;
    double kappa = 0.0;

    static SamplingDesign uniform() { return {}; }
    static SamplingDesign cap_biased(double kappa) { return {DesignKind::cap_biased, kappa}; }

    /// Density with respect to surface measure.
    double density(const SpherePoint& x) const;
    std::string describe() const;
};

std::string_view to_string(DesignKind k);
DesignKind parse_design_kind(std::string_view s);

std::vector<SpherePoint> sample_design(const SamplingDesign& design, int m, std::uint64_t seed);
std::vector<SpherePoint> sample_design(const SamplingDesign& design, int m, Rng& rng);

class InfiniteDistortion : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Norm of the identity L^2(rho_X) -> L^2(normalized surface measure):
/// (sup 1/p)^{1/2} for the density p with respect to normalized surface measure.
double distortion(const SamplingDesign& design);

enum class TargetShape { zonal, random };
std::string_view to_string(TargetShape s);
TargetShape parse_target_shape(std::string_view s);

struct SobolevTarget {
    SpectralFunction f;
    double r = 2.0;
    int band = 0;
    TargetShape shape = TargetShape::zonal;
    double sup_norm = 0.0;  // dense-grid estimate of sup |f|

    double operator()(const SpherePoint& x) const { return f(x); }
};

/// ||f||_{W_r} = (sum_{k,j} (k + 1/2)^{2r} f_{k,j}^2)^{1/2} on S^2.
double sobolev_norm(const SpectralFunction& f, double r);

/// Degree envelope (k + 1/2)^{-r-0.51} for k = 0 .. band, normalized to W_r norm 1.
/// zonal puts each degree's mass on the m = 0 harmonic; random spreads it over
/// all orders with i.i.d. signs and magnitudes. Needs r > 1.
SobolevTarget make_target(double r, int band, std::uint64_t seed, TargetShape shape = TargetShape::zonal,
                          double envelope_scale = 1.0);

/// sup |f| over a dense grid (a 1-D grid in t for zonal functions).
double estimate_sup_norm(const SpectralFunction& f);

struct NoiseModel {
    double sigma = 0.0;  // uniform on [-sigma, sigma]; 0 means noise-free
    static NoiseModel none() { return {}; }
    static NoiseModel uniform(double sigma) { return {sigma}; }
};

struct Labels {
    std::vector<double> y;
    double bound = 0.0;  // M
};

/// y_i = f(x_i) + xi_i, M = sup|f| + sigma. If a sample exceeds the grid sup
/// estimate, M is raised to cover it so |y_i| <= M always holds.
Labels generate_labels(const SobolevTarget& target, std::span<const SpherePoint> points, const NoiseModel& noise,
                       std::uint64_t seed);
Labels generate_labels(const SobolevTarget& target, std::span<const SpherePoint> points, const NoiseModel& noise,
                       Rng& rng);

}  // namespace needlet
