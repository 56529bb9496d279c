#include "needlet/simulation.hpp"

#include "needlet/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace needlet {

std::string_view to_string(DesignKind k) {
    return k == DesignKind::uniform ? "uniform" : "cap-biased";
}

DesignKind parse_design_kind(std::string_view s) {
    if (s == "uniform") return DesignKind::uniform;
    if (s == "cap-biased" || s == "cap_biased" || s == "vmf") return DesignKind::cap_biased;
    throw PreconditionError("unknown sampling design: " + std::string(s));
}

double SamplingDesign::density(const SpherePoint& x) const {
    const double four_pi = 4.0 * std::numbers::pi;
    if (kind == DesignKind::uniform || kappa == 0.0) return 1.0 / four_pi;
    // kappa / (4 pi sinh kappa) exp(kappa t), written to avoid overflow.
    const double t = x[x.ambient() - 1];
    return kappa / (2.0 * std::numbers::pi * (1.0 - std::exp(-2.0 * kappa))) * std::exp(kappa * (t - 1.0));
}

std::string SamplingDesign::describe() const {
    std::ostringstream os;
    os << to_string(kind);
    if (kind == DesignKind::cap_biased) os << "(" << kappa << ")";
    return os.str();
}

std::vector<SpherePoint> sample_design(const SamplingDesign& design, int m, Rng& rng) {
    if (m < 1) throw PreconditionError("sample_design needs m >= 1");
    if (design.kind == DesignKind::cap_biased && !(design.kappa >= 0.0)) {
        throw PreconditionError("vMF concentration must be non-negative");
    }
    std::vector<SpherePoint> pts;
    pts.reserve(static_cast<std::size_t>(m));
    if (design.kind == DesignKind::uniform || design.kappa == 0.0) {
        std::normal_distribution<double> normal(0.0, 1.0);
        while (static_cast<int>(pts.size()) < m) {
            const double x = normal(rng), y = normal(rng), z = normal(rng);
            if (x * x + y * y + z * z == 0.0) continue;
            pts.emplace_back(x, y, z);
        }
        return pts;
    }
    // Inversion of the polar marginal F(t) = (e^{kt} - e^{-k}) / (e^{k} - e^{-k}).
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double kappa = design.kappa;
    const double e2k = std::exp(-2.0 * kappa);
    for (int i = 0; i < m; ++i) {
        const double u = unif(rng);
        const double t = std::clamp(1.0 + std::log(u + (1.0 - u) * e2k) / kappa, -1.0, 1.0);
        const double phi = 2.0 * std::numbers::pi * unif(rng);
        const double s = std::sqrt(std::max(0.0, 1.0 - t * t));
        pts.emplace_back(s * std::cos(phi), s * std::sin(phi), t);
    }
    return pts;
}

std::vector<SpherePoint> sample_design(const SamplingDesign& design, int m, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    return sample_design(design, m, rng);
}

double distortion(const SamplingDesign& design) {
    if (design.kind == DesignKind::uniform || design.kappa == 0.0) return 1.0;
    // Density w.r.t. normalized measure is kappa e^{kappa t} / sinh kappa; its
    // infimum sits at the antipode t = -1.
    const double kappa = design.kappa;
    const double p_min = 2.0 * kappa * std::exp(-2.0 * kappa) / (1.0 - std::exp(-2.0 * kappa));
    if (!(p_min > 0.0) || !std::isfinite(p_min)) {
        throw InfiniteDistortion("sampling density has zero infimum");
    }
    return std::sqrt(1.0 / p_min);
}

std::string_view to_string(TargetShape s) { return s == TargetShape::zonal ? "zonal" : "random"; }

TargetShape parse_target_shape(std::string_view s) {
    if (s == "zonal") return TargetShape::zonal;
    if (s == "random") return TargetShape::random;
    throw PreconditionError("unknown target shape: " + std::string(s));
}

double sobolev_norm(const SpectralFunction& f, double r) {
    double acc = 0.0;
    for (int k = 0; k <= f.band_limit(); ++k) {
        const double w = std::pow(k + 0.5, 2.0 * r);
        for (int m = -k; m <= k; ++m) acc += w * f.at(k, m) * f.at(k, m);
    }
    return std::sqrt(acc);
}

double estimate_sup_norm(const SpectralFunction& f) {
    const int band = f.band_limit();
    if (band < 0) return 0.0;
    bool zonal = true;
    for (int k = 1; k <= band && zonal; ++k) {
        for (int m = -k; m <= k; ++m) {
            if (m != 0 && f.at(k, m) != 0.0) {
                zonal = false;
                break;
            }
        }
    }
    double sup = 0.0;
    if (zonal) {
        const int grid = std::max(20001, 200 * (band + 1) + 1);
        std::vector<double> p(static_cast<std::size_t>(band + 1));
        std::vector<double> c(static_cast<std::size_t>(band + 1));
        for (int k = 0; k <= band; ++k) {
            c[static_cast<std::size_t>(k)] = f.at(k, 0) * std::sqrt((2.0 * k + 1.0) / (4.0 * std::numbers::pi));
        }
        for (int i = 0; i < grid; ++i) {
            const double t = -1.0 + 2.0 * i / (grid - 1.0);
            legendre_all(band, 2, t, p);
            double v = 0.0;
            for (int k = 0; k <= band; ++k) v += c[static_cast<std::size_t>(k)] * p[static_cast<std::size_t>(k)];
            sup = std::max(sup, std::abs(v));
        }
        return sup;
    }
    for (double v : f.evaluate(fibonacci_grid(dense_grid_size(band)))) sup = std::max(sup, std::abs(v));
    return sup;
}

SobolevTarget make_target(double r, int band, std::uint64_t seed, TargetShape shape, double envelope_scale) {
    if (!(r > 1.0)) throw DomainError("Sobolev smoothness must exceed d/2 = 1");
    if (band < 1) throw PreconditionError("target band must be at least 1");
    if (!(envelope_scale > 0.0)) throw PreconditionError("envelope scale must be positive");
    SobolevTarget t;
    t.r = r;
    t.band = band;
    t.shape = shape;
    t.f = SpectralFunction(band);
    Rng rng = make_rng(derive_seed(seed, {0x746172ULL}));
    std::uniform_real_distribution<double> mag(0.5, 1.5);
    std::bernoulli_distribution coin(0.5);
    for (int k = 0; k <= band; ++k) {
        const double env = envelope_scale * std::pow(k + 0.5, -r - 0.51);
        if (shape == TargetShape::zonal) {
            t.f.at(k, 0) = env;
        } else {
            const double per = env / std::sqrt(2.0 * k + 1.0);
            for (int m = -k; m <= k; ++m) t.f.at(k, m) = (coin(rng) ? 1.0 : -1.0) * mag(rng) * per;
        }
    }
    const double w = sobolev_norm(t.f, r);
    for (double& c : t.f.coeffs()) c /= w;
    t.sup_norm = estimate_sup_norm(t.f);
    return t;
}

Labels generate_labels(const SobolevTarget& target, std::span<const SpherePoint> points, const NoiseModel& noise, Rng& rng) {
    if (!(noise.sigma >= 0.0)) throw PreconditionError("noise level must be non-negative");
    Labels out;
    const auto clean = target.f.evaluate(points);
    double sup = target.sup_norm;
    for (double v : clean) sup = std::max(sup, std::abs(v));
    out.bound = sup + noise.sigma;
    out.y.resize(clean.size());
    if (noise.sigma == 0.0) {
        out.y = clean;
    } else {
        std::uniform_real_distribution<double> xi(-noise.sigma, noise.sigma);
        for (std::size_t i = 0; i < clean.size(); ++i) out.y[i] = clean[i] + xi(rng);
    }
    if (out.bound == 0.0) out.bound = 1.0;
    return out;
}

Labels generate_labels(const SobolevTarget& target, std::span<const SpherePoint> points, const NoiseModel& noise,
                       std::uint64_t seed) {
    Rng rng = make_rng(seed);
    return generate_labels(target, points, noise, rng);
}

}  // namespace needlet
