#include "needlet/simulation.hpp"
#include "needlet/quadrature.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace needlet;
using std::numbers::pi;

TEST_CASE("uniform design moments") {
    const int m = 20000;
    const auto pts = sample_design(SamplingDesign::uniform(), m, 5);
    REQUIRE(pts.size() == static_cast<std::size_t>(m));
    double mz = 0.0, mzz = 0.0, mxy = 0.0;
    for (const auto& p : pts) {
        CHECK(std::abs(p.dot(p) - 1.0) < 1e-12);
        mz += p[2];
        mzz += p[2] * p[2];
        mxy += p[0] * p[1];
    }
    mz /= m, mzz /= m, mxy /= m;
    // z is uniform on [-1, 1]: mean 0 (sd 1/sqrt(3m)), second moment 1/3.
    CHECK(std::abs(mz) < 5.0 / std::sqrt(3.0 * m));
    CHECK(std::abs(mzz - 1.0 / 3.0) < 0.01);
    CHECK(std::abs(mxy) < 0.01);
}

TEST_CASE("vMF design: mean resultant and polar CDF") {
    const double kappa = 3.0;
    const int m = 20000;
    auto pts = sample_design(SamplingDesign::cap_biased(kappa), m, 9);
    double mean_t = 0.0;
    std::vector<double> t;
    for (const auto& p : pts) {
        CHECK(std::abs(p.dot(p) - 1.0) < 1e-12);
        t.push_back(p[2]);
        mean_t += p[2];
    }
    mean_t /= m;
    CHECK(std::abs(mean_t - (1.0 / std::tanh(kappa) - 1.0 / kappa)) < 0.01);
    // Kolmogorov distance against F(t) = (e^{kt} - e^{-k}) / (e^{k} - e^{-k})
    std::sort(t.begin(), t.end());
    double ks = 0.0;
    for (int i = 0; i < m; ++i) {
        const double F = (std::exp(kappa * t[i]) - std::exp(-kappa)) / (std::exp(kappa) - std::exp(-kappa));
        ks = std::max({ks, std::abs(F - double(i) / m), std::abs(F - double(i + 1) / m)});
    }
    CHECK(ks < 1.63 / std::sqrt(m));  // 1% critical value
}

TEST_CASE("design densities integrate to one") {
    const auto q = product_rule(40);
    for (auto design : {SamplingDesign::uniform(), SamplingDesign::cap_biased(2.0), SamplingDesign::cap_biased(10.0)}) {
        double s = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) s += q.weights[i] * design.density(q.nodes[i]);
        CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK(SamplingDesign::uniform().density(SpherePoint(1, 0, 0)) == doctest::Approx(1 / (4 * pi)));
}

TEST_CASE("distortion") {
    CHECK(distortion(SamplingDesign::uniform()) == 1.0);
    CHECK(distortion(SamplingDesign::cap_biased(0.0)) == 1.0);
    for (double kappa : {0.5, 1.0, 4.0}) {
        CHECK(distortion(SamplingDesign::cap_biased(kappa)) ==
              doctest::Approx(std::sqrt(std::sinh(kappa) * std::exp(kappa) / kappa)));
    }
    CHECK_THROWS_AS(distortion(SamplingDesign::cap_biased(800.0)), InfiniteDistortion);
}

TEST_CASE("sampling is deterministic in the seed") {
    const auto a = sample_design(SamplingDesign::cap_biased(1.5), 50, 123);
    const auto b = sample_design(SamplingDesign::cap_biased(1.5), 50, 123);
    const auto c = sample_design(SamplingDesign::cap_biased(1.5), 50, 124);
    for (int i = 0; i < 50; ++i) {
        CHECK(a[i][0] == b[i][0]);
        CHECK(a[i][2] == b[i][2]);
    }
    CHECK(a[0][0] != c[0][0]);
}

TEST_CASE("Sobolev targets are normalized and band-limited") {
    for (auto shape : {TargetShape::zonal, TargetShape::random}) {
        const auto t = make_target(2.0, 24, 7, shape);
        CHECK(sobolev_norm(t.f, 2.0) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(t.f.effective_band() == 24);
        for (int k = 1; k <= 24; ++k) {
            double e = 0.0;
            for (int m = -k; m <= k; ++m) e += t.f.at(k, m) * t.f.at(k, m);
            const double env = std::pow(k + 0.5, -2.0 - 0.51) / std::pow(0.5, -2.0 - 0.51);
            const double e0 = t.f.at(0, 0) * t.f.at(0, 0);
            // per-degree energy follows the envelope (random magnitudes lie in [0.5, 1.5])
            CHECK(e / e0 <= env * env * 9.0 + 1e-15);
            CHECK(e / e0 >= env * env * 0.25 / 2.25 - 1e-15);
        }
        // grid sup bounds every sampled value
        for (const auto& p : sample_design(SamplingDesign::uniform(), 500, 3)) CHECK(std::abs(t(p)) <= t.sup_norm + 1e-12);
    }
    const auto z = make_target(2.5, 10, 1, TargetShape::zonal);
    CHECK(z.f.at(3, 1) == 0.0);
    // zonal functions peak at the pole, where every Legendre term is maximal
    CHECK(z.sup_norm == doctest::Approx(std::abs(z(SpherePoint(0, 0, 1)))).epsilon(1e-12));
    CHECK(make_target(2.0, 10, 1, TargetShape::random).f.coeffs() ==
          make_target(2.0, 10, 1, TargetShape::random).f.coeffs());
}

TEST_CASE("labels respect the bound and the noise level") {
    const auto t = make_target(2.0, 16, 2);
    const auto pts = sample_design(SamplingDesign::uniform(), 400, 4);
    const auto clean = generate_labels(t, pts, NoiseModel::none(), 1);
    const auto noisy = generate_labels(t, pts, NoiseModel::uniform(0.3), 1);
    CHECK(clean.bound == doctest::Approx(t.sup_norm));
    CHECK(noisy.bound == doctest::Approx(t.sup_norm + 0.3));
    double max_dev = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        CHECK(clean.y[i] == doctest::Approx(t(pts[i])).epsilon(1e-13));
        CHECK(std::abs(noisy.y[i]) <= noisy.bound);
        max_dev = std::max(max_dev, std::abs(noisy.y[i] - clean.y[i]));
    }
    CHECK(max_dev <= 0.3);
    CHECK(max_dev > 0.25);
}

TEST_CASE("simulation error paths") {
    CHECK_THROWS_AS(make_target(1.0, 8, 1), DomainError);
    CHECK_THROWS_AS(make_target(2.0, 0, 1), PreconditionError);
    CHECK_THROWS_AS(make_target(2.0, 8, 1, TargetShape::zonal, 0.0), PreconditionError);
    CHECK_THROWS_AS(sample_design(SamplingDesign::uniform(), 0, 1), PreconditionError);
    CHECK_THROWS_AS(sample_design(SamplingDesign::cap_biased(-1.0), 5, 1), PreconditionError);
    const auto t = make_target(2.0, 4, 1);
    const auto pts = sample_design(SamplingDesign::uniform(), 3, 1);
    CHECK_THROWS_AS(generate_labels(t, pts, NoiseModel::uniform(-0.1), 1), PreconditionError);
    CHECK_THROWS_AS(parse_design_kind("gaussian"), PreconditionError);
    CHECK_THROWS_AS(parse_target_shape("spiky"), PreconditionError);
    CHECK(parse_design_kind("vmf") == DesignKind::cap_biased);
    CHECK(SamplingDesign::cap_biased(2).describe() == "cap-biased(2)");
}
