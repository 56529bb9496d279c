#include "needlet/kernel.hpp"
#include "needlet/quadrature.hpp"
#include "needlet/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace needlet;
using std::numbers::pi;

namespace {

double eta(int k, int n) { return make_window(WindowProfile::smooth_bump)(static_cast<double>(k) / n); }

std::vector<SpherePoint> random_points(int count, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> g;
    std::vector<SpherePoint> pts;
    for (int i = 0; i < count; ++i) pts.emplace_back(g(rng), g(rng), g(rng));
    return pts;
}

SpectralFunction random_poly(int band, Rng& rng) {
    std::normal_distribution<double> g;
    SpectralFunction f(band);
    for (double& c : f.coeffs()) c = g(rng);
    return f;
}

// Legendre by Bonnet's recursion, written out separately from the library.
double bonnet(int k, double t) {
    double p0 = 1.0, p1 = t;
    if (k == 0) return p0;
    for (int j = 1; j < k; ++j) {
        const double p2 = ((2.0 * j + 1.0) * t * p1 - j * p0) / (j + 1.0);
        p0 = p1;
        p1 = p2;
    }
    return p1;
}

}  // namespace

TEST_CASE("S^2 kernel equals the explicit Legendre series") {
    for (int n : {1, 3, 8, 16}) {
        NeedletKernel K(n, 2);
        CHECK(K.max_degree() == 2 * n - 1);
        for (double t : {-1.0, -0.6, 0.0, 0.3, 0.99, 1.0}) {
            double s = 0.0;
            for (int k = 0; k < 2 * n; ++k) s += eta(k, n) * (2 * k + 1) / (4 * pi) * bonnet(k, t);
            CHECK(K(t) == doctest::Approx(s).epsilon(1e-12));
            CHECK(K.eval_direct(t) == doctest::Approx(s).epsilon(1e-12));
        }
        CHECK(K.diagonal() == doctest::Approx(K(1.0)).epsilon(1e-13));
    }
}

TEST_CASE("S^1 and S^3 kernels match their trigonometric closed forms") {
    const int n = 6;
    NeedletKernel K1(n, 1), K3(n, 3);
    for (double th : {0.1, 0.7, 1.9, 3.0}) {
        double s1 = 0.0, s3 = 0.0;
        for (int k = 0; k < 2 * n; ++k) {
            s1 += eta(k, n) * (k == 0 ? 1.0 : 2.0) / (2 * pi) * std::cos(k * th);
            // D_k^3 = (k+1)^2, |S^3| = 2 pi^2, P_k^4(cos th) = sin((k+1) th) / ((k+1) sin th).
            s3 += eta(k, n) * (k + 1.0) * (k + 1.0) / (2 * pi * pi) * std::sin((k + 1) * th) / ((k + 1) * std::sin(th));
        }
        CHECK(K1(std::cos(th)) == doctest::Approx(s1).epsilon(1e-12));
        CHECK(K3(std::cos(th)) == doctest::Approx(s3).epsilon(1e-12));
    }
}

TEST_CASE("c_0 = 1/|S^d| and coefficients are non-negative") {
    for (int d : {1, 2, 3}) {
        NeedletKernel K(5, d);
        CHECK(K.coeffs()[0] == doctest::Approx(1.0 / sphere_area(d)));
        for (double c : K.coeffs()) CHECK(c >= 0.0);
    }
}

TEST_CASE("gram factorizes through the harmonic features") {
    NeedletKernel K(4, 2);
    const auto pts = random_points(40, 3);
    const Eigen::MatrixXd A = gram(K, pts);
    const Eigen::MatrixXd F = kernel_features(K, pts);
    CHECK((A - F * F.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((A - A.transpose()).cwiseAbs().maxCoeff() == 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A);
    CHECK(eig.eigenvalues().minCoeff() > -1e-10 * eig.eigenvalues().maxCoeff());
    // rank = min(m, dim Pi_{2n-1}): eta > 0 on every degree below 2n
    int rank = 0;
    for (int i = 0; i < eig.eigenvalues().size(); ++i) rank += eig.eigenvalues()[i] > 1e-10 * eig.eigenvalues().maxCoeff();
    CHECK(rank == std::min<int>(40, static_cast<int>(harmonic_count(K.max_degree()))));
}

TEST_CASE("parallel and serial gram agree bitwise") {
    NeedletKernel K(5, 2);
    const auto pts = random_points(123, 9);
    CHECK(gram(K, pts) == gram_serial(K, pts));
    CHECK(harmonic_matrix(7, pts) == harmonic_matrix_serial(7, pts));
    const auto other = random_points(17, 10);
    const Eigen::MatrixXd B = cross_gram(K, pts, other);
    CHECK(B(5, 3) == doctest::Approx(K(pts[5].dot(other[3]))).epsilon(1e-14));
}

TEST_CASE("reproducing property on Pi_n") {
    Rng rng(1);
    for (int n : {2, 4}) {
        NeedletKernel K(n, 2);
        const auto quad = product_rule(n + K.max_degree());
        const auto P = random_poly(n, rng);
        for (const auto& x : random_points(5, 77)) {
            const double v = convolve_pointwise(K, [&](const SpherePoint& y) { return P(y); }, quad, x, n);
            CHECK(v == doctest::Approx(P(x)).epsilon(1e-10));
        }
        const auto Q = convolve(K, P);
        for (std::size_t i = 0; i < P.coeffs().size(); ++i) CHECK(Q.coeffs()[i] == doctest::Approx(P.coeffs()[i]));
    }
}

TEST_CASE("convolution damps the transition band by eta") {
    NeedletKernel K(4, 2);
    SpectralFunction f = SpectralFunction::single(6, -2, 2.0).resized(9);
    const auto g = convolve(K, f);
    CHECK(g.at(6, -2) == doctest::Approx(2.0 * eta(6, 4)));
    CHECK(g.band_limit() <= K.max_degree());
}

TEST_CASE("RKHS norm of K_n * h is bounded by the L^2 norm of h") {
    Rng rng(5);
    NeedletKernel K(4, 2);
    for (int trial = 0; trial < 10; ++trial) {
        const auto h = random_poly(2 * K.n() + 3, rng);
        const auto Kh = convolve(K, h);
        const double rk = rkhs_inner(K, Kh, Kh), l2 = h.l2_norm();
        CHECK(rk <= l2 * l2 * (1 + 1e-12));
    }
}

TEST_CASE("a constant h saturates the bound at 4 pi M^2") {
    // ||h||_2^2 = 4 pi M^2 under surface measure, so ||K*h||_K^2 = 4 pi M^2 > M^2:
    // the plain M^2 bound only holds with the probability normalization of the measure.
    NeedletKernel K(4, 2);
    const double M = 0.7;
    SpectralFunction h(0);
    h.at(0, 0) = M * std::sqrt(4 * pi);
    const auto Kh = convolve(K, h);
    CHECK(rkhs_inner(K, Kh, Kh) == doctest::Approx(4 * pi * M * M));
}

TEST_CASE("localization ratio stays bounded in n") {
    std::vector<double> thetas;
    for (int i = 0; i <= 200; ++i) thetas.push_back(pi * i / 200);
    std::vector<double> maxima;
    for (int n : {8, 16, 32}) {
        NeedletKernel K(n, 2);
        double mx = 0.0;
        for (const auto& row : localization_profile(K, thetas, 4)) {
            CHECK(row.magnitude == doctest::Approx(std::abs(K(std::cos(row.theta)))));
            mx = std::max(mx, row.bound_ratio);
        }
        maxima.push_back(mx);
    }
    const auto [lo, hi] = std::minmax_element(maxima.begin(), maxima.end());
    CHECK(*hi / *lo < 4.0);
}

TEST_CASE("kernel error paths") {
    CHECK_THROWS_AS(NeedletKernel(0, 2), PreconditionError);
    CHECK_THROWS_AS(NeedletKernel(3, 4), UnsupportedDimension);
    NeedletKernel K(3, 2);
    CHECK_THROWS_AS(K(1.1), DomainError);
    CHECK_THROWS_AS(K(std::nan("")), DomainError);
    CHECK_THROWS_AS(K.weight(-1), PreconditionError);
    CHECK(K.weight(100) == 0.0);
    CHECK_THROWS_AS(SpectralFunction(2, std::vector<double>(5)), PreconditionError);
    CHECK_THROWS_AS(SpectralFunction::single(2, 3), PreconditionError);
    // a coefficient where eta vanishes has no RKHS norm
    const auto f = SpectralFunction::single(2 * K.n(), 0);
    CHECK_THROWS_AS(rkhs_inner(K, f, f), DegenerateDegree);
    CHECK_THROWS_AS(convolve(NeedletKernel(3, 3), f), UnsupportedDimension);
    const std::vector<double> bad{-0.1};
    CHECK_THROWS_AS(localization_profile(K, bad, 4), PreconditionError);
    const auto quad = product_rule(3);
    CHECK_THROWS_AS(convolve_pointwise(K, [](const SpherePoint&) { return 1.0; }, quad, SpherePoint(0, 0, 1), 2),
                    PreconditionError);
    const std::vector<SpherePoint> wrong_dim{SpherePoint(std::vector<double>{1.0, 0.0})};
    CHECK_THROWS_AS(gram(K, wrong_dim), PreconditionError);
    const auto negative = AdmissibleWindow::from_function("neg", [](double t) { return t < 1 ? 1.0 : -0.5; });
    CHECK_THROWS_AS(NeedletKernel(3, 2, negative), PreconditionError);
}
