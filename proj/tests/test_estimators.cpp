#include "needlet/estimators.hpp"
#include "needlet/simulation.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

using namespace needlet;

namespace {

Dataset make_data(int m, int band, double sigma, std::uint64_t seed, SamplingDesign design = SamplingDesign::uniform()) {
    const auto target = make_target(2.0, band, seed);
    Dataset d;
    d.x = sample_design(design, m, derive_seed(seed, {1}));
    const auto labels = generate_labels(target, d.x, NoiseModel::uniform(sigma), derive_seed(seed, {2}));
    d.y = labels.y;
    d.bound = labels.bound;
    return d;
}

Eigen::VectorXd vec(const std::vector<double>& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()); }

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    return (vec(a) - vec(b)).cwiseAbs().maxCoeff();
}

// Exact minimizer over one coordinate of (1/m)||r - c t||^2 + lambda |t|.
double lasso_1d(const Eigen::VectorXd& r, const Eigen::VectorXd& c, double lambda) {
    const double m = static_cast<double>(r.size());
    const double cc = c.squaredNorm(), cr = c.dot(r);
    const double thr = 0.5 * m * lambda;
    if (cr > thr) return (cr - thr) / cc;
    if (cr < -thr) return (cr + thr) / cc;
    return 0.0;
}

}  // namespace

TEST_CASE("KRR matches a direct solve of (A + m lambda I) a = y on both backends") {
    for (int m : {30, 200}) {  // below and above dim Pi_{2n-1} = 49
        const auto data = make_data(m, 12, 0.1, 3);
        NeedletKernel K(4, 2);
        const Eigen::MatrixXd A = gram_serial(K, data.x);
        for (double lambda : {1e-3, 0.05}) {
            const Eigen::VectorXd a = (A + m * lambda * Eigen::MatrixXd::Identity(m, m)).ldlt().solve(vec(data.y));
            const std::vector<double> expect(a.data(), a.data() + m);
            for (auto be : {Backend::dense, Backend::factored}) {
                const auto f = krr_fit(data, K, lambda, be);
                CHECK(max_abs_diff(f.coeffs(), expect) <= 1e-8 * std::max(1.0, a.cwiseAbs().maxCoeff()));
            }
        }
    }
}

TEST_CASE("lambda = 0 gives the least-norm interpolant") {
    const auto data = make_data(120, 10, 0.2, 8);
    NeedletKernel K(3, 2);
    const Eigen::MatrixXd A = gram_serial(K, data.x);
    const Eigen::VectorXd a = A.completeOrthogonalDecomposition().pseudoInverse() * vec(data.y);
    const Eigen::VectorXd fit = A * a;
    for (auto be : {Backend::dense, Backend::factored}) {
        const auto f = krr_fit(data, K, 0.0, be);
        const Eigen::VectorXd got = A * vec(f.coeffs());
        CHECK((got - fit).cwiseAbs().maxCoeff() < 1e-8);
        CHECK(vec(f.coeffs()).norm() == doctest::Approx(a.norm()).epsilon(1e-6));
    }
}

TEST_CASE("q = 2 matches the normal equations (A^T A + m lambda I) a = A^T y") {
    for (int m : {30, 150}) {
        const auto data = make_data(m, 12, 0.2, 4);
        NeedletKernel K(4, 2);
        const Eigen::MatrixXd A = gram_serial(K, data.x);
        const double lambda = 0.01;
        const Eigen::VectorXd a =
            (A.transpose() * A + m * lambda * Eigen::MatrixXd::Identity(m, m)).ldlt().solve(A.transpose() * vec(data.y));
        for (auto be : {Backend::dense, Backend::factored}) {
            LqOptions opts;
            opts.backend = be;
            const auto f = lq_fit(data, K, lambda, 2.0, opts);
            CHECK(max_abs_diff(f.coeffs(), std::vector<double>(a.data(), a.data() + m)) <= 1e-8);
            CHECK(f.report().solver == "lq-closed-form");
            CHECK(f.report().objective ==
                  doctest::Approx(lq_objective(data, K, f.coeffs(), lambda, 2.0)).epsilon(1e-12));
        }
        // coefficient ridge is not KRR
        CHECK(max_abs_diff(lq_fit(data, K, lambda, 2.0).coeffs(), krr_fit(data, K, lambda).coeffs()) > 1e-3);
    }
}

TEST_CASE("q = 1 matches a brute-force search on a three-point instance") {
    const auto data = make_data(3, 6, 0.3, 21);
    NeedletKernel K(1, 2);
    const Eigen::MatrixXd A = gram_serial(K, data.x);
    const Eigen::VectorXd y = vec(data.y);
    for (double lambda : {1e-3, 0.02, 0.2}) {
        // Grid over (a0, a1) with zooming; a2 solved exactly.
        const double span0 = 4.0 * (A.ldlt().solve(y)).cwiseAbs().maxCoeff() + 1.0;
        double best = std::numeric_limits<double>::infinity(), c0 = 0.0, c1 = 0.0;
        double h = span0;
        for (int zoom = 0; zoom < 14; ++zoom) {
            const double b0 = c0, b1 = c1;
            for (int i = -40; i <= 40; ++i)
                for (int j = -40; j <= 40; ++j) {
                    const double a0 = b0 + h * i / 40.0, a1 = b1 + h * j / 40.0;
                    const Eigen::VectorXd r = y - A.col(0) * a0 - A.col(1) * a1;
                    const double a2 = lasso_1d(r, A.col(2), lambda);
                    const double J = (r - A.col(2) * a2).squaredNorm() / 3.0 +
                                     lambda * (std::abs(a0) + std::abs(a1) + std::abs(a2));
                    if (J < best) best = J, c0 = a0, c1 = a1;
                }
            h /= 8.0;
        }
        for (auto be : {Backend::dense, Backend::factored}) {
            LqOptions opts;
            opts.backend = be;
            const auto f = lq_fit(data, K, lambda, 1.0, opts);
            const double J = lq_objective(data, K, f.coeffs(), lambda, 1.0);
            CHECK(std::abs(J - best) <= 1e-4);
            CHECK(J <= best + 1e-9);
        }
    }
}

TEST_CASE("q = 1 solution satisfies the subgradient optimality conditions") {
    const int m = 80;
    const auto data = make_data(m, 10, 0.2, 5);
    NeedletKernel K(2, 2);
    const double lambda = 5e-3;
    LqOptions opts;
    opts.tolerance = 1e-14;
    const auto f = lq_fit(data, K, lambda, 1.0, opts);
    REQUIRE(f.report().converged);
    const Eigen::MatrixXd A = gram_serial(K, data.x);
    const Eigen::VectorXd a = vec(f.coeffs());
    const Eigen::VectorXd g = (2.0 / m) * A * (A * a - vec(data.y));
    for (int i = 0; i < m; ++i) {
        if (a[i] != 0.0) {
            CHECK(g[i] == doctest::Approx(-lambda * (a[i] > 0 ? 1.0 : -1.0)).epsilon(1e-3));
        } else {
            CHECK(std::abs(g[i]) <= lambda * (1 + 1e-3));
        }
    }
}

TEST_CASE("q = 1 support reduction keeps the objective and reaches a vertex") {
    const int m = 300;
    const auto data = make_data(m, 10, 0.2, 6);
    NeedletKernel K(2, 2);  // rank dim Pi_3 = 16
    const double lambda = 2e-3;
    LqOptions plain;
    plain.reduce_support = false;
    const auto dense_sol = lq_fit(data, K, lambda, 1.0, plain);
    const auto sparse_sol = lq_fit(data, K, lambda, 1.0);
    const double J0 = lq_objective(data, K, dense_sol.coeffs(), lambda, 1.0);
    const double J1 = lq_objective(data, K, sparse_sol.coeffs(), lambda, 1.0);
    CHECK(J1 == doctest::Approx(J0).epsilon(1e-10));
    CHECK(count_nonzero(sparse_sol, 0.0) <= 17);
    CHECK(sparse_sol.report().support_removed > 0);
    CHECK(count_nonzero(dense_sol) > count_nonzero(sparse_sol));
    // Fitted values coincide: A a is constant on the optimal face.
    const auto p0 = dense_sol.evaluate(data.x), p1 = sparse_sol.evaluate(data.x);
    CHECK(max_abs_diff(p0, p1) < 1e-6);
}

TEST_CASE("IRLS decreases the objective monotonically for q < 1 and q in (1, 2)") {
    const auto data = make_data(100, 10, 0.2, 7);
    NeedletKernel K(3, 2);
    for (double q : {0.5, 1.5}) {
        LqOptions opts;
        opts.record_history = true;
        const auto f = lq_fit(data, K, 1e-3, q, opts);
        CHECK(f.report().solver == "lq-irls");
        const auto& h = f.report().objective_history;
        REQUIRE(h.size() >= 2);
        for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i] <= h[i - 1] * (1 + 1e-12));
        CHECK(f.report().objective == doctest::Approx(lq_objective(data, K, f.coeffs(), 1e-3, q)).epsilon(1e-9));
    }
    LqOptions once;
    once.max_iterations = 1;
    once.tolerance = 0.0;
    const auto f = lq_fit(data, K, 1e-3, 0.5, once);
    CHECK_FALSE(f.report().converged);
    CHECK_FALSE(f.report().warning.empty());
}

TEST_CASE("spectral form agrees with pointwise evaluation") {
    const auto data = make_data(60, 8, 0.1, 9);
    NeedletKernel K(3, 2);
    const auto f = krr_fit(data, K, 1e-2);
    const auto s = f.spectral();
    CHECK(s.band_limit() <= K.max_degree());
    for (const auto& p : sample_design(SamplingDesign::uniform(), 20, 10)) CHECK(s(p) == doctest::Approx(f.raw(p)).epsilon(1e-10));
}

TEST_CASE("truncation never increases the error when |f_rho| <= M") {
    const auto quad = product_rule(60);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto target = make_target(2.0, 16, seed);
        auto data = make_data(40, 16, 0.3, seed);
        NeedletKernel K(6, 2);
        const auto f = krr_fit(data, K, 0.0);  // interpolation overshoots
        const auto ft = truncate(f, data.bound);
        const double e = generalization_error(f, target.f, quad), et = generalization_error(ft, target.f, quad);
        CHECK(et <= e + 1e-12);
        ErrorEvaluator ev(target.f, quad, 30);
        CHECK(ev(f.spectral(), data.bound) <= ev(f.spectral(), std::nullopt) + 1e-12);
    }
    CHECK(clamp_to(3.0, 2.0) == 2.0);
    CHECK(clamp_to(-3.0, 2.0) == -2.0);
    CHECK(clamp_to(0.5, 2.0) == 0.5);
}

TEST_CASE("error evaluators agree: spectral, quadrature, Monte Carlo") {
    const auto target = make_target(2.0, 10, 2, TargetShape::random);
    const auto data = make_data(150, 10, 0.2, 2);
    NeedletKernel K(4, 2);
    const auto f = krr_fit(data, K, 1e-3);
    const auto quad = product_rule(2 * 10 + 2 * K.max_degree());
    const double spectral = spectral_error(f.spectral(), target.f);
    CHECK(generalization_error(f, target.f, quad) == doctest::Approx(spectral).epsilon(1e-10));
    ErrorEvaluator ev(target.f, quad, K.max_degree());
    CHECK(ev(f.spectral(), std::nullopt) == doctest::Approx(spectral).epsilon(1e-10));
    CHECK(ev.target_norm_squared() == doctest::Approx(std::pow(target.f.l2_norm(), 2) / (4 * std::numbers::pi)));
    const auto test = sample_design(SamplingDesign::uniform(), 40000, 99);
    const auto mc = generalization_error_mc(f, [&](const SpherePoint& x) { return target(x); }, test);
    CHECK(std::abs(mc.value - spectral) < 5 * mc.standard_error);
    // non-uniform design: weight by the vMF density
    const auto design = SamplingDesign::cap_biased(2.0);
    const Density rho = [&](const SpherePoint& x) { return design.density(x); };
    ErrorEvaluator evr(target.f, product_rule(60), K.max_degree(), rho);
    const auto test_r = sample_design(design, 40000, 98);
    const auto mcr = generalization_error_mc(f, [&](const SpherePoint& x) { return target(x); }, test_r);
    CHECK(std::abs(evr(f.spectral(), std::nullopt) - mcr.value) < 5 * mcr.standard_error);
}

TEST_CASE("helpers: penalty, nonzero count, empirical error") {
    NeedletKernel K(2, 2);
    const std::vector<SpherePoint> c{SpherePoint(0, 0, 1), SpherePoint(1, 0, 0), SpherePoint(0, 1, 0)};
    KernelExpansion f(K, c, {1.0, -2.0, 0.0});
    CHECK(penalty_value(f, 1.0) == 3.0);
    CHECK(penalty_value(f, 2.0) == 5.0);
    CHECK(penalty_value(f, 0.5) == doctest::Approx(1.0 + std::sqrt(2.0)));
    CHECK(count_nonzero(f) == 2);
    const std::vector<double> y{f.raw(c[0]) + 1.0, f.raw(c[1]), f.raw(c[2])};
    CHECK(empirical_error(f, c, y) == doctest::Approx(1.0 / 3.0));
    const auto t = f.truncated(0.1);
    CHECK(std::abs(t(c[0])) <= 0.1);
    CHECK(t.raw(c[0]) == f.raw(c[0]));
}

TEST_CASE("estimator error paths") {
    auto data = make_data(20, 6, 0.1, 1);
    NeedletKernel K(2, 2);
    CHECK_THROWS_AS(krr_fit(data, K, -1.0), DomainError);
    CHECK_THROWS_AS(lq_fit(data, K, 0.0, 1.0), DomainError);
    CHECK_THROWS_AS(lq_fit(data, K, 0.1, 0.0), DomainError);
    CHECK_THROWS_AS(lq_fit(data, K, 0.1, 2.5), DomainError);
    CHECK_THROWS_AS(krr_fit(data, NeedletKernel(2, 3), 0.1, Backend::factored), std::exception);
    auto bad = data;
    bad.y[0] = 10 * bad.bound;
    CHECK_THROWS_AS(krr_fit(bad, K, 0.1), PreconditionError);
    bad = data;
    bad.y.pop_back();
    CHECK_THROWS_AS(krr_fit(bad, K, 0.1), PreconditionError);
    CHECK_THROWS_AS(krr_fit(Dataset{}, K, 0.1), PreconditionError);
    CHECK_THROWS_AS(KernelExpansion(K, data.x, {1.0}), PreconditionError);
    CHECK_THROWS_AS(truncate(krr_fit(data, K, 0.1), 0.0), PreconditionError);
    const auto target = make_target(2.0, 6, 1);
    ErrorEvaluator ev(target.f, product_rule(10), 3);
    CHECK_THROWS_AS(ev(SpectralFunction(5), std::nullopt), PreconditionError);
    CHECK_THROWS_AS(generalization_error_mc(krr_fit(data, K, 0.1), [](const SpherePoint&) { return 0.0; },
                                            std::vector<SpherePoint>{SpherePoint(0, 0, 1)}),
                    PreconditionError);
}
