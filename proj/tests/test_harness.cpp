#include "needlet/harness.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>

using namespace needlet;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.m_grid = {64, 128, 256, 512};
    cfg.trials = 5;
    cfg.target_band = 24;
    cfg.seed = 17;
    return cfg;
}

bool same_records(const std::vector<ExperimentRecord>& a, const std::vector<ExperimentRecord>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].m != b[i].m || a[i].seed != b[i].seed || a[i].n != b[i].n || a[i].lambda != b[i].lambda ||
            a[i].error != b[i].error || a[i].error_untruncated != b[i].error_untruncated)
            return false;
    }
    return true;
}

}  // namespace

TEST_CASE("degree rule n = floor(c0 eps^{-1/(2r)})") {
    // r = 2, d = 2: eps = m^{-2/3}, so n = floor(m^{1/6}).
    CHECK(choose_n(target_rate(64, 2, 2), 2, 1).n == 2);
    CHECK(choose_n(target_rate(729, 2, 2), 2, 1).n == 3);
    CHECK(choose_n(target_rate(4096, 2, 2), 2, 1).n == 4);
    CHECK(choose_n(target_rate(4095, 2, 2), 2, 1).n == 3);
    CHECK(choose_n(target_rate(4096, 2, 2), 2, 2.5).n == 10);
    CHECK_FALSE(choose_n(0.01, 2, 1).clamped);
    const auto hi = choose_n(1e-30, 2, 1);
    CHECK(hi.n == kMaxDegree);
    CHECK(hi.clamped);
    const auto lo = choose_n(10.0, 2, 0.5);
    CHECK(lo.n == 1);
    CHECK(lo.clamped);
    CHECK_THROWS_AS(choose_n(0.0, 2, 1), PreconditionError);
    CHECK_THROWS_AS(choose_n(0.1, 1.0, 1), PreconditionError);
}

TEST_CASE("rates and lambda rules") {
    CHECK(target_rate(1000, 2, 2) == doctest::Approx(0.01));
    CHECK(target_rate(128, 1.5, 3) == doctest::Approx(std::pow(128.0, -0.5)));
    auto cfg = small_config();
    const double eps = target_rate(256, 2, 2);
    cfg.lambda_rule = LambdaRule::scaled(3.0);
    CHECK(lambda_for(cfg, 256, 2.0) == doctest::Approx(3.0 * eps / 4.0));
    cfg.method = Method::lq;
    cfg.q = 0.5;
    CHECK(lambda_for(cfg, 256, 2.0) == doctest::Approx(3.0 * std::pow(256.0, -0.5) * eps));
    cfg.method = Method::krr;
    cfg.lambda_rule = LambdaRule::zero();
    CHECK(lambda_for(cfg, 256, 2.0) == 0.0);
}

TEST_CASE("rate fit recovers exact power laws and a t-based interval") {
    const std::vector<double> m{100, 200, 400, 800, 1600};
    std::vector<double> e;
    for (double x : m) e.push_back(3.0 * std::pow(x, -0.6));
    const auto f = rate_fit(m, e);
    CHECK(f.slope == doctest::Approx(-0.6).epsilon(1e-12));
    CHECK(std::exp(f.intercept) == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(f.half_width < 1e-10);
    CHECK(f.cells == 5);

    // Known residuals: log e = -0.5 log m + (+d, -d, -d, +d) with log m = 0, 1, 2, 3.
    const double d = 0.1;
    const std::vector<double> m2{1.0, std::exp(1.0), std::exp(2.0), std::exp(3.0)};
    const std::vector<double> e2{std::exp(d), std::exp(-0.5 - d), std::exp(-1.0 - d), std::exp(-1.5 + d)};
    const auto g = rate_fit(m2, e2);
    CHECK(g.slope == doctest::Approx(-0.5).epsilon(1e-12));
    // residual SS = 4 d^2, s^2 = 4 d^2 / 2, Sxx = 5, t_{0.975, 2} = 4.302652729911275
    CHECK(g.half_width == doctest::Approx(4.302652729911275 * std::sqrt(2 * d * d / 5.0)).epsilon(1e-9));

    CHECK_THROWS_AS(rate_fit({1, 2, 3}, {1, 2, 3}), InsufficientData);
    CHECK_THROWS_AS(rate_fit({2, 2, 2, 2}, {1, 2, 3, 4}), InsufficientData);
    CHECK_THROWS_AS(rate_fit({1, 2, 3, 4}, {1, 0, 3, 4}), PreconditionError);
    CHECK_THROWS_AS(rate_fit({1, 2, 3, 4}, {1, 2, 3}), PreconditionError);
    std::vector<CurveCell> cells(4);
    for (int i = 0; i < 4; ++i) cells[i] = {.m = 100 << i, .median = 1.0 / (i + 1), .valid = i != 2};
    CHECK_THROWS_AS(rate_fit(cells), InsufficientData);  // only 3 valid
}

TEST_CASE("learning curve: record count, determinism, thread independence") {
    const auto cfg = small_config();
    const auto a = learning_curve(cfg);
    const auto b = learning_curve(cfg);
    const auto c = learning_curve(cfg, {.jobs = 3});
    CHECK(a.records.size() + a.failures.size() == cfg.m_grid.size() * cfg.trials);
    CHECK(a.failures.empty());
    CHECK(same_records(a.records, b.records));
    CHECK(same_records(a.records, c.records));
    REQUIRE(a.cells.size() == 4);
    for (const auto& cell : a.cells) {
        CHECK(cell.valid);
        CHECK(cell.q1 <= cell.median);
        CHECK(cell.median <= cell.q3);
        CHECK(cell.n == choose_n(cell.epsilon, 2, 1).n);
    }
    for (const auto& r : a.records) {
        CHECK(r.error >= 0.0);
        CHECK(r.error <= r.error_untruncated + 1e-12);
        CHECK(r.lambda > 0.0);
    }
    CHECK(a.target_norm_squared > 0.0);
    auto other = cfg;
    other.seed = 18;
    CHECK_FALSE(same_records(a.records, learning_curve(other).records));
}

TEST_CASE("trial data do not depend on the lambda rule or the grid") {
    auto cfg = small_config();
    const auto a = learning_curve(cfg);
    cfg.lambda_rule = LambdaRule::scaled(4.0);
    cfg.m_grid = {128};
    const auto b = learning_curve(cfg);
    // same seeds for (m, trial), hence paired samples
    for (int t = 0; t < cfg.trials; ++t) CHECK(a.records[cfg.trials + t].seed == b.records[t].seed);
}

TEST_CASE("lambda sweep pairs data and reports ratios against c = 1") {
    auto cfg = small_config();
    const auto s = lambda_sweep(cfg, {0.0, 10.0});
    REQUIRE(s.keys.size() == 3);  // c = 1 added
    for (const auto& row : s.rows) {
        CHECK(row.ratio.at(1.0) == 1.0);
        CHECK(row.median.count(0.0));
        CHECK(row.ratio.at(10.0) == doctest::Approx(row.median.at(10.0) / row.median.at(1.0)));
    }
    cfg.method = Method::lq;
    CHECK_THROWS_AS(lambda_sweep(cfg, {1.0}), PreconditionError);
    CHECK_THROWS_AS(lambda_sweep(small_config(), {}), PreconditionError);
    CHECK_THROWS_AS(lambda_sweep(small_config(), {-1.0}), PreconditionError);
}

TEST_CASE("q sweep reports sparsity and pairwise ratios") {
    auto cfg = small_config();
    cfg.method = Method::lq;
    cfg.m_grid = {128, 256};
    const auto s = q_sweep(cfg, {1.0, 2.0});
    REQUIRE(s.rows.size() == 2);
    for (const auto& row : s.rows) {
        CHECK(row.nonzero.at(1.0) < row.nonzero.at(2.0));
        const double hi = std::max(row.median.at(1.0), row.median.at(2.0));
        const double lo = std::min(row.median.at(1.0), row.median.at(2.0));
        CHECK(row.max_pairwise_ratio == doctest::Approx(hi / lo));
    }
    const auto single = q_sweep(cfg, {2.0});
    for (const auto& row : single.rows) CHECK(row.max_pairwise_ratio == 1.0);
    CHECK_THROWS_AS(q_sweep(cfg, {}), PreconditionError);
}

TEST_CASE("phase transition needs 50 trials and counts exceedances") {
    auto cfg = small_config();
    CHECK_THROWS_AS(phase_transition(cfg, 0.01), PreconditionError);
    cfg.trials = 50;
    cfg.m_grid = {32, 1024};
    const auto pt = phase_transition(cfg, 0.02);
    REQUIRE(pt.rows.size() == 2);
    int exceed = 0;
    for (const auto& r : pt.curve.records) exceed += r.m == 32 && r.error > 0.02;
    CHECK(pt.rows[0].failure_probability == doctest::Approx(exceed / 50.0));
    CHECK(pt.rows[0].failure_probability >= pt.rows[1].failure_probability);
    // noise-free, one huge sample: never fails at a loose epsilon
    cfg.sigma = 0.0;
    cfg.m_grid = {2048};
    CHECK(phase_transition(cfg, 0.05).rows[0].failure_probability == 0.0);
    CHECK_THROWS_AS(phase_transition(cfg, 0.0), PreconditionError);
}

TEST_CASE("approximation error of K_n * f against a direct spectral sum") {
    const auto t = make_target(2.0, 64, 3);
    const std::vector<int> ns{4, 8, 16, 24};
    const auto fit = approximation_exponent(t.f, ns);
    const auto w = make_window(WindowProfile::smooth_bump);
    for (std::size_t i = 0; i < ns.size(); ++i) {
        double acc = 0.0;
        for (int k = 0; k <= 64; ++k) acc += std::pow((1.0 - w(double(k) / ns[i])) * t.f.at(k, 0), 2);
        CHECK(fit.error[i] == doctest::Approx(std::sqrt(acc)).epsilon(1e-10));
    }
    CHECK(fit.fit.slope < -1.5);
}

TEST_CASE("config validation") {
    auto bad = [](auto mutate) {
        auto cfg = small_config();
        mutate(cfg);
        return cfg;
    };
    CHECK_THROWS_AS(bad([](auto& c) { c.d = 3; }).validate(), UnsupportedDimension);
    CHECK_THROWS_AS(bad([](auto& c) { c.r = 1.0; }).validate(), PreconditionError);
    CHECK_THROWS_AS(bad([](auto& c) { c.trials = 4; }).validate(), PreconditionError);
    CHECK_THROWS_AS(bad([](auto& c) { c.m_grid = {128, 128}; }).validate(), PreconditionError);
    CHECK_THROWS_AS(bad([](auto& c) { c.m_grid = {}; }).validate(), PreconditionError);
    CHECK_THROWS_AS(bad([](auto& c) { c.sigma = -1; }).validate(), PreconditionError);
    CHECK_THROWS_AS(bad([](auto& c) { c.method = Method::lq, c.q = 3; }).validate(), PreconditionError);
    CHECK_THROWS_AS(bad([](auto& c) { c.method = Method::lq, c.lambda_rule = LambdaRule::zero(); }).validate(),
                    PreconditionError);
    CHECK_NOTHROW(small_config().validate());
    CHECK(parse_method("lq") == Method::lq);
    CHECK_THROWS_AS(parse_method("svm"), PreconditionError);
}

TEST_CASE("NEEDLET_SEED override") {
    ::unsetenv("NEEDLET_SEED");
    CHECK_FALSE(seed_from_environment().has_value());
    ::setenv("NEEDLET_SEED", "18446744073709551615", 1);
    CHECK(*seed_from_environment() == 18446744073709551615ULL);
    ::setenv("NEEDLET_SEED", "12abc", 1);
    CHECK_THROWS_AS(seed_from_environment(), PreconditionError);
    ::setenv("NEEDLET_SEED", "-3", 1);
    CHECK_THROWS_AS(seed_from_environment(), PreconditionError);
    ::setenv("NEEDLET_SEED", "99999999999999999999", 1);
    CHECK_THROWS_AS(seed_from_environment(), PreconditionError);
    ::unsetenv("NEEDLET_SEED");
}
