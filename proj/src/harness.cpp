#include "needlet/harness.hpp"

#include "needlet/parallel.hpp"
#include "needlet/quadrature.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <memory>
#include <set>

namespace needlet {

std::string_view to_string(Method m) { return m == Method::krr ? "krr" : "lq"; }

Method parse_method(std::string_view s) {
    if (s == "krr") return Method::krr;
    if (s == "lq") return Method::lq;
    throw PreconditionError("unknown method: " + std::string(s));
}

void ExperimentConfig::validate() const {
    if (d != 2) throw UnsupportedDimension("experiments run on S^2 only");
    if (!(r > 1.0)) throw PreconditionError("smoothness r must exceed 1");
    if (!(sigma >= 0.0)) throw PreconditionError("noise level must be non-negative");
    if (!(c0 > 0.0)) throw PreconditionError("c0 must be positive");
    if (trials < 5) throw PreconditionError("at least 5 trials per m are required");
    if (m_grid.empty()) throw PreconditionError("m grid is empty");
    for (std::size_t i = 0; i < m_grid.size(); ++i) {
        if (m_grid[i] < 1) throw PreconditionError("sample sizes must be positive");
        if (i > 0 && m_grid[i] <= m_grid[i - 1]) throw PreconditionError("m grid must be strictly increasing");
    }
    if (target_band < 1) throw PreconditionError("target band must be at least 1");
    if (design.kind == DesignKind::cap_biased && !(design.kappa >= 0.0)) {
        throw PreconditionError("vMF concentration must be non-negative");
    }
    if (lambda_rule.kind == LambdaRule::Kind::scaled && !(lambda_rule.c >= 0.0)) {
        throw PreconditionError("lambda multiplier must be non-negative");
    }
    if (method == Method::lq) {
        if (!(q > 0.0 && q <= 2.0)) throw PreconditionError("q must lie in (0, 2]");
        if (lambda_rule.kind == LambdaRule::Kind::zero || lambda_rule.c == 0.0) {
            throw PreconditionError("l^q fits need a positive lambda");
        }
    }
}

DegreeChoice choose_n(double epsilon, double r, double c0) {
    if (!(epsilon > 0.0)) throw PreconditionError("epsilon must be positive");
    if (!(r > 1.0)) throw PreconditionError("smoothness r must exceed 1");
    // Relative slack so exact powers (e.g. 4096^{1/6} = 4) are not floored down by rounding.
    const double raw = std::floor(c0 * std::pow(epsilon, -1.0 / (2.0 * r)) * (1.0 + 1e-12));
    if (!(raw <= kMaxDegree)) return {kMaxDegree, true};
    if (raw < 1.0) return {1, true};
    return {static_cast<int>(raw), false};
}

double target_rate(int m, double r, int d) { return std::pow(static_cast<double>(m), -2.0 * r / (2.0 * r + d)); }

double lambda_for(const ExperimentConfig& cfg, int m, double M) {
    if (cfg.lambda_rule.kind == LambdaRule::Kind::zero) return 0.0;
    const double eps = target_rate(m, cfg.r, cfg.d);
    const double c = cfg.lambda_rule.c;
    if (cfg.method == Method::krr) return c * eps / (M * M);
    return c * std::pow(static_cast<double>(m), cfg.q - 1.0) * eps;
}

namespace {

double quantile(std::vector<double> v, double p) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    // Linear interpolation between order statistics (type 7).
    const double h = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

struct Evaluators {
    std::map<int, std::unique_ptr<ErrorEvaluator>> by_n;

    const ErrorEvaluator& at(int n) const { return *by_n.at(n); }
};

Density density_of(const SamplingDesign& design) {
    return [design](const SpherePoint& x) { return design.density(x); };
}

ExperimentRecord run_trial(const ExperimentConfig& cfg, const SobolevTarget& target, const ErrorEvaluator& eval, int m,
                           int n, int trial) {
    ExperimentRecord rec;
    rec.m = m;
    rec.trial = trial;
    rec.n = n;
    rec.q = cfg.method == Method::krr ? 2.0 : cfg.q;
    rec.seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(trial)});
    const auto t0 = std::chrono::steady_clock::now();
    try {
        Dataset data;
        data.x = sample_design(cfg.design, m, derive_seed(rec.seed, {1}));
        auto labels = generate_labels(target, data.x, NoiseModel::uniform(cfg.sigma), derive_seed(rec.seed, {2}));
        data.y = std::move(labels.y);
        data.bound = labels.bound;
        rec.lambda = lambda_for(cfg, m, data.bound);

        const NeedletKernel K(n, cfg.d, make_window(cfg.window));
        const KernelExpansion fit =
            cfg.method == Method::krr ? krr_fit(data, K, rec.lambda) : lq_fit(data, K, rec.lambda, cfg.q, cfg.lq);
        rec.iterations = fit.report().iterations;
        rec.nonzero = count_nonzero(fit);
        if (!fit.report().converged) {
            rec.ok = false;
            rec.message = fit.report().warning.empty() ? "solver did not converge" : fit.report().warning;
        }
        const SpectralFunction b = fit.spectral();
        rec.error_untruncated = eval(b, std::nullopt);
        rec.error = cfg.truncate ? eval(b, data.bound) : rec.error_untruncated;
    } catch (const std::exception& e) {
        rec.ok = false;
        rec.message = e.what();
    }
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

}  // namespace

LearningCurve learning_curve(const ExperimentConfig& cfg, const RunOptions& opts) {
    cfg.validate();
    LearningCurve out;
    out.config = cfg;
    const SobolevTarget target = make_target(cfg.r, cfg.target_band, derive_seed(cfg.seed, {0x7467ULL}), cfg.target_shape);

    std::vector<DegreeChoice> degrees;
    for (int m : cfg.m_grid) degrees.push_back(choose_n(target_rate(m, cfg.r, cfg.d), cfg.r, cfg.c0));

    // One quadrature per distinct n; it resolves the target and the fit
    // (whose band stops at 2n - 1) well past their joint degree.
    Evaluators evals;
    for (const auto& dc : degrees) {
        if (evals.by_n.count(dc.n)) continue;
        const int fit_band = 2 * dc.n - 1;
        auto quad = product_rule(2 * std::max(cfg.target_band, fit_band) + 16);
        evals.by_n[dc.n] = std::make_unique<ErrorEvaluator>(target.f, std::move(quad), fit_band, density_of(cfg.design));
    }
    out.target_norm_squared = evals.at(degrees.front().n).target_norm_squared();

    const int cells = static_cast<int>(cfg.m_grid.size());
    const int total = cells * cfg.trials;
    std::vector<ExperimentRecord> records(static_cast<std::size_t>(total));
    const int jobs = std::max(1, opts.jobs);
#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs)
    for (int idx = 0; idx < total; ++idx) {
        const int c = idx / cfg.trials;
        const int trial = idx % cfg.trials;
        const int n = degrees[static_cast<std::size_t>(c)].n;
        records[static_cast<std::size_t>(idx)] =
            run_trial(cfg, target, evals.at(n), cfg.m_grid[static_cast<std::size_t>(c)], n, trial);
    }

    for (int c = 0; c < cells; ++c) {
        CurveCell cell;
        cell.m = cfg.m_grid[static_cast<std::size_t>(c)];
        cell.n = degrees[static_cast<std::size_t>(c)].n;
        cell.n_clamped = degrees[static_cast<std::size_t>(c)].clamped;
        cell.epsilon = target_rate(cell.m, cfg.r, cfg.d);
        cell.attempted = cfg.trials;
        std::vector<double> errs, nnz;
        for (int t = 0; t < cfg.trials; ++t) {
            auto& rec = records[static_cast<std::size_t>(c * cfg.trials + t)];
            if (rec.ok) {
                errs.push_back(rec.error);
                nnz.push_back(rec.nonzero);
                out.records.push_back(rec);
            } else {
                out.failures.push_back(rec);
            }
        }
        cell.succeeded = static_cast<int>(errs.size());
        cell.valid = 5 * cell.succeeded >= 4 * cell.attempted;
        if (!errs.empty()) {
            cell.median = median(errs);
            cell.q1 = quantile(errs, 0.25);
            cell.q3 = quantile(errs, 0.75);
            cell.median_nonzero = median(nnz);
        }
        out.cells.push_back(cell);
    }
    return out;
}

RateFit rate_fit(const std::vector<double>& m, const std::vector<double>& error) {
    if (m.size() != error.size()) throw PreconditionError("rate fit needs paired vectors");
    if (m.size() < 4) throw InsufficientData("rate fit needs at least 4 cells, got " + std::to_string(m.size()));
    const auto n = static_cast<double>(m.size());
    double sx = 0, sy = 0;
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (!(m[i] > 0.0) || !(error[i] > 0.0)) throw PreconditionError("rate fit needs positive values");
        lx.push_back(std::log(m[i]));
        ly.push_back(std::log(error[i]));
        sx += lx.back();
        sy += ly.back();
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (!(sxx > 0.0)) throw InsufficientData("rate fit needs distinct sample sizes");
    RateFit fit;
    fit.cells = static_cast<int>(m.size());
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double sse = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        const double res = ly[i] - fit.intercept - fit.slope * lx[i];
        sse += res * res;
    }
    const double se = std::sqrt(sse / (n - 2.0) / sxx);
    const boost::math::students_t dist(n - 2.0);
    fit.half_width = boost::math::quantile(dist, 0.975) * se;
    return fit;
}

RateFit rate_fit(const std::vector<CurveCell>& cells) {
    std::vector<double> m, e;
    for (const auto& c : cells) {
        if (!c.valid) continue;
        m.push_back(c.m);
        e.push_back(c.median);
    }
    return rate_fit(m, e);
}

SweepResult lambda_sweep(const ExperimentConfig& cfg, const std::vector<double>& multipliers, const RunOptions& opts) {
    if (cfg.method != Method::krr) throw PreconditionError("lambda sweep needs method = krr");
    if (multipliers.empty()) throw PreconditionError("no lambda multipliers given");
    SweepResult out;
    out.keys = multipliers;
    if (std::find(out.keys.begin(), out.keys.end(), 1.0) == out.keys.end()) out.keys.push_back(1.0);
    for (double c : out.keys) {
        if (!(c >= 0.0)) throw PreconditionError("lambda multipliers must be non-negative");
        ExperimentConfig run = cfg;
        run.lambda_rule = c == 0.0 ? LambdaRule::zero() : LambdaRule::scaled(c);
        out.curves.push_back(learning_curve(run, opts));
    }
    const auto base = static_cast<std::size_t>(std::find(out.keys.begin(), out.keys.end(), 1.0) - out.keys.begin());
    for (std::size_t i = 0; i < cfg.m_grid.size(); ++i) {
        SweepRow row;
        row.m = cfg.m_grid[i];
        const double b = out.curves[base].cells[i].median;
        for (std::size_t k = 0; k < out.keys.size(); ++k) {
            const double v = out.curves[k].cells[i].median;
            row.median[out.keys[k]] = v;
            row.ratio[out.keys[k]] = v / b;
        }
        out.rows.push_back(row);
    }
    return out;
}

SweepResult q_sweep(const ExperimentConfig& cfg, const std::vector<double>& q_values, const RunOptions& opts) {
    if (q_values.empty()) throw PreconditionError("no q values given");
    SweepResult out;
    out.keys = q_values;
    for (double q : q_values) {
        ExperimentConfig run = cfg;
        run.method = Method::lq;
        run.q = q;
        out.curves.push_back(learning_curve(run, opts));
    }
    for (std::size_t i = 0; i < cfg.m_grid.size(); ++i) {
        SweepRow row;
        row.m = cfg.m_grid[i];
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (std::size_t k = 0; k < out.keys.size(); ++k) {
            const auto& cell = out.curves[k].cells[i];
            row.median[out.keys[k]] = cell.median;
            row.nonzero[out.keys[k]] = cell.median_nonzero;
            lo = std::min(lo, cell.median);
            hi = std::max(hi, cell.median);
        }
        row.max_pairwise_ratio = hi / lo;
        for (std::size_t k = 0; k < out.keys.size(); ++k) row.ratio[out.keys[k]] = row.median[out.keys[k]] / lo;
        out.rows.push_back(row);
    }
    return out;
}

namespace {

void fill_phase_rows(PhaseTransition& pt) {
    for (const auto& cell : pt.curve.cells) {
        PhaseRow row;
        row.m = cell.m;
        row.median_error = cell.median;
        int fails = 0;
        for (const auto& rec : pt.curve.records) {
            if (rec.m != cell.m) continue;
            ++row.trials;
            if (rec.error > pt.epsilon) ++fails;
        }
        row.failure_probability = row.trials > 0 ? static_cast<double>(fails) / row.trials : 1.0;
        pt.rows.push_back(row);
    }
}

}  // namespace

PhaseTransition phase_transition(const ExperimentConfig& cfg, double epsilon, const RunOptions& opts) {
    if (cfg.trials < 50) throw PreconditionError("phase transition needs at least 50 trials per m");
    if (!(epsilon > 0.0)) throw PreconditionError("epsilon must be positive");
    PhaseTransition pt;
    pt.epsilon = epsilon;
    pt.curve = learning_curve(cfg, opts);
    fill_phase_rows(pt);
    return pt;
}

PhaseTransition phase_transition_relative(const ExperimentConfig& cfg, double fraction, const RunOptions& opts) {
    if (cfg.trials < 50) throw PreconditionError("phase transition needs at least 50 trials per m");
    if (!(fraction > 0.0)) throw PreconditionError("fraction must be positive");
    PhaseTransition pt;
    pt.curve = learning_curve(cfg, opts);
    pt.epsilon = fraction * pt.curve.target_norm_squared;
    fill_phase_rows(pt);
    return pt;
}

ApproximationFit approximation_exponent(const SpectralFunction& target, const std::vector<int>& n_values,
                                        WindowProfile window) {
    ApproximationFit out;
    std::vector<double> ns;
    for (int n : n_values) {
        const NeedletKernel K(n, 2, make_window(window));
        const SpectralFunction g = convolve(K, target);
        double acc = 0.0;
        for (int k = 0; k <= target.band_limit(); ++k) {
            for (int m = -k; m <= k; ++m) {
                const double gv = k <= g.band_limit() ? g.at(k, m) : 0.0;
                const double diff = target.at(k, m) - gv;
                acc += diff * diff;
            }
        }
        out.n.push_back(n);
        out.error.push_back(std::sqrt(acc));
        ns.push_back(n);
    }
    out.fit = rate_fit(ns, out.error);
    return out;
}

std::optional<std::uint64_t> seed_from_environment() {
    const char* s = std::getenv("NEEDLET_SEED");
    if (s == nullptr || *s == '\0') return std::nullopt;
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(s, &end, 10);
    if (errno != 0 || end == s || *end != '\0' || *s == '-') {
        throw PreconditionError("NEEDLET_SEED is not an unsigned 64-bit integer: " + std::string(s));
    }
    return static_cast<std::uint64_t>(v);
}

}  // namespace needlet
