// needlet: command-line front end for kernel checks, cubature, simulation,
// fitting and the learning-rate experiments.

#include "needlet/estimators.hpp"
#include "needlet/harness.hpp"
#include "needlet/io.hpp"
#include "needlet/parallel.hpp"
#include "needlet/quadrature.hpp"
#include "needlet/simulation.hpp"

#include <CLI11.hpp>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <random>

namespace fs = std::filesystem;
using namespace needlet;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kValidation = 2;

struct Common {
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    int jobs = 1;
    bool timing = false;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--out", c.out, "Output directory")->capture_default_str();
    sub->add_option("--seed", c.seed, "Master seed (overrides NEEDLET_SEED and the config)");
    sub->add_option("--jobs", c.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
}

// Precedence: --seed, then NEEDLET_SEED, then the fallback.
std::uint64_t resolve_seed(const Common& c, std::uint64_t fallback) {
    if (c.seed) return *c.seed;
    if (auto env = seed_from_environment()) return *env;
    return fallback;
}

Json envelope(const std::string& command, Json config) {
    Json j;
    j["command"] = command;
    j["version"] = kVersion;
    j["config"] = std::move(config);
    return j;
}

struct Stats {
    double min = 0, median = 0, max = 0, mean = 0;
};

Stats stats_of(std::vector<double> v) {
    Stats s;
    if (v.empty()) return s;
    std::sort(v.begin(), v.end());
    s.min = v.front();
    s.max = v.back();
    const std::size_t h = v.size() / 2;
    s.median = v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
    for (double x : v) s.mean += x;
    s.mean /= static_cast<double>(v.size());
    return s;
}

Json to_json(const Stats& s) { return {{"min", s.min}, {"median", s.median}, {"max", s.max}, {"mean", s.mean}}; }

std::vector<SpherePoint> random_points(int count, int d, Rng& rng) {
    std::normal_distribution<double> g;
    std::vector<SpherePoint> pts;
    std::vector<double> v(static_cast<std::size_t>(d + 1));
    while (static_cast<int>(pts.size()) < count) {
        double s = 0;
        for (double& c : v) {
            c = g(rng);
            s += c * c;
        }
        if (s > 0) pts.emplace_back(std::span<const double>(v));
    }
    return pts;
}

SpectralFunction random_poly(int band, Rng& rng) {
    std::normal_distribution<double> g;
    SpectralFunction f(band);
    for (double& c : f.coeffs()) c = g(rng);
    return f;
}

// ---------------------------------------------------------------- validate-kernel

struct Check {
    std::string name;
    bool pass;
    double value;
    double tolerance;
};

int cmd_validate_kernel(int n, int d, const std::string& window_name, const Common& c) {
    const auto window = make_window(parse_window_profile(window_name));
    const NeedletKernel K(n, d, window);
    const std::uint64_t seed = resolve_seed(c, 1);
    Rng rng = make_rng(derive_seed(seed, {0x766bULL}));
    std::vector<Check> checks;
    auto add = [&](std::string name, double value, double tol) { checks.push_back({std::move(name), value <= tol, value, tol}); };

    const auto wr = validate_window(window, 1000);
    checks.push_back({"window_admissible", wr.ok(), static_cast<double>(wr.violations.size()), 0.0});

    add("c0_equals_inverse_area", std::abs(K.coeffs()[0] * sphere_area(d) - 1.0), 1e-14);
    double min_coeff = 0.0;
    for (double ck : K.coeffs()) min_coeff = std::min(min_coeff, ck);
    add("coefficients_nonnegative", -min_coeff, 0.0);
    add("band_below_2n", K.max_degree() <= 2 * n - 1 ? 0.0 : 1.0, 0.0);

    double clenshaw = 0.0;
    for (int i = 0; i <= 400; ++i) {
        const double t = -1.0 + i / 200.0;
        clenshaw = std::max(clenshaw, std::abs(K(t) - K.eval_direct(t)));
    }
    add("clenshaw_vs_direct", clenshaw / K.diagonal(), 1e-12);

    const auto pts = random_points(20, d, rng);
    const Eigen::MatrixXd A = gram(K, pts);
    add("gram_symmetric", (A - A.transpose()).cwiseAbs().maxCoeff(), 0.0);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
    add("gram_psd", std::max(0.0, -es.eigenvalues().minCoeff()), 1e-8);
    add("gram_matches_serial", (A - gram_serial(K, pts)).cwiseAbs().maxCoeff(), 0.0);

    Json extra = Json::object();
    if (d == 2) {
        // Reproduction of Pi_n through the quadrature convolution.
        const auto quad = product_rule(n + K.max_degree());
        const auto test = random_points(50, 2, rng);
        double repro = 0.0;
        for (int trial = 0; trial < 10; ++trial) {
            const SpectralFunction P = random_poly(n, rng);
            const double scale = P.l2_norm();
            for (const auto& x : test) {
                const double v = convolve_pointwise(K, [&](const SpherePoint& y) { return P(y); }, quad, x, n);
                repro = std::max(repro, std::abs(v - P(x)) / scale);
            }
        }
        add("reproducing_property", repro, 1e-8);

        // ||K_n * h||_K^2 <= ||h||_2^2 for bounded h; the M^2 count assumes
        // a unit-mass measure and is informational only.
        double sharp = 0.0;
        int literal_violations = 0;
        for (int trial = 0; trial < 20; ++trial) {
            const SpectralFunction h = random_poly(2 * n, rng);
            const double M = estimate_sup_norm(h);
            const SpectralFunction g = convolve(K, h);
            const double norm2 = rkhs_inner(K, g, g);
            sharp = std::max(sharp, norm2 - h.l2_norm() * h.l2_norm());
            if (norm2 > M * M + 1e-9) ++literal_violations;
        }
        add("rkhs_norm_below_l2_norm", std::max(0.0, sharp), 1e-9);
        extra["rkhs_m_squared_violations"] = literal_violations;
        extra["rkhs_trials"] = 20;
    }

    std::vector<double> thetas;
    for (int i = 0; i <= 200; ++i) thetas.push_back(std::numbers::pi * i / 200.0);
    double max_ratio = 0.0;
    for (const auto& row : localization_profile(K, thetas, 4)) max_ratio = std::max(max_ratio, row.bound_ratio);
    extra["localization_max_ratio_k4"] = max_ratio;

    bool all = true;
    Json arr = Json::array();
    for (const auto& ch : checks) {
        all = all && ch.pass;
        arr.push_back({{"name", ch.name}, {"pass", ch.pass}, {"value", ch.value}, {"tolerance", ch.tolerance}});
    }
    Json report = envelope("validate-kernel", {{"n", n}, {"d", d}, {"window", window.name()}, {"seed", seed}});
    report["checks"] = std::move(arr);
    report["diagnostics"] = std::move(extra);
    report["pass"] = all;
    write_json(fs::path(c.out) / "validate-kernel.json", report);
    for (const auto& ch : checks) {
        if (!ch.pass) std::cerr << "check failed: " << ch.name << " (" << ch.value << " > " << ch.tolerance << ")\n";
    }
    return all ? kOk : kValidation;
}

// ---------------------------------------------------------------- cubature

int cmd_cubature(int n, int samples, int trials, const Common& c) {
    const std::uint64_t seed = resolve_seed(c, 1);
    const int D = static_cast<int>(harmonic_count(n));
    if (samples <= 0) samples = 50 * D;
    if (samples < D) throw PreconditionError("--samples must be at least dim Pi_n = " + std::to_string(D));

    std::vector<double> residual(static_cast<std::size_t>(trials)), l1(residual.size()), l2(residual.size());
    std::vector<int> degenerate(residual.size(), 0);
#pragma omp parallel for schedule(dynamic) num_threads(c.jobs)
    for (int t = 0; t < trials; ++t) {
        const auto pts = sample_design(SamplingDesign::uniform(), samples, derive_seed(seed, {0x6375ULL, static_cast<std::uint64_t>(t)}));
        try {
            const auto w = cubature_weights(pts, n);
            residual[static_cast<std::size_t>(t)] = w.residual;
            l1[static_cast<std::size_t>(t)] = w.l1_norm();
            l2[static_cast<std::size_t>(t)] = w.l2_squared();
        } catch (const DegenerateConfiguration&) {
            degenerate[static_cast<std::size_t>(t)] = 1;
            residual[static_cast<std::size_t>(t)] = std::numeric_limits<double>::infinity();
        }
    }
    const MzReport mz = mz_check(n, samples, trials, seed);
    int certificate = 0;
    for (double v : l1) certificate += v <= 8.0 * std::numbers::pi ? 1 : 0;
    double worst = 0.0;
    for (double r : residual) worst = std::max(worst, r);

    Json report = envelope("cubature", {{"n", n}, {"samples", samples}, {"trials", trials}, {"seed", seed}});
    report["pass_frequency"] = mz.pass_frequency;
    report["uniform_pass_frequency"] = mz.uniform_pass_frequency;
    report["residual_stats"] = to_json(stats_of(residual));
    report["weight_norm_stats"] = {{"l1", to_json(stats_of(l1))},
                                   {"l2_squared", to_json(stats_of(l2))},
                                   {"l1_at_most_8pi_frequency", static_cast<double>(certificate) / trials}};
    int degen = 0;
    for (int v : degenerate) degen += v;
    report["degenerate_trials"] = degen;
    report["max_residual"] = std::isfinite(worst) ? Json(worst) : Json(nullptr);
    write_json(fs::path(c.out) / "cubature.json", report);
    return worst <= 1e-8 ? kOk : kValidation;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string design = "uniform";
    double kappa = 0.0;
    double r = 2.0;
    int band = 64;
    double sigma = 0.2;
    int m = 256;
    std::string shape = "zonal";
};

int cmd_simulate(const SimulateArgs& a, const Common& c) {
    const std::uint64_t seed = resolve_seed(c, 1);
    SamplingDesign design{parse_design_kind(a.design), a.kappa};
    const auto target = make_target(a.r, a.band, derive_seed(seed, {0x7467ULL}), parse_target_shape(a.shape));
    Dataset data;
    data.x = sample_design(design, a.m, derive_seed(seed, {1}));
    auto labels = generate_labels(target, data.x, NoiseModel::uniform(a.sigma), derive_seed(seed, {2}));
    data.y = std::move(labels.y);
    data.bound = labels.bound;

    fs::create_directories(c.out);
    std::ofstream csv(fs::path(c.out) / "dataset.csv");
    write_dataset_csv(csv, data);
    Json report = envelope("simulate", {{"design", {{"kind", a.design}, {"kappa", a.kappa}}},
                                        {"r", a.r},
                                        {"band", a.band},
                                        {"sigma", a.sigma},
                                        {"m", a.m},
                                        {"shape", a.shape},
                                        {"seed", seed}});
    report["M"] = data.bound;
    report["target_sup_norm"] = target.sup_norm;
    report["target_l2_norm"] = target.f.l2_norm();
    report["distortion"] = distortion(design);
    report["target_coeffs"] = target.f.coeffs();
    write_json(fs::path(c.out) / "simulate.json", report);
    return kOk;
}

// ---------------------------------------------------------------- fit

struct FitArgs {
    std::string method = "krr";
    double q = 2.0;
    double lambda = 0.0;
    int n = 8;
    bool truncate = false;
    std::string data;
    std::string window = "smooth-bump";
};

int cmd_fit(const FitArgs& a, const Common& c) {
    const Dataset data = read_dataset_csv(a.data);
    const NeedletKernel K(a.n, 2, make_window(parse_window_profile(a.window)));
    const Method method = parse_method(a.method);
    KernelExpansion f = method == Method::krr ? krr_fit(data, K, a.lambda) : lq_fit(data, K, a.lambda, a.q);
    if (a.truncate) f = truncate(f, data.bound);
    Json report = envelope("fit", {{"method", a.method},
                                   {"q", method == Method::krr ? 2.0 : a.q},
                                   {"lambda", a.lambda},
                                   {"n", a.n},
                                   {"truncate", a.truncate},
                                   {"data", a.data},
                                   {"window", a.window}});
    report["expansion"] = to_json(f);
    report["M"] = data.bound;
    report["empirical_error"] = empirical_error(f, data.x, data.y);
    report["nonzero"] = count_nonzero(f);
    write_json(fs::path(c.out) / "expansion.json", report);
    if (!f.report().converged) std::cerr << "warning: " << f.report().warning << '\n';
    return kOk;
}

// ---------------------------------------------------------------- experiments

struct ExperimentArgs {
    std::string config;
    std::vector<int> m_grid;
    std::optional<int> trials;
};

ExperimentConfig resolve_config(const ExperimentArgs& a, const Common& c) {
    ExperimentConfig cfg = a.config.empty() ? ExperimentConfig{} : load_config(a.config);
    if (!a.m_grid.empty()) cfg.m_grid = a.m_grid;
    if (a.trials) cfg.trials = *a.trials;
    cfg.seed = resolve_seed(c, cfg.seed);
    cfg.validate();
    return cfg;
}

Json curve_json(const LearningCurve& lc) {
    Json cells = Json::array();
    for (const auto& cell : lc.cells) cells.push_back(to_json(cell));
    Json failures = Json::array();
    for (const auto& r : lc.failures) failures.push_back(to_json(r));
    Json j;
    j["cells"] = std::move(cells);
    j["failures"] = std::move(failures);
    j["target_norm_squared"] = lc.target_norm_squared;
    j["records"] = lc.records.size();
    try {
        j["rate_fit"] = to_json(rate_fit(lc.cells));
    } catch (const InsufficientData&) {
        j["rate_fit"] = nullptr;
    }
    return j;
}

void write_records(const fs::path& path, const std::vector<ExperimentRecord>& recs, bool timing) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path);
    write_records_csv(out, recs, timing);
}

int cmd_learning_curve(const ExperimentArgs& a, const Common& c) {
    const ExperimentConfig cfg = resolve_config(a, c);
    const LearningCurve lc = learning_curve(cfg, {c.jobs});
    write_records(fs::path(c.out) / "records.csv", lc.records, c.timing);
    Json report = envelope("learning-curve", to_json(cfg));
    report["result"] = curve_json(lc);
    report["theory_slope"] = -2.0 * cfg.r / (2.0 * cfg.r + cfg.d);
    write_json(fs::path(c.out) / "summary.json", report);
    for (const auto& cell : lc.cells) {
        if (!cell.valid) return kValidation;
    }
    return kOk;
}

Json rows_json(const SweepResult& s) {
    Json rows = Json::array();
    for (const auto& r : s.rows) {
        Json row{{"m", r.m}};
        Json med = Json::object(), ratio = Json::object(), nnz = Json::object();
        for (const auto& [k, v] : r.median) med[format_double(k)] = v;
        for (const auto& [k, v] : r.ratio) ratio[format_double(k)] = v;
        for (const auto& [k, v] : r.nonzero) nnz[format_double(k)] = v;
        row["median"] = std::move(med);
        row["ratio"] = std::move(ratio);
        if (!r.nonzero.empty()) {
            row["median_nonzero"] = std::move(nnz);
            row["max_pairwise_ratio"] = r.max_pairwise_ratio;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

int cmd_sweep(const std::string& which, const ExperimentArgs& a, const std::vector<double>& keys, const Common& c) {
    ExperimentConfig cfg = resolve_config(a, c);
    SweepResult s;
    if (which == "sweep-lambda") {
        cfg.method = Method::krr;
        s = lambda_sweep(cfg, keys, {c.jobs});
    } else {
        s = q_sweep(cfg, keys, {c.jobs});
    }
    std::vector<ExperimentRecord> all;
    Json curves = Json::array();
    for (std::size_t k = 0; k < s.keys.size(); ++k) {
        all.insert(all.end(), s.curves[k].records.begin(), s.curves[k].records.end());
        Json cj = curve_json(s.curves[k]);
        cj["key"] = s.keys[k];
        curves.push_back(std::move(cj));
    }
    write_records(fs::path(c.out) / "records.csv", all, c.timing);
    Json report = envelope(which, to_json(cfg));
    report[which == "sweep-lambda" ? "multipliers" : "q_values"] = s.keys;
    report["rows"] = rows_json(s);
    report["curves"] = std::move(curves);
    write_json(fs::path(c.out) / "summary.json", report);
    return kOk;
}

int cmd_phase(const ExperimentArgs& a, std::optional<double> epsilon, double fraction, const Common& c) {
    const ExperimentConfig cfg = resolve_config(a, c);
    const PhaseTransition pt =
        epsilon ? phase_transition(cfg, *epsilon, {c.jobs}) : phase_transition_relative(cfg, fraction, {c.jobs});
    write_records(fs::path(c.out) / "records.csv", pt.curve.records, c.timing);
    Json rows = Json::array();
    for (const auto& r : pt.rows) {
        rows.push_back({{"m", r.m},
                        {"failure_probability", r.failure_probability},
                        {"median_error", r.median_error},
                        {"trials", r.trials}});
    }
    Json conf = to_json(cfg);
    conf["epsilon"] = epsilon ? Json(*epsilon) : Json(nullptr);
    conf["epsilon_fraction"] = epsilon ? Json(nullptr) : Json(fraction);
    Json report = envelope("phase-transition", std::move(conf));
    report["epsilon"] = pt.epsilon;
    report["rows"] = std::move(rows);
    report["result"] = curve_json(pt.curve);
    write_json(fs::path(c.out) / "summary.json", report);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Needlet-kernel regression on the sphere"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    Common common;

    auto* vk = app.add_subcommand("validate-kernel", "Check kernel invariants and write a JSON report");
    int vk_n = 8, vk_d = 2;
    std::string vk_window = "smooth-bump";
    vk->add_option("--n", vk_n, "Frequency parameter")->required()->check(CLI::Range(1, kMaxDegree));
    vk->add_option("--d", vk_d, "Sphere dimension")->check(CLI::Range(1, 3))->capture_default_str();
    vk->add_option("--window", vk_window, "smooth-bump | linear-ramp")->capture_default_str();
    add_common(vk, common);

    auto* cu = app.add_subcommand("cubature", "Random cubature weights and the MZ frequency check");
    int cu_n = 8, cu_samples = 0, cu_trials = 100;
    cu->add_option("--n", cu_n, "Polynomial degree")->check(CLI::Range(0, 40))->capture_default_str();
    cu->add_option("--samples", cu_samples, "Points per trial (default 50 dim Pi_n)");
    cu->add_option("--trials", cu_trials, "Trials")->check(CLI::PositiveNumber)->capture_default_str();
    add_common(cu, common);

    auto* si = app.add_subcommand("simulate", "Draw a synthetic dataset");
    SimulateArgs sa;
    si->add_option("--design", sa.design, "uniform | cap-biased")->capture_default_str();
    si->add_option("--kappa", sa.kappa, "vMF concentration")->capture_default_str();
    si->add_option("--r", sa.r, "Sobolev smoothness")->capture_default_str();
    si->add_option("--band", sa.band, "Target band limit")->capture_default_str();
    si->add_option("--sigma", sa.sigma, "Uniform noise half-width")->capture_default_str();
    si->add_option("--m", sa.m, "Sample size")->check(CLI::PositiveNumber)->capture_default_str();
    si->add_option("--shape", sa.shape, "zonal | random")->capture_default_str();
    add_common(si, common);

    auto* fi = app.add_subcommand("fit", "Fit KRR or l^q to a dataset CSV");
    FitArgs fa;
    fi->add_option("--method", fa.method, "krr | lq")->capture_default_str();
    fi->add_option("--q", fa.q, "Penalty exponent for lq")->capture_default_str();
    fi->add_option("--lambda", fa.lambda, "Regularization parameter")->capture_default_str();
    fi->add_option("--n", fa.n, "Frequency parameter")->check(CLI::Range(1, kMaxDegree))->capture_default_str();
    fi->add_flag("--truncate", fa.truncate, "Clamp the estimator to [-M, M]");
    fi->add_option("--data", fa.data, "Dataset CSV (x1,x2,x3,y)")->required()->check(CLI::ExistingFile);
    fi->add_option("--window", fa.window, "smooth-bump | linear-ramp")->capture_default_str();
    add_common(fi, common);

    ExperimentArgs ea;
    auto add_experiment = [&](CLI::App* sub) {
        sub->add_option("--config", ea.config, "Experiment config JSON")->check(CLI::ExistingFile);
        sub->add_option("--m-grid", ea.m_grid, "Override the m grid")->delimiter(',');
        sub->add_option("--trials", ea.trials, "Override trials per m");
        sub->add_flag("--timing", common.timing, "Write measured wall_ms into the CSV");
        add_common(sub, common);
    };
    auto* lc = app.add_subcommand("learning-curve", "Median error per m and the fitted rate");
    add_experiment(lc);
    auto* sl = app.add_subcommand("sweep-lambda", "KRR learning curves per lambda multiplier");
    std::vector<double> multipliers{0.0, 1.0};
    sl->add_option("--multipliers", multipliers, "Lambda multipliers")->delimiter(',')->capture_default_str();
    add_experiment(sl);
    auto* sq = app.add_subcommand("sweep-q", "l^q learning curves per q");
    std::vector<double> q_values{0.5, 1.0, 2.0};
    sq->add_option("--q", q_values, "q values")->delimiter(',')->capture_default_str();
    add_experiment(sq);
    auto* pt = app.add_subcommand("phase-transition", "Empirical P(error > epsilon) per m");
    std::optional<double> epsilon;
    double fraction = 0.05;
    auto* eps_opt = pt->add_option("--epsilon", epsilon, "Absolute accuracy level");
    pt->add_option("--fraction", fraction, "epsilon as a fraction of the squared target norm")
        ->excludes(eps_opt)
        ->capture_default_str();
    add_experiment(pt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        parallel::set_threads(common.jobs);
        if (*vk) return cmd_validate_kernel(vk_n, vk_d, vk_window, common);
        if (*cu) return cmd_cubature(cu_n, cu_samples, cu_trials, common);
        if (*si) return cmd_simulate(sa, common);
        if (*fi) return cmd_fit(fa, common);
        if (*lc) return cmd_learning_curve(ea, common);
        if (*sl) return cmd_sweep("sweep-lambda", ea, multipliers, common);
        if (*sq) return cmd_sweep("sweep-q", ea, q_values, common);
        if (*pt) return cmd_phase(ea, epsilon, fraction, common);
    } catch (const PreconditionError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidation;
    }
    return kUsage;
}
