#pragma once

// Desk-scale learning-rate experiments: learning curves, rate fits, lambda
// and q sweeps and phase-transition probabilities.

#include "needlet/estimators.hpp"
#include "needlet/simulation.hpp"
#include "needlet/window.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace needlet {

enum class Method { krr, lq };
std::string_view to_string(Method m);
Method parse_method(std::string_view s);

/// zero: lambda = 0. scaled(c): lambda = c M^{-2} eps for KRR and
/// lambda = c m^{q-1} eps for l^q.
struct LambdaRule {
    enum class Kind { zero, scaled };
    Kind kind = Kind::scaled;
    double c = 1.0;

    static LambdaRule zero() { return {Kind::zero, 0.0}; }
    static LambdaRule scaled(double c) { return {Kind::scaled, c}; }
};

struct ExperimentConfig {
    int d = 2;
    double r = 2.0;
    SamplingDesign design;
    double sigma = 0.2;
    Method method = Method::krr;
    double q = 2.0;
    LambdaRule lambda_rule;
    double c0 = 1.0;  // n = floor(c0 eps^{-1/(2r)})
    std::vector<int> m_grid{128, 256, 512, 1024};
    int trials = 20;
    std::uint64_t seed = 1;
    TargetShape target_shape = TargetShape::zonal;
    int target_band = 64;
    WindowProfile window = WindowProfile::smooth_bump;
    bool truncate = true;
    LqOptions lq;

    /// Throws PreconditionError when the configuration is unusable.
    void validate() const;
};

struct DegreeChoice {
    int n;
    bool clamped;
};

constexpr int kMaxDegree = 128;

/// floor(c0 eps^{-1/(2r)}) clamped to [1, 128].
DegreeChoice choose_n(double epsilon, double r, double c0);

/// m^{-2r/(2r+d)}.
double target_rate(int m, double r, int d);

double lambda_for(const ExperimentConfig& cfg, int m, double M);

struct ExperimentRecord {
    int m = 0;
    int trial = 0;
    std::uint64_t seed = 0;
    int n = 0;
    double lambda = 0.0;
    double q = 2.0;
    double error = 0.0;              // ||pi_M f - f_rho||^2_rho (or untruncated if truncation is off)
    double error_untruncated = 0.0;  // ||f - f_rho||^2_rho
    int nonzero = 0;
    int iterations = 0;
    bool ok = true;
    std::string message;
    double wall_ms = 0.0;
};

struct CurveCell {
    int m = 0;
    int n = 0;
    bool n_clamped = false;
    double epsilon = 0.0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double median_nonzero = 0.0;
    int succeeded = 0;
    int attempted = 0;
    bool valid = false;  // at least 80% of trials succeeded
};

struct LearningCurve {
    ExperimentConfig config;
    std::vector<CurveCell> cells;
    std::vector<ExperimentRecord> records;   // successful trials
    std::vector<ExperimentRecord> failures;  // failed trials, with message
    double target_norm_squared = 0.0;        // ||f_rho||^2_rho
};

struct RunOptions {
    int jobs = 1;
};

LearningCurve learning_curve(const ExperimentConfig& cfg, const RunOptions& opts = {});

class InsufficientData : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double half_width = 0.0;  // 95% confidence half-width of the slope
    int cells = 0;
};

/// OLS of log(median error) on log(m) over valid cells. Needs >= 4 cells.
RateFit rate_fit(const std::vector<CurveCell>& cells);
RateFit rate_fit(const std::vector<double>& m, const std::vector<double>& error);

struct SweepRow {
    int m = 0;
    std::map<double, double> median;        // keyed by multiplier or q
    std::map<double, double> ratio;         // lambda sweep: median / baseline median
    std::map<double, double> nonzero;       // q sweep: median nonzero count
    double max_pairwise_ratio = 1.0;        // q sweep
};

struct SweepResult {
    std::vector<double> keys;
    std::vector<LearningCurve> curves;  // parallel to keys
    std::vector<SweepRow> rows;
};

/// Runs one learning curve per multiplier c (c = 0 means pure least squares)
/// on shared data and reports median ratios against c = 1.
SweepResult lambda_sweep(const ExperimentConfig& cfg, const std::vector<double>& multipliers, const RunOptions& opts = {});

/// l^q fits per q with lambda = c m^{q-1} eps; pairwise ratios and sparsity.
SweepResult q_sweep(const ExperimentConfig& cfg, const std::vector<double>& q_values, const RunOptions& opts = {});

struct PhaseRow {
    int m = 0;
    double failure_probability = 0.0;
    double median_error = 0.0;
    int trials = 0;
};

struct PhaseTransition {
    double epsilon = 0.0;
    std::vector<PhaseRow> rows;
    LearningCurve curve;
};

/// Empirical P(error > epsilon) per m. trials >= 50.
PhaseTransition phase_transition(const ExperimentConfig& cfg, double epsilon, const RunOptions& opts = {});
/// Same with epsilon = fraction * ||f_rho||^2_rho.
PhaseTransition phase_transition_relative(const ExperimentConfig& cfg, double fraction, const RunOptions& opts = {});

struct ApproximationFit {
    std::vector<int> n;
    std::vector<double> error;  // ||f - K_n * f||_2 (surface measure)
    RateFit fit;
};

/// Empirical approximation exponent of K_n * f -> f for a band-limited target.
ApproximationFit approximation_exponent(const SpectralFunction& target, const std::vector<int>& n_values,
                                        WindowProfile window = WindowProfile::smooth_bump);

/// Reads NEEDLET_SEED; returns the override when set.
std::optional<std::uint64_t> seed_from_environment();

}  // namespace needlet
