#pragma once

// Learning algorithms over the needlet kernel: kernel ridge regression, the
// truncation operator pi_M and l^q coefficient-regularized least squares on the
// sample-dependent hypothesis space span{K_n(x_i, .)}.

#include "needlet/kernel.hpp"
#include "needlet/quadrature.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace needlet {

struct Dataset {
    std::vector<SpherePoint> x;
    std::vector<double> y;
    double bound = 1.0;  // M with |y_i| <= M

    std::size_t size() const { return x.size(); }
    /// Throws PreconditionError on empty data, size mismatch or |y_i| > M.
    void validate() const;
};

/// How the Gram system is solved. `factored` uses the exact square-root factor
/// A = F F^T from the addition formula (S^2 only); `dense` works on A itself.
enum class Backend { automatic, dense, factored };

struct SolverReport {
    std::string solver;
    std::string backend;
    int iterations = 0;
    bool converged = true;
    std::string warning;
    double objective = 0.0;
    std::vector<double> objective_history;
    int support_removed = 0;  // q = 1: coordinates zeroed by the vertex pass
};

class KernelExpansion {
public:
    KernelExpansion(NeedletKernel kernel, std::vector<SpherePoint> centers, std::vector<double> coeffs,
                    std::optional<double> truncation = std::nullopt);

    const NeedletKernel& kernel() const { return kernel_; }
    const std::vector<SpherePoint>& centers() const { return centers_; }
    const std::vector<double>& coeffs() const { return coeffs_; }
    std::optional<double> truncation() const { return truncation_; }
    const SolverReport& report() const { return report_; }

    /// sum_i a_i K_n(x_i . x), no clamping.
    double raw(const SpherePoint& x) const;
    /// raw(x), clamped to [-M, M] when a truncation level is set.
    double operator()(const SpherePoint& x) const;
    std::vector<double> evaluate(std::span<const SpherePoint> pts) const;

    /// Harmonic coefficients b_{k,m} = eta(k/n) sum_i a_i Y_{k,m}(x_i) (S^2).
    /// Solvers that know b without forming it from a store it directly.
    SpectralFunction spectral() const;

    /// Copy marked with clamp level M.
    KernelExpansion truncated(double M) const;

    void set_report(SolverReport r) { report_ = std::move(r); }
    void set_spectral(SpectralFunction b) { spectral_ = std::move(b); }

private:
    NeedletKernel kernel_;
    std::vector<SpherePoint> centers_;
    std::vector<double> coeffs_;
    std::optional<double> truncation_;
    std::optional<SpectralFunction> spectral_;
    SolverReport report_;
};

/// pi_M u = min(M, |u|) sgn(u).
double clamp_to(double u, double M);

/// Solves (A + m lambda I) a = y. lambda = 0 gives the least-norm solution with
/// eigenvalues below 1e-10 of the largest treated as zero.
KernelExpansion krr_fit(const Dataset& data, const NeedletKernel& K, double lambda, Backend backend = Backend::automatic);

KernelExpansion truncate(const KernelExpansion& f, double M);

struct LqOptions {
    int max_iterations = 10000;
    double tolerance = 1e-10;    // relative objective decrease
    double weight_floor = 1e-8;  // IRLS floor on |a_i|
    bool record_history = false;
    /// q = 1: after convergence, move to a vertex of the optimal face (same
    /// objective, at most rank(A) + 1 nonzeros).
    bool reduce_support = true;
    Backend backend = Backend::automatic;
};

/// Minimizes (1/m) sum (f(x_i) - y_i)^2 + lambda sum |a_i|^q over a.
/// q = 2: closed form. q = 1: monotone accelerated proximal gradient.
/// Other q in (0, 2): iteratively reweighted l2 (for q < 1 a stationary point).
KernelExpansion lq_fit(const Dataset& data, const NeedletKernel& K, double lambda, double q, const LqOptions& opts = {});

/// sum |a_i|^q on the stored representation.
double penalty_value(const KernelExpansion& f, double q);

/// (1/m) ||A a - y||^2 + lambda sum |a_i|^q, with A built from scratch.
double lq_objective(const Dataset& data, const NeedletKernel& K, std::span<const double> a, double lambda, double q);

/// Number of coefficients with |a_i| > threshold.
int count_nonzero(const KernelExpansion& f, double threshold = 1e-8);

/// Empirical sum of squares (1/m) sum (f(x_i) - y_i)^2.
double empirical_error(const KernelExpansion& f, std::span<const SpherePoint> x, std::span<const double> y);

// Generalization error ||f - f_rho||^2_rho. Norms are with respect to the
// probability measure rho_X; `density` is its density with respect to surface
// measure (1 / 4 pi for the uniform design).

/// Exact for band-limited f, target under the uniform design.
double spectral_error(const SpectralFunction& f, const SpectralFunction& target);

using Density = std::function<double(const SpherePoint&)>;
double uniform_density(const SpherePoint&);

/// Quadrature of (f - target)^2 density; honours truncation of f.
double generalization_error(const KernelExpansion& f, const SpectralFunction& target, const SphericalQuadrature& quad,
                            const Density& density = uniform_density);

struct MonteCarloError {
    double value;
    double standard_error;
};

/// Monte Carlo over test points drawn from rho_X.
MonteCarloError generalization_error_mc(const KernelExpansion& f, const std::function<double(const SpherePoint&)>& target,
                                        std::span<const SpherePoint> test_points);

/// Repeated error evaluation against one target on one quadrature; caches the
/// harmonic matrix at the nodes. Thread-safe after construction.
class ErrorEvaluator {
public:
    ErrorEvaluator(const SpectralFunction& target, SphericalQuadrature quad, int max_degree,
                   const Density& density = uniform_density);

    /// ||pi_M f - target||^2_rho (or untruncated when clamp is empty).
    double operator()(const SpectralFunction& f, std::optional<double> clamp) const;
    double target_norm_squared() const { return target_norm2_; }
    int max_degree() const { return max_degree_; }

private:
    SphericalQuadrature quad_;
    int max_degree_;
    Eigen::MatrixXd phi_;
    Eigen::VectorXd target_values_;
    Eigen::VectorXd weights_;  // quadrature weight times density
    double target_norm2_ = 0.0;
};

}  // namespace needlet
