#include "needlet/quadrature.hpp"

#include "needlet/rng.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace needlet {

SphericalQuadrature product_rule(int exact_degree) {
    if (exact_degree < 0) throw PreconditionError("product_rule needs exact_degree >= 0");
    const int n_polar = (exact_degree + 2) / 2;
    const int n_azimuth = exact_degree + 1;
    const LineQuadrature gl = gauss_legendre(n_polar);
    SphericalQuadrature q;
    q.exact_degree = exact_degree;
    q.nodes.reserve(static_cast<std::size_t>(n_polar * n_azimuth));
    q.weights.reserve(static_cast<std::size_t>(n_polar * n_azimuth));
    const double dphi = 2.0 * std::numbers::pi / n_azimuth;
    for (int i = 0; i < n_polar; ++i) {
        const double t = gl.nodes[static_cast<std::size_t>(i)];
        const double s = std::sqrt(std::max(0.0, 1.0 - t * t));
        for (int j = 0; j < n_azimuth; ++j) {
            const double phi = j * dphi;
            q.nodes.push_back(SpherePoint::from_unit(std::array<double, 3>{s * std::cos(phi), s * std::sin(phi), t}));
            q.weights.push_back(gl.weights[static_cast<std::size_t>(i)] * dphi);
        }
    }
    return q;
}

double exact_integral(const SpectralFunction& f) {
    if (f.band_limit() < 0) return 0.0;
    return std::sqrt(4.0 * std::numbers::pi) * f.at(0, 0);
}

double CubatureWeights::l1_norm() const {
    double s = 0.0;
    for (double a : weights) s += std::abs(a);
    return s;
}

double CubatureWeights::l2_squared() const {
    double s = 0.0;
    for (double a : weights) s += a * a;
    return s;
}

double CubatureWeights::sum() const {
    double s = 0.0;
    for (double a : weights) s += a;
    return s;
}

CubatureWeights cubature_weights(std::span<const SpherePoint> points, int n, CubatureTarget) {
    if (n < 0) throw PreconditionError("cubature degree must be non-negative");
    require_unit_points(points, 2);
    const auto required = static_cast<int>(harmonic_count(n));
    if (static_cast<int>(points.size()) < required) {
        throw PreconditionError("cubature of degree " + std::to_string(n) + " needs at least " +
                                std::to_string(required) + " points");
    }
    {
        std::vector<std::array<double, 3>> sorted;
        sorted.reserve(points.size());
        for (const auto& p : points) sorted.push_back({p[0], p[1], p[2]});
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
            throw PreconditionError("cubature points must be pairwise distinct");
        }
    }

    // Moment system M a = b with M = Phi^T; least-norm solution via the SVD of Phi.
    const Eigen::MatrixXd phi = harmonic_matrix(n, points);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(phi, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    const double cutoff = 1e-10 * (s.size() > 0 ? s[0] : 0.0);
    int rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) rank += s[i] > cutoff ? 1 : 0;
    if (rank < required) {
        throw DegenerateConfiguration("moment system is rank deficient: rank " + std::to_string(rank) + " of " +
                                          std::to_string(required),
                                      rank, required);
    }
    Eigen::VectorXd b = Eigen::VectorXd::Zero(required);
    b[0] = std::sqrt(4.0 * std::numbers::pi);
    // a = U S^{-1} V^T b
    Eigen::VectorXd coef = svd.matrixV().transpose() * b;
    coef.array() /= s.array();
    const Eigen::VectorXd a = svd.matrixU() * coef;

    CubatureWeights out;
    out.points.assign(points.begin(), points.end());
    out.weights.assign(a.data(), a.data() + a.size());
    out.degree = n;
    out.rank = rank;
    out.residual = (phi.transpose() * a - b).cwiseAbs().maxCoeff();
    return out;
}

MzReport mz_check(int n, int N, int trials, std::uint64_t seed) {
    if (n < 0 || trials < 1) throw PreconditionError("mz_check needs n >= 0 and trials >= 1");
    const auto D = static_cast<Eigen::Index>(harmonic_count(n));
    if (N < D) throw PreconditionError("mz_check needs N >= dim Pi_n");
    constexpr int kPolys = 50;
    const double four_pi = 4.0 * std::numbers::pi;

    MzReport report;
    report.degree = n;
    report.samples = N;
    report.trials = trials;
    report.polys_per_trial = kPolys;
    report.min_ratio.assign(static_cast<std::size_t>(trials), 0.0);
    report.max_ratio.assign(static_cast<std::size_t>(trials), 0.0);
    std::vector<char> pass(static_cast<std::size_t>(trials), 0);
    std::vector<char> uniform_pass(static_cast<std::size_t>(trials), 0);

#pragma omp parallel for schedule(dynamic, 1)
    for (int trial = 0; trial < trials; ++trial) {
        Rng rng = make_rng(derive_seed(seed, {0x6d7aULL, static_cast<std::uint64_t>(trial)}));
        std::normal_distribution<double> normal(0.0, 1.0);
        std::vector<SpherePoint> pts;
        pts.reserve(static_cast<std::size_t>(N));
        for (int i = 0; i < N; ++i) {
            const double x = normal(rng), y = normal(rng), z = normal(rng);
            pts.emplace_back(x, y, z);
        }
        const Eigen::MatrixXd phi = harmonic_matrix(n, pts);

        double lo = 1e300, hi = -1e300;
        for (int p = 0; p < kPolys; ++p) {
            Eigen::VectorXd c(D);
            for (Eigen::Index i = 0; i < D; ++i) c[i] = normal(rng);
            // ||Q||_rho^2 = sum c^2 / (4 pi) under the uniform probability measure.
            c *= std::sqrt(four_pi) / c.norm();
            const double ratio = (phi * c).squaredNorm() / N;
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
        }
        const auto t = static_cast<std::size_t>(trial);
        report.min_ratio[t] = lo;
        report.max_ratio[t] = hi;
        pass[t] = lo >= 0.5 && hi <= 1.5;

        const Eigen::MatrixXd G = (four_pi / N) * (phi.transpose() * phi);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G, Eigen::EigenvaluesOnly);
        uniform_pass[t] = eig.eigenvalues().minCoeff() >= 0.5 && eig.eigenvalues().maxCoeff() <= 1.5;
    }
    report.pass_frequency = static_cast<double>(std::count(pass.begin(), pass.end(), 1)) / trials;
    report.uniform_pass_frequency =
        static_cast<double>(std::count(uniform_pass.begin(), uniform_pass.end(), 1)) / trials;
    return report;
}

std::vector<SpherePoint> fibonacci_grid(int count) {
    if (count < 2) throw PreconditionError("fibonacci_grid needs at least two points");
    std::vector<SpherePoint> pts;
    pts.reserve(static_cast<std::size_t>(count));
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    pts.push_back(SpherePoint::from_unit(std::array<double, 3>{0.0, 0.0, 1.0}));
    for (int i = 1; i < count - 1; ++i) {
        const double z = 1.0 - 2.0 * i / (count - 1.0);
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden * i;
        pts.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
    }
    pts.push_back(SpherePoint::from_unit(std::array<double, 3>{0.0, 0.0, -1.0}));
    return pts;
}

int dense_grid_size(int degree) { return std::max(2000, 60 * (degree + 1) * (degree + 1)); }

double sup_to_l2_ratio(const SpectralFunction& f, const SphericalQuadrature& quad) {
    if (quad.exact_degree < 2 * std::max(f.band_limit(), 0)) {
        throw PreconditionError("quadrature must be exact on Pi_{2n}");
    }
    const auto grid = fibonacci_grid(dense_grid_size(f.band_limit()));
    const auto on_grid = f.evaluate(grid);
    double sup = 0.0;
    for (double v : on_grid) sup = std::max(sup, std::abs(v));
    const auto on_nodes = f.evaluate(quad.nodes);
    double l2 = 0.0;
    for (std::size_t i = 0; i < on_nodes.size(); ++i) l2 += quad.weights[i] * on_nodes[i] * on_nodes[i];
    return sup / std::sqrt(l2);
}

double nikolskii_ratio(int n, int trials, const SphericalQuadrature& quad, std::uint64_t seed) {
    if (n < 0 || trials < 1) throw PreconditionError("nikolskii_ratio needs n >= 0 and trials >= 1");
    if (quad.exact_degree < 2 * n) throw PreconditionError("quadrature must be exact on Pi_{2n}");
    const auto grid = fibonacci_grid(dense_grid_size(n));
    const Eigen::MatrixXd on_grid = harmonic_matrix(n, grid);
    const Eigen::MatrixXd on_nodes = harmonic_matrix(n, quad.nodes);
    const Eigen::Map<const Eigen::VectorXd> w(quad.weights.data(), static_cast<Eigen::Index>(quad.weights.size()));
    Rng rng = make_rng(derive_seed(seed, {0x6e696bULL}));
    std::normal_distribution<double> normal(0.0, 1.0);
    double best = 0.0;
    for (int t = 0; t < trials; ++t) {
        Eigen::VectorXd c(on_grid.cols());
        for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = normal(rng);
        const double sup = (on_grid * c).cwiseAbs().maxCoeff();
        const double l2 = std::sqrt(w.dot((on_nodes * c).array().square().matrix()));
        best = std::max(best, sup / l2);
    }
    return best;
}

}  // namespace needlet
