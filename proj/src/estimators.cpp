#include "needlet/estimators.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <string>

namespace needlet {

void Dataset::validate() const {
    if (x.empty()) throw PreconditionError("dataset is empty");
    if (x.size() != y.size()) throw PreconditionError("dataset has mismatched x / y lengths");
    if (!(bound > 0.0)) throw PreconditionError("dataset bound M must be positive");
    for (double v : y) {
        if (!(std::abs(v) <= bound)) throw PreconditionError("label exceeds the declared bound M");
    }
}

double clamp_to(double u, double M) { return std::clamp(u, -M, M); }

KernelExpansion::KernelExpansion(NeedletKernel kernel, std::vector<SpherePoint> centers, std::vector<double> coeffs,
                                 std::optional<double> truncation)
    : kernel_(std::move(kernel)), centers_(std::move(centers)), coeffs_(std::move(coeffs)), truncation_(truncation) {
    if (centers_.size() != coeffs_.size()) throw PreconditionError("centers and coefficients differ in length");
    if (truncation_ && !(*truncation_ > 0.0)) throw PreconditionError("truncation level must be positive");
}

double KernelExpansion::raw(const SpherePoint& x) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < centers_.size(); ++i) {
        acc += coeffs_[i] * kernel_(std::clamp(centers_[i].dot(x), -1.0, 1.0));
    }
    return acc;
}

double KernelExpansion::operator()(const SpherePoint& x) const {
    const double v = raw(x);
    return truncation_ ? clamp_to(v, *truncation_) : v;
}

std::vector<double> KernelExpansion::evaluate(std::span<const SpherePoint> pts) const {
    std::vector<double> out;
    if (kernel_.d() == 2) {
        out = spectral().evaluate(pts);
    } else {
        const Eigen::MatrixXd B = cross_gram(kernel_, pts, centers_);
        const Eigen::Map<const Eigen::VectorXd> a(coeffs_.data(), static_cast<Eigen::Index>(coeffs_.size()));
        out.resize(pts.size());
        Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size())) = B * a;
    }
    if (truncation_) {
        for (double& v : out) v = clamp_to(v, *truncation_);
    }
    return out;
}

SpectralFunction KernelExpansion::spectral() const {
    if (spectral_) return *spectral_;
    if (kernel_.d() != 2) throw UnsupportedDimension("spectral form is implemented on S^2");
    const int band = kernel_.max_degree();
    const Eigen::MatrixXd phi = harmonic_matrix(band, centers_);
    const Eigen::Map<const Eigen::VectorXd> a(coeffs_.data(), static_cast<Eigen::Index>(coeffs_.size()));
    Eigen::VectorXd b = phi.transpose() * a;
    for (int k = 0; k <= band; ++k) {
        b.segment(static_cast<Eigen::Index>(harmonic_index(k, -k)), 2 * k + 1) *= kernel_.weight(k);
    }
    return SpectralFunction(band, std::vector<double>(b.data(), b.data() + b.size()));
}

KernelExpansion KernelExpansion::truncated(double M) const {
    if (!(M > 0.0)) throw PreconditionError("truncation level must be positive");
    KernelExpansion out = *this;
    out.truncation_ = M;
    return out;
}

KernelExpansion truncate(const KernelExpansion& f, double M) { return f.truncated(M); }

namespace {

constexpr double kEigenCutoff = 1e-10;

// Linear algebra on the Gram matrix behind one fit.
class GramSystem {
public:
    virtual ~GramSystem() = default;
    virtual std::string name() const = 0;
    virtual Eigen::Index size() const = 0;
    /// A v
    virtual Eigen::VectorXd apply(const Eigen::VectorXd& v) const = 0;
    /// (A + shift I)^{-1} y; shift = 0 gives the least-norm solution.
    virtual Eigen::VectorXd krr(const Eigen::VectorXd& y, double shift) const = 0;
    /// (A^T A / m + lambda I)^{-1} A^T y / m
    virtual Eigen::VectorXd ridge(const Eigen::VectorXd& y, double lambda) const = 0;
    /// (A^T A / m + lambda diag(w))^{-1} rhs
    virtual Eigen::VectorXd weighted(const Eigen::VectorXd& rhs, double lambda, const Eigen::VectorXd& w) const = 0;
    /// Largest eigenvalue of A.
    virtual double top_eigenvalue() const = 0;
    /// Orthonormal basis of range(A) (eigenvalues above the cutoff).
    virtual Eigen::MatrixXd range_basis() const = 0;
    /// Spectral coefficients of the KRR solution when known exactly.
    virtual std::optional<Eigen::VectorXd> krr_spectral(const Eigen::VectorXd&, double) const { return std::nullopt; }
};

class DenseSystem final : public GramSystem {
public:
    explicit DenseSystem(Eigen::MatrixXd A) : A_(std::move(A)) {}

    std::string name() const override { return "dense"; }
    Eigen::Index size() const override { return A_.rows(); }
    Eigen::VectorXd apply(const Eigen::VectorXd& v) const override { return A_ * v; }

    Eigen::VectorXd krr(const Eigen::VectorXd& y, double shift) const override {
        const Eigen::Index m = A_.rows();
        if (shift > 0.0) {
            Eigen::MatrixXd S = A_;
            S.diagonal().array() += shift;
            Eigen::LLT<Eigen::MatrixXd> llt(S);
            if (llt.info() == Eigen::Success) return llt.solve(y);
            return Eigen::LDLT<Eigen::MatrixXd>(S).solve(y);
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A_);
        const Eigen::VectorXd& ev = eig.eigenvalues();
        const double cutoff = kEigenCutoff * std::max(ev.cwiseAbs().maxCoeff(), 0.0);
        Eigen::VectorXd c = eig.eigenvectors().transpose() * y;
        for (Eigen::Index i = 0; i < m; ++i) c[i] = ev[i] > cutoff ? c[i] / ev[i] : 0.0;
        return eig.eigenvectors() * c;
    }

    Eigen::VectorXd ridge(const Eigen::VectorXd& y, double lambda) const override {
        const double m = static_cast<double>(A_.rows());
        Eigen::MatrixXd S = ata() / m;
        S.diagonal().array() += lambda;
        return Eigen::LLT<Eigen::MatrixXd>(S).solve(A_.transpose() * y / m);
    }

    Eigen::VectorXd weighted(const Eigen::VectorXd& rhs, double lambda, const Eigen::VectorXd& w) const override {
        const double m = static_cast<double>(A_.rows());
        Eigen::MatrixXd S = ata() / m;
        S.diagonal() += lambda * w;
        Eigen::LLT<Eigen::MatrixXd> llt(S);
        if (llt.info() == Eigen::Success) return llt.solve(rhs);
        return Eigen::LDLT<Eigen::MatrixXd>(S).solve(rhs);
    }

    double top_eigenvalue() const override {
        // Power iteration from a fixed start vector.
        const Eigen::Index m = A_.rows();
        Eigen::VectorXd v = Eigen::VectorXd::Ones(m) / std::sqrt(static_cast<double>(m));
        double est = 0.0;
        for (int it = 0; it < 500; ++it) {
            Eigen::VectorXd w = A_ * v;
            const double nrm = w.norm();
            if (nrm == 0.0) return 0.0;
            const double next = v.dot(w);
            v = w / nrm;
            if (std::abs(next - est) <= 1e-12 * std::abs(next)) {
                est = next;
                break;
            }
            est = next;
        }
        return est;
    }

    Eigen::MatrixXd range_basis() const override {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A_);
        const Eigen::VectorXd& ev = eig.eigenvalues();
        const double cutoff = kEigenCutoff * std::max(ev.maxCoeff(), 0.0);
        Eigen::Index first = 0;
        while (first < ev.size() && !(ev[first] > cutoff)) ++first;
        return eig.eigenvectors().rightCols(ev.size() - first);
    }

private:
    const Eigen::MatrixXd& ata() const {
        if (ata_.size() == 0) ata_ = A_.transpose() * A_;
        return ata_;
    }

    Eigen::MatrixXd A_;
    mutable Eigen::MatrixXd ata_;
};

// A = F F^T with F = U S V^T (thin SVD). All solves reduce to the
// rank-r spectral data; the orthogonal complement of range(U) is handled
// by projection.
class FactoredSystem final : public GramSystem {
public:
    FactoredSystem(const Eigen::MatrixXd& F, Eigen::VectorXd sqrt_weights) : sqrt_weights_(std::move(sqrt_weights)) {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(F, Eigen::ComputeThinU | Eigen::ComputeThinV);
        U_ = svd.matrixU();
        V_ = svd.matrixV();
        s_ = svd.singularValues();
        s2_ = s_.array().square();
        m_ = F.rows();
    }

    std::string name() const override { return "factored"; }
    Eigen::Index size() const override { return m_; }

    Eigen::VectorXd apply(const Eigen::VectorXd& v) const override {
        return U_ * (s2_.array() * (U_.transpose() * v).array()).matrix();
    }

    Eigen::VectorXd krr(const Eigen::VectorXd& y, double shift) const override {
        const Eigen::VectorXd c = U_.transpose() * y;
        if (shift > 0.0) {
            const Eigen::VectorXd inner = (c.array() / (s2_.array() + shift)).matrix();
            return U_ * inner + (y - U_ * c) / shift;
        }
        return U_ * least_norm_scale(c);
    }

    std::optional<Eigen::VectorXd> krr_spectral(const Eigen::VectorXd& y, double shift) const override {
        const Eigen::VectorXd c = U_.transpose() * y;
        Eigen::VectorXd inner;
        if (shift > 0.0) {
            inner = (s_.array() * c.array() / (s2_.array() + shift)).matrix();
        } else {
            inner = (s_.array() * least_norm_scale(c).array()).matrix();
        }
        return (sqrt_weights_.array() * (V_ * inner).array()).matrix();
    }

    Eigen::VectorXd ridge(const Eigen::VectorXd& y, double lambda) const override {
        const double m = static_cast<double>(m_);
        const Eigen::VectorXd c = U_.transpose() * y;
        const Eigen::ArrayXd s4 = s2_.array().square();
        return U_ * (s2_.array() * c.array() / (s4 + m * lambda)).matrix();
    }

    Eigen::VectorXd weighted(const Eigen::VectorXd& rhs, double lambda, const Eigen::VectorXd& w) const override {
        // A^T A / m = G G^T with G = U S^2 / sqrt(m). Woodbury with Z = (lambda W)^{-1}.
        const double m = static_cast<double>(m_);
        const Eigen::ArrayXd z = 1.0 / (lambda * w.array());
        const Eigen::MatrixXd G = U_ * (s2_.array() / std::sqrt(m)).matrix().asDiagonal();
        const Eigen::VectorXd t = (z * rhs.array()).matrix();
        Eigen::MatrixXd H = G.transpose() * z.matrix().asDiagonal() * G;
        H.diagonal().array() += 1.0;
        const Eigen::VectorXd corr = G * Eigen::LLT<Eigen::MatrixXd>(H).solve(G.transpose() * t);
        return t - (z * corr.array()).matrix();
    }

    double top_eigenvalue() const override { return s2_.size() > 0 ? s2_[0] : 0.0; }

    Eigen::MatrixXd range_basis() const override {
        const double cutoff = kEigenCutoff * (s2_.size() > 0 ? s2_[0] : 0.0);
        Eigen::Index r = 0;
        while (r < s2_.size() && s2_[r] > cutoff) ++r;
        return U_.leftCols(r);
    }

private:
    Eigen::VectorXd least_norm_scale(const Eigen::VectorXd& c) const {
        const double cutoff = kEigenCutoff * (s2_.size() > 0 ? s2_[0] : 0.0);
        Eigen::VectorXd out(c.size());
        for (Eigen::Index i = 0; i < c.size(); ++i) out[i] = s2_[i] > cutoff ? c[i] / s2_[i] : 0.0;
        return out;
    }

    Eigen::MatrixXd U_;
    Eigen::MatrixXd V_;
    Eigen::VectorXd s_;
    Eigen::VectorXd s2_;
    Eigen::VectorXd sqrt_weights_;
    Eigen::Index m_ = 0;
};

Eigen::VectorXd feature_sqrt_weights(const NeedletKernel& K) {
    Eigen::VectorXd sw(static_cast<Eigen::Index>(harmonic_count(K.max_degree())));
    for (int k = 0; k <= K.max_degree(); ++k) {
        sw.segment(static_cast<Eigen::Index>(harmonic_index(k, -k)), 2 * k + 1).setConstant(std::sqrt(K.weight(k)));
    }
    return sw;
}

std::unique_ptr<GramSystem> make_system(const Dataset& data, const NeedletKernel& K, Backend backend) {
    const auto m = data.size();
    const bool can_factor = K.d() == 2;
    if (backend == Backend::automatic) {
        backend = can_factor && harmonic_count(K.max_degree()) < m ? Backend::factored : Backend::dense;
    }
    if (backend == Backend::factored) {
        if (!can_factor) throw UnsupportedDimension("factored backend needs S^2");
        return std::make_unique<FactoredSystem>(kernel_features(K, data.x), feature_sqrt_weights(K));
    }
    return std::make_unique<DenseSystem>(gram(K, data.x));
}

Eigen::VectorXd to_eigen(std::span<const double> v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

double penalty(const Eigen::VectorXd& a, double q) {
    if (q == 2.0) return a.squaredNorm();
    if (q == 1.0) return a.lpNorm<1>();
    return a.array().abs().pow(q).sum();
}

double objective(const GramSystem& sys, const Eigen::VectorXd& Aa, const Eigen::VectorXd& y, const Eigen::VectorXd& a,
                 double lambda, double q) {
    return (Aa - y).squaredNorm() / static_cast<double>(sys.size()) + lambda * penalty(a, q);
}

Eigen::VectorXd soft_threshold(const Eigen::VectorXd& v, double tau) {
    return v.unaryExpr([tau](double x) { return x > tau ? x - tau : (x < -tau ? x + tau : 0.0); });
}

// With a rank-deficient Gram matrix the l^1 minimizers form a face, and
// proximal iterations settle in its relative interior (every coefficient
// nonzero). Moving along d with Q^T d = 0 and sgn(a)^T d = 0 keeps A a and
// ||a||_1 fixed until a coordinate reaches zero; repeating on blocks of
// rank + 2 coordinates leaves a vertex with at most rank + 1 nonzeros.
int reduce_support(const Eigen::MatrixXd& Q, Eigen::VectorXd& a) {
    const Eigen::Index r = Q.cols();
    const Eigen::Index block = r + 2;
    std::vector<Eigen::Index> support;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a[i] != 0.0) support.push_back(i);
    }
    int removed = 0;
    Eigen::MatrixXd M(r + 1, block);
    while (static_cast<Eigen::Index>(support.size()) >= block) {
        const std::size_t base = support.size() - static_cast<std::size_t>(block);
        for (Eigen::Index j = 0; j < block; ++j) {
            const Eigen::Index idx = support[base + static_cast<std::size_t>(j)];
            M.col(j).head(r) = Q.row(idx).transpose();
            M(r, j) = a[idx] > 0.0 ? 1.0 : -1.0;
        }
        const Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
        const Eigen::MatrixXd ker = lu.kernel();
        const Eigen::VectorXd d = ker.col(0);
        double step = std::numeric_limits<double>::infinity();
        Eigen::Index hit = -1;
        for (Eigen::Index j = 0; j < block; ++j) {
            if (d[j] == 0.0) continue;
            const double t = -a[support[base + static_cast<std::size_t>(j)]] / d[j];
            if (t > 0.0 && t < step) {
                step = t;
                hit = j;
            }
        }
        if (hit < 0) break;
        for (Eigen::Index j = 0; j < block; ++j) {
            const Eigen::Index idx = support[base + static_cast<std::size_t>(j)];
            const double before = a[idx];
            a[idx] += step * d[j];
            if (j == hit || (a[idx] > 0.0) != (before > 0.0)) a[idx] = 0.0;
        }
        std::vector<Eigen::Index> kept;
        for (std::size_t j = base; j < support.size(); ++j) {
            if (a[support[j]] != 0.0) kept.push_back(support[j]);
        }
        removed += static_cast<int>(support.size() - base - kept.size());
        support.resize(base);
        // Survivors go to the front so the next block mixes in fresh coordinates.
        support.insert(support.begin(), kept.begin(), kept.end());
    }
    return removed;
}

}  // namespace

KernelExpansion krr_fit(const Dataset& data, const NeedletKernel& K, double lambda, Backend backend) {
    if (!(lambda >= 0.0)) throw DomainError("KRR regularization must be non-negative");
    data.validate();
    const auto sys = make_system(data, K, backend);
    const Eigen::VectorXd y = to_eigen(data.y);
    const double shift = static_cast<double>(data.size()) * lambda;
    const Eigen::VectorXd a = sys->krr(y, shift);

    KernelExpansion f(K, data.x, to_std(a));
    if (auto b = sys->krr_spectral(y, shift)) {
        f.set_spectral(SpectralFunction(K.max_degree(), to_std(*b)));
    }
    SolverReport rep;
    rep.solver = lambda > 0.0 ? "krr-ridge" : "krr-least-norm";
    rep.backend = sys->name();
    const Eigen::VectorXd Aa = sys->apply(a);
    rep.objective = (Aa - y).squaredNorm() / static_cast<double>(data.size()) + lambda * a.dot(Aa);
    f.set_report(std::move(rep));
    return f;
}

KernelExpansion lq_fit(const Dataset& data, const NeedletKernel& K, double lambda, double q, const LqOptions& opts) {
    if (!(q > 0.0 && q <= 2.0)) throw DomainError("l^q order must lie in (0, 2]");
    if (!(lambda > 0.0)) throw DomainError("l^q regularization must be positive");
    data.validate();
    const auto sys = make_system(data, K, opts.backend);
    const Eigen::VectorXd y = to_eigen(data.y);
    const double m = static_cast<double>(data.size());

    SolverReport rep;
    rep.backend = sys->name();
    Eigen::VectorXd a;

    if (q == 2.0) {
        rep.solver = "lq-closed-form";
        a = sys->ridge(y, lambda);
        rep.objective = objective(*sys, sys->apply(a), y, a, lambda, q);
    } else if (q == 1.0) {
        rep.solver = "lq-fista";
        // Gradient of (1/m)||Aa - y||^2 is (2/m) A (Aa - y); Lipschitz 2 lambda_max(A)^2 / m.
        const double top = sys->top_eigenvalue();
        const double L = 2.0 * top * top / m * (rep.backend == "dense" ? 1.01 : 1.0);
        const double tau = lambda / L;
        Eigen::VectorXd x = Eigen::VectorXd::Zero(y.size());
        Eigen::VectorXd Ax = Eigen::VectorXd::Zero(y.size());
        Eigen::VectorXd v = x;
        Eigen::VectorXd Av = Ax;
        double t = 1.0;
        double fx = objective(*sys, Ax, y, x, lambda, q);
        if (opts.record_history) rep.objective_history.push_back(fx);
        rep.converged = false;
        if (L == 0.0) rep.converged = true;
        for (int it = 1; it <= opts.max_iterations && L > 0.0; ++it) {
            const Eigen::VectorXd grad = (2.0 / m) * sys->apply(Av - y);
            const Eigen::VectorXd z = soft_threshold(v - grad / L, tau);
            const Eigen::VectorXd Az = sys->apply(z);
            const double fz = objective(*sys, Az, y, z, lambda, q);
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            const bool accept = fz <= fx;
            const Eigen::VectorXd x_next = accept ? z : x;
            const Eigen::VectorXd Ax_next = accept ? Az : Ax;
            const double f_next = accept ? fz : fx;
            v = x_next + (t / t_next) * (z - x_next) + ((t - 1.0) / t_next) * (x_next - x);
            if (it % 50 == 0) {
                Av = sys->apply(v);
            } else {
                Av = Ax_next + (t / t_next) * (Az - Ax_next) + ((t - 1.0) / t_next) * (Ax_next - Ax);
            }
            const double rel = (fx - f_next) / std::max(std::abs(fx), std::numeric_limits<double>::min());
            x = x_next;
            Ax = Ax_next;
            fx = f_next;
            t = t_next;
            rep.iterations = it;
            if (opts.record_history) rep.objective_history.push_back(fx);
            if (accept && rel < opts.tolerance) {
                rep.converged = true;
                break;
            }
        }
        a = x;
        if (opts.reduce_support && rep.converged) {
            const double before = fx;
            rep.support_removed = reduce_support(sys->range_basis(), a);
            rep.objective = objective(*sys, sys->apply(a), y, a, lambda, q);
            // The move is exact in exact arithmetic; keep the FISTA point if rounding hurt.
            if (rep.objective > before + 1e-12 * std::abs(before)) {
                a = x;
                rep.objective = before;
                rep.support_removed = 0;
            }
        } else {
            rep.objective = fx;
        }
    } else {
        rep.solver = "lq-irls";
        const Eigen::VectorXd rhs = sys->apply(y) / m;
        a = sys->ridge(y, lambda);
        double fa = objective(*sys, sys->apply(a), y, a, lambda, q);
        if (opts.record_history) rep.objective_history.push_back(fa);
        rep.converged = false;
        for (int it = 1; it <= opts.max_iterations; ++it) {
            // Majorizer of |a|^q at the current point: (q/2)|a_i|^{q-2} a^2.
            const Eigen::VectorXd w =
                a.unaryExpr([&](double ai) { return 0.5 * q * std::pow(std::max(std::abs(ai), opts.weight_floor), q - 2.0); });
            const Eigen::VectorXd next = sys->weighted(rhs, lambda, w);
            const double fn = objective(*sys, sys->apply(next), y, next, lambda, q);
            const double rel = (fa - fn) / std::max(std::abs(fa), std::numeric_limits<double>::min());
            a = next;
            fa = fn;
            rep.iterations = it;
            if (opts.record_history) rep.objective_history.push_back(fa);
            if (std::abs(rel) < opts.tolerance) {
                rep.converged = true;
                break;
            }
        }
        rep.objective = fa;
    }
    if (!rep.converged) {
        rep.warning = "no convergence after " + std::to_string(rep.iterations) + " iterations";
    }
    KernelExpansion f(K, data.x, to_std(a));
    f.set_report(std::move(rep));
    return f;
}

double penalty_value(const KernelExpansion& f, double q) {
    if (!(q > 0.0)) throw DomainError("penalty order must be positive");
    return penalty(to_eigen(f.coeffs()), q);
}

double lq_objective(const Dataset& data, const NeedletKernel& K, std::span<const double> a, double lambda, double q) {
    const Eigen::MatrixXd A = gram(K, data.x);
    const Eigen::VectorXd av = to_eigen(a);
    const Eigen::VectorXd r = A * av - to_eigen(data.y);
    return r.squaredNorm() / static_cast<double>(data.size()) + lambda * penalty(av, q);
}

int count_nonzero(const KernelExpansion& f, double threshold) {
    return static_cast<int>(std::count_if(f.coeffs().begin(), f.coeffs().end(),
                                          [threshold](double a) { return std::abs(a) > threshold; }));
}

double empirical_error(const KernelExpansion& f, std::span<const SpherePoint> x, std::span<const double> y) {
    if (x.size() != y.size() || x.empty()) throw PreconditionError("empirical_error needs matching non-empty data");
    const auto v = f.evaluate(x);
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) acc += (v[i] - y[i]) * (v[i] - y[i]);
    return acc / static_cast<double>(x.size());
}

double spectral_error(const SpectralFunction& f, const SpectralFunction& target) {
    const int band = std::max(f.band_limit(), target.band_limit());
    double acc = 0.0;
    for (int k = 0; k <= band; ++k) {
        for (int m = -k; m <= k; ++m) {
            const double a = k <= f.band_limit() ? f.at(k, m) : 0.0;
            const double b = k <= target.band_limit() ? target.at(k, m) : 0.0;
            acc += (a - b) * (a - b);
        }
    }
    return acc / (4.0 * std::numbers::pi);
}

double uniform_density(const SpherePoint&) { return 1.0 / (4.0 * std::numbers::pi); }

double generalization_error(const KernelExpansion& f, const SpectralFunction& target, const SphericalQuadrature& quad,
                            const Density& density) {
    const auto fv = f.evaluate(quad.nodes);
    const auto tv = target.evaluate(quad.nodes);
    double acc = 0.0;
    for (std::size_t i = 0; i < fv.size(); ++i) {
        acc += quad.weights[i] * density(quad.nodes[i]) * (fv[i] - tv[i]) * (fv[i] - tv[i]);
    }
    return acc;
}

MonteCarloError generalization_error_mc(const KernelExpansion& f, const std::function<double(const SpherePoint&)>& target,
                                        std::span<const SpherePoint> test_points) {
    if (test_points.size() < 2) throw PreconditionError("Monte Carlo error needs at least two test points");
    const auto fv = f.evaluate(test_points);
    double mean = 0.0;
    double m2 = 0.0;
    for (std::size_t i = 0; i < fv.size(); ++i) {
        const double e = (fv[i] - target(test_points[i])) * (fv[i] - target(test_points[i]));
        const double delta = e - mean;
        mean += delta / static_cast<double>(i + 1);
        m2 += delta * (e - mean);
    }
    const double n = static_cast<double>(fv.size());
    return {mean, std::sqrt(m2 / (n - 1.0) / n)};
}

ErrorEvaluator::ErrorEvaluator(const SpectralFunction& target, SphericalQuadrature quad, int max_degree,
                               const Density& density)
    : quad_(std::move(quad)), max_degree_(max_degree) {
    phi_ = harmonic_matrix(max_degree, quad_.nodes);
    const auto tv = target.evaluate(quad_.nodes);
    target_values_ = Eigen::Map<const Eigen::VectorXd>(tv.data(), static_cast<Eigen::Index>(tv.size()));
    weights_.resize(static_cast<Eigen::Index>(quad_.size()));
    for (std::size_t i = 0; i < quad_.size(); ++i) {
        weights_[static_cast<Eigen::Index>(i)] = quad_.weights[i] * density(quad_.nodes[i]);
    }
    target_norm2_ = weights_.dot(target_values_.array().square().matrix());
}

double ErrorEvaluator::operator()(const SpectralFunction& f, std::optional<double> clamp) const {
    if (f.band_limit() > max_degree_) throw PreconditionError("function band exceeds the evaluator's degree");
    const Eigen::Map<const Eigen::VectorXd> c(f.coeffs().data(), static_cast<Eigen::Index>(f.coeffs().size()));
    Eigen::VectorXd v = phi_.leftCols(c.size()) * c;
    if (clamp) v = v.cwiseMax(-*clamp).cwiseMin(*clamp);
    return weights_.dot((v - target_values_).array().square().matrix());
}

}  // namespace needlet
