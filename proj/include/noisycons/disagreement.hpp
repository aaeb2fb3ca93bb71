#pragma once

#include "errors.hpp"
#include "markov.hpp"
#include "tolerances.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace noisycons {

/// Covariance of the per-step noise w(t). Scalar and diagonal forms are kept
/// as such so the closed forms can skip the dense products.
class NoiseCovariance {
public:
    struct Scalar {
        double variance;
    };
    struct Diagonal {
        Vector variances;
    };
    struct Full {
        Matrix matrix;
    };

    static NoiseCovariance scalar(std::size_t n, double variance)
    {
        if (!(variance >= 0.0) || !std::isfinite(variance)) {
            throw Error(ErrorCode::NotPositiveSemidefinite, "scalar variance must be finite and >= 0");
        }
        return NoiseCovariance(n, Scalar{variance});
    }

    static NoiseCovariance diagonal(Vector variances)
    {
        if (!variances.allFinite() || (variances.size() > 0 && variances.minCoeff() < 0.0)) {
            throw Error(ErrorCode::NotPositiveSemidefinite, "variances must be finite and >= 0");
        }
        const auto n = static_cast<std::size_t>(variances.size());
        return NoiseCovariance(n, Diagonal{std::move(variances)});
    }

    static NoiseCovariance diagonal(const std::vector<double>& variances)
    {
        return diagonal(Eigen::Map<const Vector>(variances.data(), static_cast<Index>(variances.size())));
    }

    /// Validates symmetry and positive semidefiniteness by Cholesky of
    /// S + eps I with eps = shift * trace / n.
    static NoiseCovariance full(Matrix m, const Tolerances& tol = default_tolerances)
    {
        if (m.rows() != m.cols()) throw Error(ErrorCode::DimensionMismatch, "covariance must be square");
        if (!m.allFinite()) throw Error(ErrorCode::NotPositiveSemidefinite, "covariance has non-finite entries");
        const Index n = m.rows();
        const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
        if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
            throw Error(ErrorCode::NotPositiveSemidefinite, "covariance is not symmetric");
        }
        m = 0.5 * (m + m.transpose()).eval();
        const double trace = m.trace();
        if (trace < 0.0) throw Error(ErrorCode::NotPositiveSemidefinite, "covariance has negative trace");
        if (trace == 0.0) {
            if (m.cwiseAbs().maxCoeff() != 0.0) throw Error(ErrorCode::NotPositiveSemidefinite, "zero trace but nonzero entries");
        } else {
            const double eps = tol.psd_shift * trace / static_cast<double>(n);
            Eigen::LLT<Matrix> llt(m + eps * Matrix::Identity(n, n));
            if (llt.info() != Eigen::Success) {
                throw Error(ErrorCode::NotPositiveSemidefinite, "shifted Cholesky failed");
            }
        }
        return NoiseCovariance(static_cast<std::size_t>(n), Full{std::move(m)});
    }

    [[nodiscard]] std::size_t size() const noexcept { return n_; }
    [[nodiscard]] bool is_scalar() const noexcept { return std::holds_alternative<Scalar>(kind_); }
    [[nodiscard]] bool is_diagonal() const noexcept { return !std::holds_alternative<Full>(kind_); }
    [[nodiscard]] std::string_view kind_name() const noexcept
    {
        return is_scalar() ? "scalar" : is_diagonal() ? "diagonal" : "full";
    }

    /// Only meaningful for the scalar form.
    [[nodiscard]] double scalar_variance() const { return std::get<Scalar>(kind_).variance; }

    [[nodiscard]] Vector variances() const
    {
        const auto n = static_cast<Index>(n_);
        if (const auto* s = std::get_if<Scalar>(&kind_)) return Vector::Constant(n, s->variance);
        if (const auto* d = std::get_if<Diagonal>(&kind_)) return d->variances;
        return std::get<Full>(kind_).matrix.diagonal();
    }

    [[nodiscard]] Matrix matrix() const
    {
        if (const auto* f = std::get_if<Full>(&kind_)) return f->matrix;
        return variances().asDiagonal();
    }

    /// A factor L with L L^T = S. Diagonal forms take square roots; full
    /// matrices use the eigendecomposition, with roundoff-negative
    /// eigenvalues clamped to zero so rank-deficient S are handled exactly.
    [[nodiscard]] Matrix sampling_factor() const
    {
        if (const auto* f = std::get_if<Full>(&kind_)) {
            Eigen::SelfAdjointEigenSolver<Matrix> solver(f->matrix);
            if (solver.info() != Eigen::Success) throw Error(ErrorCode::EigSolverFailure, "covariance factorisation failed");
            const Vector roots = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
            return solver.eigenvectors() * roots.asDiagonal();
        }
        return variances().cwiseSqrt().asDiagonal();
    }

    friend NoiseCovariance operator*(double a, const NoiseCovariance& s)
    {
        if (a < 0.0) throw Error(ErrorCode::NotPositiveSemidefinite, "negative covariance scaling");
        if (s.is_scalar()) return scalar(s.n_, a * s.scalar_variance());
        if (s.is_diagonal()) return diagonal(Vector(a * s.variances()));
        return full(a * s.matrix());
    }

    friend NoiseCovariance operator+(const NoiseCovariance& a, const NoiseCovariance& b)
    {
        if (a.n_ != b.n_) throw Error(ErrorCode::DimensionMismatch, "covariance sizes differ");
        if (a.is_scalar() && b.is_scalar()) return scalar(a.n_, a.scalar_variance() + b.scalar_variance());
        if (a.is_diagonal() && b.is_diagonal()) return diagonal(Vector(a.variances() + b.variances()));
        return full(a.matrix() + b.matrix());
    }

private:
    NoiseCovariance(std::size_t n, std::variant<Scalar, Diagonal, Full> kind)
        : n_(n)
        , kind_(std::move(kind))
    {
    }

    std::size_t n_;
    std::variant<Scalar, Diagonal, Full> kind_;
};

enum class Method { Theorem, Diagonal, Kemeny, Spectral, Resistance, Oracle, MonteCarlo };

constexpr std::string_view to_string(Method m) noexcept
{
    switch (m) {
    case Method::Theorem: return "theorem1";
    case Method::Diagonal: return "diagonal";
    case Method::Kemeny: return "kemeny";
    case Method::Spectral: return "spectral";
    case Method::Resistance: return "resistance";
    case Method::Oracle: return "oracle";
    case Method::MonteCarlo: return "montecarlo";
    }
    return "unknown";
}

struct Diagnostics {
    std::size_t iterations = 0;
    double residual = 0.0;
};

struct DisagreementReport {
    double delta_ss = 0.0;
    double delta_uni_lower = 0.0;
    double delta_uni_upper = 0.0;
    std::optional<double> delta_uni_exact;
    Method method = Method::Theorem;
    std::size_t n = 0;
    std::string graph_family;
    std::optional<std::uint64_t> seed;
    Diagnostics diagnostics;
};

struct SteadyStateCovariance {
    Matrix sigma;
    bool converged = false;
    std::size_t iterations = 0;
    double residual = 0.0;
};

/// Data shared by every closed form: pi and the hitting times of P^2.
struct SquaredChain {
    Vector pi;
    Matrix hitting; // H_{P^2}
    Tolerances tol;

    [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(pi.size()); }
    [[nodiscard]] double kemeny() const { return kemeny_from_hitting(hitting, pi, tol); }
};

namespace detail {

inline void require_reversible(const StochasticMatrix& p)
{
    if (!p.irreducible()) throw Error(ErrorCode::NotIrreducible, "chain is not irreducible");
    if (!p.aperiodic()) throw Error(ErrorCode::NotAperiodic, "chain is periodic");
    if (!p.reversible()) throw Error(ErrorCode::NotReversible, "closed form needs a reversible chain");
}

inline void require_symmetric(const StochasticMatrix& p)
{
    if (!p.symmetric()) throw Error(ErrorCode::NotSymmetric, "formula needs a symmetric P");
    require_reversible(p);
}

inline void require_size(const StochasticMatrix& p, const NoiseCovariance& sw)
{
    if (p.size() != sw.size()) throw Error(ErrorCode::DimensionMismatch, "noise covariance size does not match P");
}

} // namespace detail

inline SquaredChain square_chain_data(const StochasticMatrix& p, HittingMethod method = HittingMethod::Auto)
{
    detail::require_reversible(p);
    const StochasticMatrix p2 = square_chain(p);
    return SquaredChain{p.stationary(), hitting_times(p2, method), p.tolerances()};
}

/// Bounds pi-weighted disagreement into the uniform one:
/// delta/(n pi_max) <= delta_uni <= delta/(n pi_min).
inline std::pair<double, double> uni_sandwich(double delta_ss, const Vector& pi)
{
    const double n = static_cast<double>(pi.size());
    return {delta_ss / (n * pi.maxCoeff()), delta_ss / (n * pi.minCoeff())};
}

/// pi^T H D S D 1 - Tr(H D S D) with H = H_{P^2} and D = diag(pi).
inline double theorem_value(const SquaredChain& sq, const NoiseCovariance& sw)
{
    const Vector& pi = sq.pi;
    const Matrix& h = sq.hitting;
    if (sw.is_diagonal()) {
        // Tr term vanishes because H has zero diagonal.
        const Vector weights = sw.variances().cwiseProduct(pi).cwiseProduct(pi);
        return pi.dot(h * weights);
    }
    const Matrix s = sw.matrix();
    const Matrix dsd = pi.asDiagonal() * s * pi.asDiagonal();
    const double first = pi.dot(h * dsd.rowwise().sum());
    const double second = h.cwiseProduct(dsd.transpose()).sum();
    return first - second;
}

inline DisagreementReport delta_ss_theorem(const SquaredChain& sq, const NoiseCovariance& sw)
{
    if (sq.size() != sw.size()) throw Error(ErrorCode::DimensionMismatch, "noise covariance size does not match P");
    DisagreementReport r;
    r.delta_ss = theorem_value(sq, sw);
    std::tie(r.delta_uni_lower, r.delta_uni_upper) = uni_sandwich(r.delta_ss, sq.pi);
    r.method = Method::Theorem;
    r.n = sq.size();
    return r;
}

/// Weighted steady-state disagreement of a reversible chain from hitting times of P^2.
inline DisagreementReport delta_ss_theorem(const StochasticMatrix& p, const NoiseCovariance& sw)
{
    detail::require_size(p, sw);
    return delta_ss_theorem(square_chain_data(p), sw);
}

/// Uncorrelated noise: sum_i sum_j s_i pi_i^2 pi_j H_{P^2}(j -> i).
inline double delta_ss_diag(const SquaredChain& sq, const Vector& sigmas)
{
    if (static_cast<std::size_t>(sigmas.size()) != sq.size()) {
        throw Error(ErrorCode::DimensionMismatch, "variance vector size does not match P");
    }
    const Index n = sigmas.size();
    double total = 0.0;
    for (Index i = 0; i < n; ++i) {
        double access = 0.0;
        for (Index j = 0; j < n; ++j) access += sq.pi(j) * sq.hitting(j, i);
        total += sigmas(i) * sq.pi(i) * sq.pi(i) * access;
    }
    return total;
}

inline double delta_ss_diag(const StochasticMatrix& p, const Vector& sigmas)
{
    return delta_ss_diag(square_chain_data(p), sigmas);
}

/// Symmetric P, scalar noise: s K(P^2) / n.
inline double delta_ss_kemeny(const StochasticMatrix& p, double sigma2)
{
    detail::require_symmetric(p);
    const double n = static_cast<double>(p.size());
    return sigma2 * kemeny_constant_combinatorial(square_chain(p)) / n;
}

/// Symmetric P, scalar noise: (s/n) sum over non-principal eigenvalues of 1/(1 - lambda^2).
inline double delta_ss_spectral(const StochasticMatrix& p, double sigma2)
{
    detail::require_symmetric(p);
    const auto n = static_cast<Index>(p.size());
    if (n == 1) return 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> solver(p.matrix(), Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw Error(ErrorCode::EigSolverFailure, "symmetric eigensolver failed");
    // Ascending order; the principal eigenvalue 1 is last.
    double sum = 0.0;
    for (Index i = 0; i + 1 < n; ++i) {
        const double lambda = solver.eigenvalues()(i);
        sum += 1.0 / (1.0 - lambda * lambda);
    }
    return sigma2 * sum / static_cast<double>(n);
}

/// Symmetric P, scalar noise: (s/n) sum_{i<j} R_{P^2}(i,j) / n^2.
inline double delta_ss_resistance(const StochasticMatrix& p, double sigma2)
{
    detail::require_symmetric(p);
    const double n = static_cast<double>(p.size());
    const Matrix r = effective_resistance(square_chain(p));
    const double upper = r.triangularView<Eigen::StrictlyUpper>().toDenseMatrix().sum();
    return sigma2 / n * upper / (n * n);
}

/// (lower, upper) = (min_i s_i pi_i * K(P^2), max_i s_i pi_i * max R_{P^2}).
inline std::pair<double, double> delta_ss_bounds(const SquaredChain& sq, const Vector& sigmas)
{
    if (static_cast<std::size_t>(sigmas.size()) != sq.size()) {
        throw Error(ErrorCode::DimensionMismatch, "variance vector size does not match P");
    }
    if (sq.size() == 1) return {0.0, 0.0};
    const Vector weighted = sigmas.cwiseProduct(sq.pi);
    const double max_r = effective_resistance(sq.hitting).maxCoeff();
    return {weighted.minCoeff() * sq.kemeny(), weighted.maxCoeff() * max_r};
}

inline std::pair<double, double> delta_ss_bounds(const StochasticMatrix& p, const Vector& sigmas)
{
    return delta_ss_bounds(square_chain_data(p), sigmas);
}

inline std::pair<double, double> delta_uni_bounds(const StochasticMatrix& p, const NoiseCovariance& sw)
{
    const auto r = delta_ss_theorem(p, sw);
    return {r.delta_uni_lower, r.delta_uni_upper};
}

/// J = 1 pi^T.
inline Matrix j_matrix(const StochasticMatrix& p)
{
    const Vector& pi = p.stationary();
    return Vector::Ones(pi.size()) * pi.transpose();
}

struct OracleOptions {
    double tol = default_tolerances.oracle;
    std::optional<std::size_t> max_iters; // default derived from rho(P - J)
    std::optional<Matrix> initial;        // Sigma(0); zero when absent
};

/// Iteration cap for the covariance recursion: ceil(200 / max(1e-6, -ln rho)),
/// kept within [100, 1e7].
/// Chains with a unit-modulus non-principal eigenvalue cannot converge, so
/// they get a short cap instead of the astronomically large formula value.
inline std::size_t default_oracle_iterations(double rho)
{
    if (rho >= 1.0 - 1e-9) return 10'000;
    const double rate = std::max(1e-6, -std::log(std::max(rho, 1e-300)));
    return static_cast<std::size_t>(std::clamp(std::ceil(200.0 / rate), 100.0, 1e7));
}

/// Ground truth for any irreducible chain: iterate
/// S(t+1) = (P-J) S(t) (P-J)^T + (I-J) Sw (I-J)^T to its fixed point.
inline std::pair<SteadyStateCovariance, DisagreementReport>
delta_oracle(const StochasticMatrix& p, const NoiseCovariance& sw, const OracleOptions& opt = {})
{
    detail::require_size(p, sw);
    if (!p.irreducible()) throw Error(ErrorCode::NotIrreducible, "oracle needs an irreducible chain");
    const Index n = static_cast<Index>(p.size());
    const Vector& pi = p.stationary();
    const Matrix j = j_matrix(p);
    const Matrix a = p.matrix() - j;
    const Matrix proj = Matrix::Identity(n, n) - j;
    const Matrix drive = proj * sw.matrix() * proj.transpose();
    const std::size_t max_iters = opt.max_iters.value_or(default_oracle_iterations(second_eigenvalue_modulus(p)));

    Matrix sigma = opt.initial.value_or(Matrix::Zero(n, n));
    if (sigma.rows() != n || sigma.cols() != n) throw Error(ErrorCode::DimensionMismatch, "initial covariance size");
    SteadyStateCovariance out;
    Matrix next(n, n);
    for (std::size_t it = 1; it <= max_iters; ++it) {
        next.noalias() = a * sigma * a.transpose();
        next += drive;
        const double step = (next - sigma).cwiseAbs().maxCoeff();
        const double size = sigma.cwiseAbs().maxCoeff();
        sigma.swap(next);
        if (step <= opt.tol * (1.0 + size)) {
            out.converged = true;
            out.iterations = it;
            break;
        }
    }
    if (!out.converged) {
        throw Error(ErrorCode::NoConvergence,
                    "covariance recursion did not settle in " + std::to_string(max_iters)
                        + " iterations (trace " + std::to_string(sigma.trace()) + ")");
    }
    sigma = 0.5 * (sigma + sigma.transpose()).eval();
    out.residual = (a * sigma * a.transpose() + drive - sigma).cwiseAbs().maxCoeff();
    out.sigma = sigma;

    DisagreementReport r;
    r.delta_ss = sigma.diagonal().dot(pi);
    r.delta_uni_exact = sigma.trace() / static_cast<double>(n);
    std::tie(r.delta_uni_lower, r.delta_uni_upper) = uni_sandwich(r.delta_ss, pi);
    r.method = Method::Oracle;
    r.n = static_cast<std::size_t>(n);
    r.diagnostics = {out.iterations, out.residual};
    return {std::move(out), std::move(r)};
}

/// Closed-form S^ = -H D Sw D + 1 pi^T H D Sw D, H = H_{P^2}, D = diag(pi).
inline Matrix sigma_hat(const SquaredChain& sq, const NoiseCovariance& sw)
{
    if (sq.size() != sw.size()) throw Error(ErrorCode::DimensionMismatch, "noise covariance size does not match P");
    const Vector& pi = sq.pi;
    const Matrix hdsd = sq.hitting * pi.asDiagonal() * sw.matrix() * pi.asDiagonal();
    return -hdsd + Vector::Ones(pi.size()) * (pi.transpose() * hdsd);
}

inline Matrix sigma_hat(const StochasticMatrix& p, const NoiseCovariance& sw)
{
    return sigma_hat(square_chain_data(p), sw);
}

struct IdentityCheck {
    std::string name;
    double error = 0.0;
    bool passed = false;
};

struct JPropertyReport {
    std::vector<IdentityCheck> checks;
    double spectral_radius = 0.0; // rho(P - J)

    [[nodiscard]] bool all_passed() const
    {
        return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
    }
    [[nodiscard]] std::vector<std::string> violations() const
    {
        std::vector<std::string> out;
        for (const auto& c : checks)
            if (!c.passed) out.push_back(c.name);
        return out;
    }
};

/// Evaluates the algebraic identities of J = 1 pi^T against P and reports
/// each one's worst entrywise error; never throws on a violation.
inline JPropertyReport check_j_properties(const StochasticMatrix& p, double tol = 1e-12)
{
    JPropertyReport rep;
    const Index n = static_cast<Index>(p.size());
    const Matrix& pm = p.matrix();
    const Matrix j = j_matrix(p);
    const Matrix id = Matrix::Identity(n, n);
    auto add = [&](std::string name, double err) { rep.checks.push_back({std::move(name), err, err <= tol}); };
    auto inf = [](const Matrix& m) { return m.cwiseAbs().maxCoeff(); };

    add("J1 = 1", (j * Vector::Ones(n) - Vector::Ones(n)).cwiseAbs().maxCoeff());
    add("JP = J", inf(j * pm - j));
    add("PJ = J", inf(pm * j - j));
    add("J^2 = J", inf(j * j - j));
    add("(I-J)^2 = I-J", inf((id - j) * (id - j) - (id - j)));

    double power_err = 0.0;
    for (int l = 1; l <= 3; ++l) {
        Matrix pl = id;
        for (int s = 0; s < l; ++s) pl = pl * pm;
        const Matrix base = pl - j;
        Matrix lhs = base;
        Matrix plk = pl;
        for (int k = 1; k <= 3; ++k) {
            if (k > 1) {
                lhs = lhs * base;
                plk = plk * pl;
            }
            power_err = std::max(power_err, inf(lhs - (plk - j)));
        }
    }
    add("(P^l-J)^k = P^lk - J", power_err);

    Eigen::EigenSolver<Matrix> solver(pm - j, false);
    if (solver.info() != Eigen::Success) {
        rep.checks.push_back({"rho(P-J) < 1", 1.0, false});
        return rep;
    }
    rep.spectral_radius = solver.eigenvalues().cwiseAbs().maxCoeff();
    rep.checks.push_back({"rho(P-J) < 1", rep.spectral_radius, rep.spectral_radius < 1.0 - tol});
    return rep;
}

} // namespace noisycons
