#pragma once

#include "errors.hpp"
#include "graph.hpp"
#include "tolerances.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace noisycons {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Row-stochastic dense matrix. Structural flags (irreducible, aperiodic,
/// symmetric, reversible) and the stationary distribution are computed on
/// first use and shared between copies.
class StochasticMatrix {
public:
    explicit StochasticMatrix(Matrix entries, const Tolerances& tol = default_tolerances)
        : entries_(std::move(entries))
        , tol_(tol)
        , cache_(std::make_shared<Cache>())
    {
        if (entries_.rows() != entries_.cols() || entries_.rows() == 0) {
            throw Error(ErrorCode::DimensionMismatch, "stochastic matrix must be square and non-empty");
        }
        if (!entries_.allFinite() || entries_.minCoeff() < 0.0) {
            throw Error(ErrorCode::InvalidParam, "stochastic matrix entries must be finite and >= 0");
        }
        const double worst = (entries_.rowwise().sum().array() - 1.0).abs().maxCoeff();
        if (worst > tol_.row_sum) {
            throw Error(ErrorCode::InvalidParam, "row sums deviate from 1 by " + std::to_string(worst));
        }
    }

    [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(entries_.rows()); }
    [[nodiscard]] const Matrix& matrix() const noexcept { return entries_; }
    [[nodiscard]] double operator()(Index i, Index j) const { return entries_(i, j); }
    [[nodiscard]] const Tolerances& tolerances() const noexcept { return tol_; }

    [[nodiscard]] bool irreducible() const
    {
        std::lock_guard lock(cache_->mutex);
        if (!cache_->irreducible) cache_->irreducible = compute_irreducible();
        return *cache_->irreducible;
    }

    [[nodiscard]] bool aperiodic() const
    {
        if (!irreducible()) return false;
        std::lock_guard lock(cache_->mutex);
        if (!cache_->aperiodic) cache_->aperiodic = compute_period() == 1;
        return *cache_->aperiodic;
    }

    [[nodiscard]] bool symmetric() const
    {
        std::lock_guard lock(cache_->mutex);
        if (!cache_->symmetric) {
            cache_->symmetric = (entries_ - entries_.transpose()).cwiseAbs().maxCoeff() <= tol_.symmetry;
        }
        return *cache_->symmetric;
    }

    /// Detailed balance against the stationary distribution. Reducible
    /// chains report false.
    [[nodiscard]] bool reversible() const
    {
        if (!irreducible()) return false;
        const Vector& pi = stationary();
        std::lock_guard lock(cache_->mutex);
        if (!cache_->reversible) {
            const Matrix flow = pi.asDiagonal() * entries_;
            const double scale = flow.maxCoeff();
            cache_->reversible = (flow - flow.transpose()).cwiseAbs().maxCoeff() <= tol_.reversibility * scale;
        }
        return *cache_->reversible;
    }

    /// Stationary distribution: pi^T P = pi^T with one balance equation
    /// replaced by sum(pi) = 1, solved by partial-pivot LU.
    [[nodiscard]] const Vector& stationary() const
    {
        if (!irreducible()) throw Error(ErrorCode::NotIrreducible, "stationary distribution needs an irreducible chain");
        std::lock_guard lock(cache_->mutex);
        if (!cache_->pi) {
            const Index n = entries_.rows();
            Matrix a = entries_.transpose() - Matrix::Identity(n, n);
            a.row(n - 1).setOnes();
            Vector rhs = Vector::Zero(n);
            rhs(n - 1) = 1.0;
            Vector pi = a.partialPivLu().solve(rhs);
            const double residual = (pi.transpose() * entries_ - pi.transpose()).cwiseAbs().maxCoeff();
            if (!pi.allFinite() || pi.minCoeff() <= 0.0 || residual > tol_.stationarity) {
                throw Error(ErrorCode::SingularSystem,
                            "stationary solve failed (residual " + std::to_string(residual) + ")");
            }
            cache_->pi = std::move(pi);
        }
        return *cache_->pi;
    }

private:
    struct Cache {
        std::mutex mutex;
        std::optional<bool> irreducible;
        std::optional<bool> aperiodic;
        std::optional<bool> symmetric;
        std::optional<bool> reversible;
        std::optional<Vector> pi;
    };

    [[nodiscard]] std::vector<std::vector<Index>> pattern(bool transposed) const
    {
        const Index n = entries_.rows();
        std::vector<std::vector<Index>> adj(static_cast<std::size_t>(n));
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < n; ++j)
                if (entries_(i, j) > 0.0) {
                    if (transposed) adj[static_cast<std::size_t>(j)].push_back(i);
                    else adj[static_cast<std::size_t>(i)].push_back(j);
                }
        return adj;
    }

    static std::vector<long> bfs_levels(const std::vector<std::vector<Index>>& adj)
    {
        std::vector<long> level(adj.size(), -1);
        std::vector<Index> frontier{0};
        level[0] = 0;
        for (std::size_t head = 0; head < frontier.size(); ++head) {
            const Index u = frontier[head];
            for (Index v : adj[static_cast<std::size_t>(u)]) {
                if (level[static_cast<std::size_t>(v)] < 0) {
                    level[static_cast<std::size_t>(v)] = level[static_cast<std::size_t>(u)] + 1;
                    frontier.push_back(v);
                }
            }
        }
        return level;
    }

    // Strongly connected iff node 0 reaches every node in the pattern and in its transpose.
    [[nodiscard]] bool compute_irreducible() const
    {
        for (bool transposed : {false, true}) {
            const auto level = bfs_levels(pattern(transposed));
            if (std::any_of(level.begin(), level.end(), [](long l) { return l < 0; })) return false;
        }
        return true;
    }

    // Period = gcd over positive entries (u,v) of level(u) + 1 - level(v).
    [[nodiscard]] long compute_period() const
    {
        const Index n = entries_.rows();
        for (Index i = 0; i < n; ++i)
            if (entries_(i, i) > 0.0) return 1;
        const auto adj = pattern(false);
        const auto level = bfs_levels(adj);
        long g = 0;
        for (Index u = 0; u < n; ++u)
            for (Index v : adj[static_cast<std::size_t>(u)])
                g = std::gcd(g, std::labs(level[static_cast<std::size_t>(u)] + 1 - level[static_cast<std::size_t>(v)]));
        return g == 0 ? 1 : g;
    }

    Matrix entries_;
    Tolerances tol_;
    std::shared_ptr<Cache> cache_;
};

/// P~(i,j) = 1/d(i) on edges.
inline StochasticMatrix simple_walk_matrix(const Graph& g)
{
    const std::size_t n = g.node_count();
    if (n < 2) throw Error(ErrorCode::InvalidParam, "simple walk needs n >= 2");
    if (!is_connected(g)) throw Error(ErrorCode::DisconnectedGraph, "graph '" + g.family_tag() + "' is disconnected");
    Matrix p = Matrix::Zero(static_cast<Index>(n), static_cast<Index>(n));
    for (NodeId i = 0; i < n; ++i) {
        const double w = 1.0 / static_cast<double>(g.degree(i));
        for (NodeId j : g.neighbors(i)) p(static_cast<Index>(i), static_cast<Index>(j)) = w;
    }
    return StochasticMatrix(std::move(p));
}

/// P = I/2 + P~/2. A single node gives the 1x1 identity.
inline StochasticMatrix lazy_walk_matrix(const Graph& g)
{
    const std::size_t n = g.node_count();
    if (n == 1) return StochasticMatrix(Matrix::Identity(1, 1));
    const Matrix simple = simple_walk_matrix(g).matrix();
    return StochasticMatrix(0.5 * Matrix::Identity(simple.rows(), simple.cols()) + 0.5 * simple);
}

/// P = I - L / (2 d_max): symmetric, lazy, uniform stationary distribution.
/// Coincides with the lazy walk on regular graphs.
inline StochasticMatrix max_degree_walk_matrix(const Graph& g)
{
    const std::size_t n = g.node_count();
    if (n == 1) return StochasticMatrix(Matrix::Identity(1, 1));
    if (!is_connected(g)) throw Error(ErrorCode::DisconnectedGraph, "graph '" + g.family_tag() + "' is disconnected");
    const double eps = 1.0 / (2.0 * static_cast<double>(g.max_degree()));
    Matrix p = Matrix::Identity(static_cast<Index>(n), static_cast<Index>(n));
    for (const auto& [a, b] : g.edges()) {
        const auto i = static_cast<Index>(a);
        const auto j = static_cast<Index>(b);
        p(i, j) = p(j, i) = eps;
        p(i, i) -= eps;
        p(j, j) -= eps;
    }
    return StochasticMatrix(std::move(p));
}

/// pi_i = d(i) / (2m) for walks built from an undirected graph.
inline Vector degree_stationary(const Graph& g)
{
    const std::size_t n = g.node_count();
    Vector pi(static_cast<Index>(n));
    if (n == 1) {
        pi(0) = 1.0;
        return pi;
    }
    const double two_m = 2.0 * static_cast<double>(g.edge_count());
    for (NodeId i = 0; i < n; ++i) pi(static_cast<Index>(i)) = static_cast<double>(g.degree(i)) / two_m;
    return pi;
}

inline const Vector& stationary_distribution(const StochasticMatrix& p) { return p.stationary(); }

inline StochasticMatrix square_chain(const StochasticMatrix& p)
{
    Matrix sq = p.matrix() * p.matrix();
    // Renormalise rows so roundoff cannot push a row sum past the tolerance.
    sq.array().colwise() /= sq.rowwise().sum().array();
    return StochasticMatrix(std::move(sq), p.tolerances());
}

enum class HittingMethod {
    Auto,       // per-target below per_target_limit, fundamental matrix above
    PerTarget,  // one LU solve per target state
    Fundamental // Z = (I - P + 1 pi^T)^{-1}, H(i,j) = (Z_jj - Z_ij) / pi_j
};

inline constexpr std::size_t per_target_limit = 128;

namespace detail {

inline Matrix hitting_per_target(const Matrix& p)
{
    const Index n = p.rows();
    Matrix h = Matrix::Zero(n, n);
    if (n == 1) return h;
    Matrix a(n - 1, n - 1);
    std::vector<Index> keep(static_cast<std::size_t>(n - 1));
    for (Index j = 0; j < n; ++j) {
        for (Index k = 0, c = 0; k < n; ++k)
            if (k != j) keep[static_cast<std::size_t>(c++)] = k;
        for (Index r = 0; r < n - 1; ++r)
            for (Index c = 0; c < n - 1; ++c)
                a(r, c) = (r == c ? 1.0 : 0.0) - p(keep[static_cast<std::size_t>(r)], keep[static_cast<std::size_t>(c)]);
        Eigen::PartialPivLU<Matrix> lu(a);
        const Vector sol = lu.solve(Vector::Ones(n - 1));
        for (Index r = 0; r < n - 1; ++r) h(keep[static_cast<std::size_t>(r)], j) = sol(r);
    }
    return h;
}

inline Matrix hitting_fundamental(const Matrix& p, const Vector& pi)
{
    const Index n = p.rows();
    Matrix a = Matrix::Identity(n, n) - p;
    a.rowwise() += pi.transpose();
    const Matrix z = a.partialPivLu().inverse();
    Matrix h(n, n);
    for (Index j = 0; j < n; ++j) h.col(j) = (Vector::Constant(n, z(j, j)) - z.col(j)) / pi(j);
    h.diagonal().setZero();
    return h;
}

} // namespace detail

/// Expected first-passage times H(i,j), H(i,i) = 0. Every off-diagonal entry
/// satisfies h_i = 1 + sum_{k != j} P_ik h_k; the residual of that system is
/// checked for both routes.
inline Matrix hitting_times(const StochasticMatrix& p, HittingMethod method = HittingMethod::Auto)
{
    if (!p.irreducible()) throw Error(ErrorCode::NotIrreducible, "hitting times need an irreducible chain");
    const Index n = static_cast<Index>(p.size());
    if (method == HittingMethod::Auto) {
        method = p.size() <= per_target_limit ? HittingMethod::PerTarget : HittingMethod::Fundamental;
    }
    Matrix h = method == HittingMethod::PerTarget ? detail::hitting_per_target(p.matrix())
                                                  : detail::hitting_fundamental(p.matrix(), p.stationary());
    if (n == 1) return h;
    // (I - P) H - 1 1^T vanishes off the diagonal.
    Matrix residual = h - p.matrix() * h;
    residual.array() -= 1.0;
    residual.diagonal().setZero();
    const double scale = std::max(1.0, h.maxCoeff());
    const double worst = residual.cwiseAbs().maxCoeff();
    if (!h.allFinite() || worst > p.tolerances().hitting_residual * static_cast<double>(n) * scale) {
        throw Error(ErrorCode::SingularSystem, "hitting-time residual " + std::to_string(worst));
    }
    return h;
}

/// max_{i,j} H(i,j).
inline double max_hitting_time(const Matrix& h) { return h.size() == 0 ? 0.0 : h.maxCoeff(); }

/// Kemeny's constant as sum_j pi_j H(i,j), checked to be the same for every start i.
inline double kemeny_from_hitting(const Matrix& h, const Vector& pi, const Tolerances& tol = default_tolerances)
{
    if (h.rows() <= 1) return 0.0;
    const Vector rows = h * pi;
    const double k = rows(0);
    const double spread = (rows.array() - k).abs().maxCoeff();
    if (spread > tol.random_target * (1.0 + std::abs(k))) {
        throw Error(ErrorCode::RandomTargetViolation, "Kemeny row sums spread by " + std::to_string(spread));
    }
    return k;
}

inline double kemeny_constant_combinatorial(const StochasticMatrix& p)
{
    if (!p.irreducible()) throw Error(ErrorCode::NotIrreducible, "Kemeny constant needs an irreducible chain");
    if (p.size() == 1) return 0.0;
    return kemeny_from_hitting(hitting_times(p), p.stationary(), p.tolerances());
}

/// Eigenvalues with the principal (closest to 1) removed. Reversible chains
/// use the symmetric form D^{1/2} P D^{-1/2}; others a general eigensolver.
inline std::vector<std::complex<double>> nonprincipal_eigenvalues(const StochasticMatrix& p)
{
    const Index n = static_cast<Index>(p.size());
    std::vector<std::complex<double>> ev;
    if (p.reversible()) {
        const Vector root = p.stationary().cwiseSqrt();
        Matrix s = root.asDiagonal() * p.matrix() * root.cwiseInverse().asDiagonal();
        s = 0.5 * (s + s.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Matrix> solver(s, Eigen::EigenvaluesOnly);
        if (solver.info() != Eigen::Success) throw Error(ErrorCode::EigSolverFailure, "symmetric eigensolver failed");
        for (Index i = 0; i < n; ++i) ev.emplace_back(solver.eigenvalues()(i), 0.0);
    } else {
        Eigen::EigenSolver<Matrix> solver(p.matrix(), false);
        if (solver.info() != Eigen::Success) throw Error(ErrorCode::EigSolverFailure, "eigensolver failed");
        for (Index i = 0; i < n; ++i) ev.push_back(solver.eigenvalues()(i));
    }
    const auto principal = std::min_element(ev.begin(), ev.end(), [](auto a, auto b) {
        return std::abs(a - 1.0) < std::abs(b - 1.0);
    });
    ev.erase(principal);
    return ev;
}

/// Largest modulus among non-principal eigenvalues, i.e. rho(P - J).
inline double second_eigenvalue_modulus(const StochasticMatrix& p)
{
    if (p.size() == 1) return 0.0;
    double rho = 0.0;
    for (auto lambda : nonprincipal_eigenvalues(p)) rho = std::max(rho, std::abs(lambda));
    return rho;
}

/// K = sum over non-principal eigenvalues of 1/(1 - lambda).
inline double kemeny_constant_spectral(const StochasticMatrix& p)
{
    if (!p.irreducible()) throw Error(ErrorCode::NotIrreducible, "Kemeny constant needs an irreducible chain");
    if (!p.aperiodic()) throw Error(ErrorCode::NotAperiodic, "spectral Kemeny constant needs an aperiodic chain");
    std::complex<double> sum = 0.0;
    for (auto lambda : nonprincipal_eigenvalues(p)) sum += 1.0 / (1.0 - lambda);
    if (std::abs(sum.imag()) > p.tolerances().imaginary_residue * (1.0 + std::abs(sum.real()))) {
        throw Error(ErrorCode::EigSolverFailure, "imaginary residue " + std::to_string(sum.imag()));
    }
    return sum.real();
}

/// Commute-time resistance R = H + H^T.
inline Matrix effective_resistance(const Matrix& hitting) { return hitting + hitting.transpose(); }

inline Matrix effective_resistance(const StochasticMatrix& p)
{
    if (!p.reversible()) throw Error(ErrorCode::NotReversible, "effective resistance needs a reversible chain");
    return effective_resistance(hitting_times(p));
}

/// Everything computable about one chain in a single pass.
struct ChainAnalysis {
    Vector pi;
    Matrix hitting;
    double kemeny = 0.0;
    std::optional<Matrix> resistance;
};

inline ChainAnalysis analyze_chain(const StochasticMatrix& p, HittingMethod method = HittingMethod::Auto)
{
    ChainAnalysis out;
    out.pi = p.stationary();
    out.hitting = hitting_times(p, method);
    out.kemeny = kemeny_from_hitting(out.hitting, out.pi, p.tolerances());
    if (p.reversible()) out.resistance = effective_resistance(out.hitting);
    return out;
}

/// Row-major CSV, 17 significant digits in scientific notation.
inline void write_matrix_csv(std::ostream& os, const Matrix& m)
{
    char buf[40];
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.16e", m(i, j));
            if (j) os << ',';
            os << buf;
        }
        os << '\n';
    }
}

inline void write_matrix_csv(const std::string& path, const Matrix& m)
{
    std::ofstream os(path);
    if (!os) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
    write_matrix_csv(os, m);
}

} // namespace noisycons
