#pragma once

#include "disagreement.hpp"
#include "errors.hpp"
#include "graph.hpp"
#include "markov.hpp"
#include "rng.hpp"
#include "simulate.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace noisycons {

/// One weight per edge of the graph, aligned with Graph::edges().
using EdgeWeights = std::vector<double>;

/// f_ij = 1 / (2 max_i d(i)) on every edge.
inline EdgeWeights default_weights(const Graph& g)
{
    if (!is_connected(g)) throw Error(ErrorCode::DisconnectedGraph, "formation graph must be connected");
    const std::size_t dmax = g.max_degree();
    const double eps = dmax == 0 ? 0.0 : 1.0 / (2.0 * static_cast<double>(dmax));
    return EdgeWeights(g.edge_count(), eps);
}

/// Graph, desired relative positions r_ij, symmetric gains f_ij, and the
/// per-node noise variances lambda_i^2. Offsets are stored for the
/// orientation (first, second) of each edge; r_ji = -r_ij.
class FormationSpec {
public:
    FormationSpec(Graph graph, std::size_t dim, std::vector<Vector> offsets, EdgeWeights weights, Vector lambda2)
        : graph_(std::move(graph))
        , dim_(dim)
        , offsets_(std::move(offsets))
        , weights_(std::move(weights))
        , lambda2_(std::move(lambda2))
    {
        const std::size_t m = graph_.edge_count();
        if (dim_ < 1) throw Error(ErrorCode::InvalidParam, "formation dimension must be >= 1");
        if (!is_connected(graph_)) throw Error(ErrorCode::DisconnectedGraph, "formation graph must be connected");
        if (offsets_.size() != m || weights_.size() != m) {
            throw Error(ErrorCode::DimensionMismatch, "need one offset and one weight per edge");
        }
        for (const auto& r : offsets_) {
            if (static_cast<std::size_t>(r.size()) != dim_) throw Error(ErrorCode::DimensionMismatch, "offset dimension");
        }
        for (double f : weights_) {
            if (!(f > 0.0)) throw Error(ErrorCode::InvalidParam, "weights must be positive");
        }
        if (static_cast<std::size_t>(lambda2_.size()) != graph_.node_count()) {
            throw Error(ErrorCode::DimensionMismatch, "need one noise variance per node");
        }
        if (lambda2_.size() > 0 && lambda2_.minCoeff() < 0.0) throw Error(ErrorCode::InvalidParam, "negative noise variance");
        std::vector<double> load(graph_.node_count(), 0.0);
        for (std::size_t e = 0; e < m; ++e) {
            load[graph_.edges()[e].first] += weights_[e];
            load[graph_.edges()[e].second] += weights_[e];
        }
        for (std::size_t i = 0; i < load.size(); ++i) {
            if (load[i] >= 1.0) {
                throw Error(ErrorCode::StepSizeViolation,
                            "sum of gains at node " + std::to_string(i) + " is " + std::to_string(load[i]));
            }
        }
    }

    [[nodiscard]] const Graph& graph() const noexcept { return graph_; }
    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] std::size_t size() const noexcept { return graph_.node_count(); }
    [[nodiscard]] const std::vector<Vector>& offsets() const noexcept { return offsets_; }
    [[nodiscard]] const EdgeWeights& weights() const noexcept { return weights_; }
    [[nodiscard]] const Vector& lambda2() const noexcept { return lambda2_; }

    [[nodiscard]] bool equal_noise() const
    {
        return lambda2_.size() == 0 || lambda2_.maxCoeff() == lambda2_.minCoeff();
    }

    FormationSpec with_lambda2(Vector lambda2) const
    {
        return FormationSpec(graph_, dim_, offsets_, weights_, std::move(lambda2));
    }

private:
    Graph graph_;
    std::size_t dim_;
    std::vector<Vector> offsets_;
    EdgeWeights weights_;
    Vector lambda2_;
};

/// Builds a spec whose offsets come from target positions (rows of
/// `layout`), so it is consistent by construction.
inline FormationSpec spec_from_layout(const Graph& g, const Matrix& layout, EdgeWeights weights, Vector lambda2)
{
    if (static_cast<std::size_t>(layout.rows()) != g.node_count()) throw Error(ErrorCode::DimensionMismatch, "layout rows");
    std::vector<Vector> offsets;
    offsets.reserve(g.edge_count());
    for (const auto& [a, b] : g.edges()) {
        offsets.emplace_back(layout.row(static_cast<Index>(b)) - layout.row(static_cast<Index>(a)));
    }
    return FormationSpec(g, static_cast<std::size_t>(layout.cols()), std::move(offsets), std::move(weights),
                         std::move(lambda2));
}

/// Target positions for the built-in families. Stars put the leaves on the
/// unit circle around node 0; complete binary trees are drawn in layers with
/// unit vertical spacing and horizontal spacing halving per level; anything
/// else goes on a circle of radius n/(2 pi) (unit spacing). Coordinates past
/// the second are zero.
inline Matrix default_layout(const Graph& g, std::size_t dim)
{
    const std::size_t n = g.node_count();
    Matrix q = Matrix::Zero(static_cast<Index>(n), static_cast<Index>(dim));
    const std::string& tag = g.family_tag();
    auto place = [&](std::size_t i, double x, double y) {
        q(static_cast<Index>(i), 0) = x;
        if (dim > 1) q(static_cast<Index>(i), 1) = y;
    };
    constexpr double two_pi = 2.0 * std::numbers::pi;
    if (tag == "star") {
        for (std::size_t i = 1; i < n; ++i) {
            const double angle = two_pi * static_cast<double>(i - 1) / static_cast<double>(n - 1);
            if (dim == 1) place(i, (i % 2 ? 1.0 : -1.0) * static_cast<double>((i + 1) / 2), 0.0);
            else place(i, std::cos(angle), std::sin(angle));
        }
    } else if (tag == "tree") {
        std::size_t levels = 0;
        while ((std::size_t{1} << levels) - 1 < n) ++levels;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t depth = 0;
            while ((std::size_t{2} << depth) - 1 <= i) ++depth;
            const std::size_t pos = i - ((std::size_t{1} << depth) - 1);
            const double span = std::ldexp(1.0, static_cast<int>(levels) - 1);
            const double step = span / std::ldexp(1.0, static_cast<int>(depth));
            place(i, -span / 2.0 + step * (static_cast<double>(pos) + 0.5), -static_cast<double>(depth));
        }
    } else {
        const double radius = static_cast<double>(n) / two_pi;
        for (std::size_t i = 0; i < n; ++i) {
            const double angle = two_pi * static_cast<double>(i) / static_cast<double>(n);
            if (dim == 1) place(i, static_cast<double>(i), 0.0);
            else place(i, radius * std::cos(angle), radius * std::sin(angle));
        }
    }
    return q;
}

inline FormationSpec default_formation(const Graph& g, std::size_t dim, double lambda2)
{
    return spec_from_layout(g, default_layout(g, dim), default_weights(g),
                            Vector::Constant(static_cast<Index>(g.node_count()), lambda2));
}

/// Four nodes on a cycle with offsets (1,1), (-1,1), (-1,-1), (1,-1) along
/// 0->1->2->3->0 and all gains 1/9.
inline FormationSpec ring_demo_spec(double lambda2 = 1.0 / 2500.0)
{
    Graph g = build_graph(family::Ring{}, 4);
    Matrix q(4, 2);
    q << 0, 0, 1, 1, 0, 2, -1, 1;
    return spec_from_layout(g, q, EdgeWeights(g.edge_count(), 1.0 / 9.0), Vector::Constant(4, lambda2));
}

/// Stochastic matrix with off-diagonal f_ij and diagonal 1 - sum_j f_ij.
inline StochasticMatrix formation_matrix(const FormationSpec& spec)
{
    const auto n = static_cast<Index>(spec.size());
    Matrix p = Matrix::Zero(n, n);
    const auto& edges = spec.graph().edges();
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const auto a = static_cast<Index>(edges[e].first);
        const auto b = static_cast<Index>(edges[e].second);
        p(a, b) = spec.weights()[e];
        p(b, a) = spec.weights()[e];
    }
    for (Index i = 0; i < n; ++i) p(i, i) = 1.0 - p.row(i).sum();
    return StochasticMatrix(std::move(p));
}

/// Least-squares positions for the offsets, anchored at zero centroid.
/// Throws InconsistentFormation when some edge misses its offset by more
/// than the formation tolerance.
inline Matrix canonical_positions(const FormationSpec& spec, const Tolerances& tol = default_tolerances)
{
    const auto n = static_cast<Index>(spec.size());
    const auto d = static_cast<Index>(spec.dim());
    Matrix lap = Matrix::Zero(n, n);
    Matrix rhs = Matrix::Zero(n, d);
    const auto& edges = spec.graph().edges();
    double scale = 1.0;
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const auto a = static_cast<Index>(edges[e].first);
        const auto b = static_cast<Index>(edges[e].second);
        lap(a, a) += 1.0;
        lap(b, b) += 1.0;
        lap(a, b) -= 1.0;
        lap(b, a) -= 1.0;
        rhs.row(b) += spec.offsets()[e].transpose();
        rhs.row(a) -= spec.offsets()[e].transpose();
        scale = std::max(scale, spec.offsets()[e].cwiseAbs().maxCoeff());
    }
    // L + 11^T/n is nonsingular on a connected graph and its solution has zero centroid.
    lap.array() += 1.0 / static_cast<double>(n);
    Matrix q = lap.partialPivLu().solve(rhs);
    double worst = 0.0;
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const Vector miss = q.row(static_cast<Index>(edges[e].second)).transpose()
                            - q.row(static_cast<Index>(edges[e].first)).transpose() - spec.offsets()[e];
        worst = std::max(worst, miss.cwiseAbs().maxCoeff());
    }
    if (worst > tol.formation * scale) {
        throw Error(ErrorCode::InconsistentFormation, "offsets cannot be met (residual " + std::to_string(worst) + ")");
    }
    return q;
}

/// Per-node mean squared distance to the in-formation configuration with
/// the same centroid.
inline double form_metric(const Matrix& positions, const Matrix& canonical)
{
    if (positions.rows() != canonical.rows() || positions.cols() != canonical.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "positions do not match the formation size");
    }
    Matrix u = positions - canonical;
    u.rowwise() -= u.colwise().mean();
    return u.squaredNorm() / static_cast<double>(u.rows());
}

inline double form_metric(const Matrix& positions, const FormationSpec& spec)
{
    return form_metric(positions, canonical_positions(spec));
}

struct FormationReport {
    double form_exact = 0.0;
    double kemeny_p2 = 0.0;
    std::optional<double> form_simulated;
    std::optional<double> form_stderr;
};

/// d * lambda^2 * K((P^form)^2) / n for equal per-node noise.
inline FormationReport form_exact(const FormationSpec& spec)
{
    if (!spec.equal_noise()) throw Error(ErrorCode::InvalidParam, "exact Form needs equal noise at every node");
    canonical_positions(spec);
    const StochasticMatrix p = formation_matrix(spec);
    FormationReport r;
    r.kemeny_p2 = kemeny_constant_combinatorial(square_chain(p));
    const double lambda2 = spec.size() ? spec.lambda2()(0) : 0.0;
    r.form_exact = static_cast<double>(spec.dim()) * lambda2 * r.kemeny_p2 / static_cast<double>(spec.size());
    return r;
}

/// (1/n) (n Diag(l) - Q + (sum l / n) 1 1^T), Q_ij = l_i + l_j.
inline Matrix form_noise_covariance(const Vector& lambda2)
{
    const Index n = lambda2.size();
    const double nn = static_cast<double>(n);
    Matrix q = lambda2.replicate(1, n) + lambda2.transpose().replicate(n, 1);
    Matrix s = nn * Matrix(lambda2.asDiagonal()) - q;
    s.array() += lambda2.sum() / nn;
    return s / nn;
}

/// Form through the pi-weighted disagreement of P^form under the
/// centroid-projected noise; accepts unequal per-node variances.
inline double form_via_delta(const FormationSpec& spec)
{
    canonical_positions(spec);
    const StochasticMatrix p = formation_matrix(spec);
    const auto sw = NoiseCovariance::full(form_noise_covariance(spec.lambda2()));
    return static_cast<double>(spec.dim()) * delta_ss_theorem(p, sw).delta_ss;
}

enum class InitialPlacement { InFormation, Random };

struct FormationSimConfig {
    SimConfig sim;
    InitialPlacement start = InitialPlacement::Random;
    double start_spread = 1.0;          // random starts: offset uniform in [-s, s]^d around the formation
    std::optional<Matrix> initial;      // overrides `start`
    bool keep_trajectory = true;        // positions of trial 0 at recorded steps
};

struct FormationSimulation {
    std::vector<std::size_t> times;
    std::vector<double> form_mean;      // across trials, per recorded step
    std::vector<double> form_std_error;
    std::vector<Matrix> trajectory;     // trial 0
    double form_simulated = 0.0;        // tail average over (burn_in, T]
    double form_stderr = 0.0;
    std::size_t burn_in = 0;
};

/// Noisy first-order formation update
/// p_i <- p_i + sum_j f_ij (p_j - p_i - r_ij) + n_i, n_i ~ N(0, lambda_i^2 I_d).
inline FormationSimulation simulate_formation(const FormationSpec& spec, const FormationSimConfig& cfg)
{
    const Matrix canonical = canonical_positions(spec);
    const StochasticMatrix p = formation_matrix(spec);
    SimConfig sim = cfg.sim;
    if (!sim.burn_in) sim.burn_in = auto_burn_in(p);
    sim.validate();
    const std::size_t burn = *sim.burn_in;
    const auto n = static_cast<Index>(spec.size());
    const auto d = static_cast<Index>(spec.dim());
    if (cfg.initial && (cfg.initial->rows() != n || cfg.initial->cols() != d)) {
        throw Error(ErrorCode::DimensionMismatch, "initial positions must be n x d");
    }

    // Constant drift -sum_j f_ij r_ij.
    Matrix drift = Matrix::Zero(n, d);
    const auto& edges = spec.graph().edges();
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const auto a = static_cast<Index>(edges[e].first);
        const auto b = static_cast<Index>(edges[e].second);
        drift.row(a) -= spec.weights()[e] * spec.offsets()[e].transpose();
        drift.row(b) += spec.weights()[e] * spec.offsets()[e].transpose();
    }
    const detail::SparseRows rows(p.matrix());
    const Vector noise_scale = spec.lambda2().cwiseSqrt();
    const std::size_t records = sim.horizon / sim.record_every + 1;

    std::vector<std::vector<double>> form(sim.trials, std::vector<double>(records));
    std::vector<double> tail(sim.trials);
    FormationSimulation out;
    out.burn_in = burn;

    detail::parallel_for(sim.trials, sim.threads, [&](std::size_t trial) {
        Engine rng = make_stream(sim.seed, trial);
        std::normal_distribution<double> normal;
        Matrix pos;
        if (cfg.initial) {
            pos = *cfg.initial;
        } else if (cfg.start == InitialPlacement::InFormation) {
            pos = canonical;
        } else {
            std::uniform_real_distribution<double> uni(-cfg.start_spread, cfg.start_spread);
            pos = canonical;
            for (Index i = 0; i < n; ++i)
                for (Index k = 0; k < d; ++k) pos(i, k) += uni(rng);
        }
        Matrix next(n, d);
        Vector col(n);
        Vector mixed(n);
        double acc = 0.0;
        for (std::size_t t = 0;; ++t) {
            const double f = form_metric(pos, canonical);
            if (t % sim.record_every == 0) {
                form[trial][t / sim.record_every] = f;
                if (trial == 0 && cfg.keep_trajectory) out.trajectory.push_back(pos);
            }
            if (t > burn) acc += f;
            if (t == sim.horizon) break;
            for (Index k = 0; k < d; ++k) {
                col = pos.col(k);
                rows.apply(col, mixed);
                next.col(k) = mixed + drift.col(k);
            }
            for (Index i = 0; i < n; ++i)
                for (Index k = 0; k < d; ++k) next(i, k) += noise_scale(i) * normal(rng);
            pos.swap(next);
        }
        tail[trial] = acc / static_cast<double>(sim.horizon - burn);
    });

    std::vector<double> column(sim.trials);
    for (std::size_t r = 0; r < records; ++r) {
        out.times.push_back(r * sim.record_every);
        for (std::size_t k = 0; k < sim.trials; ++k) column[k] = form[k][r];
        out.form_mean.push_back(detail::mean(column));
        out.form_std_error.push_back(detail::standard_error(column));
    }
    out.form_simulated = detail::mean(tail);
    out.form_stderr = detail::standard_error(tail);
    return out;
}

/// CSV columns: t, node, x1..xd.
inline void write_trajectory_csv(std::ostream& os, const FormationSimulation& sim, std::size_t dim)
{
    os << "t,node";
    for (std::size_t k = 1; k <= dim; ++k) os << ",x" << k;
    os << '\n';
    char buf[40];
    for (std::size_t r = 0; r < sim.trajectory.size(); ++r) {
        const Matrix& pos = sim.trajectory[r];
        for (Index i = 0; i < pos.rows(); ++i) {
            os << sim.times[r] << ',' << i;
            for (Index k = 0; k < pos.cols(); ++k) {
                std::snprintf(buf, sizeof buf, "%.16e", pos(i, k));
                os << ',' << buf;
            }
            os << '\n';
        }
    }
}

} // namespace noisycons
