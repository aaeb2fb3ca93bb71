#pragma once

// Quick invariant sweep behind `noisycons selftest`: small seeded instances of
// every cross-method identity the library relies on.

#include "disagreement.hpp"
#include "formation.hpp"
#include "graph.hpp"
#include "markov.hpp"
#include "rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace noisycons {

struct SelftestResult {
    std::string name;
    double worst = 0.0;  // largest observed error
    double bound = 0.0;
    bool passed = false;
    std::string note;
};

/// Random connected graph on n nodes: a random spanning tree plus extra edges
/// with probability p.
inline Graph random_connected_graph(std::size_t n, double p, Engine& rng)
{
    std::vector<Edge> edges;
    std::vector<NodeId> order(n);
    for (NodeId i = 0; i < n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t k = 1; k < n; ++k) {
        std::uniform_int_distribution<std::size_t> pick(0, k - 1);
        edges.emplace_back(order[k], order[pick(rng)]);
    }
    std::bernoulli_distribution extra(p);
    for (NodeId i = 0; i < n; ++i) {
        for (NodeId j = i + 1; j < n; ++j) {
            const Edge e{i, j};
            const bool present = std::any_of(edges.begin(), edges.end(), [&](const Edge& f) {
                return std::minmax(f.first, f.second) == std::minmax(e.first, e.second);
            });
            if (!present && extra(rng)) edges.push_back(e);
        }
    }
    return Graph(n, std::move(edges), "random-connected");
}

/// Random PSD covariance B B^T with B having `rank` standard normal columns.
inline Matrix random_psd(std::size_t n, std::size_t rank, Engine& rng)
{
    std::normal_distribution<double> normal;
    Matrix b(static_cast<Index>(n), static_cast<Index>(rank));
    for (Index i = 0; i < b.rows(); ++i)
        for (Index j = 0; j < b.cols(); ++j) b(i, j) = normal(rng);
    return b * b.transpose();
}

namespace detail {

inline SelftestResult finish(std::string name, double worst, double bound, std::string note = {})
{
    return {std::move(name), worst, bound, worst <= bound, std::move(note)};
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

} // namespace detail

inline std::vector<SelftestResult> run_selftest(std::uint64_t seed = 20240601)
{
    std::vector<SelftestResult> out;

    {
        double worst = 0.0;
        for (std::size_t k = 0; k < 25; ++k) {
            Engine rng = make_stream(seed, k);
            const std::size_t n = 2 + k % 9;
            const StochasticMatrix p = lazy_walk_matrix(random_connected_graph(n, 0.3, rng));
            const auto sw = NoiseCovariance::full(random_psd(n, n, rng));
            const double closed = delta_ss_theorem(p, sw).delta_ss;
            const double oracle = delta_oracle(p, sw).second.delta_ss;
            worst = std::max(worst, std::abs(closed - oracle) / (1.0 + oracle));
        }
        out.push_back(detail::finish("closed form vs covariance recursion", worst, 1e-8));
    }

    {
        double worst = 0.0;
        for (const char* name : {"complete", "line", "ring", "star"}) {
            for (std::size_t n : {5, 16}) {
                const StochasticMatrix p = max_degree_walk_matrix(build_graph(parse_family(name), n));
                const double t = delta_ss_theorem(p, NoiseCovariance::scalar(n, 1.0)).delta_ss;
                for (double v : {delta_ss_kemeny(p, 1.0), delta_ss_spectral(p, 1.0), delta_ss_resistance(p, 1.0)}) {
                    worst = std::max(worst, detail::rel(v, t));
                }
            }
        }
        out.push_back(detail::finish("symmetric-chain formulas agree", worst, 1e-9));
    }

    {
        double worst = 0.0;
        for (std::size_t k = 0; k < 10; ++k) {
            Engine rng = make_stream(seed + 1, k);
            const StochasticMatrix p = lazy_walk_matrix(random_connected_graph(3 + k, 0.4, rng));
            const Matrix h = hitting_times(p);
            const Vector rows = h * p.stationary();
            worst = std::max(worst, (rows.array() - rows(0)).abs().maxCoeff() / std::max(1.0, rows(0)));
        }
        out.push_back(detail::finish("random target sums are constant", worst, 1e-9));
    }

    {
        double worst = 0.0;
        for (std::size_t k = 0; k < 10; ++k) {
            Engine rng = make_stream(seed + 2, k);
            const StochasticMatrix p = lazy_walk_matrix(random_connected_graph(3 + k, 0.4, rng));
            const JPropertyReport rep = check_j_properties(p, 1e-10);
            if (rep.spectral_radius >= 1.0) worst = std::max(worst, rep.spectral_radius);
            for (const auto& c : rep.checks) {
                if (c.name != "rho(P-J) < 1") worst = std::max(worst, c.error);
            }
            const auto sw = NoiseCovariance::full(random_psd(p.size(), 2, rng));
            const SquaredChain sq = square_chain_data(p);
            const Matrix s = sigma_hat(sq, sw);
            const Matrix j = j_matrix(p);
            const Matrix p2 = p.matrix() * p.matrix();
            const Matrix drive = (Matrix::Identity(s.rows(), s.cols()) - j) * sw.matrix() * Matrix(sq.pi.asDiagonal());
            const double scale = 1.0 + s.cwiseAbs().maxCoeff();
            worst = std::max({worst, std::abs(s.trace() - theorem_value(sq, sw)) / scale,
                              (j * s).cwiseAbs().maxCoeff() / scale,
                              (s - p2 * s - drive).cwiseAbs().maxCoeff() / scale});
        }
        out.push_back(detail::finish("J and covariance-solution identities", worst, 1e-10));
    }

    {
        double worst = 0.0;
        for (const char* name : {"line", "ring", "star", "tree"}) {
            const FormationSpec spec = default_formation(build_graph(parse_family(name), 7), 2, 0.25);
            worst = std::max(worst, detail::rel(form_via_delta(spec), form_exact(spec).form_exact));
        }
        const FormationSpec pair = default_formation(build_graph(family::Line{}, 2), 2, 1.0);
        worst = std::max(worst, std::abs(form_exact(pair).form_exact - 1.0));
        out.push_back(detail::finish("formation routes agree", worst, 1e-10));
    }

    return out;
}

} // namespace noisycons
