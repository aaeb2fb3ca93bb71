#pragma once

#include "disagreement.hpp"
#include "errors.hpp"
#include "markov.hpp"
#include "rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace noisycons {

enum class NoiseDistribution { Gaussian, Rademacher };

struct SimConfig {
    std::size_t horizon = 1000;            // T
    std::size_t trials = 100;
    std::optional<std::size_t> burn_in;    // auto when absent
    std::uint64_t seed = 0;
    std::size_t record_every = 1;
    NoiseDistribution noise = NoiseDistribution::Gaussian;
    unsigned threads = 0;                  // 0: hardware concurrency

    void validate() const
    {
        if (trials < 1) throw Error(ErrorCode::InvalidParam, "trials must be >= 1");
        if (record_every < 1) throw Error(ErrorCode::InvalidParam, "record_every must be >= 1");
        if (burn_in && *burn_in >= horizon) throw Error(ErrorCode::InvalidParam, "burn-in must be < horizon");
    }
};

struct SimTrace {
    std::vector<std::size_t> times;
    std::vector<double> delta_hat;
    std::vector<double> delta_uni_hat;
    std::vector<double> std_error;
};

struct SteadyStateEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    std::size_t burn_in = 0;
    std::size_t trials = 0;
};

namespace detail {

/// Compressed rows of P for the O(nnz) update.
struct SparseRows {
    std::vector<std::size_t> start;
    std::vector<Index> col;
    std::vector<double> val;

    explicit SparseRows(const Matrix& m)
    {
        start.push_back(0);
        for (Index i = 0; i < m.rows(); ++i) {
            for (Index j = 0; j < m.cols(); ++j) {
                if (m(i, j) != 0.0) {
                    col.push_back(j);
                    val.push_back(m(i, j));
                }
            }
            start.push_back(col.size());
        }
    }

    void apply(const Vector& x, Vector& y) const
    {
        for (std::size_t i = 0; i + 1 < start.size(); ++i) {
            double acc = 0.0;
            for (std::size_t k = start[i]; k < start[i + 1]; ++k) acc += val[k] * x(col[k]);
            y(static_cast<Index>(i)) = acc;
        }
    }
};

/// Draws zero-mean noise with covariance F F^T, where F is the sampling
/// factor of the covariance; Rademacher draws use the same factor.
class NoiseSampler {
public:
    NoiseSampler(const NoiseCovariance& sw, NoiseDistribution dist)
        : diagonal_(sw.is_diagonal())
        , dist_(dist)
    {
        if (diagonal_) scale_ = sw.variances().cwiseSqrt();
        else factor_ = sw.sampling_factor();
        z_.resize(static_cast<Index>(sw.size()));
    }

    void draw(Engine& rng, Vector& out)
    {
        for (Index i = 0; i < z_.size(); ++i) z_(i) = draw_unit(rng);
        if (diagonal_) out = scale_.cwiseProduct(z_);
        else out.noalias() = factor_ * z_;
    }

private:
    double draw_unit(Engine& rng)
    {
        if (dist_ == NoiseDistribution::Gaussian) return normal_(rng);
        return (rng() >> 63) ? 1.0 : -1.0;
    }

    bool diagonal_;
    NoiseDistribution dist_;
    Vector scale_;
    Matrix factor_;
    Vector z_;
    std::normal_distribution<double> normal_;
};

/// Runs body(t) for t in [0, count) on up to `threads` workers. Each index
/// is handled exactly once and results land in caller-owned slots, so the
/// outcome does not depend on scheduling.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body body)
{
    unsigned workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
    if (workers <= 1) {
        for (std::size_t t = 0; t < count; ++t) body(t);
        return;
    }
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t t = w; t < count; t += workers) body(t);
        });
    }
}

inline double mean(const std::vector<double>& v)
{
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

/// Standard error of the mean from the across-sample spread.
inline double standard_error(const std::vector<double>& v)
{
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

inline void require_simulable(const StochasticMatrix& p, const NoiseCovariance& sw)
{
    if (p.size() != sw.size()) throw Error(ErrorCode::DimensionMismatch, "noise covariance size does not match P");
    if (!p.irreducible()) throw Error(ErrorCode::NotIrreducible, "simulation needs an irreducible chain");
    if (!p.aperiodic()) throw Error(ErrorCode::NotAperiodic, "simulation needs an aperiodic chain");
}

} // namespace detail

/// ceil(20 / (1 - rho^2)) steps, rho = rho(P - J).
inline std::size_t auto_burn_in(const StochasticMatrix& p)
{
    const double rho = second_eigenvalue_modulus(p);
    if (rho >= 1.0) throw Error(ErrorCode::NotAperiodic, "chain does not mix (rho(P-J) = 1)");
    return static_cast<std::size_t>(std::ceil(20.0 / (1.0 - rho * rho)));
}

/// Monte Carlo of x(t+1) = P x(t) + w(t). Per recorded step, reports the
/// trial means of sum_i pi_i e_i^2 and (1/n) sum_i e_i^2 with
/// e = x - (pi^T x) 1, and the standard error of the former.
inline SimTrace simulate_consensus(const StochasticMatrix& p, const NoiseCovariance& sw, const Vector& x0,
                                   const SimConfig& cfg)
{
    cfg.validate();
    detail::require_simulable(p, sw);
    if (static_cast<std::size_t>(x0.size()) != p.size()) throw Error(ErrorCode::DimensionMismatch, "x0 size does not match P");
    const Vector& pi = p.stationary();
    const detail::SparseRows rows(p.matrix());
    const std::size_t records = cfg.horizon / cfg.record_every + 1;
    const auto n = static_cast<double>(p.size());

    std::vector<std::vector<double>> weighted(cfg.trials, std::vector<double>(records));
    std::vector<std::vector<double>> uniform(cfg.trials, std::vector<double>(records));

    detail::parallel_for(cfg.trials, cfg.threads, [&](std::size_t trial) {
        Engine rng = make_stream(cfg.seed, trial);
        detail::NoiseSampler sampler(sw, cfg.noise);
        Vector x = x0;
        Vector next(x.size());
        Vector w(x.size());
        for (std::size_t t = 0;; ++t) {
            if (t % cfg.record_every == 0) {
                const Vector e = x.array() - pi.dot(x);
                const std::size_t r = t / cfg.record_every;
                weighted[trial][r] = pi.dot(e.cwiseProduct(e));
                uniform[trial][r] = e.squaredNorm() / n;
            }
            if (t == cfg.horizon) break;
            rows.apply(x, next);
            sampler.draw(rng, w);
            x = next + w;
        }
    });

    SimTrace out;
    std::vector<double> column(cfg.trials);
    for (std::size_t r = 0; r < records; ++r) {
        out.times.push_back(r * cfg.record_every);
        for (std::size_t k = 0; k < cfg.trials; ++k) column[k] = weighted[k][r];
        out.delta_hat.push_back(detail::mean(column));
        out.std_error.push_back(detail::standard_error(column));
        for (std::size_t k = 0; k < cfg.trials; ++k) column[k] = uniform[k][r];
        out.delta_uni_hat.push_back(detail::mean(column));
    }
    return out;
}

/// Tail estimator of delta_ss: each trial starts at the origin and averages
/// delta(t) over t in (burn_in, T]; the estimate is the mean over trials and
/// the standard error comes from the spread of the per-trial tail means.
inline SteadyStateEstimate estimate_delta_ss(const StochasticMatrix& p, const NoiseCovariance& sw, SimConfig cfg)
{
    detail::require_simulable(p, sw);
    if (!cfg.burn_in) cfg.burn_in = auto_burn_in(p);
    cfg.validate();
    const Vector& pi = p.stationary();
    const detail::SparseRows rows(p.matrix());
    const std::size_t burn = *cfg.burn_in;
    std::vector<double> tail_means(cfg.trials);

    detail::parallel_for(cfg.trials, cfg.threads, [&](std::size_t trial) {
        Engine rng = make_stream(cfg.seed, trial);
        detail::NoiseSampler sampler(sw, cfg.noise);
        Vector x = Vector::Zero(pi.size());
        Vector next(x.size());
        Vector w(x.size());
        double acc = 0.0;
        for (std::size_t t = 1; t <= cfg.horizon; ++t) {
            rows.apply(x, next);
            sampler.draw(rng, w);
            x = next + w;
            if (t > burn) {
                const Vector e = x.array() - pi.dot(x);
                acc += pi.dot(e.cwiseProduct(e));
            }
        }
        tail_means[trial] = acc / static_cast<double>(cfg.horizon - burn);
    });

    return {detail::mean(tail_means), detail::standard_error(tail_means), burn, cfg.trials};
}

/// Exact covariance recursion from S(0) = 0; returns Tr S(t) for t = 0..T.
inline std::vector<double> divergence_probe(const StochasticMatrix& p, const NoiseCovariance& sw, std::size_t horizon)
{
    if (p.size() != sw.size()) throw Error(ErrorCode::DimensionMismatch, "noise covariance size does not match P");
    const Index n = static_cast<Index>(p.size());
    const Matrix j = j_matrix(p);
    const Matrix a = p.matrix() - j;
    const Matrix proj = Matrix::Identity(n, n) - j;
    const Matrix drive = proj * sw.matrix() * proj.transpose();
    Matrix sigma = Matrix::Zero(n, n);
    std::vector<double> trace{0.0};
    trace.reserve(horizon + 1);
    for (std::size_t t = 0; t < horizon; ++t) {
        sigma = (a * sigma * a.transpose() + drive).eval();
        trace.push_back(sigma.trace());
    }
    return trace;
}

/// CSV columns: t, delta_hat, delta_uni_hat, stderr.
inline void write_trace_csv(std::ostream& os, const SimTrace& trace)
{
    os << "t,delta_hat,delta_uni_hat,stderr\n";
    char buf[128];
    for (std::size_t r = 0; r < trace.times.size(); ++r) {
        std::snprintf(buf, sizeof buf, "%zu,%.16e,%.16e,%.16e\n", trace.times[r], trace.delta_hat[r],
                      trace.delta_uni_hat[r], trace.std_error[r]);
        os << buf;
    }
}

} // namespace noisycons
