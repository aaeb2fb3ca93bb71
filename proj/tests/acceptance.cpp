// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Criterion 12 only ever warns.

#include <noisycons/noisycons.hpp>
#include <noisycons/selftest.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <utility>
#include <random>
#include <string>
#include <vector>

using namespace noisycons;

namespace {

struct Outcome {
    Outcome() = default;
    Outcome(bool ok, std::string text) : passed(ok), detail(std::move(text)) {}

    bool passed = true;
    std::string detail;
    std::vector<std::string> warnings;
};

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1e-300, std::abs(b)); }

/// Random reversible, aperiodic chain: symmetric positive conductances on a
/// random connected graph plus self-loops, normalised by row.
StochasticMatrix random_reversible(std::size_t n, Engine& rng)
{
    const Graph g = random_connected_graph(n, 0.3, rng);
    std::uniform_real_distribution<double> w(0.1, 2.0);
    Matrix c = Matrix::Zero(static_cast<Index>(n), static_cast<Index>(n));
    for (const auto& [a, b] : g.edges()) c(static_cast<Index>(a), static_cast<Index>(b)) = c(static_cast<Index>(b), static_cast<Index>(a)) = w(rng);
    for (Index i = 0; i < c.rows(); ++i) c(i, i) = w(rng);
    const Vector rows = c.rowwise().sum();
    c.array().colwise() /= rows.array();
    return StochasticMatrix(std::move(c));
}

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    const double k = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

/// Symmetric chains on the named families: the max-degree walk, which is the
/// lazy walk itself on the regular families.
std::vector<std::pair<std::string, StochasticMatrix>> symmetric_chains()
{
    std::vector<std::pair<std::string, StochasticMatrix>> out;
    for (const char* name : {"complete", "line", "ring", "star"})
        for (std::size_t n : {4, 8, 16, 32, 64})
            out.emplace_back(std::string(name) + " n=" + std::to_string(n), max_degree_walk_matrix(build_graph(parse_family(name), n)));
    for (std::size_t n : {3, 7, 15, 31, 63})
        out.emplace_back("tree n=" + std::to_string(n), max_degree_walk_matrix(build_graph(family::CompleteBinaryTree{}, n)));
    return out;
}

// 1 -------------------------------------------------------------------------
Outcome oracle_equivalence()
{
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (std::size_t k = 0; k < 200; ++k) {
        Engine rng = make_stream(1001, k);
        const std::size_t n = 2 + k % 11;
        const StochasticMatrix p = lazy_walk_matrix(random_connected_graph(n, 0.3, rng));
        const auto sw = NoiseCovariance::full(random_psd(n, 1 + k % n, rng));
        const double oracle = delta_oracle(p, sw).second.delta_ss;
        worst = std::max(worst, std::abs(delta_ss_theorem(p, sw).delta_ss - oracle) / (1.0 + oracle));
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-8 && secs < 60, fmt("200 graphs, worst scaled gap %.2e (<= 1e-8), %.1fs (< 60s)", worst, secs)};
}

// 2 -------------------------------------------------------------------------
Outcome four_way()
{
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    std::size_t count = 0;
    for (const auto& [name, p] : symmetric_chains()) {
        const double t = delta_ss_theorem(p, NoiseCovariance::scalar(p.size(), 1.0)).delta_ss;
        worst = std::max({worst, rel(delta_ss_kemeny(p, 1.0), t), rel(delta_ss_spectral(p, 1.0), t),
                          rel(delta_ss_resistance(p, 1.0), t)});
        ++count;
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-9 && secs < 60,
            fmt("%.0f symmetric chains, worst relative gap %.2e (<= 1e-9), %.1fs (< 60s)", double(count), worst, secs)};
}

// 3 -------------------------------------------------------------------------
Outcome random_target()
{
    double worst = 0.0;
    auto check = [&](const StochasticMatrix& p) {
        const Vector rows = hitting_times(p) * p.stationary();
        worst = std::max(worst, (rows.array() - rows(0)).abs().maxCoeff() / (1.0 + rows(0)));
    };
    std::size_t count = 0;
    for (const auto& [name, p] : symmetric_chains()) {
        check(p);
        check(square_chain(p));
        count += 2;
    }
    for (const char* name : {"line", "star", "tree"}) {
        const StochasticMatrix p = lazy_walk_matrix(build_graph(parse_family(name), 63));
        check(p);
        check(square_chain(p));
        count += 2;
    }
    return {worst <= 1e-9, fmt("%.0f chains, worst spread of sum_j pi_j H(i->j) %.2e (<= 1e-9)", double(count), worst)};
}

// 4 -------------------------------------------------------------------------
Outcome commute_time()
{
    double worst_identity = 0.0;
    double worst_formula = 0.0;
    for (const auto& [name, p] : symmetric_chains()) {
        const Matrix h = hitting_times(p);
        worst_identity = std::max(worst_identity, (h + h.transpose() - effective_resistance(p)).cwiseAbs().maxCoeff());
        worst_formula = std::max(worst_formula, rel(delta_ss_resistance(p, 1.0), delta_ss_kemeny(p, 1.0)));
    }
    return {worst_identity == 0.0 && worst_formula <= 1e-9,
            fmt("||H+H^T-R||_inf = %.1e (== 0); resistance vs Kemeny delta_ss %.2e (<= 1e-9)", worst_identity, worst_formula)};
}

// 5 -------------------------------------------------------------------------
struct Series {
    std::vector<double> n;
    std::vector<double> delta;
};

Series sweep(const GraphFamily& fam, const std::vector<std::size_t>& ns, const std::function<Vector(const Graph&)>& noise)
{
    Series s;
    for (std::size_t n : ns) {
        const Graph g = build_graph(fam, n);
        const StochasticMatrix p = lazy_walk_matrix(g);
        s.n.push_back(static_cast<double>(n));
        s.delta.push_back(delta_ss_diag(square_chain_data(p), noise(g)));
    }
    return s;
}

Outcome scaling_table()
{
    const auto t0 = std::chrono::steady_clock::now();
    auto ones = [](const Graph& g) { return Vector::Ones(static_cast<Index>(g.node_count())); };
    auto only = [](std::vector<long long> nodes) {
        return [nodes](const Graph& g) {
            const auto n = static_cast<long long>(g.node_count());
            Vector s = Vector::Zero(n);
            for (long long i : nodes) s(i < 0 ? n + i : i) = 1.0;
            return s;
        };
    };
    auto leaves = [](const Graph& g) {
        Vector s = Vector::Ones(static_cast<Index>(g.node_count()));
        s(0) = 0.0;
        return s;
    };
    auto spread = [](const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()) / *std::min_element(v.begin(), v.end()); };
    auto max_step = [](const std::vector<double>& v) {
        double r = 0.0;
        for (std::size_t i = 1; i < v.size(); ++i) r = std::max(r, v[i] / v[i - 1]);
        return r;
    };

    Outcome out;
    auto record = [&](const std::string& label, bool ok, const std::string& numbers) {
        if (!ok) out.passed = false;
        out.detail += (out.detail.empty() ? "" : "; ") + label + (ok ? " ok " : " FAIL ") + numbers;
    };

    // sum sigma^2 = n, so delta_ss * n / sum sigma^2 = delta_ss.
    const Series complete = sweep(family::Complete{}, {96, 192, 384, 768}, ones);
    record("complete", spread(complete.delta) <= 3.0, fmt("C/c=%.3f", spread(complete.delta)));

    for (const auto& [label, fam] : {std::pair<std::string, GraphFamily>{"ring", family::Ring{}}, {"line", family::Line{}}}) {
        const Series s = sweep(fam, {96, 192, 384, 768}, ones);
        const double slope = loglog_slope(s.n, s.delta);
        record(label, slope <= 1.25 && std::abs(slope - 1.0) <= 0.25, fmt("s=%.3f", slope));
    }

    const Series starry = sweep(family::StarryLine{}, {192, 384, 768, 1536}, ones);
    const double starry_slope = loglog_slope(starry.n, starry.delta);
    record("starry-line", std::abs(starry_slope - 2.0) <= 0.25, fmt("s=%.3f", starry_slope));

    // Side lengths 11, 16, 22, 32: the closest squares to a doubling sequence.
    const Series grid = sweep(family::Grid{2}, {121, 256, 484, 1024}, ones);
    record("grid2d", max_step(grid.delta) <= 1.6, fmt("max ratio=%.3f", max_step(grid.delta)));

    const Series center = sweep(family::Star{}, {96, 192, 384, 768}, only({0}));
    const double center_slope = loglog_slope(center.n, center.delta);
    record("star center", std::abs(center_slope) <= 0.25, fmt("s=%.3f", center_slope));
    const Series leaf = sweep(family::Star{}, {96, 192, 384, 768}, leaves);
    const double leaf_slope = loglog_slope(leaf.n, leaf.delta);
    record("star leaves", std::abs(leaf_slope) <= 0.25, fmt("s=%.3f", leaf_slope));

    const Series two = sweep(family::TwoStar{}, {96, 192, 384, 768}, only({0, -1}));
    const double two_slope = loglog_slope(two.n, two.delta);
    record("two-star centers", std::abs(two_slope - 1.0) <= 0.25, fmt("s=%.3f", two_slope));

    const double secs = seconds_since(t0);
    record("runtime", secs < 600, fmt("%.1fs", secs));
    return out;
}

// 6 -------------------------------------------------------------------------
Outcome uni_sandwich_check()
{
    std::size_t inside = 0;
    double worst_ratio = 0.0;
    for (std::size_t k = 0; k < 100; ++k) {
        Engine rng = make_stream(1006, k);
        const std::size_t n = 2 + k % 14;
        const StochasticMatrix p = random_reversible(n, rng);
        const auto sw = NoiseCovariance::full(random_psd(n, n, rng));
        const auto thm = delta_ss_theorem(p, sw);
        const double uni = *delta_oracle(p, sw).second.delta_uni_exact;
        const double slack = 1e-9 * (1.0 + uni);
        if (uni >= thm.delta_uni_lower - slack && uni <= thm.delta_uni_upper + slack) ++inside;
        const Vector& pi = p.stationary();
        worst_ratio = std::max(worst_ratio, rel(thm.delta_uni_upper / thm.delta_uni_lower, pi.maxCoeff() / pi.minCoeff()));
    }
    return {inside == 100 && worst_ratio <= 1e-10,
            fmt("%.0f/100 oracle values inside; bound ratio vs pi_max/pi_min %.2e (<= 1e-10)", double(inside), worst_ratio)};
}

// 7 -------------------------------------------------------------------------
Outcome bipartite_divergence()
{
    const StochasticMatrix p = simple_walk_matrix(build_graph(family::Ring{}, 8));
    const auto trace = divergence_probe(p, NoiseCovariance::scalar(8, 1.0), 402);
    double least = 1e300;
    for (std::size_t t = 100; t <= 200; ++t) least = std::min(least, trace[2 * t + 2] - trace[2 * t]);
    return {least >= 0.5, fmt("ring n=8, min over t in [100,200] of Tr S(2t+2) - Tr S(2t) = %.4f (>= 0.5)", least)};
}

// 8 -------------------------------------------------------------------------
Outcome monte_carlo()
{
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    std::uint64_t seed = 1008;
    for (const auto& [label, g] : {std::pair<std::string, Graph>{"ring", build_graph(family::Ring{}, 8)},
                                   {"star", build_graph(family::Star{}, 8)}}) {
        const StochasticMatrix p = lazy_walk_matrix(g);
        const auto sw = NoiseCovariance::scalar(8, 1.0);
        const double exact = delta_ss_theorem(p, sw).delta_ss;
        for (auto dist : {NoiseDistribution::Gaussian, NoiseDistribution::Rademacher}) {
            SimConfig cfg;
            cfg.horizon = 5000;
            cfg.trials = 200;
            cfg.seed = seed++;
            cfg.noise = dist;
            const auto est = estimate_delta_ss(p, sw, cfg);
            const double z = (est.estimate - exact) / est.std_error;
            const bool ok = std::abs(z) <= 3.0;
            out.passed = out.passed && ok;
            out.detail += (out.detail.empty() ? "" : "; ") + label + (dist == NoiseDistribution::Gaussian ? " gaussian" : " rademacher")
                          + fmt(" z=%+.2f", z);
        }
    }
    const double secs = seconds_since(t0);
    out.passed = out.passed && secs < 120;
    out.detail += fmt(" (|z| <= 3), %.1fs (< 120s)", secs);
    return out;
}

// 9 -------------------------------------------------------------------------
Outcome formation_exactness()
{
    double worst = 0.0;
    std::size_t count = 0;
    const std::vector<std::pair<GraphFamily, std::vector<std::size_t>>> cases{
        {family::Complete{}, {4, 16, 64}},      {family::Line{}, {2, 8, 64}},      {family::Ring{}, {3, 16, 64}},
        {family::Star{}, {4, 16, 64}},          {family::TwoStar{}, {4, 16, 64}},  {family::StarryLine{}, {9, 36, 63}},
        {family::Grid{2}, {9, 36, 64}},         {family::Grid{3}, {8, 27, 64}},    {family::CompleteBinaryTree{}, {7, 15, 63}},
        {family::ErdosRenyi{0.3}, {16, 48}},    {family::RandomRegular{3}, {16, 64}}};
    for (const auto& [fam, ns] : cases) {
        for (std::size_t n : ns) {
            const FormationSpec spec = default_formation(build_graph(fam, n, 9), 2, 1.0 / 2500);
            worst = std::max(worst, rel(form_via_delta(spec), form_exact(spec).form_exact));
            ++count;
        }
    }
    const double pair = form_exact(default_formation(build_graph(family::Line{}, 2), 2, 1.0)).form_exact;
    return {worst <= 1e-10 && pair == 1.0,
            fmt("%.0f specs, worst relative gap %.2e (<= 1e-10); Form(line n=2, d=2, lambda^2=1) = %.17g (== 1)",
                double(count), worst, pair)};
}

// 10 ------------------------------------------------------------------------
Outcome formation_star_tree()
{
    const auto t0 = std::chrono::steady_clock::now();
    const double lambda2 = 1.0 / 2500.0;
    auto run = [&](const Graph& g, std::uint64_t seed) {
        const FormationSpec spec = default_formation(g, 2, lambda2);
        FormationSimConfig cfg;
        cfg.sim.trials = 64;
        cfg.sim.seed = seed;
        cfg.sim.burn_in = auto_burn_in(formation_matrix(spec));
        cfg.sim.horizon = *cfg.sim.burn_in + 8000;
        cfg.start = InitialPlacement::Random;
        cfg.keep_trajectory = false;
        const auto sim = simulate_formation(spec, cfg);
        return std::tuple{sim.form_simulated, sim.form_stderr, form_exact(spec).form_exact};
    };
    const auto [star, star_se, star_exact] = run(build_graph(family::Star{}, 127), 1010);
    const auto [tree, tree_se, tree_exact] = run(build_graph(family::CompleteBinaryTree{}, 127), 1011);
    const bool star_ok = star >= 0.02 && star <= 0.10;
    const bool tree_ok = tree >= 0.002 && tree <= 0.010;
    const bool ratio_ok = star / tree >= 5.0;
    const double secs = seconds_since(t0);
    Outcome out;
    out.passed = star_ok && tree_ok && ratio_ok && secs < 300;
    out.detail = fmt("star %.5f +- %.5f (exact %.5f) in [0.02, 0.10] ", star, star_se, star_exact) + (star_ok ? "ok" : "FAIL")
                 + fmt("; tree %.5f +- %.5f (exact %.5f) in [0.002, 0.010] ", tree, tree_se, tree_exact) + (tree_ok ? "ok" : "FAIL")
                 + fmt("; ratio %.2f (>= 5) ", star / tree) + (ratio_ok ? "ok" : "FAIL") + fmt("; %.1fs (< 300s)", secs);
    return out;
}

// 11 ------------------------------------------------------------------------
Outcome identity_suites()
{
    double worst_j = 0.0;
    double worst_hat = 0.0;
    std::size_t j_pass = 0;
    for (std::size_t k = 0; k < 50; ++k) {
        Engine rng = make_stream(1011, k);
        const std::size_t n = 2 + k % 12;
        const StochasticMatrix p = random_reversible(n, rng);
        const JPropertyReport rep = check_j_properties(p, 1e-10);
        if (rep.all_passed()) ++j_pass;
        for (const auto& c : rep.checks)
            if (c.name != "rho(P-J) < 1") worst_j = std::max(worst_j, c.error);

        const auto sw = NoiseCovariance::full(random_psd(n, 1 + k % n, rng));
        const SquaredChain sq = square_chain_data(p);
        const Matrix s = sigma_hat(sq, sw);
        const Matrix j = j_matrix(p);
        const Matrix p2 = p.matrix() * p.matrix();
        const Matrix fixed = p2 * s + (Matrix::Identity(s.rows(), s.cols()) - j) * sw.matrix() * Matrix(sq.pi.asDiagonal());
        worst_hat = std::max({worst_hat, std::abs(s.trace() - delta_ss_theorem(sq, sw).delta_ss), (j * s).cwiseAbs().maxCoeff(),
                              (s - fixed).cwiseAbs().maxCoeff()});
    }
    return {j_pass == 50 && worst_hat <= 1e-10,
            fmt("J identities pass on %.0f/50 (worst %.2e); Tr, J-orthogonality, fixed point worst %.2e (<= 1e-10)",
                double(j_pass), worst_j, worst_hat)};
}

// 12 ------------------------------------------------------------------------
Outcome square_hitting_bound()
{
    Outcome out;
    double worst = 0.0;
    std::size_t count = 0;
    const std::vector<std::pair<GraphFamily, std::vector<std::size_t>>> cases{
        {family::Complete{}, {8, 64, 200}},     {family::Line{}, {8, 64, 200}},      {family::Ring{}, {8, 64, 200}},
        {family::Star{}, {8, 64, 200}},         {family::TwoStar{}, {8, 64, 200}},   {family::StarryLine{}, {9, 63, 198}},
        {family::Grid{2}, {9, 64, 196}},        {family::Grid{3}, {8, 64, 125}},     {family::CompleteBinaryTree{}, {7, 63, 127}},
        {family::ErdosRenyi{0.1}, {64, 200}},   {family::RandomRegular{3}, {64, 200}}};
    for (const auto& [fam, ns] : cases) {
        for (std::size_t n : ns) {
            const Graph g = build_graph(fam, n, 12);
            const StochasticMatrix p = lazy_walk_matrix(g);
            const double ratio = max_hitting_time(hitting_times(square_chain(p))) / max_hitting_time(hitting_times(p));
            worst = std::max(worst, ratio);
            ++count;
            if (ratio > 4.0) out.warnings.push_back(g.family_tag() + fmt(" ratio %.3f", ratio));
        }
    }
    out.detail = fmt("%.0f lazy chains, worst H_{P^2}/H_P = %.3f (warn above 4), %.0f warnings", double(count), worst,
                     double(out.warnings.size()));
    return out;
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"oracle equivalence", oracle_equivalence},
        {"four-way symmetric formulas", four_way},
        {"random target sums", random_target},
        {"commute-time identity", commute_time},
        {"scaling table", scaling_table},
        {"uniform disagreement sandwich", uni_sandwich_check},
        {"bipartite divergence", bipartite_divergence},
        {"Monte Carlo consistency", monte_carlo},
        {"formation exactness", formation_exactness},
        {"formation star vs tree", formation_star_tree},
        {"J and covariance identities", identity_suites},
        {"lazy-square hitting bound", square_hitting_bound},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = Outcome(false, std::string("exception: ") + e.what());
        }
        std::printf("%s  %2zu %-30s %s\n", o.passed ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
        for (const auto& w : o.warnings) std::printf("      warning: %s\n", w.c_str());
        std::fflush(stdout);
        if (!o.passed) ++failed;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
