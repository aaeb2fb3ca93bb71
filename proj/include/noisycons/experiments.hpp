#pragma once

// Command bodies shared by the command-line tool and the test suite. Each
// run_* takes a resolved config and returns the documents it would write, so
// callers decide where output goes.

#include "disagreement.hpp"
#include "errors.hpp"
#include "formation.hpp"
#include "graph.hpp"
#include "json_io.hpp"
#include "markov.hpp"
#include "simulate.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace noisycons {

inline constexpr const char* tool_version = "0.1.0";

/// 17 significant digits in scientific notation.
inline std::string sci(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

inline Json tool_stamp() { return {{"name", "noisycons"}, {"version", tool_version}}; }

// ---------------------------------------------------------------- noise ----

/// Per-node variances: a scalar base (default 1), optionally replaced by a
/// file of n whitespace-separated values, then per-node overrides. Override
/// indices may be negative to count from the end (-1 is node n-1), which
/// lets one override follow a node like the second star center across sizes.
struct NoiseSpec {
    std::optional<double> sigma2;
    std::optional<std::string> sigma2_vec_path;
    std::vector<std::pair<long long, double>> node_overrides;

    [[nodiscard]] Json to_json() const
    {
        Json overrides = Json::array();
        for (const auto& [i, s] : node_overrides) overrides.push_back({i, s});
        return {{"sigma2", sigma2 ? Json(*sigma2) : Json(nullptr)},
                {"sigma2_vec", sigma2_vec_path ? Json(*sigma2_vec_path) : Json(nullptr)},
                {"sigma2_node", overrides}};
    }
};

/// Parses the `i=s` form of a node override.
inline std::pair<long long, double> parse_node_override(const std::string& text)
{
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::InvalidParam, "node override must look like i=s: '" + text + "'");
    try {
        std::size_t used_i = 0;
        std::size_t used_s = 0;
        const std::string lhs = text.substr(0, eq);
        const std::string rhs = text.substr(eq + 1);
        const long long i = std::stoll(lhs, &used_i);
        const double s = std::stod(rhs, &used_s);
        if (used_i != lhs.size() || used_s != rhs.size()) throw std::invalid_argument("trailing");
        return {i, s};
    } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidParam, "cannot parse node override '" + text + "'");
    }
}

inline Vector read_variance_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open variance file '" + path + "'");
    std::vector<double> values;
    double v = 0.0;
    while (in >> v) values.push_back(v);
    if (!in.eof()) throw Error(ErrorCode::IoError, "variance file '" + path + "' has a malformed entry");
    return Eigen::Map<Vector>(values.data(), static_cast<Index>(values.size()));
}

inline Vector resolve_variances(const NoiseSpec& spec, std::size_t n)
{
    Vector s = Vector::Constant(static_cast<Index>(n), spec.sigma2.value_or(1.0));
    if (spec.sigma2_vec_path) {
        s = read_variance_file(*spec.sigma2_vec_path);
        if (static_cast<std::size_t>(s.size()) != n) {
            throw Error(ErrorCode::DimensionMismatch, "variance file has " + std::to_string(s.size())
                                                          + " entries, graph has " + std::to_string(n) + " nodes");
        }
    }
    const auto nn = static_cast<long long>(n);
    for (const auto& [i, value] : spec.node_overrides) {
        const long long k = i < 0 ? nn + i : i;
        if (k < 0 || k >= nn) throw Error(ErrorCode::InvalidParam, "node override index " + std::to_string(i) + " out of range");
        s(static_cast<Index>(k)) = value;
    }
    if ((s.array() < 0.0).any()) throw Error(ErrorCode::NotPositiveSemidefinite, "variances must be >= 0");
    return s;
}

// ---------------------------------------------------------------- graph ----

enum class Walk { Lazy, Simple, MaxDegree };

inline const char* to_string(Walk w)
{
    switch (w) {
    case Walk::Lazy: return "lazy";
    case Walk::Simple: return "simple";
    case Walk::MaxDegree: return "max-degree";
    }
    return "?";
}

inline Walk parse_walk(const std::string& s)
{
    if (s == "lazy") return Walk::Lazy;
    if (s == "simple") return Walk::Simple;
    if (s == "max-degree") return Walk::MaxDegree;
    throw Error(ErrorCode::InvalidParam, "walk must be lazy, simple or max-degree, got '" + s + "'");
}

struct GraphSpec {
    std::string family = "ring";
    std::optional<std::string> edges_path; // family "custom"
    double er_p = 0.5;
    std::size_t degree = 3;
    std::optional<std::uint64_t> seed;

    [[nodiscard]] Json to_json() const
    {
        return {{"family", family},
                {"edges", edges_path ? Json(*edges_path) : Json(nullptr)},
                {"er_p", er_p},
                {"degree", degree},
                {"seed", seed ? Json(*seed) : Json(nullptr)}};
    }
};

/// Custom graphs take their size from the edge file; `n` is then only checked.
inline Graph resolve_graph(const GraphSpec& spec, std::optional<std::size_t> n)
{
    if (spec.family == "custom") {
        if (!spec.edges_path) throw Error(ErrorCode::InvalidParam, "family custom needs --edges");
        Graph g = load_edge_list(*spec.edges_path);
        if (n && *n != g.node_count()) {
            throw Error(ErrorCode::DimensionMismatch, "--n disagrees with the edge list node count");
        }
        return g;
    }
    if (!n) throw Error(ErrorCode::InvalidParam, "--n is required for family '" + spec.family + "'");
    return build_graph(parse_family(spec.family, spec.er_p, spec.degree), *n, spec.seed);
}

inline StochasticMatrix walk_matrix(const Graph& g, Walk walk)
{
    switch (walk) {
    case Walk::Simple: return simple_walk_matrix(g);
    case Walk::MaxDegree: return max_degree_walk_matrix(g);
    default: return lazy_walk_matrix(g);
    }
}

inline Json chain_flags(const StochasticMatrix& p)
{
    return {{"irreducible", p.irreducible()},
            {"aperiodic", p.aperiodic()},
            {"reversible", p.reversible()},
            {"symmetric", p.symmetric()}};
}

// -------------------------------------------------------------- analyze ----

struct AnalyzeConfig {
    GraphSpec graph;
    std::optional<std::size_t> n;
    Walk walk = Walk::Lazy;
    NoiseSpec noise;
    std::size_t oracle_cap = 64;

    [[nodiscard]] Json to_json() const
    {
        return {{"command", "analyze"},
                {"graph", graph.to_json()},
                {"n", n ? Json(*n) : Json(nullptr)},
                {"walk", to_string(walk)},
                {"noise", noise.to_json()},
                {"oracle_cap", oracle_cap}};
    }
};

/// Exact methods follow the chain: symmetric chains get every closed form
/// (the scalar-only ones when all variances agree), reversible chains get the
/// general formula, and the oracle runs whenever n is within the cap or no
/// closed form applies.
inline Json run_analyze(const AnalyzeConfig& cfg)
{
    const Graph g = resolve_graph(cfg.graph, cfg.n);
    const StochasticMatrix p = walk_matrix(g, cfg.walk);
    const std::size_t n = p.size();
    const Vector sigmas = resolve_variances(cfg.noise, n);
    const auto sw = NoiseCovariance::diagonal(sigmas);
    const bool scalar = n > 0 && (sigmas.array() == sigmas(0)).all();

    Json out = {{"tool", tool_stamp()}, {"config", cfg.to_json()}, {"graph_family", g.family_tag()},
                {"n", n}, {"edges", g.edge_count()}, {"flags", chain_flags(p)}};
    out["pi"] = to_json(p.stationary());

    Json delta = Json::object();
    Json reports = Json::array();
    std::vector<std::string> methods;
    auto record = [&](DisagreementReport r) {
        r.graph_family = g.family_tag();
        r.seed = cfg.graph.seed;
        r.n = n;
        delta[to_string(r.method)] = r.delta_ss;
        methods.emplace_back(to_string(r.method));
        reports.push_back(to_json(r));
    };

    if (n == 1) {
        // A single agent never disagrees with itself.
        DisagreementReport r;
        r.method = Method::Theorem;
        record(r);
        out["kemeny_p"] = 0.0;
        out["kemeny_p2"] = 0.0;
    } else {
        const bool closed_form = p.irreducible() && p.aperiodic() && p.reversible();
        if (p.irreducible()) out["kemeny_p"] = kemeny_constant_combinatorial(p);
        if (closed_form) {
            const SquaredChain sq = square_chain_data(p);
            out["kemeny_p2"] = sq.kemeny();
            DisagreementReport d = delta_ss_theorem(sq, sw);
            record(d);
            d.delta_ss = delta_ss_diag(sq, sigmas);
            d.method = Method::Diagonal;
            record(d);
            const auto [lo, hi] = delta_ss_bounds(sq, sigmas);
            out["delta_ss_bounds"] = {{"lower", lo}, {"upper", hi}};
            out["max_resistance_p2"] = effective_resistance(sq.hitting).maxCoeff();
            if (p.symmetric() && scalar) {
                const double s2 = sigmas(0);
                for (auto [m, v] : {std::pair{Method::Kemeny, delta_ss_kemeny(p, s2)},
                                    std::pair{Method::Spectral, delta_ss_spectral(p, s2)},
                                    std::pair{Method::Resistance, delta_ss_resistance(p, s2)}}) {
                    DisagreementReport r = d;
                    r.delta_ss = v;
                    r.method = m;
                    record(r);
                }
            }
        }
        if (!closed_form || n <= cfg.oracle_cap) {
            auto [cov, r] = delta_oracle(p, sw);
            out["delta_uni_exact"] = *r.delta_uni_exact;
            out["oracle"] = {{"iterations", cov.iterations}, {"residual", cov.residual}};
            record(r);
        }
    }

    // The headline value is the first method that ran.
    const auto& first = reports.front();
    out["delta_ss"] = first["delta_ss"];
    out["delta_uni_lower"] = first["delta_uni_lower"];
    out["delta_uni_upper"] = first["delta_uni_upper"];
    out["methods"] = methods;
    out["delta_ss_by_method"] = delta;
    out["reports"] = reports;
    return out;
}

// ---------------------------------------------------------------- sweep ----

struct SweepConfig {
    GraphSpec graph;
    std::vector<std::size_t> ns;
    Walk walk = Walk::Lazy;
    NoiseSpec noise;
    unsigned threads = 0;

    [[nodiscard]] Json to_json() const
    {
        return {{"command", "sweep"}, {"graph", graph.to_json()}, {"ns", ns},
                {"walk", to_string(walk)}, {"noise", noise.to_json()}, {"threads", threads}};
    }
};

struct SweepRow {
    std::string family;
    std::size_t n = 0;
    double delta_ss = 0.0;
    double delta_uni_lower = 0.0;
    double delta_uni_upper = 0.0;
    double kemeny_p2 = 0.0;
    double max_resistance = 0.0;
    std::string status = "ok";
};

inline SweepRow sweep_row(const SweepConfig& cfg, std::size_t n)
{
    SweepRow row;
    row.family = cfg.graph.family;
    row.n = n;
    try {
        const Graph g = resolve_graph(cfg.graph, n);
        const StochasticMatrix p = walk_matrix(g, cfg.walk);
        const Vector sigmas = resolve_variances(cfg.noise, p.size());
        if (p.size() == 1) return row;
        const SquaredChain sq = square_chain_data(p);
        const auto r = delta_ss_theorem(sq, NoiseCovariance::diagonal(sigmas));
        row.delta_ss = r.delta_ss;
        row.delta_uni_lower = r.delta_uni_lower;
        row.delta_uni_upper = r.delta_uni_upper;
        row.kemeny_p2 = sq.kemeny();
        row.max_resistance = effective_resistance(sq.hitting).maxCoeff();
    } catch (const Error& e) {
        row.status = to_string(e.code());
    }
    return row;
}

/// Rows are computed in parallel and returned in the order of `cfg.ns`.
inline std::vector<SweepRow> run_sweep(const SweepConfig& cfg)
{
    if (cfg.ns.empty()) throw Error(ErrorCode::InvalidParam, "sweep needs at least one n");
    std::vector<SweepRow> rows(cfg.ns.size());
    detail::parallel_for(cfg.ns.size(), cfg.threads, [&](std::size_t k) { rows[k] = sweep_row(cfg, cfg.ns[k]); });
    return rows;
}

inline void write_metadata(std::ostream& os, const Json& config)
{
    os << "# tool: noisycons " << tool_version << '\n';
    os << "# config: " << config.dump() << '\n';
}

inline void write_sweep_csv(std::ostream& os, const SweepConfig& cfg, const std::vector<SweepRow>& rows)
{
    write_metadata(os, cfg.to_json());
    os << "family,n,delta_ss,delta_uni_lower,delta_uni_upper,kemeny_p2,max_resistance,status\n";
    for (const auto& r : rows) {
        os << r.family << ',' << r.n << ',' << sci(r.delta_ss) << ',' << sci(r.delta_uni_lower) << ','
           << sci(r.delta_uni_upper) << ',' << sci(r.kemeny_p2) << ',' << sci(r.max_resistance) << ',' << r.status
           << '\n';
    }
}

// ------------------------------------------------------------- simulate ----

inline const char* to_string(NoiseDistribution d) { return d == NoiseDistribution::Gaussian ? "gaussian" : "rademacher"; }

inline NoiseDistribution parse_noise_distribution(const std::string& s)
{
    if (s == "gaussian") return NoiseDistribution::Gaussian;
    if (s == "rademacher") return NoiseDistribution::Rademacher;
    throw Error(ErrorCode::InvalidParam, "noise distribution must be gaussian or rademacher");
}

inline Json sim_config_json(const SimConfig& s)
{
    return {{"horizon", s.horizon}, {"trials", s.trials},
            {"burn_in", s.burn_in ? Json(*s.burn_in) : Json("auto")}, {"seed", s.seed},
            {"record_every", s.record_every}, {"noise", to_string(s.noise)}, {"threads", s.threads}};
}

struct SimulateConfig {
    GraphSpec graph;
    std::optional<std::size_t> n;
    Walk walk = Walk::Lazy;
    NoiseSpec noise;
    SimConfig sim;

    [[nodiscard]] Json to_json() const
    {
        return {{"command", "simulate"}, {"graph", graph.to_json()}, {"n", n ? Json(*n) : Json(nullptr)},
                {"walk", to_string(walk)}, {"noise", noise.to_json()}, {"sim", sim_config_json(sim)}};
    }
};

struct SimulateResult {
    SimTrace trace;
    Json summary;
};

/// Runs the trace from the origin, then the tail estimator on the same
/// streams, and compares with the closed form when one applies.
inline SimulateResult run_simulate(const SimulateConfig& cfg)
{
    const Graph g = resolve_graph(cfg.graph, cfg.n);
    const StochasticMatrix p = walk_matrix(g, cfg.walk);
    const auto sw = NoiseCovariance::diagonal(resolve_variances(cfg.noise, p.size()));
    SimConfig sim = cfg.sim;
    if (!sim.burn_in) sim.burn_in = auto_burn_in(p);

    SimulateResult out;
    out.trace = simulate_consensus(p, sw, Vector::Zero(static_cast<Index>(p.size())), sim);
    const SteadyStateEstimate est = estimate_delta_ss(p, sw, sim);
    Json summary = {{"tool", tool_stamp()}, {"config", cfg.to_json()}, {"graph_family", g.family_tag()},
                    {"n", p.size()}, {"seed", sim.seed}, {"burn_in", est.burn_in}, {"trials", est.trials},
                    {"delta_ss_simulated", est.estimate}, {"stderr", est.std_error}};
    if (p.reversible()) {
        const auto exact = delta_ss_theorem(p, sw);
        summary["delta_ss_exact"] = exact.delta_ss;
        summary["z_score"] = est.std_error > 0.0 ? (est.estimate - exact.delta_ss) / est.std_error : 0.0;
    }
    out.summary = std::move(summary);
    return out;
}

inline void write_trace_csv(std::ostream& os, const SimulateConfig& cfg, const SimTrace& trace)
{
    write_metadata(os, cfg.to_json());
    write_trace_csv(os, trace);
}

// ------------------------------------------------------------ formation ----

struct FormationConfig {
    std::optional<std::string> spec_path; // JSON spec
    bool ring_demo = false;
    std::optional<GraphSpec> graph;       // default layout on a generated graph
    std::optional<std::size_t> n;
    std::size_t dim = 2;
    std::optional<double> lambda2;        // overrides the spec's noise
    FormationSimConfig sim;

    [[nodiscard]] Json to_json() const
    {
        return {{"command", "formation"},
                {"spec", spec_path ? Json(*spec_path) : Json(nullptr)},
                {"ring_demo", ring_demo},
                {"graph", graph ? graph->to_json() : Json(nullptr)},
                {"n", n ? Json(*n) : Json(nullptr)},
                {"dim", dim},
                {"lambda2", lambda2 ? Json(*lambda2) : Json(nullptr)},
                {"start", sim.start == InitialPlacement::Random ? "random" : "formation"},
                {"start_spread", sim.start_spread},
                {"sim", sim_config_json(sim.sim)}};
    }
};

inline FormationSpec resolve_formation(const FormationConfig& cfg)
{
    const int sources = int(cfg.spec_path.has_value()) + int(cfg.ring_demo) + int(cfg.graph.has_value());
    if (sources != 1) throw Error(ErrorCode::InvalidParam, "give exactly one of --spec, --demo ring, --family");
    const double default_lambda2 = 1.0 / 2500.0;
    if (cfg.spec_path) {
        FormationSpec spec = load_formation_spec(*cfg.spec_path);
        if (cfg.lambda2) return spec.with_lambda2(Vector::Constant(static_cast<Index>(spec.size()), *cfg.lambda2));
        return spec;
    }
    if (cfg.ring_demo) return ring_demo_spec(cfg.lambda2.value_or(default_lambda2));
    const Graph g = resolve_graph(*cfg.graph, cfg.n);
    return default_formation(g, cfg.dim, cfg.lambda2.value_or(default_lambda2));
}

struct FormationResult {
    FormationSimulation sim;
    Json summary;
};

inline FormationResult run_formation(const FormationConfig& cfg)
{
    const FormationSpec spec = resolve_formation(cfg);
    FormationResult out;
    out.sim = simulate_formation(spec, cfg.sim);
    Json summary = {{"tool", tool_stamp()},
                    {"config", cfg.to_json()},
                    {"spec", formation_to_json(spec)},
                    {"n", spec.size()},
                    {"dim", spec.dim()},
                    {"seed", cfg.sim.sim.seed},
                    {"burn_in", out.sim.burn_in},
                    {"form_simulated", out.sim.form_simulated},
                    {"form_stderr", out.sim.form_stderr},
                    {"form_via_delta", form_via_delta(spec)}};
    if (spec.equal_noise()) {
        const FormationReport exact = form_exact(spec);
        summary["form_exact"] = exact.form_exact;
        summary["kemeny_p2"] = exact.kemeny_p2;
    }
    out.summary = std::move(summary);
    return out;
}

inline void write_trajectory_csv(std::ostream& os, const FormationConfig& cfg, const FormationSimulation& sim,
                                 std::size_t dim)
{
    write_metadata(os, cfg.to_json());
    write_trajectory_csv(os, sim, dim);
}

} // namespace noisycons
