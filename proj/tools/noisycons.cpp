// noisycons: analysis, sweeps, simulation and formation runs for noisy
// consensus on graphs. Exit codes: 0 ok, 2 configuration error, 3 numerical
// failure.

#include <noisycons/experiments.hpp>
#include <noisycons/selftest.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace noisycons;

constexpr int exit_config = 2;
constexpr int exit_numeric = 3;

struct GraphOptions {
    std::string family = "ring";
    std::string edges;
    double er_p = 0.5;
    std::size_t degree = 3;
    std::optional<std::uint64_t> seed;
    std::string walk = "lazy";

    void attach(CLI::App& app)
    {
        app.add_option("--family", family,
                       "complete, line, ring, star, two-star, starry-line, grid2d, grid3d, tree, erdos-renyi, "
                       "random-regular or custom")
            ->capture_default_str();
        app.add_option("--edges", edges, "edge list for --family custom: n, then one 'i j' per line");
        app.add_option("--er-p", er_p, "edge probability for erdos-renyi")->capture_default_str();
        app.add_option("--degree", degree, "degree for random-regular")->capture_default_str();
        app.add_option("--seed", seed, "seed for random graph families and simulations");
        app.add_option("--walk", walk, "lazy, simple or max-degree")->capture_default_str();
    }

    [[nodiscard]] GraphSpec spec() const
    {
        GraphSpec g;
        g.family = family;
        if (!edges.empty()) g.edges_path = edges;
        g.er_p = er_p;
        g.degree = degree;
        g.seed = seed;
        return g;
    }
};

struct NoiseOptions {
    std::optional<double> sigma2;
    std::string sigma2_vec;
    std::vector<std::string> overrides;

    void attach(CLI::App& app)
    {
        app.add_option("--sigma2", sigma2, "noise variance at every node (default 1)");
        app.add_option("--sigma2-vec", sigma2_vec, "file with one variance per node");
        app.add_option("--sigma2-node", overrides, "per-node override i=s; negative i counts from the end")
            ->allow_extra_args(false);
    }

    [[nodiscard]] NoiseSpec spec() const
    {
        NoiseSpec s;
        s.sigma2 = sigma2;
        if (!sigma2_vec.empty()) s.sigma2_vec_path = sigma2_vec;
        for (const auto& o : overrides) s.node_overrides.push_back(parse_node_override(o));
        return s;
    }
};

struct SimOptions {
    SimConfig cfg;
    std::string noise = "gaussian";

    void attach(CLI::App& app, std::size_t horizon, std::size_t trials)
    {
        cfg.horizon = horizon;
        cfg.trials = trials;
        app.add_option("--steps", cfg.horizon, "horizon T")->capture_default_str();
        app.add_option("--trials", cfg.trials, "independent trials")->capture_default_str();
        app.add_option("--burn-in", cfg.burn_in, "burn-in steps (default ceil(20/(1-rho^2)))");
        app.add_option("--record-every", cfg.record_every, "trace stride")->capture_default_str();
        app.add_option("--noise", noise, "gaussian or rademacher")->capture_default_str();
        app.add_option("--threads", cfg.threads, "worker threads, 0 for all cores")->capture_default_str();
    }

    [[nodiscard]] SimConfig resolve(std::optional<std::uint64_t> seed) const
    {
        SimConfig s = cfg;
        s.seed = seed.value_or(0);
        s.noise = parse_noise_distribution(noise);
        return s;
    }
};

/// Writes `text` to `path`, or to stdout for "" and "-".
void emit(const std::string& path, const std::string& text)
{
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
    out << text;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Steady-state disagreement of noisy consensus on graphs"};
    app.set_version_flag("--version", std::string(tool_version));
    app.require_subcommand(1);

    // analyze
    auto* analyze = app.add_subcommand("analyze", "exact disagreement of one graph by every applicable method");
    GraphOptions a_graph;
    NoiseOptions a_noise;
    std::optional<std::size_t> a_n;
    std::size_t a_cap = 64;
    std::string a_out;
    a_graph.attach(*analyze);
    a_noise.attach(*analyze);
    analyze->add_option("--n", a_n, "number of nodes");
    analyze->add_option("--oracle-cap", a_cap, "largest n for the covariance recursion")->capture_default_str();
    analyze->add_option("-o,--out", a_out, "JSON output path (default stdout)");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "closed-form disagreement over a list of sizes, as CSV");
    GraphOptions s_graph;
    NoiseOptions s_noise;
    std::vector<std::size_t> s_ns;
    unsigned s_threads = 0;
    std::string s_out;
    s_graph.attach(*sweep);
    s_noise.attach(*sweep);
    sweep->add_option("--ns", s_ns, "sizes, e.g. --ns 9 18 36 72")->required();
    sweep->add_option("--threads", s_threads, "worker threads, 0 for all cores")->capture_default_str();
    sweep->add_option("-o,--out", s_out, "CSV output path (default stdout)");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo run of the noisy consensus iteration");
    GraphOptions m_graph;
    NoiseOptions m_noise;
    SimOptions m_sim;
    std::optional<std::size_t> m_n;
    std::string m_trace;
    std::string m_summary;
    m_graph.attach(*simulate);
    m_noise.attach(*simulate);
    m_sim.attach(*simulate, 5000, 200);
    simulate->add_option("--n", m_n, "number of nodes");
    simulate->add_option("--trace", m_trace, "trace CSV path");
    simulate->add_option("-o,--out", m_summary, "summary JSON path (default stdout)");

    // formation
    auto* formation = app.add_subcommand("formation", "noisy relative-position formation control");
    std::string f_spec;
    std::string f_demo;
    std::string f_family;
    std::optional<std::size_t> f_n;
    std::size_t f_dim = 2;
    std::optional<double> f_lambda;
    std::optional<double> f_lambda2;
    std::string f_start = "random";
    double f_spread = 1.0;
    std::optional<std::uint64_t> f_seed;
    SimOptions f_sim;
    std::string f_traj;
    std::string f_summary;
    formation->add_option("--spec", f_spec, "formation spec JSON");
    formation->add_option("--demo", f_demo, "built-in spec: ring")->check(CLI::IsMember({"ring"}));
    formation->add_option("--family", f_family, "graph family laid out with default offsets");
    formation->add_option("--n", f_n, "number of agents for --family");
    formation->add_option("--dim", f_dim, "position dimension for --family")->capture_default_str();
    auto* lam = formation->add_option("--lambda", f_lambda, "noise standard deviation per coordinate");
    formation->add_option("--lambda2", f_lambda2, "noise variance per coordinate")->excludes(lam);
    formation->add_option("--start", f_start, "random or formation")->capture_default_str();
    formation->add_option("--start-spread", f_spread, "half-width of random starting offsets")->capture_default_str();
    formation->add_option("--seed", f_seed, "simulation seed");
    f_sim.attach(*formation, 2000, 20);
    formation->add_option("--trajectory", f_traj, "trajectory CSV path (trial 0)");
    formation->add_option("-o,--out", f_summary, "summary JSON path (default stdout)");

    // selftest
    auto* selftest = app.add_subcommand("selftest", "run the invariant checks on small seeded instances");
    std::uint64_t t_seed = 20240601;
    selftest->add_option("--seed", t_seed)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_config;
    }

    try {
        if (*analyze) {
            AnalyzeConfig cfg;
            cfg.graph = a_graph.spec();
            cfg.n = a_n;
            cfg.walk = parse_walk(a_graph.walk);
            cfg.noise = a_noise.spec();
            cfg.oracle_cap = a_cap;
            emit(a_out, dump(run_analyze(cfg)));
        } else if (*sweep) {
            SweepConfig cfg;
            cfg.graph = s_graph.spec();
            cfg.ns = s_ns;
            cfg.walk = parse_walk(s_graph.walk);
            cfg.noise = s_noise.spec();
            cfg.threads = s_threads;
            const auto rows = run_sweep(cfg);
            std::ostringstream csv;
            write_sweep_csv(csv, cfg, rows);
            emit(s_out, csv.str());
        } else if (*simulate) {
            SimulateConfig cfg;
            cfg.graph = m_graph.spec();
            cfg.n = m_n;
            cfg.walk = parse_walk(m_graph.walk);
            cfg.noise = m_noise.spec();
            cfg.sim = m_sim.resolve(m_graph.seed);
            const auto result = run_simulate(cfg);
            if (!m_trace.empty()) {
                std::ostringstream csv;
                write_trace_csv(csv, cfg, result.trace);
                emit(m_trace, csv.str());
            }
            emit(m_summary, dump(result.summary));
        } else if (*formation) {
            FormationConfig cfg;
            if (!f_spec.empty()) cfg.spec_path = f_spec;
            cfg.ring_demo = !f_demo.empty();
            if (!f_family.empty()) {
                GraphSpec g;
                g.family = f_family;
                g.seed = f_seed;
                cfg.graph = g;
            }
            cfg.n = f_n;
            cfg.dim = f_dim;
            if (f_lambda) cfg.lambda2 = *f_lambda * *f_lambda;
            if (f_lambda2) cfg.lambda2 = *f_lambda2;
            if (f_start == "random") cfg.sim.start = InitialPlacement::Random;
            else if (f_start == "formation") cfg.sim.start = InitialPlacement::InFormation;
            else throw Error(ErrorCode::InvalidParam, "--start must be random or formation");
            cfg.sim.start_spread = f_spread;
            cfg.sim.sim = f_sim.resolve(f_seed);
            cfg.sim.keep_trajectory = !f_traj.empty();
            const auto result = run_formation(cfg);
            if (!f_traj.empty()) {
                std::ostringstream csv;
                write_trajectory_csv(csv, cfg, result.sim, result.summary["dim"].get<std::size_t>());
                emit(f_traj, csv.str());
            }
            emit(f_summary, dump(result.summary));
        } else if (*selftest) {
            bool ok = true;
            for (const auto& r : run_selftest(t_seed)) {
                std::printf("%s  %-40s worst %.3e (bound %.0e)\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.worst,
                            r.bound);
                ok = ok && r.passed;
            }
            return ok ? 0 : exit_numeric;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return is_config_error(e.code()) ? exit_config : exit_numeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_numeric;
    }
    return 0;
}
