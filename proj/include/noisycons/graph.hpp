#pragma once

#include "errors.hpp"
#include "rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace noisycons {

using NodeId = std::size_t;
using Edge = std::pair<NodeId, NodeId>;

/// Undirected simple graph on nodes 0..n-1. Edges are stored once with
/// first < second, sorted. Immutable after construction.
class Graph {
public:
    Graph() = default;

    Graph(std::size_t n, std::vector<Edge> edges, std::string family_tag = "custom")
        : n_(n)
        , family_tag_(std::move(family_tag))
    {
        for (auto& [a, b] : edges) {
            if (a >= n || b >= n) {
                throw Error(ErrorCode::InvalidParam,
                            "edge {" + std::to_string(a) + "," + std::to_string(b)
                                + "} out of range for n=" + std::to_string(n));
            }
            if (a == b) {
                throw Error(ErrorCode::InvalidParam, "self-loop at node " + std::to_string(a));
            }
            if (a > b) std::swap(a, b);
        }
        std::sort(edges.begin(), edges.end());
        if (std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
            throw Error(ErrorCode::InvalidParam, "duplicate edge");
        }
        edges_ = std::move(edges);
        adjacency_.assign(n_, {});
        for (const auto& [a, b] : edges_) {
            adjacency_[a].push_back(b);
            adjacency_[b].push_back(a);
        }
        for (auto& nbrs : adjacency_) std::sort(nbrs.begin(), nbrs.end());
    }

    [[nodiscard]] std::size_t node_count() const noexcept { return n_; }
    [[nodiscard]] std::size_t edge_count() const noexcept { return edges_.size(); }
    [[nodiscard]] const std::vector<Edge>& edges() const noexcept { return edges_; }
    [[nodiscard]] const std::vector<NodeId>& neighbors(NodeId i) const { return adjacency_.at(i); }
    [[nodiscard]] std::size_t degree(NodeId i) const { return adjacency_.at(i).size(); }
    [[nodiscard]] const std::string& family_tag() const noexcept { return family_tag_; }

    [[nodiscard]] bool has_edge(NodeId a, NodeId b) const
    {
        const auto& nbrs = adjacency_.at(a);
        return std::binary_search(nbrs.begin(), nbrs.end(), b);
    }

    [[nodiscard]] std::size_t max_degree() const noexcept
    {
        std::size_t best = 0;
        for (const auto& nbrs : adjacency_) best = std::max(best, nbrs.size());
        return best;
    }

    friend bool operator==(const Graph& a, const Graph& b)
    {
        return a.n_ == b.n_ && a.edges_ == b.edges_;
    }

private:
    std::size_t n_ = 0;
    std::vector<Edge> edges_;
    std::vector<std::vector<NodeId>> adjacency_;
    std::string family_tag_ = "custom";
};

namespace family {
struct Complete {};
struct Line {};
struct Ring {};
struct Star {};
struct TwoStar {};
struct StarryLine {};
struct Grid {
    int dim = 2;
};
struct CompleteBinaryTree {};
struct ErdosRenyi {
    double p = 0.5;
};
struct RandomRegular {
    std::size_t degree = 3;
};
struct Custom {
    std::vector<Edge> edges;
};
} // namespace family

using GraphFamily = std::variant<family::Complete, family::Line, family::Ring, family::Star,
                                 family::TwoStar, family::StarryLine, family::Grid,
                                 family::CompleteBinaryTree, family::ErdosRenyi,
                                 family::RandomRegular, family::Custom>;

inline constexpr int er_max_attempts = 1000;
inline constexpr int regular_max_attempts = 1000;

inline std::vector<std::size_t> degrees(const Graph& g)
{
    std::vector<std::size_t> deg(g.node_count());
    for (NodeId i = 0; i < g.node_count(); ++i) deg[i] = g.degree(i);
    return deg;
}

inline bool is_connected(const Graph& g)
{
    const std::size_t n = g.node_count();
    if (n <= 1) return true;
    std::vector<char> seen(n, 0);
    std::vector<NodeId> stack{0};
    seen[0] = 1;
    std::size_t visited = 1;
    while (!stack.empty()) {
        const NodeId u = stack.back();
        stack.pop_back();
        for (NodeId v : g.neighbors(u)) {
            if (!seen[v]) {
                seen[v] = 1;
                ++visited;
                stack.push_back(v);
            }
        }
    }
    return visited == n;
}

/// Two-colouring by BFS over every component.
inline bool is_bipartite(const Graph& g)
{
    const std::size_t n = g.node_count();
    std::vector<int> colour(n, -1);
    for (NodeId s = 0; s < n; ++s) {
        if (colour[s] != -1) continue;
        colour[s] = 0;
        std::queue<NodeId> q;
        q.push(s);
        while (!q.empty()) {
            const NodeId u = q.front();
            q.pop();
            for (NodeId v : g.neighbors(u)) {
                if (colour[v] == -1) {
                    colour[v] = 1 - colour[u];
                    q.push(v);
                } else if (colour[v] == colour[u]) {
                    return false;
                }
            }
        }
    }
    return true;
}

namespace detail {

inline std::string format_param(double v)
{
    std::ostringstream os;
    os << v;
    return os.str();
}

/// Integer k-th root of n if n is a perfect k-th power.
inline std::optional<std::size_t> exact_root(std::size_t n, int k)
{
    auto side = static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(n), 1.0 / k)));
    for (std::size_t s = side > 0 ? side - 1 : 0; s <= side + 1; ++s) {
        std::size_t p = 1;
        for (int d = 0; d < k; ++d) p *= s;
        if (p == n) return s;
    }
    return std::nullopt;
}

inline Graph complete(std::size_t n)
{
    std::vector<Edge> e;
    e.reserve(n * (n - 1) / 2);
    for (NodeId i = 0; i < n; ++i)
        for (NodeId j = i + 1; j < n; ++j) e.emplace_back(i, j);
    return Graph(n, std::move(e), "complete");
}

inline Graph line(std::size_t n)
{
    std::vector<Edge> e;
    for (NodeId i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
    return Graph(n, std::move(e), "line");
}

inline Graph ring(std::size_t n)
{
    if (n == 1) return Graph(1, {}, "ring");
    if (n == 2) throw Error(ErrorCode::InvalidParam, "ring needs n >= 3 (n = 2 would double the edge)");
    std::vector<Edge> e;
    for (NodeId i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
    return Graph(n, std::move(e), "ring");
}

// Center is node 0.
inline Graph star(std::size_t n)
{
    std::vector<Edge> e;
    for (NodeId i = 1; i < n; ++i) e.emplace_back(0, i);
    return Graph(n, std::move(e), "star");
}

// Centers are 0 and n-1; leaves 1..floor((n-2)/2) hang off 0, the rest off n-1.
inline Graph two_star(std::size_t n)
{
    if (n < 2) throw Error(ErrorCode::InvalidParam, "two-star needs n >= 2");
    std::vector<Edge> e{{0, n - 1}};
    const std::size_t left = (n - 2) / 2;
    for (NodeId i = 1; i <= left; ++i) e.emplace_back(0, i);
    for (NodeId i = left + 1; i + 1 < n; ++i) e.emplace_back(i, n - 1);
    return Graph(n, std::move(e), "two-star");
}

// With k = n/3: star A is center 0 with leaves 1..k-1, the line is k..2k-1,
// star B is center n-1 with leaves 2k..n-2. Joins: 0-k and (2k-1)-(n-1).
inline Graph starry_line(std::size_t n)
{
    if (n < 3 || n % 3 != 0) throw Error(ErrorCode::InvalidParam, "starry line needs n divisible by 3");
    const std::size_t k = n / 3;
    std::vector<Edge> e;
    for (NodeId i = 1; i < k; ++i) e.emplace_back(0, i);
    for (NodeId i = k; i + 1 < 2 * k; ++i) e.emplace_back(i, i + 1);
    for (NodeId i = 2 * k; i + 1 < n; ++i) e.emplace_back(i, n - 1);
    e.emplace_back(0, k);
    if (2 * k - 1 != n - 1) e.emplace_back(2 * k - 1, n - 1);
    return Graph(n, std::move(e), "starry-line");
}

// Lexicographic coordinates, last axis fastest.
inline Graph grid(std::size_t n, int dim)
{
    if (dim < 1) throw Error(ErrorCode::InvalidParam, "grid dimension must be >= 1");
    const auto side = exact_root(n, dim);
    if (!side) {
        throw Error(ErrorCode::InvalidParam,
                    "grid needs n to be a perfect " + std::to_string(dim) + "-th power, got "
                        + std::to_string(n));
    }
    std::vector<Edge> e;
    std::size_t stride = 1;
    for (int axis = 0; axis < dim; ++axis) {
        for (NodeId i = 0; i < n; ++i) {
            if ((i / stride) % *side + 1 < *side) e.emplace_back(i, i + stride);
        }
        stride *= *side;
    }
    return Graph(n, std::move(e), "grid" + std::to_string(dim) + "d");
}

// Heap order: children of i are 2i+1, 2i+2.
inline Graph complete_binary_tree(std::size_t n)
{
    if (((n + 1) & n) != 0) throw Error(ErrorCode::InvalidParam, "binary tree needs n = 2^h - 1");
    std::vector<Edge> e;
    for (NodeId i = 1; i < n; ++i) e.emplace_back((i - 1) / 2, i);
    return Graph(n, std::move(e), "tree");
}

inline Graph erdos_renyi(std::size_t n, double p, std::uint64_t seed)
{
    if (!(p > 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidParam, "ER probability must be in (0,1]");
    const std::string tag = "erdos-renyi(p=" + format_param(p) + ")";
    for (int attempt = 0; attempt < er_max_attempts; ++attempt) {
        Engine rng = make_stream(seed, static_cast<std::uint64_t>(attempt));
        std::bernoulli_distribution coin(p);
        std::vector<Edge> e;
        for (NodeId i = 0; i < n; ++i)
            for (NodeId j = i + 1; j < n; ++j)
                if (coin(rng)) e.emplace_back(i, j);
        Graph g(n, std::move(e), tag);
        if (is_connected(g)) return g;
    }
    throw Error(ErrorCode::GenerationFailed,
                "no connected Erdos-Renyi sample after " + std::to_string(er_max_attempts) + " attempts");
}

// Configuration model: shuffle n*d stubs, pair consecutively, reject any
// sample with a loop or multi-edge, or one that is disconnected.
inline Graph random_regular(std::size_t n, std::size_t d, std::uint64_t seed)
{
    if (d == 0 || d >= n || (n * d) % 2 != 0) {
        throw Error(ErrorCode::InvalidParam, "random regular needs 0 < d < n and n*d even");
    }
    const std::string tag = "random-regular(d=" + std::to_string(d) + ")";
    std::vector<NodeId> stubs(n * d);
    for (int attempt = 0; attempt < regular_max_attempts; ++attempt) {
        Engine rng = make_stream(seed, static_cast<std::uint64_t>(attempt));
        for (std::size_t s = 0; s < stubs.size(); ++s) stubs[s] = s / d;
        std::shuffle(stubs.begin(), stubs.end(), rng);
        std::set<Edge> seen;
        bool ok = true;
        for (std::size_t s = 0; s < stubs.size(); s += 2) {
            NodeId a = stubs[s];
            NodeId b = stubs[s + 1];
            if (a == b) { ok = false; break; }
            if (a > b) std::swap(a, b);
            if (!seen.emplace(a, b).second) { ok = false; break; }
        }
        if (!ok) continue;
        Graph g(n, std::vector<Edge>(seen.begin(), seen.end()), tag);
        if (is_connected(g)) return g;
    }
    throw Error(ErrorCode::GenerationFailed,
                "no simple connected regular sample after " + std::to_string(regular_max_attempts)
                    + " attempts");
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

} // namespace detail

/// Builds a member of `fam` on n nodes. Random families are a pure function of
/// (family, n, seed); a missing seed means seed 0.
inline Graph build_graph(const GraphFamily& fam, std::size_t n, std::optional<std::uint64_t> seed = {})
{
    if (n < 1) throw Error(ErrorCode::InvalidParam, "n must be >= 1");
    const std::uint64_t s = seed.value_or(0);
    return std::visit(
        detail::overloaded{
            [&](const family::Complete&) { return detail::complete(n); },
            [&](const family::Line&) { return detail::line(n); },
            [&](const family::Ring&) { return detail::ring(n); },
            [&](const family::Star&) { return detail::star(n); },
            [&](const family::TwoStar&) { return detail::two_star(n); },
            [&](const family::StarryLine&) { return detail::starry_line(n); },
            [&](const family::Grid& f) { return detail::grid(n, f.dim); },
            [&](const family::CompleteBinaryTree&) { return detail::complete_binary_tree(n); },
            [&](const family::ErdosRenyi& f) { return detail::erdos_renyi(n, f.p, s); },
            [&](const family::RandomRegular& f) { return detail::random_regular(n, f.degree, s); },
            [&](const family::Custom& f) { return Graph(n, f.edges, "custom"); },
        },
        fam);
}

/// Parses a family name as used on the command line: complete, line, ring,
/// star, two-star, starry-line, grid2d / grid3d / gridK, tree, erdos-renyi,
/// random-regular. Family parameters come from the caller.
inline GraphFamily parse_family(const std::string& name, double er_p = 0.5, std::size_t regular_degree = 3)
{
    if (name == "complete") return family::Complete{};
    if (name == "line") return family::Line{};
    if (name == "ring") return family::Ring{};
    if (name == "star") return family::Star{};
    if (name == "two-star") return family::TwoStar{};
    if (name == "starry-line") return family::StarryLine{};
    if (name == "tree") return family::CompleteBinaryTree{};
    if (name == "erdos-renyi") return family::ErdosRenyi{er_p};
    if (name == "random-regular") return family::RandomRegular{regular_degree};
    if (name.rfind("grid", 0) == 0) {
        std::string digits = name.substr(4);
        if (!digits.empty() && digits.back() == 'd') digits.pop_back();
        if (digits.empty()) return family::Grid{2};
        try {
            return family::Grid{std::stoi(digits)};
        } catch (const std::exception&) {
        }
    }
    throw Error(ErrorCode::InvalidParam, "unknown graph family '" + name + "'");
}

/// Edge-list text format: first line `n`, then one `i j` pair per line, 0-based.
inline Graph parse_edge_list(std::istream& in)
{
    std::size_t n = 0;
    if (!(in >> n)) throw Error(ErrorCode::IoError, "edge list: missing node count");
    std::vector<Edge> edges;
    long long a = 0;
    long long b = 0;
    while (in >> a) {
        if (!(in >> b)) throw Error(ErrorCode::IoError, "edge list: dangling endpoint");
        if (a < 0 || b < 0) throw Error(ErrorCode::InvalidParam, "edge list: negative node id");
        edges.emplace_back(static_cast<NodeId>(a), static_cast<NodeId>(b));
    }
    if (!in.eof()) throw Error(ErrorCode::IoError, "edge list: malformed token");
    return Graph(n, std::move(edges), "custom");
}

inline Graph load_edge_list(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open edge list '" + path + "'");
    return parse_edge_list(in);
}

} // namespace noisycons
