#pragma once

#include "disagreement.hpp"
#include "errors.hpp"
#include "formation.hpp"
#include "graph.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <optional>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace noisycons {

using Json = nlohmann::json;

/// Stable field names: delta_ss, delta_uni_lower, delta_uni_upper,
/// delta_uni_exact (only when known), method, n, graph_family, seed.
inline Json to_json(const DisagreementReport& r)
{
    Json j = {
        {"delta_ss", r.delta_ss},
        {"delta_uni_lower", r.delta_uni_lower},
        {"delta_uni_upper", r.delta_uni_upper},
        {"method", std::string(to_string(r.method))},
        {"n", r.n},
        {"graph_family", r.graph_family},
        {"seed", r.seed ? Json(*r.seed) : Json(nullptr)},
    };
    if (r.delta_uni_exact) j["delta_uni_exact"] = *r.delta_uni_exact;
    return j;
}

inline DisagreementReport report_from_json(const Json& j)
{
    static const std::map<std::string, Method> methods = {
        {"theorem1", Method::Theorem}, {"diagonal", Method::Diagonal}, {"kemeny", Method::Kemeny},
        {"spectral", Method::Spectral}, {"resistance", Method::Resistance}, {"oracle", Method::Oracle},
        {"montecarlo", Method::MonteCarlo}};
    DisagreementReport r;
    r.delta_ss = j.at("delta_ss").get<double>();
    r.delta_uni_lower = j.at("delta_uni_lower").get<double>();
    r.delta_uni_upper = j.at("delta_uni_upper").get<double>();
    if (j.contains("delta_uni_exact")) r.delta_uni_exact = j.at("delta_uni_exact").get<double>();
    const auto it = methods.find(j.at("method").get<std::string>());
    if (it == methods.end()) throw Error(ErrorCode::InvalidParam, "unknown method tag");
    r.method = it->second;
    r.n = j.at("n").get<std::size_t>();
    r.graph_family = j.at("graph_family").get<std::string>();
    if (!j.at("seed").is_null()) r.seed = j.at("seed").get<std::uint64_t>();
    return r;
}

inline Json to_json(const Vector& v)
{
    return Json(std::vector<double>(v.data(), v.data() + v.size()));
}

/// Formation spec document:
///   {"n": 4, "dim": 2,
///    "edges": [[0, 1, [1, 1]], {"i": 1, "j": 2, "r": [-1, 1]}, ...],
///    "weights": "default" | 0.1 | [[0, 1, 0.1], {"i": 1, "j": 2, "f": 0.1}, ...],
///    "lambda2": 0.0004 | [..per node..]}
/// Each edge may appear once in either orientation; r_ji = -r_ij is applied.
inline FormationSpec formation_from_json(const Json& doc)
{
    try {
        const auto n = doc.at("n").get<std::size_t>();
        const auto dim = doc.at("dim").get<std::size_t>();
        struct Entry {
            NodeId i, j;
            Vector r;
        };
        std::vector<Entry> entries;
        for (const auto& e : doc.at("edges")) {
            Entry entry;
            std::vector<double> r;
            if (e.is_array()) {
                if (e.size() != 3) throw Error(ErrorCode::InvalidParam, "edge entries are [i, j, [r...]]");
                entry.i = e[0].get<NodeId>();
                entry.j = e[1].get<NodeId>();
                r = e[2].get<std::vector<double>>();
            } else {
                entry.i = e.at("i").get<NodeId>();
                entry.j = e.at("j").get<NodeId>();
                r = e.at("r").get<std::vector<double>>();
            }
            if (r.size() != dim) throw Error(ErrorCode::DimensionMismatch, "offset length differs from dim");
            entry.r = Eigen::Map<Vector>(r.data(), static_cast<Index>(r.size()));
            entries.push_back(std::move(entry));
        }
        std::vector<Edge> edge_list;
        for (const auto& e : entries) edge_list.emplace_back(e.i, e.j);
        Graph g(n, edge_list, "custom");

        auto edge_index = [&](NodeId a, NodeId b) {
            const Edge key{std::min(a, b), std::max(a, b)};
            const auto& es = g.edges();
            const auto it = std::lower_bound(es.begin(), es.end(), key);
            if (it == es.end() || *it != key) {
                throw Error(ErrorCode::InvalidParam, "weight given for a non-edge {" + std::to_string(a) + ","
                                                         + std::to_string(b) + "}");
            }
            return static_cast<std::size_t>(it - es.begin());
        };

        std::vector<Vector> offsets(g.edge_count());
        for (const auto& e : entries) {
            offsets[edge_index(e.i, e.j)] = e.i < e.j ? e.r : Vector(-e.r);
        }

        EdgeWeights weights;
        const Json& w = doc.contains("weights") ? doc.at("weights") : Json("default");
        if (w.is_string()) {
            if (w.get<std::string>() != "default") throw Error(ErrorCode::InvalidParam, "weights must be \"default\"");
            weights = default_weights(g);
        } else if (w.is_number()) {
            weights.assign(g.edge_count(), w.get<double>());
        } else {
            std::vector<std::optional<double>> given(g.edge_count());
            for (const auto& entry : w) {
                NodeId a = 0;
                NodeId b = 0;
                double f = 0.0;
                if (entry.is_array()) {
                    a = entry.at(0).get<NodeId>();
                    b = entry.at(1).get<NodeId>();
                    f = entry.at(2).get<double>();
                } else {
                    a = entry.at("i").get<NodeId>();
                    b = entry.at("j").get<NodeId>();
                    f = entry.at("f").get<double>();
                }
                auto& slot = given[edge_index(a, b)];
                if (slot && *slot != f) throw Error(ErrorCode::AsymmetricWeights, "f_ij != f_ji");
                slot = f;
            }
            for (const auto& slot : given) {
                if (!slot) throw Error(ErrorCode::InvalidParam, "explicit weights must cover every edge");
                weights.push_back(*slot);
            }
        }

        Vector lambda2;
        const Json& l = doc.at("lambda2");
        if (l.is_number()) {
            lambda2 = Vector::Constant(static_cast<Index>(n), l.get<double>());
        } else {
            auto values = l.get<std::vector<double>>();
            lambda2 = Eigen::Map<Vector>(values.data(), static_cast<Index>(values.size()));
        }
        return FormationSpec(std::move(g), dim, std::move(offsets), std::move(weights), std::move(lambda2));
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorCode::InvalidParam, std::string("formation spec: ") + ex.what());
    }
}

inline FormationSpec load_formation_spec(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open formation spec '" + path + "'");
    Json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorCode::IoError, std::string("formation spec is not valid JSON: ") + ex.what());
    }
    return formation_from_json(doc);
}

inline Json formation_to_json(const FormationSpec& spec)
{
    Json edges = Json::array();
    Json weights = Json::array();
    const auto& es = spec.graph().edges();
    for (std::size_t e = 0; e < es.size(); ++e) {
        edges.push_back({es[e].first, es[e].second, to_json(spec.offsets()[e])});
        weights.push_back({es[e].first, es[e].second, spec.weights()[e]});
    }
    return {{"n", spec.size()}, {"dim", spec.dim()}, {"edges", edges}, {"weights", weights},
            {"lambda2", to_json(spec.lambda2())}};
}

} // namespace noisycons
