/* Copyright 2026 The peakmem Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "peakmem/graph.hpp"

namespace peakmem {

namespace detail {

inline std::int64_t json_int(const nlohmann::json& v, const char* what) {
    if (!v.is_number_integer()) throw GraphError(std::string("expected integer for ") + what);
    return v.get<std::int64_t>();
}

inline Node parse_node(const nlohmann::json& j) {
    if (!j.is_object()) throw GraphError("node must be an object");
    for (const auto& [key, _] : j.items()) {
        if (key != "id" && key != "op" && key != "output_shape" && key != "dtype_bytes" && key != "attrs" &&
            key != "alloc_group")
            throw GraphError("unknown node key: " + key);
    }
    Node n;
    if (!j.contains("id")) throw GraphError("node missing id");
    n.id = json_int(j["id"], "id");
    const std::string where = " (node " + std::to_string(n.id) + ")";

    if (!j.contains("op") || !j["op"].is_string()) throw GraphError("node missing op" + where);
    auto op = op_kind_from_string(j["op"].get<std::string>());
    if (!op) throw GraphError("unknown op_kind: " + j["op"].get<std::string>() + where);
    n.op = *op;

    if (!j.contains("output_shape") || !j["output_shape"].is_array() || j["output_shape"].empty())
        throw GraphError("missing shape" + where);
    for (const auto& d : j["output_shape"]) {
        if (!d.is_number_integer() || d.get<std::int64_t>() <= 0) throw GraphError("non-positive shape" + where);
        n.output_shape.push_back(d.get<std::int64_t>());
    }

    if (!j.contains("dtype_bytes")) throw GraphError("missing dtype_bytes" + where);
    n.dtype_bytes = json_int(j["dtype_bytes"], "dtype_bytes");

    if (j.contains("attrs")) n.attrs = j["attrs"];
    if (j.contains("alloc_group") && !j["alloc_group"].is_null()) {
        if (!j["alloc_group"].is_string()) throw GraphError("alloc_group must be a string" + where);
        n.alloc_group = j["alloc_group"].get<std::string>();
    }
    return n;
}

}  // namespace detail

inline Graph graph_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw GraphError("graph document must be a JSON object");
    for (const auto& [key, _] : doc.items())
        if (key != "name" && key != "nodes" && key != "edges") throw GraphError("unknown top-level key: " + key);

    std::string name = "graph";
    if (doc.contains("name")) {
        if (!doc["name"].is_string()) throw GraphError("name must be a string");
        name = doc["name"].get<std::string>();
    }
    if (!doc.contains("nodes") || !doc["nodes"].is_array()) throw GraphError("missing nodes array");

    std::vector<Node> nodes;
    for (const auto& jn : doc["nodes"]) nodes.push_back(detail::parse_node(jn));

    std::vector<Edge> edges;
    if (doc.contains("edges")) {
        if (!doc["edges"].is_array()) throw GraphError("edges must be an array");
        for (const auto& e : doc["edges"]) {
            if (!e.is_array() || e.size() != 2) throw GraphError("edge must be a [src, dst] pair");
            edges.emplace_back(detail::json_int(e[0], "edge src"), detail::json_int(e[1], "edge dst"));
        }
    }
    return Graph(std::move(name), std::move(nodes), std::move(edges));
}

/// Parses and validates a graph document. Throws GraphError on any schema or
/// structural problem.
inline Graph parse_graph(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw GraphError(std::string("malformed JSON: ") + e.what());
    }
    return graph_from_json(doc);
}

inline nlohmann::json to_json(const Graph& g) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const Node& n : g.nodes()) {
        nlohmann::json jn{{"id", n.id},
                          {"op", std::string(to_string(n.op))},
                          {"output_shape", n.output_shape},
                          {"dtype_bytes", n.dtype_bytes},
                          {"attrs", n.attrs}};
        if (n.alloc_group) jn["alloc_group"] = *n.alloc_group;
        nodes.push_back(std::move(jn));
    }
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& [s, d] : g.edges()) edges.push_back({s, d});
    return {{"name", g.name()}, {"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

}  // namespace peakmem
