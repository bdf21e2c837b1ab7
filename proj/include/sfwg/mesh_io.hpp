#pragma once

#include "sfwg/mesh.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace sfwg {

/// JSON mesh text: {"vertices": [[x, y], ...], "cells": [[v0, v1, ...], ...]}, 0-based.
/// Coordinates are written with 17 significant digits so they read back bit-exactly.
inline std::string mesh_to_json(const PolygonalMesh& mesh)
{
    std::string out = "{\n  \"vertices\": [";
    char buf[64];
    for (int i = 0; i < mesh.num_vertices(); ++i) {
        const Point& p = mesh.vertex(i);
        std::snprintf(buf, sizeof buf, "[%.17g, %.17g]", p.x(), p.y());
        out += (i == 0 ? "\n    " : ",\n    ");
        out += buf;
    }
    out += "\n  ],\n  \"cells\": [";
    for (int c = 0; c < mesh.num_cells(); ++c) {
        out += (c == 0 ? "\n    [" : ",\n    [");
        const auto& loop = mesh.cell(c).vertices;
        for (std::size_t i = 0; i < loop.size(); ++i) {
            if (i) out += ", ";
            out += std::to_string(loop[i]);
        }
        out += "]";
    }
    out += "\n  ]\n}\n";
    return out;
}

/// Parses and checks the JSON mesh schema, then builds the mesh. Every error
/// names the offending entry, e.g. "cells[3]: duplicate vertex index 5".
inline PolygonalMesh mesh_from_json(const std::string& text)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw MeshError(std::string("mesh file: invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw MeshError("mesh file: top level must be an object");
    if (!doc.contains("vertices") || !doc["vertices"].is_array()) throw MeshError("mesh file: missing array \"vertices\"");
    if (!doc.contains("cells") || !doc["cells"].is_array()) throw MeshError("mesh file: missing array \"cells\"");

    std::vector<Point> vertices;
    const auto& jv = doc["vertices"];
    for (std::size_t i = 0; i < jv.size(); ++i) {
        const auto& p = jv[i];
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
            throw MeshError("vertices[" + std::to_string(i) + "]: expected [x, y] with two numbers");
        }
        vertices.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    std::vector<std::vector<int>> cells;
    const auto& jc = doc["cells"];
    for (std::size_t c = 0; c < jc.size(); ++c) {
        const std::string where = "cells[" + std::to_string(c) + "]";
        const auto& loop = jc[c];
        if (!loop.is_array() || loop.size() < 3) throw MeshError(where + ": expected an array of at least 3 vertex indices");
        std::vector<int> ids;
        for (const auto& v : loop) {
            if (!v.is_number_integer()) throw MeshError(where + ": vertex indices must be integers");
            const auto id = v.get<long long>();
            if (id < 0 || id >= static_cast<long long>(vertices.size())) {
                throw MeshError(where + ": vertex index " + std::to_string(id) + " out of range");
            }
            if (std::find(ids.begin(), ids.end(), static_cast<int>(id)) != ids.end()) {
                throw MeshError(where + ": duplicate vertex index " + std::to_string(id));
            }
            ids.push_back(static_cast<int>(id));
        }
        cells.push_back(std::move(ids));
    }
    return PolygonalMesh::from_cells(std::move(vertices), std::move(cells));
}

inline void write_mesh(const PolygonalMesh& mesh, const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << mesh_to_json(mesh);
    if (!out) throw std::runtime_error("failed writing " + path);
}

inline PolygonalMesh read_mesh(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return mesh_from_json(ss.str());
    } catch (const MeshError& e) {
        throw MeshError(path + ": " + e.what());
    }
}

}  // namespace sfwg
