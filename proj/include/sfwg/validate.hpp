#pragma once

#include "sfwg/mesh.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace sfwg {

struct MeshCheck {
    std::string name;
    bool passed = true;
    std::string detail;  // first offending entity when failed
};

/// Result of validate(): one entry per invariant plus shape statistics.
struct MeshDiagnostics {
    std::vector<MeshCheck> checks;
    int num_cells = 0;
    int num_edges = 0;
    int num_vertices = 0;
    int min_edges_per_cell = 0;
    int max_edges_per_cell = 0;
    double h = 0.0;
    double area_sum = 0.0;
    double boundary_area = 0.0;       // area enclosed by the boundary loop
    double min_angle_deg = 0.0;       // smallest interior angle over all cells
    double max_aspect = 0.0;          // max h_T^2 / |T|

    [[nodiscard]] bool ok() const
    {
        return std::all_of(checks.begin(), checks.end(), [](const MeshCheck& c) { return c.passed; });
    }
    [[nodiscard]] const MeshCheck* find(const std::string& name) const
    {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }
};

namespace detail {

inline bool segments_cross(const Point& a, const Point& b, const Point& c, const Point& d)
{
    const double d1 = cross(b - a, c - a), d2 = cross(b - a, d - a);
    const double d3 = cross(d - c, a - c), d4 = cross(d - c, b - c);
    return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

}  // namespace detail

/// Checks every mesh invariant and gathers shape-regularity statistics. Never throws.
inline MeshDiagnostics validate(const PolygonalMesh& mesh)
{
    MeshDiagnostics d;
    d.num_cells = mesh.num_cells();
    d.num_edges = mesh.num_edges();
    d.num_vertices = mesh.num_vertices();
    d.h = mesh.h();
    d.min_angle_deg = 180.0;
    d.min_edges_per_cell = std::numeric_limits<int>::max();

    MeshCheck orientation{"counter_clockwise", true, ""};
    MeshCheck simple{"simple_loops", true, ""};
    MeshCheck star{"star_shaped", true, ""};
    MeshCheck nondegenerate{"nondegenerate", true, ""};
    const auto fail = [](MeshCheck& chk, const std::string& what) {
        if (chk.passed) chk.detail = what;
        chk.passed = false;
    };

    for (int c = 0; c < mesh.num_cells(); ++c) {
        const Cell& cl = mesh.cell(c);
        const std::string where = "cell " + std::to_string(c);
        const std::size_t n = cl.vertices.size();
        d.min_edges_per_cell = std::min(d.min_edges_per_cell, static_cast<int>(n));
        d.max_edges_per_cell = std::max(d.max_edges_per_cell, static_cast<int>(n));
        d.area_sum += cl.area;
        if (!(cl.area > 0.0)) fail(orientation, where + " has non-positive signed area");
        if (!(cl.diameter > 0.0)) fail(nondegenerate, where + " has zero diameter");
        if (cl.area != 0.0) d.max_aspect = std::max(d.max_aspect, cl.diameter * cl.diameter / std::abs(cl.area));

        for (std::size_t i = 0; i < n; ++i) {
            const Point& a = mesh.vertex(cl.vertices[i]);
            const Point& b = mesh.vertex(cl.vertices[(i + 1) % n]);
            const Point& prev = mesh.vertex(cl.vertices[(i + n - 1) % n]);
            if ((b - a).norm() == 0.0) fail(nondegenerate, where + " has a zero-length edge");
            if (cross(a - cl.centroid, b - cl.centroid) <= 0.0) fail(star, where + " is not star-shaped with respect to its centroid");
            const Vector2 u = prev - a, v = b - a;
            const double turn = std::atan2(cross(v, u), v.dot(u));  // interior angle for ccw loops
            double angle = turn * 180.0 / std::numbers::pi;
            if (angle < 0) angle += 360.0;
            d.min_angle_deg = std::min(d.min_angle_deg, angle);
            for (std::size_t j = i + 2; j < n; ++j) {
                if (i == 0 && j == n - 1) continue;
                if (detail::segments_cross(a, b, mesh.vertex(cl.vertices[j]), mesh.vertex(cl.vertices[(j + 1) % n]))) {
                    fail(simple, where + " has self-intersecting edges");
                }
            }
        }
    }
    if (mesh.num_cells() == 0) d.min_edges_per_cell = 0;

    MeshCheck manifold{"edge_manifold", true, ""};
    MeshCheck consistent{"consistent_orientation", true, ""};
    for (int e = 0; e < mesh.num_edges(); ++e) {
        const Edge& ed = mesh.edge(e);
        if (ed.vertices[0] == ed.vertices[1]) fail(nondegenerate, "edge " + std::to_string(e) + " has equal endpoints");
        if (ed.left < 0) fail(manifold, "edge " + std::to_string(e) + " has no cell");
        if (!ed.boundary()) {
            const Cell& r = mesh.cell(ed.right);
            const auto pos = std::find(r.edges.begin(), r.edges.end(), e) - r.edges.begin();
            if (!r.edge_reversed[static_cast<std::size_t>(pos)]) {
                fail(consistent, "edge " + std::to_string(e) + " is traversed in the same direction by both cells");
            }
        }
    }

    // boundary edges must chain into exactly one closed loop
    MeshCheck loop{"single_boundary_loop", true, ""};
    {
        std::map<int, std::vector<int>> next;
        int count = 0;
        for (const Edge& ed : mesh.edges()) {
            if (!ed.boundary()) continue;
            next[ed.vertices[0]].push_back(ed.vertices[1]);
            ++count;
        }
        bool ok = count >= 3;
        for (const auto& [v, outs] : next)
            if (outs.size() != 1) ok = false;
        if (ok) {
            const int start = next.begin()->first;
            int v = start, steps = 0;
            double twice = 0.0;
            do {
                const int w = next[v].front();
                twice += cross(mesh.vertex(v), mesh.vertex(w));
                v = w;
                ++steps;
                if (next.find(v) == next.end()) {
                    ok = false;
                    break;
                }
            } while (v != start && steps <= count);
            if (steps != count) ok = false;
            d.boundary_area = 0.5 * twice;
        }
        if (!ok) fail(loop, "boundary edges do not form one closed loop");
    }

    MeshCheck area{"area_sum", true, ""};
    if (std::abs(d.area_sum - d.boundary_area) > 1e-12 * std::max(1.0, std::abs(d.boundary_area))) {
        std::ostringstream os;
        os.precision(17);
        os << "cell areas sum to " << d.area_sum << ", boundary encloses " << d.boundary_area;
        fail(area, os.str());
    }

    d.checks = {orientation, simple, star, nondegenerate, manifold, consistent, loop, area};
    return d;
}

/// True when the boundary loop is exactly the boundary of the unit square.
inline bool boundary_is_unit_square(const PolygonalMesh& mesh)
{
    double length = 0.0;
    for (const Edge& e : mesh.edges()) {
        if (!e.boundary()) continue;
        const Point& a = mesh.vertex(e.vertices[0]);
        const Point& b = mesh.vertex(e.vertices[1]);
        const bool on_side = (a.x() == 0.0 && b.x() == 0.0) || (a.x() == 1.0 && b.x() == 1.0) ||
                             (a.y() == 0.0 && b.y() == 0.0) || (a.y() == 1.0 && b.y() == 1.0);
        if (!on_side) return false;
        length += e.length;
    }
    return std::abs(length - 4.0) < 1e-12;
}

inline std::string format_diagnostics(const MeshDiagnostics& d)
{
    std::ostringstream os;
    os.precision(12);
    os << "cells " << d.num_cells << ", edges " << d.num_edges << ", vertices " << d.num_vertices << "\n";
    os << "edges per cell: min " << d.min_edges_per_cell << ", max " << d.max_edges_per_cell << "\n";
    os << "h " << d.h << "\n";
    os << "area sum " << d.area_sum << "\n";
    os << "min angle (deg) " << d.min_angle_deg << ", max h_T^2/|T| " << d.max_aspect << "\n";
    for (const auto& c : d.checks) {
        os << (c.passed ? "PASS " : "FAIL ") << c.name;
        if (!c.passed) os << ": " << c.detail;
        os << "\n";
    }
    return os.str();
}

}  // namespace sfwg
