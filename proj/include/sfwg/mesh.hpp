#pragma once

#include "sfwg/common.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sfwg {

struct Edge {
    std::array<int, 2> vertices{};  // global orientation: vertices[0] -> vertices[1]
    int left = -1;                  // cell whose loop runs vertices[0] -> vertices[1]
    int right = -1;                 // other cell, -1 on the boundary
    double length = 0.0;

    [[nodiscard]] bool boundary() const { return right < 0; }
};

struct Cell {
    std::vector<int> vertices;  // loop, counter-clockwise for a valid mesh
    std::vector<int> edges;     // edges[i] joins vertices[i] and vertices[i+1]
    std::vector<bool> edge_reversed;  // loop direction opposes the edge's global orientation
    double area = 0.0;                // signed; positive for counter-clockwise loops
    Point centroid = Point::Zero();
    double diameter = 0.0;

    [[nodiscard]] int num_edges() const { return static_cast<int>(edges.size()); }
};

/// Polygonal partition of a planar domain. Immutable after construction.
class PolygonalMesh {
public:
    PolygonalMesh() = default;

    /// Builds edges and adjacency from vertex loops. Throws MeshError for index
    /// errors, loops with repeated vertices, edges shared by more than two cells,
    /// and vertices no cell references. Orientation is not enforced here; see validate().
    static PolygonalMesh from_cells(std::vector<Point> vertices, std::vector<std::vector<int>> cells);

    [[nodiscard]] std::span<const Point> vertices() const { return vertices_; }
    [[nodiscard]] std::span<const Edge> edges() const { return edges_; }
    [[nodiscard]] std::span<const Cell> cells() const { return cells_; }
    [[nodiscard]] const Point& vertex(int i) const { return vertices_[static_cast<std::size_t>(i)]; }
    [[nodiscard]] const Edge& edge(int i) const { return edges_[static_cast<std::size_t>(i)]; }
    [[nodiscard]] const Cell& cell(int i) const { return cells_[static_cast<std::size_t>(i)]; }
    [[nodiscard]] int num_vertices() const { return static_cast<int>(vertices_.size()); }
    [[nodiscard]] int num_edges() const { return static_cast<int>(edges_.size()); }
    [[nodiscard]] int num_cells() const { return static_cast<int>(cells_.size()); }

    /// max over cells of the cell diameter
    [[nodiscard]] double h() const { return h_; }

    /// Outward unit normal of edge `local` of cell `c` (with respect to that cell).
    [[nodiscard]] Vector2 outward_normal(int c, int local) const
    {
        const Cell& cl = cell(c);
        const Point& a = vertex(cl.vertices[static_cast<std::size_t>(local)]);
        const Point& b = vertex(cl.vertices[(static_cast<std::size_t>(local) + 1) % cl.vertices.size()]);
        const Vector2 t = b - a;
        return Vector2(t.y(), -t.x()) / t.norm();
    }

    [[nodiscard]] std::vector<std::vector<int>> cell_loops() const
    {
        std::vector<std::vector<int>> loops;
        loops.reserve(cells_.size());
        for (const auto& c : cells_) loops.push_back(c.vertices);
        return loops;
    }

private:
    std::vector<Point> vertices_;
    std::vector<Edge> edges_;
    std::vector<Cell> cells_;
    double h_ = 0.0;
};

inline PolygonalMesh PolygonalMesh::from_cells(std::vector<Point> vertices, std::vector<std::vector<int>> cells)
{
    PolygonalMesh mesh;
    mesh.vertices_ = std::move(vertices);
    const int nv = mesh.num_vertices();
    std::vector<bool> referenced(static_cast<std::size_t>(nv), false);
    std::map<std::pair<int, int>, int> edge_index;

    mesh.cells_.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
        auto& loop = cells[c];
        const std::string where = "cell " + std::to_string(c);
        if (loop.size() < 3) throw MeshError(where + ": fewer than 3 vertices");
        for (int v : loop) {
            if (v < 0 || v >= nv) throw MeshError(where + ": vertex index " + std::to_string(v) + " out of range");
        }
        {
            std::vector<int> sorted = loop;
            std::sort(sorted.begin(), sorted.end());
            auto dup = std::adjacent_find(sorted.begin(), sorted.end());
            if (dup != sorted.end()) throw MeshError(where + ": duplicate vertex index " + std::to_string(*dup));
        }

        Cell cl;
        cl.vertices = loop;
        const std::size_t n = loop.size();
        double twice_area = 0.0;
        Vector2 moment = Vector2::Zero();
        const Point origin = mesh.vertices_[static_cast<std::size_t>(loop[0])];
        for (std::size_t i = 0; i < n; ++i) {
            const int a = loop[i];
            const int b = loop[(i + 1) % n];
            referenced[static_cast<std::size_t>(a)] = true;
            const Point pa = mesh.vertices_[static_cast<std::size_t>(a)] - origin;
            const Point pb = mesh.vertices_[static_cast<std::size_t>(b)] - origin;
            const double w = cross(pa, pb);
            twice_area += w;
            moment += w * (pa + pb);

            const auto key = std::minmax(a, b);
            auto [it, inserted] = edge_index.try_emplace({key.first, key.second}, mesh.num_edges());
            if (inserted) {
                Edge e;
                e.vertices = {a, b};
                e.left = static_cast<int>(c);
                e.length = (mesh.vertices_[static_cast<std::size_t>(b)] - mesh.vertices_[static_cast<std::size_t>(a)]).norm();
                mesh.edges_.push_back(e);
                cl.edge_reversed.push_back(false);
            } else {
                Edge& e = mesh.edges_[static_cast<std::size_t>(it->second)];
                if (e.right >= 0 || e.left == static_cast<int>(c)) {
                    throw MeshError(where + ": non-manifold edge (" + std::to_string(key.first) + ", " +
                                    std::to_string(key.second) + ") shared by more than two cells");
                }
                e.right = static_cast<int>(c);
                cl.edge_reversed.push_back(e.vertices[0] != a);
            }
            cl.edges.push_back(it->second);
        }
        cl.area = 0.5 * twice_area;
        cl.centroid = twice_area != 0.0 ? Point(origin + moment / (3.0 * twice_area)) : origin;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                const double d = (mesh.vertices_[static_cast<std::size_t>(loop[i])] -
                                  mesh.vertices_[static_cast<std::size_t>(loop[j])]).norm();
                cl.diameter = std::max(cl.diameter, d);
            }
        }
        mesh.h_ = std::max(mesh.h_, cl.diameter);
        mesh.cells_.push_back(std::move(cl));
    }
    for (int v = 0; v < nv; ++v) {
        if (!referenced[static_cast<std::size_t>(v)]) throw MeshError("vertex " + std::to_string(v) + " is not referenced by any cell");
    }
    return mesh;
}

enum class MeshFamily { Triangular, Crisscross, Rectangular, Polygonal, PolygonalDual };

inline std::string to_string(MeshFamily f)
{
    switch (f) {
    case MeshFamily::Triangular: return "triangular";
    case MeshFamily::Crisscross: return "crisscross";
    case MeshFamily::Rectangular: return "rectangular";
    case MeshFamily::Polygonal: return "polygonal";
    case MeshFamily::PolygonalDual: return "polygonal-dual";
    }
    return "unknown";
}

inline std::optional<MeshFamily> parse_mesh_family(const std::string& s)
{
    for (auto f : {MeshFamily::Triangular, MeshFamily::Crisscross, MeshFamily::Rectangular, MeshFamily::Polygonal,
                   MeshFamily::PolygonalDual}) {
        if (to_string(f) == s) return f;
    }
    return std::nullopt;
}

namespace detail {

inline void require_size(int n, const char* what)
{
    if (n < 1) throw std::invalid_argument(std::string(what) + ": invalid size " + std::to_string(n) + " (need n >= 1)");
}

/// Deduplicating point table keyed on exact coordinates.
class PointTable {
public:
    int add(const Point& p)
    {
        auto [it, inserted] = index_.try_emplace({p.x(), p.y()}, static_cast<int>(points_.size()));
        if (inserted) points_.push_back(p);
        return it->second;
    }
    std::vector<Point> take() { return std::move(points_); }

private:
    std::map<std::pair<double, double>, int> index_;
    std::vector<Point> points_;
};

}  // namespace detail

/// n x n squares, each split by the diagonal from its lower-right to its upper-left corner.
inline PolygonalMesh build_uniform_triangular(int n)
{
    detail::require_size(n, "build_uniform_triangular");
    std::vector<Point> pts;
    const auto id = [n](int i, int j) { return j * (n + 1) + i; };
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) pts.emplace_back(double(i) / n, double(j) / n);
    std::vector<std::vector<int>> cells;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            cells.push_back({id(i, j), id(i + 1, j), id(i, j + 1)});
            cells.push_back({id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    }
    return PolygonalMesh::from_cells(std::move(pts), std::move(cells));
}

/// n x n squares, each split into four triangles by both diagonals.
inline PolygonalMesh build_crisscross(int n)
{
    detail::require_size(n, "build_crisscross");
    std::vector<Point> pts;
    const auto id = [n](int i, int j) { return j * (n + 1) + i; };
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) pts.emplace_back(double(i) / n, double(j) / n);
    std::vector<std::vector<int>> cells;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const int c = static_cast<int>(pts.size());
            pts.emplace_back((i + 0.5) / n, (j + 0.5) / n);
            const int a = id(i, j), b = id(i + 1, j), d = id(i + 1, j + 1), e = id(i, j + 1);
            cells.push_back({a, b, c});
            cells.push_back({b, d, c});
            cells.push_back({d, e, c});
            cells.push_back({e, a, c});
        }
    }
    return PolygonalMesh::from_cells(std::move(pts), std::move(cells));
}

inline PolygonalMesh build_rectangular(int n)
{
    detail::require_size(n, "build_rectangular");
    std::vector<Point> pts;
    const auto id = [n](int i, int j) { return j * (n + 1) + i; };
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) pts.emplace_back(double(i) / n, double(j) / n);
    std::vector<std::vector<int>> cells;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
    return PolygonalMesh::from_cells(std::move(pts), std::move(cells));
}

/// Dodecagon/heptagon tiling on an n x n grid (n even).
///
/// Every grid square becomes an octagon by cutting its corners a fraction
/// `cut` of the grid spacing along each axis; the cut-off corners form diamonds
/// around interior grid vertices (triangles on the boundary). The diagonal
/// sides of each octagon, except its lower-left one, carry a midpoint vertex,
/// and so do the vertical grid lines x = i/n with i odd. Interior octagons then
/// have 12 edges and interior diamonds 7; boundary pieces have 3 to 5.
inline PolygonalMesh build_dodecagon_heptagon(int n, double cut = 0.3)
{
    detail::require_size(n, "build_polygonal");
    if (n % 2 != 0) throw std::invalid_argument("build_polygonal: grid size must be even");
    if (!(cut > 0.0 && cut < 0.5)) throw std::invalid_argument("build_polygonal: cut must lie in (0, 0.5)");
    const double H = 1.0 / n;
    const double c = cut * H;
    detail::PointTable table;
    const auto at = [&](const Point& p) { return table.add(p); };
    const auto grid = [&](int i, int j) { return Point(i * H, j * H); };
    const auto pE = [&](int i, int j) { return Point(grid(i, j) + Point(c, 0)); };
    const auto pW = [&](int i, int j) { return Point(grid(i, j) - Point(c, 0)); };
    const auto pN = [&](int i, int j) { return Point(grid(i, j) + Point(0, c)); };
    const auto pS = [&](int i, int j) { return Point(grid(i, j) - Point(0, c)); };
    const auto split = [&](const Point& a, const Point& b) { return table.add(0.5 * (a + b)); };

    std::vector<std::vector<int>> cells;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            std::vector<int> loop;
            loop.push_back(at(pE(i, j)));
            loop.push_back(at(pW(i + 1, j)));
            loop.push_back(split(pW(i + 1, j), pN(i + 1, j)));
            loop.push_back(at(pN(i + 1, j)));
            if ((i + 1) % 2 == 1) loop.push_back(split(pN(i + 1, j), pS(i + 1, j + 1)));
            loop.push_back(at(pS(i + 1, j + 1)));
            loop.push_back(split(pS(i + 1, j + 1), pW(i + 1, j + 1)));
            loop.push_back(at(pW(i + 1, j + 1)));
            loop.push_back(at(pE(i, j + 1)));
            loop.push_back(split(pE(i, j + 1), pS(i, j + 1)));
            loop.push_back(at(pS(i, j + 1)));
            if (i % 2 == 1) loop.push_back(split(pS(i, j + 1), pN(i, j)));
            loop.push_back(at(pN(i, j)));
            cells.push_back(std::move(loop));
        }
    }
    for (int j = 0; j <= n; ++j) {
        for (int i = 0; i <= n; ++i) {
            const bool left = i == 0, right = i == n, bottom = j == 0, top = j == n;
            const int E = (!right) ? at(pE(i, j)) : -1;
            const int W = (!left) ? at(pW(i, j)) : -1;
            const int N = (!top) ? at(pN(i, j)) : -1;
            const int S = (!bottom) ? at(pS(i, j)) : -1;
            const auto NW = [&] { return split(pN(i, j), pW(i, j)); };
            const auto WS = [&] { return split(pW(i, j), pS(i, j)); };
            const auto SE = [&] { return split(pS(i, j), pE(i, j)); };
            const int P = ((left || right) && (bottom || top)) ? at(grid(i, j)) : -1;
            if (left && bottom) cells.push_back({P, E, N});
            else if (right && bottom) cells.push_back({P, N, NW(), W});
            else if (right && top) cells.push_back({P, W, WS(), S});
            else if (left && top) cells.push_back({P, S, SE(), E});
            else if (bottom) cells.push_back({E, N, NW(), W});
            else if (top) cells.push_back({W, WS(), S, SE(), E});
            else if (left) cells.push_back({S, SE(), E, N});
            else if (right) cells.push_back({N, NW(), W, WS(), S});
            else cells.push_back({E, N, NW(), W, WS(), S, SE()});
        }
    }
    return PolygonalMesh::from_cells(table.take(), std::move(cells));
}

/// Median-dual polygons of the uniform triangular mesh with n cells per side.
/// Interior cells are 12-gons (six triangles meet at every interior vertex);
/// boundary cells are clipped by the domain edges.
inline PolygonalMesh build_median_dual(int n)
{
    const PolygonalMesh primal = build_uniform_triangular(n);
    const int nv = primal.num_vertices();
    // incident triangles as (a, b) with (v, a, b) counter-clockwise
    std::vector<std::vector<std::pair<int, int>>> fans(static_cast<std::size_t>(nv));
    for (const Cell& t : primal.cells()) {
        for (std::size_t r = 0; r < 3; ++r) {
            fans[static_cast<std::size_t>(t.vertices[r])].emplace_back(t.vertices[(r + 1) % 3], t.vertices[(r + 2) % 3]);
        }
    }
    detail::PointTable table;
    const auto mid = [&](int a, int b) { return table.add(0.5 * (primal.vertex(a) + primal.vertex(b))); };
    const auto cen = [&](int v, int a, int b) {
        return table.add((primal.vertex(v) + primal.vertex(a) + primal.vertex(b)) / 3.0);
    };

    std::vector<std::vector<int>> cells;
    for (int v = 0; v < nv; ++v) {
        auto fan = fans[static_cast<std::size_t>(v)];
        // start at the triangle whose first neighbour closes no other triangle (boundary), else anywhere
        std::size_t start = 0;
        bool on_boundary = false;
        for (std::size_t t = 0; t < fan.size(); ++t) {
            const bool closes = std::any_of(fan.begin(), fan.end(), [&](const auto& o) { return o.second == fan[t].first; });
            if (!closes) {
                start = t;
                on_boundary = true;
                break;
            }
        }
        std::vector<std::pair<int, int>> chain{fan[start]};
        while (chain.size() < fan.size()) {
            const int next_a = chain.back().second;
            auto it = std::find_if(fan.begin(), fan.end(), [&](const auto& o) { return o.first == next_a; });
            if (it == fan.end()) throw MeshError("build_median_dual: broken vertex fan at vertex " + std::to_string(v));
            chain.push_back(*it);
        }
        std::vector<int> loop;
        if (on_boundary) loop.push_back(table.add(primal.vertex(v)));
        for (const auto& [a, b] : chain) {
            loop.push_back(mid(v, a));
            loop.push_back(cen(v, a, b));
        }
        if (on_boundary) loop.push_back(mid(v, chain.back().second));
        cells.push_back(std::move(loop));
    }
    return PolygonalMesh::from_cells(table.take(), std::move(cells));
}

/// Cells per side for refinement level `level` of a structured family.
inline int cells_per_side(int level)
{
    if (level < 0 || level > 14) throw std::invalid_argument("level " + std::to_string(level) + " out of range [0, 14]");
    return 1 << level;
}

/// Generator dispatch with `n` cells (or grid squares) per side.
inline PolygonalMesh build_mesh(MeshFamily family, int n)
{
    switch (family) {
    case MeshFamily::Triangular: return build_uniform_triangular(n);
    case MeshFamily::Crisscross: return build_crisscross(n);
    case MeshFamily::Rectangular: return build_rectangular(n);
    case MeshFamily::Polygonal: return build_dodecagon_heptagon(n);
    case MeshFamily::PolygonalDual: return build_median_dual(n);
    }
    throw std::invalid_argument("unknown mesh family");
}

/// Polygonal family at refinement level `level` (>= 1): a 2^level grid of the
/// dodecagon/heptagon motif.
inline PolygonalMesh build_polygonal(int level)
{
    if (level < 1) throw std::invalid_argument("build_polygonal: level must be >= 1");
    return build_dodecagon_heptagon(cells_per_side(level));
}

inline PolygonalMesh build_level(MeshFamily family, int level) { return build_mesh(family, cells_per_side(level)); }

}  // namespace sfwg
