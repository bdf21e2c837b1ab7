#pragma once

#include "sfwg/mesh.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

namespace sfwg {

/// Points and positive weights that integrate polynomials up to `degree` exactly.
struct QuadratureRule {
    std::vector<Point> points;
    std::vector<double> weights;
    int degree = 0;

    [[nodiscard]] std::size_t size() const { return weights.size(); }
    [[nodiscard]] double weight_sum() const
    {
        double s = 0.0;
        for (double w : weights) s += w;
        return s;
    }
};

/// Edge rule: physical points, weights, and the matching parameters s in [-1, 1]
/// along the edge's global orientation.
struct EdgeQuadrature : QuadratureRule {
    std::vector<double> params;
};

struct GaussLegendre {
    std::vector<double> nodes;    // on [-1, 1], ascending
    std::vector<double> weights;  // sum to 2
};

namespace detail {

/// P_n(x) and P_n'(x) by the three-term recurrence.
inline std::pair<double, double> legendre_with_derivative(int n, double x)
{
    double p0 = 1.0, p1 = x;
    for (int m = 2; m <= n; ++m) {
        const double p2 = ((2.0 * m - 1.0) * x * p1 - (m - 1.0) * p0) / m;
        p0 = p1;
        p1 = p2;
    }
    return {p1, n * (x * p1 - p0) / (x * x - 1.0)};
}

}  // namespace detail

/// n-point Gauss-Legendre rule by Newton iteration on P_n.
inline GaussLegendre gauss_legendre(int n)
{
    if (n < 1) throw std::invalid_argument("gauss_legendre: need at least one point");
    GaussLegendre g;
    g.nodes.resize(static_cast<std::size_t>(n));
    g.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            const auto [p, dp] = detail::legendre_with_derivative(n, x);
            const double dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double dp = detail::legendre_with_derivative(n, x).second;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        g.nodes[static_cast<std::size_t>(i)] = -x;
        g.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
        g.weights[static_cast<std::size_t>(i)] = w;
        g.weights[static_cast<std::size_t>(n - 1 - i)] = w;
    }
    if (n % 2 == 1) g.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
    return g;
}

/// Number of Gauss-Legendre points exact for 1D polynomials of `degree`.
inline int gauss_points_for(int degree) { return std::max(1, (degree + 2) / 2); }

/// Collapsed (Duffy) product rule on triangle abc, exact to `degree`.
inline void append_triangle_rule(const Point& a, const Point& b, const Point& c, int degree, QuadratureRule& rule)
{
    // the collapse Jacobian (1 - u) raises the degree in u by one
    const GaussLegendre gu = gauss_legendre(gauss_points_for(degree + 1));
    const GaussLegendre gv = gauss_legendre(gauss_points_for(degree));
    const double twice_area = cross(b - a, c - a);
    for (std::size_t i = 0; i < gu.nodes.size(); ++i) {
        const double u = 0.5 * (gu.nodes[i] + 1.0);
        for (std::size_t j = 0; j < gv.nodes.size(); ++j) {
            const double v = 0.5 * (gv.nodes[j] + 1.0);
            const double xi = u, eta = v * (1.0 - u);
            rule.points.push_back(a + xi * (b - a) + eta * (c - a));
            rule.weights.push_back(0.25 * gu.weights[i] * gv.weights[j] * (1.0 - u) * twice_area);
        }
    }
}

inline QuadratureRule triangle_rule(const Point& a, const Point& b, const Point& c, int degree)
{
    if (degree < 0) throw std::invalid_argument("triangle_rule: negative degree");
    QuadratureRule rule;
    rule.degree = degree;
    append_triangle_rule(a, b, c, degree, rule);
    return rule;
}

/// Cell rule: fan triangulation from the centroid, one triangle rule per edge.
/// Throws MeshError if a fan triangle is not positively oriented.
inline QuadratureRule cell_rule(const PolygonalMesh& mesh, int c, int degree)
{
    if (degree < 0) throw std::invalid_argument("cell_rule: negative degree");
    const Cell& cl = mesh.cell(c);
    QuadratureRule rule;
    rule.degree = degree;
    const std::size_t n = cl.vertices.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point& a = mesh.vertex(cl.vertices[i]);
        const Point& b = mesh.vertex(cl.vertices[(i + 1) % n]);
        if (cross(a - cl.centroid, b - cl.centroid) <= 0.0) {
            throw MeshError("cell " + std::to_string(c) + " is not star-shaped with respect to its centroid");
        }
        append_triangle_rule(cl.centroid, a, b, degree, rule);
    }
    return rule;
}

/// Gauss-Legendre rule on edge `e` with ceil((degree + 1) / 2) points.
inline EdgeQuadrature edge_rule(const PolygonalMesh& mesh, int e, int degree)
{
    if (degree < 0) throw std::invalid_argument("edge_rule: negative degree");
    const Edge& ed = mesh.edge(e);
    const Point& a = mesh.vertex(ed.vertices[0]);
    const Point& b = mesh.vertex(ed.vertices[1]);
    const GaussLegendre g = gauss_legendre(gauss_points_for(degree));
    EdgeQuadrature rule;
    rule.degree = degree;
    const Point mid = 0.5 * (a + b);
    const Vector2 half = 0.5 * (b - a);
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        rule.params.push_back(g.nodes[i]);
        rule.points.push_back(mid + g.nodes[i] * half);
        rule.weights.push_back(g.weights[i] * 0.5 * ed.length);
    }
    return rule;
}

}  // namespace sfwg
