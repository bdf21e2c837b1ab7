#pragma once

#include "sfwg/projection.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <string>

namespace sfwg {

using TensorField = std::function<Matrix2(const Point&)>;

struct ExactSolution {
    ScalarField value;
    VectorField gradient;
    TensorField hessian;
    int polynomial_degree = -1;  // -1 for non-polynomial solutions
};

/// -div(a grad u) = f in the unit square, u = g on the boundary.
/// The tensor is sampled at cell centroids and treated as constant per cell.
struct EllipticProblem {
    std::string name;
    TensorField coefficient = [](const Point&) { return Matrix2::Identity(); };
    ScalarField source;
    ScalarField boundary;
    std::optional<ExactSolution> exact;
};

/// Problem with a known solution u and constant tensor a; f = -tr(a Hess u), g = u.
inline EllipticProblem manufactured(std::string name, ExactSolution u, const Matrix2& a = Matrix2::Identity())
{
    EllipticProblem p;
    p.name = std::move(name);
    p.coefficient = [a](const Point&) { return a; };
    p.source = [a, h = u.hessian](const Point& x) { return -(a.cwiseProduct(h(x))).sum(); };
    p.boundary = u.value;
    p.exact = std::move(u);
    return p;
}

/// The four benchmark problems on (0,1)^2:
///   1: u = sin(x) sin(pi y)
///   2: u = sin(pi x) sin(pi y)
///   3: u = exp(pi x) cos(pi y)
///   4: u = exp(2x - 1) (y - y^3)
inline ExactSolution example_solution(int id)
{
    constexpr double pi = std::numbers::pi;
    ExactSolution u;
    switch (id) {
    case 1:
        u.value = [](const Point& p) { return std::sin(p.x()) * std::sin(pi * p.y()); };
        u.gradient = [](const Point& p) {
            return Vector2(std::cos(p.x()) * std::sin(pi * p.y()), pi * std::sin(p.x()) * std::cos(pi * p.y()));
        };
        u.hessian = [](const Point& p) {
            const double sx = std::sin(p.x()), cx = std::cos(p.x()), sy = std::sin(pi * p.y()), cy = std::cos(pi * p.y());
            Matrix2 h;
            h << -sx * sy, pi * cx * cy, pi * cx * cy, -pi * pi * sx * sy;
            return h;
        };
        break;
    case 2:
        u.value = [](const Point& p) { return std::sin(pi * p.x()) * std::sin(pi * p.y()); };
        u.gradient = [](const Point& p) {
            return Vector2(pi * std::cos(pi * p.x()) * std::sin(pi * p.y()), pi * std::sin(pi * p.x()) * std::cos(pi * p.y()));
        };
        u.hessian = [](const Point& p) {
            const double sx = std::sin(pi * p.x()), cx = std::cos(pi * p.x()), sy = std::sin(pi * p.y()), cy = std::cos(pi * p.y());
            Matrix2 h;
            h << -pi * pi * sx * sy, pi * pi * cx * cy, pi * pi * cx * cy, -pi * pi * sx * sy;
            return h;
        };
        break;
    case 3:
        u.value = [](const Point& p) { return std::exp(pi * p.x()) * std::cos(pi * p.y()); };
        u.gradient = [](const Point& p) {
            const double e = std::exp(pi * p.x());
            return Vector2(pi * e * std::cos(pi * p.y()), -pi * e * std::sin(pi * p.y()));
        };
        u.hessian = [](const Point& p) {
            const double e = std::exp(pi * p.x()), c = std::cos(pi * p.y()), s = std::sin(pi * p.y());
            Matrix2 h;
            h << pi * pi * e * c, -pi * pi * e * s, -pi * pi * e * s, -pi * pi * e * c;
            return h;
        };
        break;
    case 4:
        u.value = [](const Point& p) { return std::exp(2 * p.x() - 1) * (p.y() - p.y() * p.y() * p.y()); };
        u.gradient = [](const Point& p) {
            const double e = std::exp(2 * p.x() - 1), y = p.y();
            return Vector2(2 * e * (y - y * y * y), e * (1 - 3 * y * y));
        };
        u.hessian = [](const Point& p) {
            const double e = std::exp(2 * p.x() - 1), y = p.y();
            Matrix2 h;
            h << 4 * e * (y - y * y * y), 2 * e * (1 - 3 * y * y), 2 * e * (1 - 3 * y * y), -6 * e * y;
            return h;
        };
        break;
    default: throw std::invalid_argument("unknown example " + std::to_string(id) + " (expected 1-4)");
    }
    return u;
}

inline EllipticProblem example_problem(int id, const Matrix2& a = Matrix2::Identity())
{
    return manufactured("example " + std::to_string(id), example_solution(id), a);
}

/// u = x^a y^b (a polynomial of degree a + b).
inline ExactSolution monomial_solution(int a, int b)
{
    const auto pw = [](double x, int n) { return n < 0 ? 0.0 : std::pow(x, n); };
    ExactSolution u;
    u.polynomial_degree = a + b;
    u.value = [=](const Point& p) { return pw(p.x(), a) * pw(p.y(), b); };
    u.gradient = [=](const Point& p) { return Vector2(a * pw(p.x(), a - 1) * pw(p.y(), b), b * pw(p.x(), a) * pw(p.y(), b - 1)); };
    u.hessian = [=](const Point& p) {
        Matrix2 h;
        const double xy = a * b * pw(p.x(), a - 1) * pw(p.y(), b - 1);
        h << a * (a - 1) * pw(p.x(), a - 2) * pw(p.y(), b), xy, xy, b * (b - 1) * pw(p.x(), a) * pw(p.y(), b - 2);
        return h;
    };
    return u;
}

inline std::string monomial_name(int a, int b)
{
    if (a == 0 && b == 0) return "1";
    std::string s;
    if (a > 0) s += a == 1 ? "x" : "x^" + std::to_string(a);
    if (b > 0) s += b == 1 ? "y" : "y^" + std::to_string(b);
    return s;
}

}  // namespace sfwg
