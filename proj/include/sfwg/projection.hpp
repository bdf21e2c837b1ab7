#pragma once

#include "sfwg/basis.hpp"

#include <functional>
#include <string>

namespace sfwg {

using ScalarField = std::function<double(const Point&)>;
using VectorField = std::function<Vector2(const Point&)>;

namespace detail {

inline MatrixXd solve_gram(const MatrixXd& gram, const MatrixXd& rhs, const char* what)
{
    Eigen::LLT<MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) throw NumericalError(std::string(what) + ": singular Gram matrix");
    return llt.solve(rhs);
}

}  // namespace detail

/// L2 projection onto span(basis) over the cell integrated by `rule` (Q_0).
inline VectorXd project_cell(const CellBasis& basis, const QuadratureRule& rule, const ScalarField& f)
{
    VectorXd rhs = VectorXd::Zero(basis.size());
    for (std::size_t q = 0; q < rule.size(); ++q) rhs += rule.weights[q] * f(rule.points[q]) * basis.values(rule.points[q]);
    return detail::solve_gram(basis.gram(rule), rhs, "project_cell");
}

/// Q_0 onto P_k(T) with an orthonormal basis; `quad_degree` should cover f.
inline VectorXd project_cell(const PolygonalMesh& mesh, int c, int k, const ScalarField& f, int quad_degree)
{
    return project_cell(CellBasis::orthonormal(mesh, c, k), cell_rule(mesh, c, std::max(quad_degree, 2 * k)), f);
}

/// L2 projection onto the edge polynomials (Q_b).
inline VectorXd project_edge(const EdgeBasis& basis, const EdgeQuadrature& rule, const ScalarField& g)
{
    VectorXd rhs = VectorXd::Zero(basis.size());
    for (std::size_t q = 0; q < rule.size(); ++q) rhs += rule.weights[q] * g(rule.points[q]) * basis.values_at_param(rule.params[q]);
    return detail::solve_gram(basis.gram(rule), rhs, "project_edge");
}

inline VectorXd project_edge(const PolygonalMesh& mesh, int e, int m, const ScalarField& g, int quad_degree)
{
    return project_edge(EdgeBasis(mesh, e, m), edge_rule(mesh, e, std::max(quad_degree, 2 * m)), g);
}

/// Componentwise L2 projection onto [span(basis)]^2 (the weak-gradient space).
inline VectorXd project_cell_vector(const CellBasis& basis, const QuadratureRule& rule, const VectorField& F)
{
    const int n = basis.size();
    MatrixXd rhs = MatrixXd::Zero(n, 2);
    for (std::size_t q = 0; q < rule.size(); ++q) {
        const Vector2 val = F(rule.points[q]);
        const VectorXd v = basis.values(rule.points[q]);
        rhs.col(0) += rule.weights[q] * val.x() * v;
        rhs.col(1) += rule.weights[q] * val.y() * v;
    }
    VectorXd out(2 * n);
    const MatrixXd gram = basis.gram(rule);
    out << detail::solve_gram(gram, rhs.col(0), "project_cell_vector"), detail::solve_gram(gram, rhs.col(1), "project_cell_vector");
    return out;
}

inline VectorXd project_cell_vector(const PolygonalMesh& mesh, int c, int j, const VectorField& F, int quad_degree)
{
    return project_cell_vector(CellBasis::orthonormal(mesh, c, j), cell_rule(mesh, c, std::max(quad_degree, 2 * j)), F);
}

}  // namespace sfwg
