#pragma once

#include "sfwg/quadrature.hpp"

#include <Eigen/Cholesky>

#include <utility>
#include <vector>

namespace sfwg {

inline int dim_p(int degree) { return degree < 0 ? 0 : (degree + 1) * (degree + 2) / 2; }

/// Exponents (a, b) of the 2D monomials of total degree <= `degree`, ordered
/// by total degree then by decreasing power of x: 1, x, y, x^2, xy, y^2, ...
inline std::vector<std::pair<int, int>> monomial_exponents(int degree)
{
    std::vector<std::pair<int, int>> out;
    for (int t = 0; t <= degree; ++t)
        for (int b = 0; b <= t; ++b) out.emplace_back(t - b, b);
    return out;
}

using Gradients = Eigen::Matrix<double, Eigen::Dynamic, 2>;

/// Scaled monomials ((x - x_T)/h_T)^a ((y - y_T)/h_T)^b on one cell, optionally
/// orthonormalized against the cell L2 inner product (phi = L^{-1} m, Gram = L L^T).
class CellBasis {
public:
    CellBasis() = default;
    CellBasis(Point center, double h, int degree)
        : center_(std::move(center)), h_(h), degree_(degree), exponents_(monomial_exponents(degree))
    {
        if (degree < 0) throw std::invalid_argument("CellBasis: negative degree");
        if (!(h > 0.0)) throw std::invalid_argument("CellBasis: non-positive scale");
    }

    /// Orthonormal basis of P_degree on cell `c` of `mesh`.
    static CellBasis orthonormal(const PolygonalMesh& mesh, int c, int degree)
    {
        const Cell& cl = mesh.cell(c);
        CellBasis basis(cl.centroid, cl.diameter, degree);
        const QuadratureRule rule = cell_rule(mesh, c, 2 * degree);
        // two passes: the second restores orthonormality lost to the conditioning
        // of high-degree monomial Gram matrices
        for (int pass = 0; pass < 2; ++pass) {
            Eigen::LLT<MatrixXd> llt(basis.gram(rule));
            if (llt.info() != Eigen::Success) {
                throw NumericalError("cell " + std::to_string(c) + ": monomial Gram matrix of degree " + std::to_string(degree) +
                                     " is not positive definite");
            }
            const MatrixXd lower = llt.matrixL();
            basis.factor_ = basis.orthonormal_ ? MatrixXd(basis.factor_ * lower) : lower;
            basis.orthonormal_ = true;
        }
        return basis;
    }

    [[nodiscard]] int size() const { return static_cast<int>(exponents_.size()); }
    [[nodiscard]] int degree() const { return degree_; }
    [[nodiscard]] const Point& center() const { return center_; }
    [[nodiscard]] double scale() const { return h_; }
    [[nodiscard]] bool is_orthonormal() const { return orthonormal_; }

    [[nodiscard]] VectorXd values(const Point& p) const
    {
        VectorXd v(size());
        const Vector2 s = (p - center_) / h_;
        for (int i = 0; i < size(); ++i) {
            const auto [a, b] = exponents_[static_cast<std::size_t>(i)];
            v(i) = ipow(s.x(), a) * ipow(s.y(), b);
        }
        if (orthonormal_) factor_.triangularView<Eigen::Lower>().solveInPlace(v);
        return v;
    }

    /// Values and gradients; gradients include the 1/h_T chain-rule factor.
    void eval(const Point& p, VectorXd& v, Gradients& g) const
    {
        v.resize(size());
        g.resize(size(), 2);
        const Vector2 s = (p - center_) / h_;
        for (int i = 0; i < size(); ++i) {
            const auto [a, b] = exponents_[static_cast<std::size_t>(i)];
            const double xa = ipow(s.x(), a), yb = ipow(s.y(), b);
            v(i) = xa * yb;
            g(i, 0) = a > 0 ? a * ipow(s.x(), a - 1) * yb / h_ : 0.0;
            g(i, 1) = b > 0 ? b * xa * ipow(s.y(), b - 1) / h_ : 0.0;
        }
        if (orthonormal_) {
            const auto L = factor_.triangularView<Eigen::Lower>();
            L.solveInPlace(v);
            L.solveInPlace(g);
        }
    }

    [[nodiscard]] MatrixXd gram(const QuadratureRule& rule) const
    {
        MatrixXd m = MatrixXd::Zero(size(), size());
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const VectorXd v = values(rule.points[q]);
            m.noalias() += rule.weights[q] * v * v.transpose();
        }
        return m;
    }

private:
    static double ipow(double x, int n)
    {
        double r = 1.0;
        for (int i = 0; i < n; ++i) r *= x;
        return r;
    }

    Point center_ = Point::Zero();
    double h_ = 1.0;
    int degree_ = 0;
    std::vector<std::pair<int, int>> exponents_;
    bool orthonormal_ = false;
    MatrixXd factor_;
};

/// Monomials s^m, m <= degree, in the midpoint-centred parameter s in [-1, 1]
/// along the edge's global orientation. Both neighbouring cells see the same functions.
class EdgeBasis {
public:
    EdgeBasis() = default;
    EdgeBasis(const PolygonalMesh& mesh, int e, int degree) : degree_(degree)
    {
        if (degree < 0) throw std::invalid_argument("EdgeBasis: negative degree");
        const Edge& ed = mesh.edge(e);
        const Point& a = mesh.vertex(ed.vertices[0]);
        const Point& b = mesh.vertex(ed.vertices[1]);
        mid_ = 0.5 * (a + b);
        half_ = 0.5 * (b - a);
    }

    [[nodiscard]] int size() const { return degree_ + 1; }
    [[nodiscard]] int degree() const { return degree_; }

    [[nodiscard]] double param(const Point& p) const { return (p - mid_).dot(half_) / half_.squaredNorm(); }

    [[nodiscard]] VectorXd values_at_param(double s) const
    {
        VectorXd v(size());
        double r = 1.0;
        for (int m = 0; m < size(); ++m, r *= s) v(m) = r;
        return v;
    }
    [[nodiscard]] VectorXd values(const Point& p) const { return values_at_param(param(p)); }

    [[nodiscard]] MatrixXd gram(const EdgeQuadrature& rule) const
    {
        MatrixXd m = MatrixXd::Zero(size(), size());
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const VectorXd v = values_at_param(rule.params[q]);
            m.noalias() += rule.weights[q] * v * v.transpose();
        }
        return m;
    }

private:
    Point mid_ = Point::Zero();
    Vector2 half_ = Vector2::UnitX();
    int degree_ = 0;
};

/// [P_j]^2 is represented with a scalar basis of degree j: index l < n is (p_l, 0),
/// index n + l is (0, p_l).
inline int vector_size(const CellBasis& scalar) { return 2 * scalar.size(); }

/// Vector mass matrix weighted by a constant tensor: entries (a q_i, q_l)_T.
inline MatrixXd weighted_vector_mass(const MatrixXd& scalar_gram, const Matrix2& a)
{
    const Eigen::Index n = scalar_gram.rows();
    MatrixXd m(2 * n, 2 * n);
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) m.block(r * n, c * n, n, n) = a(r, c) * scalar_gram;
    return m;
}

/// Evaluates sum_i coeffs(i) phi_i(p).
inline double evaluate(const CellBasis& basis, const VectorXd& coeffs, const Point& p) { return basis.values(p).dot(coeffs); }

inline Vector2 evaluate_vector(const CellBasis& basis, const VectorXd& coeffs, const Point& p)
{
    const VectorXd v = basis.values(p);
    const Eigen::Index n = v.size();
    return Vector2(v.dot(coeffs.head(n)), v.dot(coeffs.tail(n)));
}

}  // namespace sfwg
