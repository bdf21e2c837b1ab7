#include "sfwg/basis.hpp"
#include "sfwg/mesh.hpp"
#include "sfwg/quadrature.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace sfwg;

namespace {

// Exact moments through polynomial arithmetic in the edge parameter t in [0, 1].
using Poly = std::vector<double>;

Poly mul(const Poly& a, const Poly& b)
{
    Poly r(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
    return r;
}

Poly power(const Poly& a, int n)
{
    Poly r{1.0};
    for (int i = 0; i < n; ++i) r = mul(r, a);
    return r;
}

double integral01(const Poly& p)
{
    double s = 0.0;
    for (std::size_t m = 0; m < p.size(); ++m) s += p[m] / static_cast<double>(m + 1);
    return s;
}

/// int_e x^a y^b ds on the segment pq.
double segment_moment(const Point& p, const Point& q, int a, int b)
{
    const Poly x{p.x(), q.x() - p.x()}, y{p.y(), q.y() - p.y()};
    return integral01(mul(power(x, a), power(y, b))) * (q - p).norm();
}

/// int_P x^a y^b dA = 1/(a+1) * closed integral of x^(a+1) y^b dy (Green's theorem).
double polygon_moment(const std::vector<Point>& poly, int a, int b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Point& p = poly[i];
        const Point& q = poly[(i + 1) % poly.size()];
        const Poly x{p.x(), q.x() - p.x()}, y{p.y(), q.y() - p.y()};
        s += integral01(mul(power(x, a + 1), power(y, b))) * (q.y() - p.y());
    }
    return s / (a + 1);
}

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

double rule_moment(const QuadratureRule& r, int a, int b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) s += r.weights[i] * std::pow(r.points[i].x(), a) * std::pow(r.points[i].y(), b);
    return s;
}

std::vector<Point> cell_points(const PolygonalMesh& m, int c)
{
    std::vector<Point> out;
    for (int v : m.cell(c).vertices) out.push_back(m.vertex(v));
    return out;
}

}  // namespace

TEST(GaussLegendre, ExactForDegreeTwoNMinusOne)
{
    for (int n = 1; n <= 12; ++n) {
        const auto g = gauss_legendre(n);
        ASSERT_EQ(g.nodes.size(), static_cast<std::size_t>(n));
        for (int d = 0; d <= 2 * n - 1; ++d) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += g.weights[static_cast<std::size_t>(i)] * std::pow(g.nodes[static_cast<std::size_t>(i)], d);
            const double exact = d % 2 == 0 ? 2.0 / (d + 1) : 0.0;
            EXPECT_NEAR(s, exact, 1e-14) << "n=" << n << " d=" << d;
        }
    }
    EXPECT_THROW(gauss_legendre(0), std::invalid_argument);
}

TEST(TriangleRule, ReferenceTriangleMoments)
{
    const Point a(0, 0), b(1, 0), c(0, 1);
    EXPECT_NEAR(triangle_rule(a, b, c, 0).weight_sum(), 0.5, 1e-15);
    for (int d = 0; d <= 14; ++d) {
        const auto r = triangle_rule(a, b, c, d);
        for (int i = 0; i <= d; ++i) {
            const int p = d - i, q = i;
            const double exact = factorial(p) * factorial(q) / factorial(p + q + 2);
            EXPECT_NEAR(rule_moment(r, p, q), exact, 1e-13 * exact) << "x^" << p << " y^" << q;
        }
    }
}

TEST(CellRule, UnitSquareSecondMoment)
{
    const auto m = build_rectangular(1);
    EXPECT_NEAR(rule_moment(cell_rule(m, 0, 2), 2, 0), 1.0 / 3, 1e-13);
}

TEST(CellRule, ExactOnEveryFamily)
{
    for (MeshFamily f : {MeshFamily::Triangular, MeshFamily::Crisscross, MeshFamily::Rectangular, MeshFamily::Polygonal,
                         MeshFamily::PolygonalDual}) {
        const auto m = build_level(f, 2);
        for (int c = 0; c < m.num_cells(); c += 3) {
            const auto poly = cell_points(m, c);
            for (int d : {0, 3, 8, 12}) {
                const auto r = cell_rule(m, c, d);
                EXPECT_NEAR(r.weight_sum(), m.cell(c).area, 1e-15);
                for (double w : r.weights) EXPECT_GT(w, 0.0);
                for (const auto& [a, b] : monomial_exponents(d)) {
                    const double exact = polygon_moment(poly, a, b);
                    EXPECT_NEAR(rule_moment(r, a, b), exact, 1e-13 * std::max(std::abs(exact), m.cell(c).area * 1e-3))
                        << to_string(f) << " cell " << c << " x^" << a << " y^" << b;
                }
            }
        }
    }
}

TEST(CellRule, RejectsNegativeDegree)
{
    const auto m = build_rectangular(1);
    EXPECT_THROW(cell_rule(m, 0, -1), std::invalid_argument);
    EXPECT_THROW(edge_rule(m, 0, -1), std::invalid_argument);
}

TEST(EdgeRule, CubicOnUnitSegment)
{
    const auto m = build_rectangular(1);
    for (int e = 0; e < m.num_edges(); ++e) {
        const Edge& ed = m.edge(e);
        const Point& a = m.vertex(ed.vertices[0]);
        const Point& b = m.vertex(ed.vertices[1]);
        if (a.y() != 0.0 || b.y() != 0.0) continue;
        EXPECT_NEAR(rule_moment(edge_rule(m, e, 3), 3, 0), 0.25, 1e-14);
    }
}

TEST(EdgeRule, PointCountAndExactness)
{
    const auto m = build_polygonal(2);
    for (int e = 0; e < m.num_edges(); e += 5) {
        const Edge& ed = m.edge(e);
        for (int d = 0; d <= 13; ++d) {
            const auto r = edge_rule(m, e, d);
            EXPECT_EQ(r.size(), static_cast<std::size_t>((d + 2) / 2));
            EXPECT_NEAR(r.weight_sum(), ed.length, 1e-15);
            for (const auto& [a, b] : monomial_exponents(d)) {
                if (a + b != d) continue;
                const double exact = segment_moment(m.vertex(ed.vertices[0]), m.vertex(ed.vertices[1]), a, b);
                EXPECT_NEAR(rule_moment(r, a, b), exact, 1e-13 * std::max(std::abs(exact), ed.length * 1e-3));
            }
        }
    }
}

TEST(CellBasis, MonomialValuesAndGradients)
{
    const CellBasis b(Point(0, 0), 1.0, 1);
    VectorXd v;
    Gradients g;
    b.eval(Point(0.1, 0.2), v, g);
    EXPECT_NEAR(v(0), 1.0, 1e-16);
    EXPECT_NEAR(v(1), 0.1, 1e-16);
    EXPECT_NEAR(v(2), 0.2, 1e-16);
    Gradients expected(3, 2);
    expected << 0, 0, 1, 0, 0, 1;
    EXPECT_TRUE(g.isApprox(expected, 1e-15)) << g;
}

TEST(CellBasis, CentroidValues)
{
    const auto m = build_polygonal(1);
    for (int k = 0; k <= 4; ++k) {
        const Cell& c = m.cell(0);
        const CellBasis b(c.centroid, c.diameter, k);
        const VectorXd v = b.values(c.centroid);
        ASSERT_EQ(v.size(), dim_p(k));
        EXPECT_EQ(v(0), 1.0);
        for (Eigen::Index i = 1; i < v.size(); ++i) EXPECT_EQ(v(i), 0.0);
    }
}

TEST(CellBasis, GradientScalingMatchesFiniteDifferences)
{
    const CellBasis b(Point(0.3, 0.4), 0.25, 3);
    const Point p(0.37, 0.29);
    VectorXd v, vx, vy;
    Gradients g, unused;
    b.eval(p, v, g);
    const double eps = 1e-6;
    b.eval(p + Vector2(eps, 0), vx, unused);
    const VectorXd vxm = b.values(p - Vector2(eps, 0));
    b.eval(p + Vector2(0, eps), vy, unused);
    const VectorXd vym = b.values(p - Vector2(0, eps));
    EXPECT_TRUE(((vx - vxm) / (2 * eps)).isApprox(g.col(0), 1e-7));
    EXPECT_TRUE(((vy - vym) / (2 * eps)).isApprox(g.col(1), 1e-7));
}

TEST(CellBasis, OrthonormalGramIsIdentity)
{
    for (MeshFamily f : {MeshFamily::Triangular, MeshFamily::Crisscross, MeshFamily::Rectangular, MeshFamily::Polygonal,
                         MeshFamily::PolygonalDual}) {
        const auto m = build_level(f, 2);
        for (int c = 0; c < m.num_cells(); c += 4) {
            for (int k = 0; k <= 5; ++k) {
                const auto b = CellBasis::orthonormal(m, c, k);
                EXPECT_TRUE(b.is_orthonormal());
                const MatrixXd gram = b.gram(cell_rule(m, c, 2 * k));
                EXPECT_LE((gram - MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff(), 1e-10)
                    << to_string(f) << " cell " << c << " k " << k;
                const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(gram);
                EXPECT_LE(eig.eigenvalues().maxCoeff() / eig.eigenvalues().minCoeff(), 10.0);
            }
        }
    }
}

TEST(CellBasis, RawMonomialGramIsSpd)
{
    const auto m = build_polygonal(2);
    for (int c = 0; c < m.num_cells(); ++c) {
        const Cell& cl = m.cell(c);
        const CellBasis b(cl.centroid, cl.diameter, 3);
        const Eigen::LLT<MatrixXd> llt(b.gram(cell_rule(m, c, 6)));
        EXPECT_EQ(llt.info(), Eigen::Success);
    }
}

TEST(CellBasis, RejectsBadArguments)
{
    EXPECT_THROW(CellBasis(Point(0, 0), 1.0, -1), std::invalid_argument);
    EXPECT_THROW(CellBasis(Point(0, 0), 0.0, 1), std::invalid_argument);
}

TEST(MonomialExponents, Ordering)
{
    const auto e = monomial_exponents(2);
    const std::vector<std::pair<int, int>> expected = {{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
    EXPECT_EQ(e, expected);
    for (int k = 0; k <= 6; ++k) EXPECT_EQ(static_cast<int>(monomial_exponents(k).size()), dim_p(k));
    EXPECT_EQ(dim_p(-1), 0);
}

TEST(EdgeBasis, ParameterSpansMinusOneToOne)
{
    const auto m = build_polygonal(1);
    for (int e = 0; e < m.num_edges(); ++e) {
        const EdgeBasis b(m, e, 2);
        EXPECT_NEAR(b.param(m.vertex(m.edge(e).vertices[0])), -1.0, 1e-14);
        EXPECT_NEAR(b.param(m.vertex(m.edge(e).vertices[1])), 1.0, 1e-14);
        const Eigen::LLT<MatrixXd> llt(b.gram(edge_rule(m, e, 4)));
        EXPECT_EQ(llt.info(), Eigen::Success);
    }
}

TEST(EdgeBasis, GramMatchesClosedForm)
{
    // int_e s^(p+q) ds = |e|/2 * int_{-1}^{1} s^(p+q)
    const auto m = build_rectangular(2);
    for (int e = 0; e < m.num_edges(); ++e) {
        const EdgeBasis b(m, e, 3);
        const MatrixXd g = b.gram(edge_rule(m, e, 6));
        for (int p = 0; p <= 3; ++p)
            for (int q = 0; q <= 3; ++q) {
                const int d = p + q;
                const double exact = d % 2 ? 0.0 : 0.5 * m.edge(e).length * 2.0 / (d + 1);
                EXPECT_NEAR(g(p, q), exact, 1e-15);
            }
    }
}

TEST(VectorMass, WeightedBlocks)
{
    MatrixXd g(2, 2);
    g << 2, 1, 1, 3;
    Matrix2 a;
    a << 4, 1, 1, 5;
    const MatrixXd m = weighted_vector_mass(g, a);
    EXPECT_TRUE(m.block(0, 0, 2, 2).isApprox(4 * g));
    EXPECT_TRUE(m.block(0, 2, 2, 2).isApprox(g));
    EXPECT_TRUE(m.block(2, 0, 2, 2).isApprox(g));
    EXPECT_TRUE(m.block(2, 2, 2, 2).isApprox(5 * g));
}
