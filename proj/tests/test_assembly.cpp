#include "sfwg/analysis.hpp"
#include "sfwg/assembly.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <set>

using namespace sfwg;

namespace {

const auto identity = [](const Point&) { return Matrix2::Identity(); };

DiscretizationConfig config(int k, Variant v = Variant::New)
{
    DiscretizationConfig c;
    c.k = k;
    c.variant = v;
    return c;
}

/// Global DOF vector of the constant weak function {1, 1}.
VectorXd global_constant(const Discretization& disc)
{
    return interpolate(disc, [](const Point&) { return 1.0; });
}

EllipticProblem polynomial_problem(int a, int b) { return manufactured(monomial_name(a, b), monomial_solution(a, b)); }

EllipticProblem data_problem(ScalarField f, ScalarField g)
{
    EllipticProblem p;
    p.name = "data";
    p.source = std::move(f);
    p.boundary = std::move(g);
    return p;
}

double max_relative(const VectorXd& a, const VectorXd& b) { return (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff(); }

std::string temp_path(const std::string& name)
{
    return (std::filesystem::temp_directory_path() / ("sfwg_test_" + name)).string();
}

}  // namespace

TEST(DofMap, Counts)
{
    EXPECT_EQ(build_dof_map(build_uniform_triangular(2), 1).total(), 8 * 3 + 16 * 1);
    EXPECT_EQ(build_dof_map(build_rectangular(1), 2).total(), 1 * 6 + 4 * 2);
    EXPECT_EQ(build_dof_map(build_crisscross(1), 1).total(), 4 * 3 + 8 * 1);
    EXPECT_THROW(build_dof_map(build_rectangular(1), 0), std::invalid_argument);
}

TEST(DofMap, BlocksPartitionTheRange)
{
    for (int k = 1; k <= 3; ++k) {
        const auto m = build_polygonal(1);
        const DofMap d = build_dof_map(m, k);
        std::vector<int> hits(static_cast<std::size_t>(d.total()), 0);
        for (int c = 0; c < m.num_cells(); ++c)
            for (int i = 0; i < d.cell_block; ++i) ++hits[static_cast<std::size_t>(d.cell_offset(c) + i)];
        for (int e = 0; e < m.num_edges(); ++e)
            for (int i = 0; i < d.edge_block; ++i) ++hits[static_cast<std::size_t>(d.edge_offset(e) + i)];
        for (int h : hits) EXPECT_EQ(h, 1);

        int boundary_edges = 0;
        for (const auto& e : m.edges()) boundary_edges += e.boundary();
        EXPECT_EQ(static_cast<int>(d.boundary_dofs.size()), boundary_edges * k);
        EXPECT_TRUE(std::is_sorted(d.boundary_dofs.begin(), d.boundary_dofs.end()));
    }
}

TEST(DofMap, EdgeDofsSharedByNeighbours)
{
    const auto m = build_crisscross(2);
    const DofMap d = build_dof_map(m, 2);
    for (int e = 0; e < m.num_edges(); ++e) {
        const Edge& ed = m.edge(e);
        for (int c : {ed.left, ed.right}) {
            if (c < 0) continue;
            const auto l2g = local_to_global(m, d, c);
            EXPECT_NE(std::find(l2g.begin(), l2g.end(), d.edge_offset(e)), l2g.end());
        }
    }
}

TEST(Assemble, ConstantsAndLoadSum)
{
    const EllipticProblem p = example_problem(1);
    for (MeshFamily f : {MeshFamily::Triangular, MeshFamily::Polygonal}) {
        const auto m = build_level(f, 2);
        for (int k = 1; k <= 2; ++k) {
            const Discretization disc(m, config(k), identity);
            const LinearSystem sys = assemble(disc, p);
            const VectorXd one = global_constant(disc);
            EXPECT_LE((sys.matrix * one).norm(), 1e-12 * MatrixXd(sys.matrix).norm());

            // int f over the domain with an independent high-degree rule
            double integral = 0.0;
            for (int c = 0; c < m.num_cells(); ++c) {
                const auto r = cell_rule(m, c, 20);
                for (std::size_t q = 0; q < r.size(); ++q) integral += r.weights[q] * p.source(r.points[q]);
            }
            EXPECT_NEAR(sys.rhs.dot(one), integral, 1e-11 * std::abs(integral));
            for (int e = 0; e < m.num_edges(); ++e)
                EXPECT_EQ(sys.rhs.segment(disc.dofs().edge_offset(e), disc.dofs().edge_block).norm(), 0.0);
        }
    }
}

TEST(Assemble, Symmetric)
{
    for (MeshFamily f : {MeshFamily::Triangular, MeshFamily::Crisscross, MeshFamily::Rectangular, MeshFamily::Polygonal}) {
        const auto m = build_level(f, 2);
        const Discretization disc(m, config(2), identity);
        const MatrixXd a = MatrixXd(assemble(disc, example_problem(1)).matrix);
        EXPECT_LE((a - a.transpose()).norm(), 1e-12 * a.norm()) << to_string(f);
    }
}

TEST(Assemble, MatchesBilinearFormOracle)
{
    // a(e_i, e_l) = sum_T (grad_w e_i, grad_w e_l)_T from freshly built per-cell operators
    const auto m = build_uniform_triangular(1);
    const Discretization disc(m, config(1), identity);
    const MatrixXd a = MatrixXd(assemble(disc, example_problem(1)).matrix);
    const int n = disc.dofs().total();
    MatrixXd oracle = MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        const VectorXd ei = VectorXd::Unit(n, i);
        for (int l = 0; l < n; ++l) {
            const VectorXd el = VectorXd::Unit(n, l);
            for (int c = 0; c < m.num_cells(); ++c) {
                const ElementConfig cfg{1, 2, Variant::New, Matrix2::Identity()};
                const auto op = build_weak_gradient_op(m, c, cfg);
                const auto l2g = local_to_global(m, disc.dofs(), c);
                const VectorXd gi = op.apply(gather(l2g, ei)), gl = op.apply(gather(l2g, el));
                const CellBasis basis = CellBasis::orthonormal(m, c, 2);
                const QuadratureRule r = cell_rule(m, c, 6);
                for (std::size_t q = 0; q < r.size(); ++q)
                    oracle(i, l) += r.weights[q] * evaluate_vector(basis, gi, r.points[q]).dot(evaluate_vector(basis, gl, r.points[q]));
            }
        }
    }
    EXPECT_LE((a - oracle).cwiseAbs().maxCoeff(), 1e-12 * oracle.cwiseAbs().maxCoeff());
}

TEST(Assemble, KernelIsConstantsOnly)
{
    for (MeshFamily f : {MeshFamily::Triangular, MeshFamily::Crisscross, MeshFamily::Rectangular, MeshFamily::Polygonal}) {
        const auto m = build_level(f, 1);
        for (int k = 1; k <= 2; ++k) {
            const Discretization disc(m, config(k), identity);
            const MatrixXd a = MatrixXd(assemble(disc, example_problem(1)).matrix);
            const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(a);
            const double top = eig.eigenvalues().maxCoeff();
            EXPECT_LE(std::abs(eig.eigenvalues()(0)), 1e-12 * top) << to_string(f);
            EXPECT_GT(eig.eigenvalues()(1), 1e-10 * top) << to_string(f) << " k=" << k;
        }
    }
}

TEST(Assemble, CellOrderDoesNotChangeTheResult)
{
    const auto m = build_polygonal(2);
    const Discretization disc(m, config(2), identity);
    const EllipticProblem p = example_problem(4);
    std::vector<int> order(static_cast<std::size_t>(m.num_cells()));
    std::iota(order.begin(), order.end(), 0);
    std::reverse(order.begin(), order.end());
    std::rotate(order.begin(), order.begin() + 7, order.end());
    const LinearSystem a = assemble(disc, p);
    const LinearSystem b = assemble(disc, p, order);
    EXPECT_EQ(MatrixXd(a.matrix), MatrixXd(b.matrix));
    const VectorXd ua = solve(apply_dirichlet(a, disc, p)), ub = solve(apply_dirichlet(b, disc, p));
    EXPECT_LE((ua - ub).cwiseAbs().maxCoeff(), 1e-14);

    std::vector<int> bad(order.begin(), order.end() - 1);
    EXPECT_THROW(assemble(disc, p, bad), std::invalid_argument);
}

TEST(Dirichlet, ZeroDataLeavesRhs)
{
    const auto m = build_uniform_triangular(3);
    const Discretization disc(m, config(1), identity);
    const EllipticProblem p = data_problem([](const Point& x) { return std::sin(3 * x.x()) + x.y(); }, [](const Point&) { return 0.0; });
    const LinearSystem sys = assemble(disc, p);
    const ReducedSystem red = apply_dirichlet(sys, disc, p);
    EXPECT_EQ(red.free_dofs.size() + disc.dofs().boundary_dofs.size(), static_cast<std::size_t>(disc.dofs().total()));
    for (std::size_t i = 0; i < red.free_dofs.size(); ++i) EXPECT_EQ(red.rhs(static_cast<Eigen::Index>(i)), sys.rhs(red.free_dofs[i]));
}

TEST(Dirichlet, ConstantDataGivesConstantSolution)
{
    for (int k = 1; k <= 3; ++k) {
        const auto m = build_crisscross(2);
        const Discretization disc(m, config(k), identity);
        const EllipticProblem p = data_problem([](const Point&) { return 0.0; }, [](const Point&) { return 1.0; });
        const VectorXd u = solve_problem(disc, p);
        EXPECT_LE((u - global_constant(disc)).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(Dirichlet, LinearDataIsReproduced)
{
    // table-default degrees leave a local kernel on 12-gons at k = 3
    for (int k = 1; k <= 2; ++k) {
        const auto m = build_polygonal(2);
        const Discretization disc(m, config(k), identity);
        const EllipticProblem p = polynomial_problem(1, 0);
        const VectorXd u = solve_problem(disc, p);
        EXPECT_LE(l2_error(disc, u, p), 1e-10) << "k=" << k;
    }
}

TEST(Solve, LinearPatchOnTriangles)
{
    const auto m = build_uniform_triangular(4);
    const Discretization disc(m, config(1), identity);
    ExactSolution u;
    u.polynomial_degree = 1;
    u.value = [](const Point& p) { return p.x() + p.y(); };
    u.gradient = [](const Point&) { return Vector2(1, 1); };
    u.hessian = [](const Point&) { return Matrix2::Zero().eval(); };
    const EllipticProblem p = manufactured("x+y", u);
    const VectorXd uh = solve_problem(disc, p);
    EXPECT_LE(energy_error(disc, uh, p), 1e-10);
    EXPECT_LE(l2_error(disc, uh, p), 1e-10);
}

TEST(Solve, HigherDegreePolynomialsOnCrisscross)
{
    const auto m = build_crisscross(2);
    for (int k = 2; k <= 3; ++k) {
        const Discretization disc(m, config(k), identity);
        for (const auto& [a, b] : monomial_exponents(k)) {
            const EllipticProblem p = polynomial_problem(a, b);
            EXPECT_LE(l2_error(disc, solve_problem(disc, p), p), 1e-9) << p.name << " k=" << k;
        }
    }
}

TEST(Solve, CgAgreesWithDirect)
{
    const auto m = build_uniform_triangular(4);
    const Discretization disc(m, config(1), identity);
    const EllipticProblem p = example_problem(1);
    const ReducedSystem red = apply_dirichlet(assemble(disc, p), disc, p);
    SolverOptions cg;
    cg.method = SolverMethod::CG;
    cg.tol = 1e-13;
    SolveStats stats;
    const VectorXd ucg = solve(red, cg, &stats);
    EXPECT_GT(stats.iterations, 0);
    EXPECT_LE(stats.residual, 1e-13);
    EXPECT_LE(max_relative(ucg, solve(red)), 1e-9);
}

TEST(Solve, CondensationMatchesFullSolve)
{
    for (MeshFamily f : {MeshFamily::Triangular, MeshFamily::Polygonal}) {
        const auto m = build_level(f, 2);
        const Discretization disc(m, config(2), identity);
        const EllipticProblem p = example_problem(4);
        const ReducedSystem red = apply_dirichlet(assemble(disc, p), disc, p);
        SolverOptions opt;
        opt.condense = true;
        EXPECT_LE(max_relative(solve(red, opt), solve(red)), 1e-12) << to_string(f);
        opt.method = SolverMethod::CG;
        EXPECT_LE(max_relative(solve(red, opt), solve(red)), 1e-9) << to_string(f);
    }
}

TEST(Solve, ScalingTheCoefficientScalesTheSolution)
{
    const auto m = build_polygonal(2);
    const EllipticProblem p = data_problem([](const Point& x) { return std::cos(x.x() + 2 * x.y()); }, [](const Point&) { return 0.0; });
    const Discretization d1(m, config(2), identity);
    const Discretization d3(m, config(2), [](const Point&) { return Matrix2(3.0 * Matrix2::Identity()); });
    const VectorXd u1 = solve_problem(d1, p), u3 = solve_problem(d3, p);
    EXPECT_LE(max_relative(3.0 * u3, u1), 1e-12);
}

TEST(Solve, AnisotropicCoefficientPatch)
{
    Matrix2 a;
    a << 2.0, 0.5, 0.5, 1.0;
    const auto m = build_polygonal(2);
    const Discretization disc(m, config(2), [a](const Point&) { return a; });
    const EllipticProblem p = manufactured("xy", monomial_solution(1, 1), a);
    const VectorXd uh = solve_problem(disc, p);
    EXPECT_LE(l2_error(disc, uh, p), 1e-10);
    EXPECT_LE(energy_error(disc, uh, p), 1e-9);
}

TEST(Solve, FailuresAreReported)
{
    ReducedSystem red;
    red.matrix.resize(2, 2);
    std::vector<Eigen::Triplet<double>> t = {{0, 0, 1.0}, {0, 1, 2.0}, {1, 0, 2.0}, {1, 1, 1.0}};
    red.matrix.setFromTriplets(t.begin(), t.end());
    red.rhs = VectorXd::Ones(2);
    red.free_dofs = {0, 1};
    red.fixed = VectorXd::Zero(2);
    EXPECT_THROW(solve(red), NumericalError);

    const auto m = build_uniform_triangular(8);
    const Discretization disc(m, config(1), identity);
    const EllipticProblem p = example_problem(1);
    SolverOptions cg;
    cg.method = SolverMethod::CG;
    cg.max_iterations = 2;
    EXPECT_THROW(solve(apply_dirichlet(assemble(disc, p), disc, p), cg), NumericalError);
}

TEST(Export, CoordinateMatrixAndSolution)
{
    const auto m = build_uniform_triangular(1);
    const Discretization disc(m, config(1), identity);
    const EllipticProblem p = example_problem(1);
    const LinearSystem sys = assemble(disc, p);
    const std::string mpath = temp_path("matrix.txt"), spath = temp_path("solution.csv");
    write_matrix_coo(sys.matrix, mpath);
    std::ifstream in(mpath);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "% 11 11 " + std::to_string(sys.matrix.nonZeros()));
    SparseMatrix back(11, 11);
    std::vector<Eigen::Triplet<double>> t;
    int i = 0, j = 0;
    double v = 0.0;
    while (in >> i >> j >> v) t.emplace_back(i, j, v);
    back.setFromTriplets(t.begin(), t.end());
    EXPECT_EQ(MatrixXd(back), MatrixXd(sys.matrix));

    const VectorXd u = solve(apply_dirichlet(sys, disc, p));
    write_solution_csv(u, spath);
    std::ifstream sin(spath);
    std::string line;
    std::getline(sin, line);
    EXPECT_EQ(line, "dof,value");
    int rows = 0;
    while (std::getline(sin, line)) {
        const auto comma = line.find(',');
        EXPECT_EQ(std::stoi(line.substr(0, comma)), rows);
        EXPECT_EQ(std::stod(line.substr(comma + 1)), u(rows));
        ++rows;
    }
    EXPECT_EQ(rows, u.size());
    std::remove(mpath.c_str());
    std::remove(spath.c_str());
}
