#pragma once

#include "sfwg/problem.hpp"
#include "sfwg/weak_gradient.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace sfwg {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Global numbering: all cell blocks (dim P_k each), then all edge blocks (k each).
struct DofMap {
    int k = 1;
    int num_cells = 0;
    int num_edges = 0;
    int cell_block = 0;
    int edge_block = 0;
    std::vector<int> boundary_dofs;  // ascending

    [[nodiscard]] int total() const { return num_cells * cell_block + num_edges * edge_block; }
    [[nodiscard]] int num_cell_dofs() const { return num_cells * cell_block; }
    [[nodiscard]] int cell_offset(int c) const { return c * cell_block; }
    [[nodiscard]] int edge_offset(int e) const { return num_cells * cell_block + e * edge_block; }
};

inline DofMap build_dof_map(const PolygonalMesh& mesh, int k)
{
    if (k < 1) throw std::invalid_argument("build_dof_map: k must be >= 1");
    DofMap d;
    d.k = k;
    d.num_cells = mesh.num_cells();
    d.num_edges = mesh.num_edges();
    d.cell_block = dim_p(k);
    d.edge_block = k;
    for (int e = 0; e < mesh.num_edges(); ++e) {
        if (!mesh.edge(e).boundary()) continue;
        for (int i = 0; i < d.edge_block; ++i) d.boundary_dofs.push_back(d.edge_offset(e) + i);
    }
    return d;
}

/// Global indices of the local DOFs of cell c, in local order.
inline std::vector<int> local_to_global(const PolygonalMesh& mesh, const DofMap& dofs, int c)
{
    std::vector<int> out;
    for (int i = 0; i < dofs.cell_block; ++i) out.push_back(dofs.cell_offset(c) + i);
    for (int e : mesh.cell(c).edges)
        for (int i = 0; i < dofs.edge_block; ++i) out.push_back(dofs.edge_offset(e) + i);
    return out;
}

inline VectorXd gather(const std::vector<int>& indices, const VectorXd& full)
{
    VectorXd out(static_cast<Eigen::Index>(indices.size()));
    for (std::size_t i = 0; i < indices.size(); ++i) out(static_cast<Eigen::Index>(i)) = full(indices[i]);
    return out;
}

struct DiscretizationConfig {
    int k = 1;
    DegreeRule degree;
    Variant variant = Variant::New;
};

inline std::string describe(const DiscretizationConfig& cfg)
{
    return "k=" + std::to_string(cfg.k) + " j-mode=" + to_string(cfg.degree) + " variant=" + to_string(cfg.variant);
}

/// Everything element-local for one mesh, configuration, and coefficient:
/// spaces, weak-gradient operators, and stiffness matrices for every cell.
class Discretization {
public:
    Discretization(const PolygonalMesh& mesh, const DiscretizationConfig& cfg, const TensorField& coefficient)
        : mesh_(&mesh), cfg_(cfg), dofs_(build_dof_map(mesh, cfg.k))
    {
        const auto n = static_cast<std::size_t>(mesh.num_cells());
        spaces_.resize(n);
        ops_.resize(n);
        stiffness_.resize(n);
        coefficients_.resize(n);
        parallel_for(n, [&](std::size_t i) {
            const int c = static_cast<int>(i);
            const Cell& cl = mesh.cell(c);
            coefficients_[i] = coefficient(cl.centroid);
            spaces_[i] = make_cell_space(mesh, c, cfg.k, weak_gradient_degree(cl, cfg.k, cfg.degree));
            ops_[i] = build_weak_gradient_op(mesh, spaces_[i], cfg.variant);
            stiffness_[i] = local_stiffness(spaces_[i], ops_[i], coefficients_[i]).matrix;
        });
    }

    [[nodiscard]] const PolygonalMesh& mesh() const { return *mesh_; }
    [[nodiscard]] const DiscretizationConfig& config() const { return cfg_; }
    [[nodiscard]] const DofMap& dofs() const { return dofs_; }
    [[nodiscard]] const CellSpace& space(int c) const { return spaces_[static_cast<std::size_t>(c)]; }
    [[nodiscard]] const LocalWeakGradientOp& op(int c) const { return ops_[static_cast<std::size_t>(c)]; }
    [[nodiscard]] const MatrixXd& stiffness(int c) const { return stiffness_[static_cast<std::size_t>(c)]; }
    [[nodiscard]] const Matrix2& coefficient(int c) const { return coefficients_[static_cast<std::size_t>(c)]; }
    [[nodiscard]] std::vector<int> local_to_global(int c) const { return sfwg::local_to_global(*mesh_, dofs_, c); }

    [[nodiscard]] ElementConfig element_config(int c) const
    {
        return {cfg_.k, space(c).j, cfg_.variant, coefficient(c)};
    }

private:
    const PolygonalMesh* mesh_;
    DiscretizationConfig cfg_;
    DofMap dofs_;
    std::vector<CellSpace> spaces_;
    std::vector<LocalWeakGradientOp> ops_;
    std::vector<MatrixXd> stiffness_;
    std::vector<Matrix2> coefficients_;
};

/// Quadrature degree for integrals against non-polynomial data (f, g, u).
inline int oversampled_degree(int k) { return 2 * k + 8; }

struct LinearSystem {
    SparseMatrix matrix;
    VectorXd rhs;
};

/// Global stiffness sum_T K_T and load (f, v0). Edge rows of the load are zero.
/// Contributions to each entry are summed in cell-id order, so the result is
/// bitwise independent of `order`, the loop order over cells.
inline LinearSystem assemble(const Discretization& disc, const EllipticProblem& problem, std::span<const int> order = {})
{
    const PolygonalMesh& mesh = disc.mesh();
    const DofMap& dofs = disc.dofs();
    const int n = dofs.total();

    std::vector<VectorXd> loads(static_cast<std::size_t>(mesh.num_cells()));
    parallel_for(loads.size(), [&](std::size_t i) {
        const int c = static_cast<int>(i);
        loads[i] = VectorXd::Zero(disc.space(c).cell_dofs());
        if (!problem.source) return;
        const QuadratureRule rule = cell_rule(mesh, c, oversampled_degree(dofs.k));
        for (std::size_t q = 0; q < rule.size(); ++q) {
            loads[i] += rule.weights[q] * problem.source(rule.points[q]) * disc.space(c).cell_basis.values(rule.points[q]);
        }
    });

    std::vector<int> cells(static_cast<std::size_t>(mesh.num_cells()));
    if (order.empty()) {
        std::iota(cells.begin(), cells.end(), 0);
    } else {
        cells.assign(order.begin(), order.end());
        std::vector<int> sorted = cells;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            if (sorted[i] != static_cast<int>(i)) throw std::invalid_argument("assemble: order is not a permutation of the cells");
        }
    }

    struct Entry {
        int row, col, cell;
        double value;
    };
    std::vector<Entry> entries;
    LinearSystem sys;
    sys.rhs = VectorXd::Zero(n);
    for (int c : cells) {
        const std::vector<int> l2g = disc.local_to_global(c);
        const MatrixXd& K = disc.stiffness(c);
        for (std::size_t a = 0; a < l2g.size(); ++a)
            for (std::size_t b = 0; b < l2g.size(); ++b)
                entries.push_back({l2g[a], l2g[b], c, K(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b))});
        sys.rhs.segment(dofs.cell_offset(c), dofs.cell_block) += loads[static_cast<std::size_t>(c)];
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) {
        return std::tie(x.col, x.row, x.cell) < std::tie(y.col, y.row, y.cell);
    });
    std::vector<Eigen::Triplet<double>> triplets;
    for (std::size_t i = 0; i < entries.size();) {
        double sum = 0.0;
        std::size_t e = i;
        for (; e < entries.size() && entries[e].row == entries[i].row && entries[e].col == entries[i].col; ++e) sum += entries[e].value;
        triplets.emplace_back(entries[i].row, entries[i].col, sum);
        i = e;
    }
    sys.matrix.resize(n, n);
    sys.matrix.setFromTriplets(triplets.begin(), triplets.end());
    return sys;
}

/// Q_b g on every boundary edge, as a full-length vector (zero elsewhere).
inline VectorXd boundary_values(const Discretization& disc, const ScalarField& g)
{
    const PolygonalMesh& mesh = disc.mesh();
    const DofMap& dofs = disc.dofs();
    VectorXd values = VectorXd::Zero(dofs.total());
    if (!g) return values;
    for (int e = 0; e < mesh.num_edges(); ++e) {
        if (!mesh.edge(e).boundary()) continue;
        values.segment(dofs.edge_offset(e), dofs.edge_block) = project_edge(mesh, e, dofs.k - 1, g, oversampled_degree(dofs.k));
    }
    return values;
}

/// System on the free DOFs after eliminating the boundary edge DOFs.
struct ReducedSystem {
    SparseMatrix matrix;
    VectorXd rhs;
    std::vector<int> free_dofs;  // reduced index -> full index, ascending
    VectorXd fixed;              // full-length boundary values
    int num_cell_dofs = 0;       // leading free DOFs that are cell DOFs
    int cell_block = 0;

    [[nodiscard]] VectorXd expand(const VectorXd& reduced) const
    {
        VectorXd full = fixed;
        for (std::size_t i = 0; i < free_dofs.size(); ++i) full(free_dofs[i]) = reduced(static_cast<Eigen::Index>(i));
        return full;
    }
};

/// Fixes boundary DOFs to Q_b g and moves their columns to the right-hand side.
inline ReducedSystem apply_dirichlet(const LinearSystem& sys, const Discretization& disc, const EllipticProblem& problem)
{
    const DofMap& dofs = disc.dofs();
    const int n = dofs.total();
    ReducedSystem red;
    red.fixed = boundary_values(disc, problem.boundary);
    red.num_cell_dofs = dofs.num_cell_dofs();
    red.cell_block = dofs.cell_block;

    std::vector<int> full_to_free(static_cast<std::size_t>(n), -1);
    std::vector<bool> is_fixed(static_cast<std::size_t>(n), false);
    for (int d : dofs.boundary_dofs) is_fixed[static_cast<std::size_t>(d)] = true;
    for (int i = 0; i < n; ++i) {
        if (is_fixed[static_cast<std::size_t>(i)]) continue;
        full_to_free[static_cast<std::size_t>(i)] = static_cast<int>(red.free_dofs.size());
        red.free_dofs.push_back(i);
    }
    const auto nf = static_cast<Eigen::Index>(red.free_dofs.size());
    red.rhs = gather(red.free_dofs, sys.rhs);
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(sys.matrix.nonZeros()));
    for (int col = 0; col < sys.matrix.outerSize(); ++col) {
        const int fc = full_to_free[static_cast<std::size_t>(col)];
        for (SparseMatrix::InnerIterator it(sys.matrix, col); it; ++it) {
            const int fr = full_to_free[static_cast<std::size_t>(it.row())];
            if (fr < 0) continue;
            if (fc >= 0) triplets.emplace_back(fr, fc, it.value());
            else red.rhs(fr) -= it.value() * red.fixed(col);
        }
    }
    red.matrix.resize(nf, nf);
    red.matrix.setFromTriplets(triplets.begin(), triplets.end());
    return red;
}

enum class SolverMethod { Direct, CG };

inline std::string to_string(SolverMethod m) { return m == SolverMethod::Direct ? "direct" : "cg"; }

struct SolverOptions {
    SolverMethod method = SolverMethod::Direct;
    double tol = 1e-13;
    int max_iterations = 0;  // 0: 10 * system size
    bool condense = false;   // eliminate cell DOFs by local Schur complements first
};

struct SolveStats {
    int iterations = 0;
    double residual = 0.0;
};

namespace detail {

inline VectorXd solve_spd(const SparseMatrix& a, const VectorXd& b, const SolverOptions& opt, SolveStats* stats)
{
    if (a.rows() == 0) return VectorXd(0);
    if (opt.method == SolverMethod::Direct) {
        Eigen::SimplicialLLT<SparseMatrix> llt(a);
        if (llt.info() != Eigen::Success) throw NumericalError("sparse Cholesky breakdown: system is not positive definite");
        VectorXd x = llt.solve(b);
        if (stats) stats->residual = b.norm() > 0 ? (a * x - b).norm() / b.norm() : 0.0;
        return x;
    }
    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
    cg.setTolerance(opt.tol);
    cg.setMaxIterations(opt.max_iterations > 0 ? opt.max_iterations : static_cast<int>(10 * a.rows()));
    cg.compute(a);
    VectorXd x = cg.solve(b);
    if (cg.info() != Eigen::Success) {
        throw NumericalError("conjugate gradients did not converge in " + std::to_string(cg.iterations()) +
                             " iterations (residual " + std::to_string(cg.error()) + ")");
    }
    if (stats) {
        stats->iterations = static_cast<int>(cg.iterations());
        stats->residual = cg.error();
    }
    return x;
}

/// Static condensation: the leading `nc` unknowns form independent diagonal
/// blocks of size `block`; solve the Schur complement on the rest, then back-substitute.
inline VectorXd solve_condensed(const SparseMatrix& a, const VectorXd& b, int nc, int block, const SolverOptions& opt,
                                SolveStats* stats)
{
    const Eigen::Index n = a.rows();
    const Eigen::Index ne = n - nc;
    const SparseMatrix acc = a.topLeftCorner(nc, nc);
    const SparseMatrix ace = a.topRightCorner(nc, ne);
    const SparseMatrix aec = a.bottomLeftCorner(ne, nc);
    const SparseMatrix aee = a.bottomRightCorner(ne, ne);

    std::vector<Eigen::Triplet<double>> inv_triplets;
    for (int start = 0; start < nc; start += block) {
        const MatrixXd blk = MatrixXd(acc.block(start, start, block, block));
        Eigen::LLT<MatrixXd> llt(blk);
        if (llt.info() != Eigen::Success) {
            throw NumericalError("static condensation: cell block " + std::to_string(start / block) + " is not positive definite");
        }
        const MatrixXd inv = llt.solve(MatrixXd::Identity(block, block));
        for (int r = 0; r < block; ++r)
            for (int c = 0; c < block; ++c) inv_triplets.emplace_back(start + r, start + c, inv(r, c));
    }
    SparseMatrix acc_inv(nc, nc);
    acc_inv.setFromTriplets(inv_triplets.begin(), inv_triplets.end());

    const VectorXd bc = b.head(nc), be = b.tail(ne);
    const SparseMatrix schur = (aee - aec * (acc_inv * ace)).pruned();
    const VectorXd rhs_e = be - aec * (acc_inv * bc);
    const VectorXd ue = solve_spd(schur, rhs_e, opt, stats);
    VectorXd x(n);
    x.head(nc) = acc_inv * (bc - ace * ue);
    x.tail(ne) = ue;
    return x;
}

}  // namespace detail

/// Solves the reduced system and returns the full coefficient vector,
/// boundary values included.
inline VectorXd solve(const ReducedSystem& red, const SolverOptions& opt = {}, SolveStats* stats = nullptr)
{
    VectorXd x;
    if (opt.condense && red.num_cell_dofs > 0) {
        x = detail::solve_condensed(red.matrix, red.rhs, red.num_cell_dofs, red.cell_block, opt, stats);
    } else {
        x = detail::solve_spd(red.matrix, red.rhs, opt, stats);
    }
    return red.expand(x);
}

/// Assemble, impose boundary data, solve.
inline VectorXd solve_problem(const Discretization& disc, const EllipticProblem& problem, const SolverOptions& opt = {},
                              SolveStats* stats = nullptr)
{
    const LinearSystem sys = assemble(disc, problem);
    return solve(apply_dirichlet(sys, disc, problem), opt, stats);
}

/// Coordinate text export: one "i j value" line per stored entry.
inline void write_matrix_coo(const SparseMatrix& a, const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "% " << a.rows() << " " << a.cols() << " " << a.nonZeros() << "\n";
    char buf[96];
    for (int col = 0; col < a.outerSize(); ++col) {
        for (SparseMatrix::InnerIterator it(a, col); it; ++it) {
            std::snprintf(buf, sizeof buf, "%ld %ld %.17g\n", static_cast<long>(it.row()), static_cast<long>(it.col()), it.value());
            out << buf;
        }
    }
}

inline void write_solution_csv(const VectorXd& u, const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "dof,value\n";
    char buf[64];
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%ld,%.17g\n", static_cast<long>(i), u(i));
        out << buf;
    }
}

}  // namespace sfwg
