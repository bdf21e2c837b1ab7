#pragma once

#include "sfwg/projection.hpp"

#include <Eigen/Eigenvalues>

#include <optional>
#include <string>
#include <vector>

namespace sfwg {

/// Which weak-gradient definition to use.
///   New:    (grad_w v, q) = (grad v0, q) + <Q_b(v_b - v0), q.n>
///   Legacy: (grad_w v, q) = -(v0, div q) + <v_b, q.n>
enum class Variant { New, Legacy };

inline std::string to_string(Variant v) { return v == Variant::New ? "new" : "legacy"; }
inline std::optional<Variant> parse_variant(const std::string& s)
{
    if (s == "new") return Variant::New;
    if (s == "legacy") return Variant::Legacy;
    return std::nullopt;
}

/// How the weak-gradient degree j is chosen per cell.
enum class DegreeMode {
    TableDefault,  // k+1 on triangles and quadrilaterals, k+2 on cells with 5 or more edges
    AnalysisSafe,  // n+k-1 with n the number of edges
    Explicit,      // a fixed j > k
};

struct DegreeRule {
    DegreeMode mode = DegreeMode::TableDefault;
    int j = 0;  // only for Explicit
};

inline std::string to_string(const DegreeRule& r)
{
    switch (r.mode) {
    case DegreeMode::TableDefault: return "table-default";
    case DegreeMode::AnalysisSafe: return "analysis-safe";
    case DegreeMode::Explicit: return "explicit:" + std::to_string(r.j);
    }
    return "unknown";
}

inline int weak_gradient_degree(int num_edges, int k, const DegreeRule& rule)
{
    switch (rule.mode) {
    case DegreeMode::TableDefault: return num_edges <= 4 ? k + 1 : k + 2;
    case DegreeMode::AnalysisSafe: return num_edges + k - 1;
    case DegreeMode::Explicit:
        if (rule.j <= k) {
            throw std::invalid_argument("weak-gradient degree j=" + std::to_string(rule.j) + " must exceed k=" + std::to_string(k));
        }
        return rule.j;
    }
    throw std::invalid_argument("unknown degree mode");
}

inline int weak_gradient_degree(const Cell& cell, int k, const DegreeRule& rule)
{
    return weak_gradient_degree(cell.num_edges(), k, rule);
}

/// Per-cell element configuration: P_k(T) cell space, P_{k-1}(e) edge spaces,
/// [P_j(T)]^2 weak gradients, constant tensor a_T.
struct ElementConfig {
    int k = 1;
    int j = 2;
    Variant variant = Variant::New;
    Matrix2 a = Matrix2::Identity();
};

/// Throws std::invalid_argument unless a is symmetric positive definite.
inline void check_spd(const Matrix2& a, const std::string& where)
{
    const double scale = a.cwiseAbs().maxCoeff();
    if (!(scale > 0.0) || std::abs(a(0, 1) - a(1, 0)) > 1e-14 * scale) throw std::invalid_argument(where + ": coefficient tensor is not symmetric");
    const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    if (!(a(0, 0) > 0.0) || !(det > 0.0)) throw std::invalid_argument(where + ": coefficient tensor is not positive definite");
}

inline void check_config(const ElementConfig& cfg)
{
    if (cfg.k < 1) throw std::invalid_argument("element degree k must be >= 1");
    if (cfg.j <= cfg.k) throw std::invalid_argument("weak-gradient degree j must exceed k");
    check_spd(cfg.a, "element config");
}

/// Local spaces of one cell. Local DOF order: the dim P_k cell coefficients,
/// then k coefficients for each edge in cell-loop order.
struct CellSpace {
    int cell = -1;
    int k = 1;
    int j = 2;
    CellBasis cell_basis;       // P_k(T), orthonormal
    CellBasis gradient_basis;   // P_j(T), orthonormal; vector space is its square
    MatrixXd gradient_gram;     // scalar Gram of gradient_basis
    std::vector<EdgeBasis> edge_bases;  // P_{k-1}(e) per local edge
    std::vector<MatrixXd> edge_grams;
    int quad_degree = 0;

    [[nodiscard]] int cell_dofs() const { return cell_basis.size(); }
    [[nodiscard]] int edge_dofs() const { return k; }
    [[nodiscard]] int num_local() const { return cell_dofs() + static_cast<int>(edge_bases.size()) * edge_dofs(); }
    [[nodiscard]] int edge_offset(int local_edge) const { return cell_dofs() + local_edge * edge_dofs(); }
    [[nodiscard]] int gradient_size() const { return 2 * gradient_basis.size(); }
};

inline CellSpace make_cell_space(const PolygonalMesh& mesh, int c, int k, int j)
{
    if (k < 1) throw std::invalid_argument("make_cell_space: k must be >= 1");
    if (j <= k) throw std::invalid_argument("make_cell_space: j must exceed k");
    CellSpace s;
    s.cell = c;
    s.k = k;
    s.j = j;
    s.quad_degree = 2 * std::max(j, k) + 2;
    s.cell_basis = CellBasis::orthonormal(mesh, c, k);
    s.gradient_basis = CellBasis::orthonormal(mesh, c, j);
    s.gradient_gram = s.gradient_basis.gram(cell_rule(mesh, c, 2 * j));
    for (int e : mesh.cell(c).edges) {
        s.edge_bases.emplace_back(mesh, e, k - 1);
        s.edge_grams.push_back(s.edge_bases.back().gram(edge_rule(mesh, e, 2 * (k - 1))));
    }
    return s;
}

/// Matrix of the weak gradient on one cell: local DOFs -> [P_j]^2 coefficients.
struct LocalWeakGradientOp {
    int cell = -1;
    Variant variant = Variant::New;
    MatrixXd matrix;  // gradient_size x num_local

    [[nodiscard]] VectorXd apply(const VectorXd& dofs) const
    {
        if (dofs.size() != matrix.cols()) {
            throw std::invalid_argument("apply_weak_gradient: expected " + std::to_string(matrix.cols()) + " local dofs, got " +
                                        std::to_string(dofs.size()));
        }
        return matrix * dofs;
    }
};

inline VectorXd apply_weak_gradient(const LocalWeakGradientOp& op, const VectorXd& dofs) { return op.apply(dofs); }

namespace detail {

inline MatrixXd solve_vector_mass(const MatrixXd& scalar_gram, const MatrixXd& rhs, int cell)
{
    Eigen::LLT<MatrixXd> llt(scalar_gram);
    if (llt.info() != Eigen::Success) throw NumericalError("cell " + std::to_string(cell) + ": singular vector mass matrix");
    const Eigen::Index n = scalar_gram.rows();
    MatrixXd out(rhs.rows(), rhs.cols());
    out.topRows(n) = llt.solve(rhs.topRows(n));
    out.bottomRows(n) = llt.solve(rhs.bottomRows(n));
    return out;
}

}  // namespace detail

/// Assembles the right-hand sides of the weak-gradient definition column by
/// column and solves the [P_j]^2 mass system.
inline LocalWeakGradientOp build_weak_gradient_op(const PolygonalMesh& mesh, const CellSpace& space, Variant variant)
{
    const Cell& cl = mesh.cell(space.cell);
    const int nk = space.cell_dofs();
    const int nj = space.gradient_basis.size();
    const int nq = 2 * nj;
    const int nb = space.edge_dofs();
    MatrixXd rhs = MatrixXd::Zero(nq, space.num_local());

    const QuadratureRule rule = cell_rule(mesh, space.cell, space.quad_degree);
    VectorXd phi, p;
    Gradients dphi, dp;
    for (std::size_t q = 0; q < rule.size(); ++q) {
        const double w = rule.weights[q];
        space.cell_basis.eval(rule.points[q], phi, dphi);
        space.gradient_basis.eval(rule.points[q], p, dp);
        if (variant == Variant::New) {
            // (grad phi_i, q_l)
            rhs.block(0, 0, nj, nk).noalias() += w * p * dphi.col(0).transpose();
            rhs.block(nj, 0, nj, nk).noalias() += w * p * dphi.col(1).transpose();
        } else {
            // -(phi_i, div q_l)
            rhs.block(0, 0, nj, nk).noalias() -= w * dp.col(0) * phi.transpose();
            rhs.block(nj, 0, nj, nk).noalias() -= w * dp.col(1) * phi.transpose();
        }
    }

    for (int le = 0; le < cl.num_edges(); ++le) {
        const int e = cl.edges[static_cast<std::size_t>(le)];
        const Vector2 n = mesh.outward_normal(space.cell, le);
        const EdgeBasis& eb = space.edge_bases[static_cast<std::size_t>(le)];
        const EdgeQuadrature er = edge_rule(mesh, e, space.quad_degree);
        MatrixXd psi_q = MatrixXd::Zero(nb, nq);   // <psi_m, q_l . n>
        MatrixXd psi_phi = MatrixXd::Zero(nb, nk); // <psi_m, phi_i>
        for (std::size_t q = 0; q < er.size(); ++q) {
            const VectorXd psi = eb.values_at_param(er.params[q]);
            const VectorXd pv = space.gradient_basis.values(er.points[q]);
            const double w = er.weights[q];
            psi_q.leftCols(nj).noalias() += (w * n.x()) * psi * pv.transpose();
            psi_q.rightCols(nj).noalias() += (w * n.y()) * psi * pv.transpose();
            if (variant == Variant::New) psi_phi.noalias() += w * psi * space.cell_basis.values(er.points[q]).transpose();
        }
        rhs.block(0, space.edge_offset(le), nq, nb) += psi_q.transpose();
        if (variant == Variant::New) {
            // - <Q_b phi_i, q.n>: Q_b phi_i has coefficients G_e^{-1} <psi, phi_i>
            const MatrixXd qb_phi = detail::solve_gram(space.edge_grams[static_cast<std::size_t>(le)], psi_phi, "edge projection");
            rhs.leftCols(nk).noalias() -= psi_q.transpose() * qb_phi;
        }
    }

    LocalWeakGradientOp op;
    op.cell = space.cell;
    op.variant = variant;
    op.matrix = detail::solve_vector_mass(space.gradient_gram, rhs, space.cell);
    return op;
}

inline LocalWeakGradientOp build_weak_gradient_op(const PolygonalMesh& mesh, int c, const ElementConfig& cfg)
{
    check_config(cfg);
    return build_weak_gradient_op(mesh, make_cell_space(mesh, c, cfg.k, cfg.j), cfg.variant);
}

/// Weak gradient of a smooth function taken with exact traces (v0 = v_b = phi).
/// Both variants reduce to the L2 projection of grad phi onto [P_j]^2.
inline VectorXd weak_gradient_of_function(const PolygonalMesh& mesh, const CellSpace& space, Variant variant,
                                          const ScalarField& phi, const VectorField& grad_phi, int quad_degree)
{
    const Cell& cl = mesh.cell(space.cell);
    const int nj = space.gradient_basis.size();
    VectorXd rhs = VectorXd::Zero(2 * nj);
    const QuadratureRule rule = cell_rule(mesh, space.cell, quad_degree);
    VectorXd p;
    Gradients dp;
    for (std::size_t q = 0; q < rule.size(); ++q) {
        const double w = rule.weights[q];
        space.gradient_basis.eval(rule.points[q], p, dp);
        if (variant == Variant::New) {
            const Vector2 g = grad_phi(rule.points[q]);
            rhs.head(nj) += w * g.x() * p;
            rhs.tail(nj) += w * g.y() * p;
        } else {
            const double v = phi(rule.points[q]);
            rhs.head(nj) -= w * v * dp.col(0);
            rhs.tail(nj) -= w * v * dp.col(1);
        }
    }
    if (variant == Variant::Legacy) {
        for (int le = 0; le < cl.num_edges(); ++le) {
            const Vector2 n = mesh.outward_normal(space.cell, le);
            const EdgeQuadrature er = edge_rule(mesh, cl.edges[static_cast<std::size_t>(le)], quad_degree);
            for (std::size_t q = 0; q < er.size(); ++q) {
                const VectorXd pv = space.gradient_basis.values(er.points[q]);
                const double v = er.weights[q] * phi(er.points[q]);
                rhs.head(nj) += v * n.x() * pv;
                rhs.tail(nj) += v * n.y() * pv;
            }
        }
    }
    return detail::solve_vector_mass(space.gradient_gram, rhs, space.cell);
}

/// Element stiffness K_T = G^T M_a G, M_a the a-weighted [P_j]^2 mass matrix.
struct LocalStiffness {
    int cell = -1;
    MatrixXd matrix;
};

inline LocalStiffness local_stiffness(const CellSpace& space, const LocalWeakGradientOp& op, const Matrix2& a)
{
    check_spd(a, "cell " + std::to_string(space.cell));
    const MatrixXd mass = weighted_vector_mass(space.gradient_gram, a);
    LocalStiffness k;
    k.cell = space.cell;
    k.matrix = op.matrix.transpose() * mass * op.matrix;
    k.matrix = 0.5 * (k.matrix + k.matrix.transpose()).eval();
    return k;
}

inline LocalStiffness local_stiffness(const PolygonalMesh& mesh, int c, const ElementConfig& cfg)
{
    check_config(cfg);
    const CellSpace space = make_cell_space(mesh, c, cfg.k, cfg.j);
    return local_stiffness(space, build_weak_gradient_op(mesh, space, cfg.variant), cfg.a);
}

/// Local DOF vector of the constant weak function {1, 1}.
inline VectorXd local_constant(const PolygonalMesh& mesh, const CellSpace& space)
{
    VectorXd v = VectorXd::Zero(space.num_local());
    v.head(space.cell_dofs()) = project_cell(space.cell_basis, cell_rule(mesh, space.cell, 2 * space.k), [](const Point&) { return 1.0; });
    for (int le = 0; le < static_cast<int>(space.edge_bases.size()); ++le) v(space.edge_offset(le)) = 1.0;
    return v;
}

}  // namespace sfwg
