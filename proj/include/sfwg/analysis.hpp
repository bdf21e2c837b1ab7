#pragma once

#include "sfwg/assembly.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace sfwg {

namespace detail {

inline const ExactSolution& require_exact(const EllipticProblem& problem)
{
    if (!problem.exact) throw std::invalid_argument("problem '" + problem.name + "' has no exact solution");
    return *problem.exact;
}

inline VectorXd cell_block(const Discretization& disc, const VectorXd& v, int c)
{
    return v.segment(disc.dofs().cell_offset(c), disc.dofs().cell_block);
}

inline VectorXd local_dofs(const Discretization& disc, const VectorXd& v, int c) { return gather(disc.local_to_global(c), v); }

inline void check_length(const Discretization& disc, const VectorXd& v)
{
    if (v.size() != disc.dofs().total()) {
        throw std::invalid_argument("expected " + std::to_string(disc.dofs().total()) + " global dofs, got " + std::to_string(v.size()));
    }
}

}  // namespace detail

/// Q_h u = {Q_0 u, Q_b u} as a global DOF vector.
inline VectorXd interpolate(const Discretization& disc, const ScalarField& u)
{
    const PolygonalMesh& mesh = disc.mesh();
    const DofMap& dofs = disc.dofs();
    const int qd = oversampled_degree(dofs.k);
    VectorXd v(dofs.total());
    parallel_for(static_cast<std::size_t>(mesh.num_cells()), [&](std::size_t i) {
        const int c = static_cast<int>(i);
        v.segment(dofs.cell_offset(c), dofs.cell_block) =
            project_cell(disc.space(c).cell_basis, cell_rule(mesh, c, qd), u);
    });
    parallel_for(static_cast<std::size_t>(mesh.num_edges()), [&](std::size_t i) {
        const int e = static_cast<int>(i);
        v.segment(dofs.edge_offset(e), dofs.edge_block) = project_edge(mesh, e, dofs.k - 1, u, qd);
    });
    return v;
}

/// |||v||| = sqrt(sum_T (a grad_w v, grad_w v)_T), with the discretization's operators.
inline double energy_norm(const Discretization& disc, const VectorXd& v)
{
    detail::check_length(disc, v);
    std::vector<double> parts(static_cast<std::size_t>(disc.mesh().num_cells()));
    parallel_for(parts.size(), [&](std::size_t i) {
        const VectorXd local = detail::local_dofs(disc, v, static_cast<int>(i));
        parts[i] = local.dot(disc.stiffness(static_cast<int>(i)) * local);
    });
    double sum = 0.0;
    for (double p : parts) sum += std::max(p, 0.0);
    return std::sqrt(sum);
}

/// |||Q_h u - u_h|||.
inline double energy_error(const Discretization& disc, const VectorXd& uh, const EllipticProblem& problem)
{
    detail::check_length(disc, uh);
    return energy_norm(disc, interpolate(disc, detail::require_exact(problem).value) - uh);
}

/// L2 norm of the cell components sum_T ||v_0||_T.
inline double cell_l2_norm(const Discretization& disc, const VectorXd& v)
{
    detail::check_length(disc, v);
    const PolygonalMesh& mesh = disc.mesh();
    std::vector<double> parts(static_cast<std::size_t>(mesh.num_cells()));
    parallel_for(parts.size(), [&](std::size_t i) {
        const int c = static_cast<int>(i);
        const CellSpace& s = disc.space(c);
        const VectorXd v0 = detail::cell_block(disc, v, c);
        parts[i] = v0.dot(s.cell_basis.gram(cell_rule(mesh, c, 2 * s.k)) * v0);
    });
    double sum = 0.0;
    for (double p : parts) sum += std::max(p, 0.0);
    return std::sqrt(sum);
}

/// ||Q_0 u - u_0||.
inline double l2_error(const Discretization& disc, const VectorXd& uh, const EllipticProblem& problem)
{
    detail::check_length(disc, uh);
    return cell_l2_norm(disc, interpolate(disc, detail::require_exact(problem).value) - uh);
}

/// |||u - u_h|||, where grad_w u is taken with exact traces (the projection of
/// grad u onto [P_j]^2).
inline double true_energy_error(const Discretization& disc, const VectorXd& uh, const EllipticProblem& problem)
{
    detail::check_length(disc, uh);
    const ExactSolution& u = detail::require_exact(problem);
    const PolygonalMesh& mesh = disc.mesh();
    std::vector<double> parts(static_cast<std::size_t>(mesh.num_cells()));
    parallel_for(parts.size(), [&](std::size_t i) {
        const int c = static_cast<int>(i);
        const CellSpace& s = disc.space(c);
        const VectorXd gu = weak_gradient_of_function(mesh, s, disc.config().variant, u.value, u.gradient,
                                                      2 * s.j + oversampled_degree(s.k));
        const VectorXd diff = gu - disc.op(c).apply(detail::local_dofs(disc, uh, c));
        parts[i] = diff.dot(weighted_vector_mass(s.gradient_gram, disc.coefficient(c)) * diff);
    });
    double sum = 0.0;
    for (double p : parts) sum += std::max(p, 0.0);
    return std::sqrt(sum);
}

/// ||v||_{1,h} = sqrt(sum_T ||grad v_0||_T^2 + h_T^{-1} ||Q_b(v_0 - v_b)||_{dT}^2).
inline double discrete_h1_norm(const Discretization& disc, const VectorXd& v)
{
    detail::check_length(disc, v);
    const PolygonalMesh& mesh = disc.mesh();
    const DofMap& dofs = disc.dofs();
    std::vector<double> parts(static_cast<std::size_t>(mesh.num_cells()));
    parallel_for(parts.size(), [&](std::size_t i) {
        const int c = static_cast<int>(i);
        const Cell& cl = mesh.cell(c);
        const CellSpace& s = disc.space(c);
        const VectorXd v0 = detail::cell_block(disc, v, c);
        double sum = 0.0;
        const QuadratureRule rule = cell_rule(mesh, c, 2 * s.k);
        VectorXd phi;
        Gradients dphi;
        for (std::size_t q = 0; q < rule.size(); ++q) {
            s.cell_basis.eval(rule.points[q], phi, dphi);
            sum += rule.weights[q] * (dphi.transpose() * v0).squaredNorm();
        }
        double jump = 0.0;
        for (int le = 0; le < cl.num_edges(); ++le) {
            const int e = cl.edges[static_cast<std::size_t>(le)];
            const EdgeBasis& eb = s.edge_bases[static_cast<std::size_t>(le)];
            const EdgeQuadrature er = edge_rule(mesh, e, 2 * s.k);
            VectorXd psi_v0 = VectorXd::Zero(eb.size());
            for (std::size_t q = 0; q < er.size(); ++q) {
                psi_v0 += er.weights[q] * s.cell_basis.values(er.points[q]).dot(v0) * eb.values_at_param(er.params[q]);
            }
            const MatrixXd& gram = s.edge_grams[static_cast<std::size_t>(le)];
            const VectorXd d = detail::solve_gram(gram, psi_v0, "discrete_h1_norm") - v.segment(dofs.edge_offset(e), dofs.edge_block);
            jump += d.dot(gram * d);
        }
        parts[i] = sum + jump / cl.diameter;
    });
    double total = 0.0;
    for (double p : parts) total += std::max(p, 0.0);
    return std::sqrt(total);
}

/// Random member of V_h^0: uniform coefficients in [-1, 1], boundary DOFs zero.
inline VectorXd random_interior_function(const Discretization& disc, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    VectorXd v(disc.dofs().total());
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = dist(rng);
    for (int d : disc.dofs().boundary_dofs) v(d) = 0.0;
    return v;
}

struct NormRatioStats {
    int level = 0;
    double min_ratio = 0.0;
    double max_ratio = 0.0;
};

struct NormEquivalenceReport {
    std::vector<NormRatioStats> levels;
    double min_ratio = std::numeric_limits<double>::infinity();
    double max_ratio = 0.0;

    /// Largest level-to-level variation of the extreme ratios.
    [[nodiscard]] double drift() const
    {
        double lo_min = std::numeric_limits<double>::infinity(), lo_max = 0.0, hi_min = lo_min, hi_max = 0.0;
        for (const auto& l : levels) {
            lo_min = std::min(lo_min, l.min_ratio);
            lo_max = std::max(lo_max, l.min_ratio);
            hi_min = std::min(hi_min, l.max_ratio);
            hi_max = std::max(hi_max, l.max_ratio);
        }
        return levels.empty() ? 1.0 : std::max(lo_max / lo_min, hi_max / hi_min);
    }
};

/// Samples |||v||| / ||v||_{1,h} (a = I) for random v in V_h^0 on one mesh.
inline NormRatioStats norm_equivalence_probe(const PolygonalMesh& mesh, const DiscretizationConfig& cfg, int samples,
                                             std::uint64_t seed = 1)
{
    if (samples < 1) throw std::invalid_argument("norm_equivalence_probe: samples must be >= 1");
    const Discretization disc(mesh, cfg, [](const Point&) { return Matrix2::Identity(); });
    NormRatioStats s;
    s.min_ratio = std::numeric_limits<double>::infinity();
    for (int i = 0; i < samples; ++i) {
        const VectorXd v = random_interior_function(disc, seed + static_cast<std::uint64_t>(i));
        const double h1 = discrete_h1_norm(disc, v);
        if (!(h1 > 0.0)) continue;
        const double r = energy_norm(disc, v) / h1;
        s.min_ratio = std::min(s.min_ratio, r);
        s.max_ratio = std::max(s.max_ratio, r);
    }
    return s;
}

inline NormEquivalenceReport norm_equivalence_probe(MeshFamily family, const std::vector<int>& levels, const DiscretizationConfig& cfg,
                                                    int samples, std::uint64_t seed = 1)
{
    NormEquivalenceReport report;
    for (int level : levels) {
        NormRatioStats s = norm_equivalence_probe(build_level(family, level), cfg, samples, seed);
        s.level = level;
        report.min_ratio = std::min(report.min_ratio, s.min_ratio);
        report.max_ratio = std::max(report.max_ratio, s.max_ratio);
        report.levels.push_back(s);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Convergence studies

struct ErrorReport {
    int level = 0;
    int n = 0;  // cells per side
    double h = 0.0;
    int ndof = 0;
    int j_min = 0;
    int j_max = 0;
    double energy_error = 0.0;
    double l2_error = 0.0;
    std::optional<double> true_energy_error;
    double discrete_h1_error = 0.0;
    double seconds = 0.0;
    std::optional<double> energy_rate;
    std::optional<double> l2_rate;
};

struct StudyOptions {
    MeshFamily family = MeshFamily::Triangular;
    DiscretizationConfig discretization;
    std::vector<int> levels;
    SolverOptions solver;
    bool true_energy = false;
};

struct StudyReport {
    std::string problem;
    StudyOptions options;
    std::vector<ErrorReport> rows;
    bool complete = true;
    std::string failure;  // set when a level failed; rows hold the levels before it
};

/// log2(previous / current), defined only when h halves (within 5%) and both errors are positive.
inline std::optional<double> convergence_rate(double h_prev, double e_prev, double h, double e)
{
    const double ratio = h / h_prev;
    if (std::abs(ratio - 0.5) > 0.025) return std::nullopt;
    if (!(e_prev > 0.0) || !(e > 0.0)) return std::nullopt;
    return std::log2(e_prev / e);
}

inline void fill_rates(std::vector<ErrorReport>& rows)
{
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const ErrorReport& p = rows[i - 1];
        ErrorReport& r = rows[i];
        r.energy_rate = convergence_rate(p.h, p.energy_error, r.h, r.energy_error);
        r.l2_rate = convergence_rate(p.h, p.l2_error, r.h, r.l2_error);
    }
}

/// Solves and measures one level.
inline ErrorReport run_level(const EllipticProblem& problem, const PolygonalMesh& mesh, const StudyOptions& opt)
{
    const auto t0 = std::chrono::steady_clock::now();
    const Discretization disc(mesh, opt.discretization, problem.coefficient);
    const VectorXd uh = solve_problem(disc, problem, opt.solver);
    ErrorReport r;
    r.h = mesh.h();
    r.ndof = disc.dofs().total();
    r.j_min = std::numeric_limits<int>::max();
    for (int c = 0; c < mesh.num_cells(); ++c) {
        r.j_min = std::min(r.j_min, disc.space(c).j);
        r.j_max = std::max(r.j_max, disc.space(c).j);
    }
    const VectorXd err = interpolate(disc, detail::require_exact(problem).value) - uh;
    r.energy_error = energy_norm(disc, err);
    r.l2_error = cell_l2_norm(disc, err);
    r.discrete_h1_error = discrete_h1_norm(disc, err);
    if (opt.true_energy) r.true_energy_error = true_energy_error(disc, uh, problem);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

/// Runs the levels in order. A failing level stops the study; the report keeps
/// the finished levels and records the failure.
inline StudyReport run_study(const EllipticProblem& problem, const StudyOptions& opt)
{
    detail::require_exact(problem);
    if (opt.levels.empty()) throw std::invalid_argument("run_study: no levels");
    for (std::size_t i = 1; i < opt.levels.size(); ++i) {
        if (opt.levels[i] <= opt.levels[i - 1]) throw std::invalid_argument("run_study: levels must be increasing");
    }
    StudyReport report;
    report.problem = problem.name;
    report.options = opt;
    for (int level : opt.levels) {
        try {
            const PolygonalMesh mesh = build_level(opt.family, level);
            ErrorReport r = run_level(problem, mesh, opt);
            r.level = level;
            r.n = cells_per_side(level);
            report.rows.push_back(r);
        } catch (const std::exception& ex) {
            report.complete = false;
            report.failure = "level " + std::to_string(level) + ": " + ex.what();
            break;
        }
    }
    fill_rates(report.rows);
    return report;
}

// ---------------------------------------------------------------------------
// Patch tests

struct PatchCase {
    std::string name;
    double l2_error = 0.0;
    double energy_error = 0.0;
    bool passed = false;
};

struct PatchReport {
    std::vector<PatchCase> cases;
    [[nodiscard]] bool passed() const
    {
        for (const auto& c : cases)
            if (!c.passed) return false;
        return !cases.empty();
    }
};

inline constexpr double patch_l2_tol = 1e-9;
inline constexpr double patch_energy_tol = 1e-8;

/// Solves with exact solution u = x^a y^b and checks reproduction.
inline PatchCase patch_case(const PolygonalMesh& mesh, const DiscretizationConfig& cfg, int a, int b,
                            const SolverOptions& solver = {})
{
    const EllipticProblem problem = manufactured(monomial_name(a, b), monomial_solution(a, b));
    const Discretization disc(mesh, cfg, problem.coefficient);
    const VectorXd uh = solve_problem(disc, problem, solver);
    PatchCase pc;
    pc.name = problem.name;
    pc.l2_error = l2_error(disc, uh, problem);
    pc.energy_error = energy_error(disc, uh, problem);
    pc.passed = pc.l2_error <= patch_l2_tol && pc.energy_error <= patch_energy_tol;
    return pc;
}

/// Every monomial of P_k must be reproduced to solver precision.
inline PatchReport patch_test(const PolygonalMesh& mesh, const DiscretizationConfig& cfg, const SolverOptions& solver = {})
{
    PatchReport report;
    for (const auto& [a, b] : monomial_exponents(cfg.k)) report.cases.push_back(patch_case(mesh, cfg, a, b, solver));
    return report;
}

// ---------------------------------------------------------------------------
// Output

/// Scientific notation with a leading "0." mantissa: 0.3871E-01.
inline std::string table_sci(double x, int digits = 4)
{
    if (!std::isfinite(x)) return "nan";
    if (x == 0.0) return "0." + std::string(static_cast<std::size_t>(digits), '0') + "E+00";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*E", digits - 1, std::abs(x));
    // d.dddE±xx -> 0.ddddE±(xx+1)
    const std::string s(buf);
    const auto epos = s.find('E');
    const int exponent = std::stoi(s.substr(epos + 1)) + 1;
    std::string mant = s.substr(0, 1) + s.substr(2, epos - 2);
    std::snprintf(buf, sizeof buf, "%s0.%sE%c%02d", x < 0 ? "-" : "", mant.c_str(), exponent < 0 ? '-' : '+', std::abs(exponent));
    return buf;
}

inline std::string format_rate(const std::optional<double>& r)
{
    if (!r) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", *r == 0.0 ? 0.0 : *r);
    return buf == std::string("-0.00") ? "0.00" : buf;
}

inline std::string format_j(const ErrorReport& r)
{
    return r.j_min == r.j_max ? std::to_string(r.j_min) : std::to_string(r.j_min) + "-" + std::to_string(r.j_max);
}

/// One-line configuration echo, sufficient to rerun the study.
inline std::string config_line(const StudyReport& report)
{
    const StudyOptions& o = report.options;
    std::string levels;
    for (std::size_t i = 0; i < o.levels.size(); ++i) levels += (i ? "," : "") + std::to_string(o.levels[i]);
    char tol[32];
    std::snprintf(tol, sizeof tol, "%g", o.solver.tol);
    return "problem=\"" + report.problem + "\" family=" + to_string(o.family) + " " + describe(o.discretization) +
           " levels=" + levels + " solver=" + to_string(o.solver.method) + (o.solver.method == SolverMethod::CG ? std::string(" tol=") + tol : "") +
           (o.solver.condense ? " condense=on" : "");
}

/// CSV with a leading "# config" comment. The seconds column stays empty unless
/// `timings` is set, so that repeated runs are byte-identical.
inline std::string to_csv(const StudyReport& report, bool timings = false)
{
    std::ostringstream out;
    out << "# " << config_line(report) << "\n";
    if (!report.complete) out << "# incomplete: " << report.failure << "\n";
    out << "family,variant,k,j,level,h,ndof,energy_err,energy_rate,l2_err,l2_rate,seconds";
    const bool te = report.options.true_energy;
    if (te) out << ",true_energy_err";
    out << "\n";
    char buf[64];
    const auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.10e", v);
        return std::string(buf);
    };
    const auto rate = [&](const std::optional<double>& r) {
        if (!r) return std::string();
        std::snprintf(buf, sizeof buf, "%.6f", *r);
        return std::string(buf);
    };
    for (const auto& r : report.rows) {
        out << to_string(report.options.family) << ',' << to_string(report.options.discretization.variant) << ','
            << report.options.discretization.k << ',' << format_j(r) << ',' << r.level << ',' << num(r.h) << ',' << r.ndof << ','
            << num(r.energy_error) << ',' << rate(r.energy_rate) << ',' << num(r.l2_error) << ',' << rate(r.l2_rate) << ',';
        if (timings) {
            std::snprintf(buf, sizeof buf, "%.3f", r.seconds);
            out << buf;
        }
        if (te) out << ',' << (r.true_energy_error ? num(*r.true_energy_error) : std::string());
        out << "\n";
    }
    return out.str();
}

/// Markdown table: k, level, n, j, ndof, then each error with its rate.
inline std::string to_markdown(const StudyReport& report, bool timings = false)
{
    std::ostringstream out;
    const bool te = report.options.true_energy;
    out << "| k | level | n | j | ndof | \\|\\|\\|Q_h u - u_h\\|\\|\\| | Rate | \\|Q_0 u - u_0\\| | Rate |";
    if (te) out << " \\|\\|\\|u - u_h\\|\\|\\| |";
    if (timings) out << " seconds |";
    out << "\n|---|---|---|---|---|---|---|---|---|";
    if (te) out << "---|";
    if (timings) out << "---|";
    out << "\n";
    for (const auto& r : report.rows) {
        out << "| " << report.options.discretization.k << " | " << r.level << " | " << r.n << " | " << format_j(r) << " | " << r.ndof << " | "
            << table_sci(r.energy_error) << " | " << format_rate(r.energy_rate) << " | " << table_sci(r.l2_error) << " | "
            << format_rate(r.l2_rate) << " |";
        if (te) out << " " << (r.true_energy_error ? table_sci(*r.true_energy_error) : std::string()) << " |";
        if (timings) {
            char buf[32];
            std::snprintf(buf, sizeof buf, " %.3f |", r.seconds);
            out << buf;
        }
        out << "\n";
    }
    if (!report.complete) out << "\nincomplete: " << report.failure << "\n";
    return out.str();
}

}  // namespace sfwg
