// sfwg: convergence studies, mesh export and a self-check suite for the
// stabilizer-free weak Galerkin discretization.

#include "sfwg/sfwg.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace {

using namespace sfwg;

constexpr int exit_ok = 0;
constexpr int exit_numerical = 1;
constexpr int exit_usage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

MeshFamily family_or_throw(const std::string& s)
{
    const auto f = parse_mesh_family(s);
    if (!f) throw UsageError("unknown mesh family '" + s + "' (triangular, crisscross, rectangular, polygonal, polygonal-dual)");
    return *f;
}

Variant variant_or_throw(const std::string& s)
{
    const auto v = parse_variant(s);
    if (!v) throw UsageError("unknown variant '" + s + "' (new, legacy)");
    return *v;
}

/// "3..5" or "3,4,6" or "4".
std::vector<int> parse_levels(const std::string& s)
{
    std::vector<int> out;
    try {
        if (const auto dots = s.find(".."); dots != std::string::npos) {
            const int a = std::stoi(s.substr(0, dots));
            const int b = std::stoi(s.substr(dots + 2));
            for (int l = a; l <= b; ++l) out.push_back(l);
        } else {
            std::stringstream in(s);
            std::string item;
            while (std::getline(in, item, ',')) out.push_back(std::stoi(item));
        }
    } catch (const std::exception&) {
        throw UsageError("bad level list '" + s + "' (expected a..b or a,b,c)");
    }
    if (out.empty()) throw UsageError("empty level list '" + s + "'");
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i] < 0 || out[i] > 14) throw UsageError("level " + std::to_string(out[i]) + " out of range [0, 14]");
        if (i > 0 && out[i] <= out[i - 1]) throw UsageError("levels must be increasing: '" + s + "'");
    }
    return out;
}

DegreeRule parse_degree_rule(const std::string& mode, int j)
{
    if (j > 0) {
        if (!mode.empty()) throw UsageError("--j and --j-mode are mutually exclusive");
        return {DegreeMode::Explicit, j};
    }
    if (mode.empty() || mode == "table-default") return {DegreeMode::TableDefault, 0};
    if (mode == "analysis-safe") return {DegreeMode::AnalysisSafe, 0};
    throw UsageError("unknown --j-mode '" + mode + "' (table-default, analysis-safe)");
}

/// "a11,a12,a22" (symmetric tensor).
Matrix2 parse_coefficient(const std::string& s)
{
    std::vector<double> v;
    std::stringstream in(s);
    std::string item;
    try {
        while (std::getline(in, item, ',')) v.push_back(std::stod(item));
    } catch (const std::exception&) {
        throw UsageError("bad --coef '" + s + "'");
    }
    if (v.size() != 3) throw UsageError("--coef expects a11,a12,a22");
    Matrix2 a;
    a << v[0], v[1], v[1], v[2];
    try {
        check_spd(a, "--coef");
    } catch (const std::invalid_argument& ex) {
        throw UsageError(ex.what());
    }
    return a;
}

MeshFamily default_family(int example)
{
    switch (example) {
    case 1: return MeshFamily::Triangular;
    case 2: return MeshFamily::Crisscross;
    case 3: return MeshFamily::Rectangular;
    default: return MeshFamily::Polygonal;
    }
}

void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << text;
}

/// Summary of the weak-gradient degree chosen per cell size.
std::string degree_summary(const PolygonalMesh& mesh, int k, const DegreeRule& rule)
{
    std::map<int, std::set<int>> by_j;  // j -> edge counts
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const int n = mesh.cell(c).num_edges();
        by_j[weak_gradient_degree(n, k, rule)].insert(n);
    }
    std::string s;
    for (const auto& [j, sizes] : by_j) {
        if (!s.empty()) s += "; ";
        s += "j=" + std::to_string(j) + " on ";
        bool first = true;
        for (int n : sizes) {
            s += (first ? "" : ",") + std::to_string(n);
            first = false;
        }
        s += "-gons";
    }
    return s;
}

// ---------------------------------------------------------------------------
// study

struct StudyArgs {
    int example = 1;
    std::string family;
    int k = 1;
    int j = 0;
    std::string j_mode;
    std::string variant = "new";
    std::string levels;
    std::string solver = "direct";
    double tol = 1e-13;
    std::string format = "csv";
    std::string output;
    std::string coef;
    bool timings = false;
    bool condense = false;
    bool true_energy = false;
    std::string export_matrix;
    std::string export_solution;
};

int cmd_study(const StudyArgs& a)
{
    if (a.example < 1 || a.example > 4) throw UsageError("--example must be 1-4");
    if (a.k < 1 || a.k > 6) throw UsageError("--k must be in 1..6");
    if (a.format != "csv" && a.format != "md") throw UsageError("--format must be csv or md");
    if (!(a.tol > 0.0)) throw UsageError("--tol must be positive");

    StudyOptions opt;
    opt.family = a.family.empty() ? default_family(a.example) : family_or_throw(a.family);
    opt.discretization.k = a.k;
    opt.discretization.degree = parse_degree_rule(a.j_mode, a.j);
    if (opt.discretization.degree.mode == DegreeMode::Explicit && a.j <= a.k) throw UsageError("--j must exceed --k");
    opt.discretization.variant = variant_or_throw(a.variant);
    const bool polygonal = opt.family == MeshFamily::Polygonal;
    opt.levels = parse_levels(a.levels.empty() ? (polygonal ? "2..4" : "3..5") : a.levels);
    if (polygonal && opt.levels.front() < 1) throw UsageError("the polygonal family starts at level 1");
    if (a.solver == "direct") opt.solver.method = SolverMethod::Direct;
    else if (a.solver == "cg") opt.solver.method = SolverMethod::CG;
    else throw UsageError("--solver must be direct or cg");
    opt.solver.tol = a.tol;
    opt.solver.condense = a.condense;
    opt.true_energy = a.true_energy;

    EllipticProblem problem = a.coef.empty() ? example_problem(a.example) : example_problem(a.example, parse_coefficient(a.coef));

    const StudyReport report = run_study(problem, opt);

    std::cout << "# " << config_line(report) << "\n";
    std::cout << "# " << degree_summary(build_level(opt.family, opt.levels.front()), opt.discretization.k, opt.discretization.degree)
              << "\n\n";
    std::cout << to_markdown(report, a.timings);

    if (!a.output.empty()) write_text(a.output, a.format == "csv" ? to_csv(report, a.timings) : to_markdown(report, a.timings));

    if (!a.export_matrix.empty() || !a.export_solution.empty()) {
        if (!report.complete) throw NumericalError(report.failure);
        const PolygonalMesh mesh = build_level(opt.family, opt.levels.back());
        const Discretization disc(mesh, opt.discretization, problem.coefficient);
        const LinearSystem sys = assemble(disc, problem);
        if (!a.export_matrix.empty()) write_matrix_coo(sys.matrix, a.export_matrix);
        if (!a.export_solution.empty()) write_solution_csv(solve(apply_dirichlet(sys, disc, problem), opt.solver), a.export_solution);
    }

    if (!report.complete) {
        std::cerr << "sfwg study: " << report.failure << "\n";
        if (opt.discretization.degree.mode == DegreeMode::TableDefault)
            std::cerr << "hint: a singular system usually means j is too small for the largest cells; try --j-mode analysis-safe\n";
        return exit_numerical;
    }
    return exit_ok;
}

// ---------------------------------------------------------------------------
// mesh

struct MeshArgs {
    std::string family = "triangular";
    int n = 0;
    int level = -1;
    std::string output;
    bool stats = false;
};

int cmd_mesh(const MeshArgs& a)
{
    const MeshFamily family = family_or_throw(a.family);
    if ((a.n > 0) == (a.level >= 0)) throw UsageError("give exactly one of --n and --level");
    if (a.level > 14) throw UsageError("--level must be in 0..14");
    const int n = a.n > 0 ? a.n : cells_per_side(a.level);
    if (family == MeshFamily::Polygonal && n % 2 != 0) throw UsageError("the polygonal family needs an even --n (or --level >= 1)");
    const PolygonalMesh mesh = build_mesh(family, n);

    if (!a.output.empty()) write_mesh(mesh, a.output);
    if (a.stats) {
        const MeshDiagnostics d = validate(mesh);
        std::cout << "family " << to_string(family) << ", n " << n << "\n" << format_diagnostics(d);
        if (!d.ok()) return exit_numerical;
    } else if (a.output.empty()) {
        std::cout << mesh_to_json(mesh);
    }
    return exit_ok;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
    std::vector<int> ks;
    std::vector<std::string> families;
    std::string variant = "new";
    bool expect_gap = false;
};

struct Checklist {
    int failures = 0;
    void report(bool ok, const std::string& name, const std::string& detail)
    {
        std::cout << (ok ? "PASS " : "FAIL ") << name << (detail.empty() ? "" : "  (" + detail + ")") << "\n";
        if (!ok) ++failures;
    }
};

std::string sci(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", x);
    return buf;
}

PolygonalMesh verify_mesh(MeshFamily f)
{
    switch (f) {
    case MeshFamily::Triangular: return build_uniform_triangular(4);
    case MeshFamily::Crisscross: return build_crisscross(2);
    case MeshFamily::Rectangular: return build_rectangular(4);
    default: return build_mesh(f, 2);
    }
}

/// Largest per-cell deviation between grad_w{phi, Q_b phi} and the projection of grad phi.
double polynomial_gradient_deviation(const PolygonalMesh& mesh, const Discretization& disc, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    const int k = disc.config().k;
    const auto exps = monomial_exponents(k);
    std::vector<double> coef(exps.size());
    for (double& c : coef) c = dist(rng);
    const ScalarField phi = [&](const Point& p) {
        double s = 0.0;
        for (std::size_t i = 0; i < exps.size(); ++i) s += coef[i] * std::pow(p.x(), exps[i].first) * std::pow(p.y(), exps[i].second);
        return s;
    };
    const VectorField grad = [&](const Point& p) {
        Vector2 g = Vector2::Zero();
        for (std::size_t i = 0; i < exps.size(); ++i) {
            const auto [a, b] = exps[i];
            if (a > 0) g.x() += coef[i] * a * std::pow(p.x(), a - 1) * std::pow(p.y(), b);
            if (b > 0) g.y() += coef[i] * b * std::pow(p.x(), a) * std::pow(p.y(), b - 1);
        }
        return g;
    };
    const VectorXd qh = interpolate(disc, phi);
    double worst = 0.0;
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const CellSpace& s = disc.space(c);
        const VectorXd gw = disc.op(c).apply(gather(disc.local_to_global(c), qh));
        const VectorXd ref = weak_gradient_of_function(mesh, s, Variant::New, phi, grad, s.quad_degree);
        worst = std::max(worst, (gw - ref).cwiseAbs().maxCoeff());
    }
    return worst;
}

void verify_one(Checklist& out, MeshFamily family, int k, Variant variant, bool expect_gap)
{
    const PolygonalMesh mesh = verify_mesh(family);
    const std::string tag = to_string(family) + " k=" + std::to_string(k) + " " + to_string(variant);
    DiscretizationConfig cfg;
    cfg.k = k;
    cfg.variant = variant;
    const auto identity = [](const Point&) { return Matrix2::Identity(); };
    const Discretization disc(mesh, cfg, identity);
    const EllipticProblem problem = example_problem(1);
    const LinearSystem sys = assemble(disc, problem);

    const MatrixXd a = MatrixXd(sys.matrix);
    const double asym = (a - a.transpose()).norm() / a.norm();
    out.report(asym <= 1e-12, "symmetry [" + tag + "]", "relative " + sci(asym));

    VectorXd ones = VectorXd::Zero(disc.dofs().total());
    for (int c = 0; c < mesh.num_cells(); ++c) {
        const VectorXd loc = local_constant(mesh, disc.space(c));
        ones.segment(disc.dofs().cell_offset(c), disc.dofs().cell_block) = loc.head(disc.dofs().cell_block);
    }
    for (int e = 0; e < mesh.num_edges(); ++e) ones(disc.dofs().edge_offset(e)) = 1.0;
    const double kernel_residual = (sys.matrix * ones).norm() / a.norm();
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (a + a.transpose()), Eigen::EigenvaluesOnly);
    const double lambda_max = eig.eigenvalues().maxCoeff();
    const double second = eig.eigenvalues()(1) / lambda_max;
    out.report(kernel_residual <= 1e-12 && second > 1e-12, "kernel is the constants [" + tag + "]",
               "|A 1| " + sci(kernel_residual) + ", second eigenvalue " + sci(second));

    bool spd = true;
    try {
        solve(apply_dirichlet(sys, disc, problem));
    } catch (const NumericalError&) {
        spd = false;
    }
    out.report(spd, "cholesky after boundary elimination [" + tag + "]", "");

    std::mt19937_64 rng(20240501u + static_cast<unsigned>(k));
    if (variant == Variant::New) {
        double worst = 0.0;
        for (int i = 0; i < 20; ++i) worst = std::max(worst, polynomial_gradient_deviation(mesh, disc, rng));
        out.report(worst <= 1e-11, "weak gradient of polynomials [" + tag + "]", "max coefficient error " + sci(worst));
    }
    if (expect_gap) {
        DiscretizationConfig other = cfg;
        other.variant = variant == Variant::New ? Variant::Legacy : Variant::New;
        const Discretization disc2(mesh, other, identity);
        // random DOFs: a polynomial probe of degree < k has traces in P_{k-1}, where both forms agree
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        VectorXd probe(disc.dofs().total());
        for (Eigen::Index i = 0; i < probe.size(); ++i) probe(i) = dist(rng);
        double gap = 0.0;
        for (int c = 0; c < mesh.num_cells(); ++c) {
            const VectorXd loc = gather(disc.local_to_global(c), probe);
            gap = std::max(gap, (disc.op(c).apply(loc) - disc2.op(c).apply(loc)).cwiseAbs().maxCoeff());
        }
        out.report(gap > 1e-8, "legacy and new weak gradients differ [" + tag + "]", "max difference " + sci(gap));
    }
    if (variant == Variant::New || !expect_gap) {
        const PatchReport patch = patch_test(mesh, cfg);
        double l2 = 0.0, en = 0.0;
        std::string failed;
        for (const auto& c : patch.cases) {
            l2 = std::max(l2, c.l2_error);
            en = std::max(en, c.energy_error);
            if (!c.passed) failed += (failed.empty() ? "" : ",") + c.name;
        }
        out.report(patch.passed(), "patch test P_" + std::to_string(k) + " [" + tag + "]",
                   "max L2 " + sci(l2) + ", max energy " + sci(en) + (failed.empty() ? "" : ", failed: " + failed));
    }
}

int cmd_verify(const VerifyArgs& a)
{
    const Variant variant = variant_or_throw(a.variant);
    std::vector<int> ks = a.ks.empty() ? std::vector<int>{1, 2, 3} : a.ks;
    for (int k : ks)
        if (k < 1 || k > 4) throw UsageError("--k must be in 1..4 for verify");
    std::vector<MeshFamily> families;
    for (const auto& f : a.families.empty() ? std::vector<std::string>{"triangular", "crisscross"} : a.families)
        families.push_back(family_or_throw(f));

    Checklist out;
    for (MeshFamily f : families)
        for (int k : ks) verify_one(out, f, k, variant, a.expect_gap);
    std::cout << (out.failures == 0 ? "all checks passed\n" : std::to_string(out.failures) + " check(s) failed\n");
    return out.failures == 0 ? exit_ok : exit_numerical;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Stabilizer-free weak Galerkin solver: convergence studies, meshes, self-checks"};
    app.require_subcommand(1);

    StudyArgs study;
    auto* s = app.add_subcommand("study", "run a convergence study on one of the benchmark problems");
    s->add_option("--example", study.example, "benchmark problem 1-4")->capture_default_str();
    s->add_option("--family", study.family, "mesh family (default depends on the example)");
    s->add_option("--k", study.k, "cell polynomial degree")->capture_default_str();
    s->add_option("--j", study.j, "fixed weak-gradient degree (> k)");
    s->add_option("--j-mode", study.j_mode, "table-default | analysis-safe");
    s->add_option("--variant", study.variant, "new | legacy")->capture_default_str();
    s->add_option("--levels", study.levels, "refinement levels, a..b or a,b,c (n = 2^level)");
    s->add_option("--solver", study.solver, "direct | cg")->capture_default_str();
    s->add_option("--tol", study.tol, "CG relative residual tolerance")->capture_default_str();
    s->add_option("--format", study.format, "file format for -o: csv | md")->capture_default_str();
    s->add_option("-o,--output", study.output, "write the table to this file");
    s->add_option("--coef", study.coef, "constant SPD tensor a11,a12,a22 (default identity)");
    s->add_flag("--timings", study.timings, "include wall-clock seconds");
    s->add_flag("--condense", study.condense, "eliminate cell unknowns before the global solve");
    s->add_flag("--true-energy", study.true_energy, "also report |||u - u_h|||");
    s->add_option("--export-matrix", study.export_matrix, "write the finest-level matrix (i j value)");
    s->add_option("--export-solution", study.export_solution, "write the finest-level solution (dof,value)");

    MeshArgs mesh;
    auto* m = app.add_subcommand("mesh", "generate a mesh and write it as JSON");
    m->add_option("--family", mesh.family, "mesh family")->capture_default_str();
    m->add_option("--n", mesh.n, "cells per side");
    m->add_option("--level", mesh.level, "refinement level (n = 2^level)");
    m->add_option("-o,--output", mesh.output, "output file (JSON)");
    m->add_flag("--stats", mesh.stats, "print mesh diagnostics");

    VerifyArgs verify;
    auto* v = app.add_subcommand("verify", "run the property checks (patch tests, weak-gradient identity, SPD)");
    v->add_option("--k", verify.ks, "degrees to check (default 1 2 3)");
    v->add_option("--family", verify.families, "mesh families (default triangular crisscross)");
    v->add_option("--variant", verify.variant, "new | legacy")->capture_default_str();
    v->add_flag("--expect-gap", verify.expect_gap, "check that the two weak-gradient variants differ");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*s) return cmd_study(study);
        if (*m) return cmd_mesh(mesh);
        if (*v) return cmd_verify(verify);
    } catch (const UsageError& e) {
        std::cerr << "sfwg: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "sfwg: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "sfwg: " << e.what() << "\n";
        return exit_numerical;
    }
    return exit_usage;
}
