#include "rrcf/cli.hpp"

#include "rrcf/io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace rrcf::cli {

namespace {

struct GenerateOpts {
    int p = 0;
    int s = 0;
    int n = 150;
    std::uint64_t seed = 0;
    std::string out_dir;
};

struct FitOpts {
    std::string data;
    double lambda = 0.1;
    double gamma = 2.0;
    std::optional<double> mu;
    std::optional<double> eta;
    std::uint64_t seed = 0;
    std::string out;
    int outer_k_max = 20;
    double gamma_bic = 0.5;
};

struct TuneOpts {
    std::string data;
    std::string grid;
    double gamma_bic = 0.5;
    std::uint64_t seed = 0;
    std::string out;
    std::string best_out;
};

struct BenchmarkOpts {
    std::string spec;
    std::string out;
};

struct ProjectOpts {
    std::string matrix;
    double eps = 1e-12;
    int k_max = 20000;
    std::string out;
};

struct SampleOpts {
    std::string matrix;
    int n = 100;
    std::uint64_t seed = 0;
    std::string out;
    bool hungarian = false;
};

sem::DataMatrix load_data(const std::string& path) {
    Matrix m = io::read_matrix_csv(path);
    try {
        return sem::DataMatrix(std::move(m));
    } catch (const InvalidArgument& e) {
        throw IoError(path + ": " + e.what());
    }
}

void ensure_gamma(double gamma) {
    if (!(gamma > 1.0))
        throw GuardViolation("gamma = " + std::to_string(gamma) +
                             " is outside the MCP domain; the coordinate updates need gamma > max{1/(2 S_ii), 1}");
}

int cmd_generate(const GenerateOpts& o, std::ostream& out) {
    if (o.p < 2) throw InvalidArgument("--p must be >= 2");
    if (o.s < 0) throw InvalidArgument("--s must be >= 0");
    if (o.n < 1) throw InvalidArgument("--n must be >= 1");
    Rng rng(o.seed);
    sem::SemInstance inst = sem::generate_dag(o.p, o.s, rng);
    inst.seed = o.seed;
    const sem::DataMatrix x = sem::sample_data(inst, o.n, rng);

    std::error_code ec;
    std::filesystem::create_directories(o.out_dir, ec);
    if (ec) throw IoError("cannot create '" + o.out_dir + "': " + ec.message());
    const std::filesystem::path dir(o.out_dir);
    io::write_json((dir / "instance.json").string(), io::instance_to_json(inst, o.s));
    io::write_matrix_csv((dir / "data.csv").string(), x.x);
    io::write_matrix_csv((dir / "truth_b.csv").string(), inst.adjacency.b);
    io::write_permutation_csv((dir / "truth_perm.csv").string(), inst.ordering);
    out << "generated p=" << o.p << " s=" << o.s << " n=" << o.n << " edges="
        << eval::extract_edges(inst.adjacency).edges.size() << " in " << o.out_dir << '\n';
    return kOk;
}

int cmd_fit(const FitOpts& o, int threads, std::ostream& out) {
    ensure_gamma(o.gamma);
    const sem::DataMatrix x = load_data(o.data);
    RrcfConfig cfg;
    cfg.mcp = {o.lambda, o.gamma};
    if (o.mu) {
        cfg.relax.mu = *o.mu;
        if (x.n() >= x.p()) cfg.auto_relaxation = false;
    }
    if (o.eta) cfg.relax.eta = *o.eta;
    cfg.seed = o.seed;
    cfg.threads = threads;
    cfg.outer_k_max = o.outer_k_max;
    cfg.gamma_bic = o.gamma_bic;
    const FitResult fit = rrcf::fit(x, cfg);
    io::write_json(o.out, io::fit_to_json(fit, cfg));
    out << "objective " << fit.objective << " support " << score::support_size(fit.l_hat) << " ebic " << fit.ebic_value
        << " iterations " << fit.trace.size() << (fit.converged ? " converged" : " not converged") << '\n';
    return fit.converged ? kOk : kPartial;
}

int cmd_tune(const TuneOpts& o, int threads, std::ostream& out) {
    if (!(o.gamma_bic >= 0.0 && o.gamma_bic <= 1.0)) throw InvalidArgument("--gamma-bic must lie in [0, 1]");
    TuningGrid grid = io::grid_from_json(io::read_json(o.grid));
    grid.gamma_bic = o.gamma_bic;
    for (double g : grid.gammas) ensure_gamma(g);
    const sem::DataMatrix x = load_data(o.data);
    RrcfConfig cfg;
    cfg.seed = o.seed;
    cfg.threads = threads;
    const TuningResult result = tune(x, grid, cfg);

    std::ostringstream csv;
    io::write_tuning_csv(csv, result);
    io::write_text(o.out, csv.str());
    const std::string best_path = o.best_out.empty() ? o.out + ".best.json" : o.best_out;
    io::Json best = io::point_to_json(result.best);
    best["ebic"] = result.table[result.best_index].ebic;
    best["gamma_bic"] = grid.gamma_bic;
    io::write_json(best_path, best);
    out << "best lambda " << result.best.lambda << " gamma " << result.best.gamma << " ebic "
        << result.table[result.best_index].ebic << '\n';
    return kOk;
}

int cmd_benchmark(const BenchmarkOpts& o, int threads, std::ostream& out) {
    eval::BenchmarkSpec spec = io::benchmark_spec_from_json(io::read_json(o.spec));
    spec.threads = threads;
    for (double g : spec.grid.gammas) ensure_gamma(g);
    spec.validate();
    const eval::BenchmarkTable table = eval::run_benchmark(spec);
    std::ostringstream csv;
    eval::write_benchmark_csv(csv, table, spec.record_runtime);
    io::write_text(o.out, csv.str());
    for (const auto& row : table.rows) {
        if (!row.is_mean()) continue;
        out << "(p=" << row.setting.p << ", s=" << row.setting.s << ") mean tpr " << row.report.tpr << " fpr "
            << row.report.fpr << " shd " << row.report.shd << " scaled_frob " << row.report.scaled_frob << " ["
            << row.status << "]\n";
    }
    if (table.failures > 0) out << table.failures << " replicate(s) failed\n";
    return table.failures > 0 ? kPartial : kOk;
}

int cmd_project(const ProjectOpts& o, std::ostream& out) {
    const Matrix m = io::read_matrix_csv(o.matrix);
    if (m.rows() != m.cols()) throw InvalidArgument("--matrix must be square");
    if (!(o.eps > 0.0)) throw InvalidArgument("--eps must be > 0");
    if (o.k_max < 1) throw InvalidArgument("--k-max must be >= 1");
    const birkhoff::ProjectionResult res = birkhoff::project_to_birkhoff(m, o.eps, o.k_max);
    io::write_matrix_csv(o.out, res.p.matrix());
    out << "gap " << res.gap << " iterations " << res.iterations << (res.converged ? " converged" : " not converged")
        << '\n';
    return res.converged ? kOk : kPartial;
}

int cmd_sample(const SampleOpts& o, int threads, std::ostream& out) {
    const Matrix m = io::read_matrix_csv(o.matrix);
    if (m.rows() != m.cols()) throw InvalidArgument("--matrix must be square");
    if (o.n < 1) throw InvalidArgument("--n must be >= 1");
    const birkhoff::DoublyStochastic ds(m);
    std::vector<Permutation> perms;
    if (o.hungarian) perms.push_back(birkhoff::round_hungarian(ds.matrix()));
    Rng rng(o.seed);
    for (auto& perm : birkhoff::sample_permutations(ds.matrix(), o.n, rng, threads)) perms.push_back(std::move(perm));
    io::write_permutations_csv(o.out, perms);
    out << "wrote " << perms.size() << " permutations\n";
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Bayesian network structure learning by relaxed permutation search and sparse Cholesky fitting"};
    app.name(args.empty() ? "rrcf" : args.front());
    app.require_subcommand(1);
    int threads = 1;
    app.add_option("--threads", threads, "Cap on worker threads used by the library (<= 0: all cores)")
        ->capture_default_str();

    GenerateOpts gen;
    auto* g = app.add_subcommand("generate", "Draw a random DAG and Gaussian data from it");
    g->add_option("--p", gen.p, "Number of variables (>= 2)")->required();
    g->add_option("--s", gen.s, "Expected number of edges (>= 0)")->required();
    g->add_option("--n", gen.n, "Number of samples")->capture_default_str();
    g->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
    g->add_option("--out-dir", gen.out_dir, "Directory for instance.json, data.csv, truth_b.csv, truth_perm.csv")
        ->required();

    FitOpts fit;
    auto* f = app.add_subcommand("fit", "Estimate an ordering and sparse Cholesky factor from data");
    f->add_option("--data", fit.data, "Data CSV (rows are samples, no header)")->required();
    f->add_option("--lambda", fit.lambda, "MCP lambda")->capture_default_str();
    f->add_option("--gamma", fit.gamma, "MCP gamma, > max{1/(2 S_ii), 1}")->capture_default_str();
    f->add_option("--mu", fit.mu, "Relaxation mu (default: automatic for n >= p, 0 otherwise)");
    f->add_option("--eta", fit.eta, "Gradient projection step (default 1/(l_max(S) l_max(L^t L) + mu))");
    f->add_option("--seed", fit.seed, "Random seed")->capture_default_str();
    f->add_option("--outer-k-max", fit.outer_k_max, "Outer iterations")->capture_default_str();
    f->add_option("--gamma-bic", fit.gamma_bic, "eBIC gamma reported with the fit")->capture_default_str();
    f->add_option("--out", fit.out, "Output JSON")->required();

    TuneOpts tn;
    auto* t = app.add_subcommand("tune", "Select (lambda, gamma[, mu, eta]) by eBIC over a grid");
    t->add_option("--data", tn.data, "Data CSV")->required();
    t->add_option("--grid", tn.grid, "Grid JSON {lambdas, gammas, mus, etas, outer_k_max}")->required();
    t->add_option("--gamma-bic", tn.gamma_bic, "eBIC gamma in [0, 1]")->capture_default_str();
    t->add_option("--seed", tn.seed, "Random seed")->capture_default_str();
    t->add_option("--out", tn.out, "Tuning table CSV")->required();
    t->add_option("--best-out", tn.best_out, "Best-point JSON (default: <out>.best.json)");

    BenchmarkOpts bm;
    auto* b = app.add_subcommand("benchmark", "Run the simulation benchmark described by a spec JSON");
    b->add_option("--spec", bm.spec, "Spec JSON {settings, n, reps, seed, grid, ...}")->required();
    b->add_option("--out", bm.out, "Benchmark CSV")->required();

    ProjectOpts pj;
    auto* pr = app.add_subcommand("project", "Euclidean projection of a square matrix onto the doubly stochastic set");
    pr->add_option("--matrix", pj.matrix, "Square matrix CSV")->required();
    pr->add_option("--eps", pj.eps, "Duality gap tolerance")->capture_default_str();
    pr->add_option("--k-max", pj.k_max, "Dual ascent sweeps")->capture_default_str();
    pr->add_option("--out", pj.out, "Output CSV")->required();

    SampleOpts sp;
    auto* sm = app.add_subcommand("sample-perms", "Round a doubly stochastic matrix to permutations by rank matching");
    sm->add_option("--matrix", sp.matrix, "Doubly stochastic matrix CSV")->required();
    sm->add_option("--n", sp.n, "Number of samples")->capture_default_str();
    sm->add_option("--seed", sp.seed, "Random seed")->capture_default_str();
    sm->add_flag("--hungarian", sp.hungarian, "Prepend the linear-assignment rounding");
    sm->add_option("--out", sp.out, "Output CSV, one 1-based permutation per line")->required();

    // CLI11 consumes a reversed argument list without the program name.
    std::vector<std::string> rev(args.begin() + (args.empty() ? 0 : 1), args.end());
    std::reverse(rev.begin(), rev.end());
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        const int nthreads = resolve_threads(threads);
        if (g->parsed()) return cmd_generate(gen, out);
        if (f->parsed()) return cmd_fit(fit, nthreads, out);
        if (t->parsed()) return cmd_tune(tn, nthreads, out);
        if (b->parsed()) return cmd_benchmark(bm, nthreads, out);
        if (pr->parsed()) return cmd_project(pj, out);
        if (sm->parsed()) return cmd_sample(sp, nthreads, out);
    } catch (const GuardViolation& e) {
        err << "error: " << e.what() << '\n';
        return kGuard;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kIo;
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const DegenerateInput& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kInternal;
    }
    return kUsage;
}

int run(int argc, const char* const* argv) {
    return run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

}  // namespace rrcf::cli
