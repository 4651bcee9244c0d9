#include "rrcf/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace rrcf::io {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& field, const std::string& name, std::size_t line) {
    if (field.empty()) throw IoError(name + ": empty field on line " + std::to_string(line));
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(field.c_str(), &end);
    if (end != field.c_str() + field.size() || errno == ERANGE)
        throw IoError(name + ": malformed number '" + field + "' on line " + std::to_string(line));
    return v;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    return in;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    return out;
}

void finish(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw IoError("failed writing '" + path + "'");
}

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw InvalidArgument(std::string("bad value for '") + key + "': " + e.what());
    }
}

}  // namespace

Matrix parse_matrix_csv(std::istream& in, const std::string& name) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        std::vector<double> row;
        for (const auto& f : split_fields(line)) row.push_back(parse_double(f, name, lineno));
        if (!rows.empty() && row.size() != rows.front().size())
            throw IoError(name + ": ragged row on line " + std::to_string(lineno));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw IoError(name + ": no data");
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    return m;
}

Matrix read_matrix_csv(const std::string& path) {
    auto in = open_in(path);
    return parse_matrix_csv(in, path);
}

void write_matrix_csv(std::ostream& out, const Matrix& m) {
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << fmt(m(i, j));
        }
        out << '\n';
    }
}

void write_matrix_csv(const std::string& path, const Matrix& m) {
    auto out = open_out(path);
    write_matrix_csv(out, m);
    finish(out, path);
}

Permutation read_permutation_csv(const std::string& path) {
    const Matrix m = read_matrix_csv(path);
    if (m.rows() != 1) throw IoError(path + ": expected a single permutation row");
    std::vector<int> v;
    for (Index j = 0; j < m.cols(); ++j) {
        const double x = m(0, j);
        if (x != static_cast<double>(static_cast<int>(x))) throw IoError(path + ": permutation entries must be integers");
        v.push_back(static_cast<int>(x));
    }
    try {
        return Permutation::from_one_based(v);
    } catch (const InvalidArgument& e) {
        throw IoError(path + ": " + e.what());
    }
}

void write_permutations_csv(const std::string& path, const std::vector<Permutation>& perms) {
    auto out = open_out(path);
    for (const auto& perm : perms) {
        const auto v = perm.one_based();
        for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << v[i];
        out << '\n';
    }
    finish(out, path);
}

void write_permutation_csv(const std::string& path, const Permutation& perm) { write_permutations_csv(path, {perm}); }

Json matrix_to_json(const Matrix& m) {
    Json rows = Json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const Json& j) {
    if (!j.is_array() || j.empty() || !j.front().is_array()) throw InvalidArgument("matrix must be a non-empty array of rows");
    const std::size_t cols = j.front().size();
    Matrix m(static_cast<Index>(j.size()), static_cast<Index>(cols));
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (!j[r].is_array() || j[r].size() != cols) throw InvalidArgument("matrix rows must have equal length");
        for (std::size_t c = 0; c < cols; ++c) m(static_cast<Index>(r), static_cast<Index>(c)) = j[r][c].get<double>();
    }
    return m;
}

Json instance_to_json(const sem::SemInstance& inst, int s) {
    Json j;
    j["p"] = inst.adjacency.dim();
    j["s"] = s;
    j["seed"] = inst.seed;
    j["ordering"] = inst.ordering.one_based();
    j["b"] = matrix_to_json(inst.adjacency.b);
    j["omega2"] = std::vector<double>(inst.noise.omega2.data(), inst.noise.omega2.data() + inst.noise.omega2.size());
    return j;
}

Json config_to_json(const RrcfConfig& cfg) {
    Json j;
    j["lambda"] = cfg.mcp.lambda;
    j["gamma"] = cfg.mcp.gamma;
    j["mu"] = cfg.relax.mu;
    j["variant"] = cfg.relax.variant == birkhoff::Variant::plain ? "plain" : "centered";
    j["eta"] = cfg.relax.eta ? Json(*cfg.relax.eta) : Json(nullptr);
    j["auto_relaxation"] = cfg.auto_relaxation;
    j["warm_start_relaxation"] = cfg.warm_start_relaxation;
    j["relax_eps"] = cfg.relax.eps;
    j["relax_k_max"] = cfg.relax.k_max;
    j["n_samples"] = cfg.relax.n_samples;
    j["solver_eps"] = cfg.solver.eps;
    j["solver_k_max"] = cfg.solver.k_max;
    j["single_branch"] = cfg.solver.single_branch;
    j["outer_k_max"] = cfg.outer_k_max;
    j["outer_eps"] = cfg.outer_eps;
    j["seed"] = cfg.seed;
    j["gamma_bic"] = cfg.gamma_bic;
    return j;
}

namespace {

Json breakdown_to_json(const score::ScoreBreakdown& s) {
    return Json{{"nll", s.nll}, {"penalty", s.penalty}, {"total", s.total}};
}

}  // namespace

Json fit_to_json(const FitResult& fit, const RrcfConfig& cfg) {
    Json j;
    j["p"] = fit.p;
    j["n"] = fit.n;
    j["config"] = config_to_json(cfg);
    j["permutation"] = fit.perm_hat.one_based();
    Json triplets = Json::array();
    const Matrix& l = fit.l_hat.matrix();
    for (Index i = 0; i < l.rows(); ++i)
        for (Index k = 0; k <= i; ++k)
            if (l(i, k) != 0.0) triplets.push_back(Json::array({i + 1, k + 1, l(i, k)}));
    j["l_hat"] = triplets;
    j["b_hat"] = matrix_to_json(fit.b_hat.b);
    const Vector& w = fit.omega_hat.omega2;
    j["omega_hat"] = std::vector<double>(w.data(), w.data() + w.size());
    j["score"] = breakdown_to_json(fit.score);
    j["objective"] = fit.objective;
    j["support"] = score::support_size(fit.l_hat);
    j["ebic"] = fit.ebic_value;
    j["converged"] = fit.converged;
    j["best_iteration"] = fit.best_iteration;
    Json trace = Json::array();
    for (const auto& rec : fit.trace) {
        Json r;
        r["permutation"] = rec.perm.one_based();
        r["before_l_step"] = breakdown_to_json(rec.before_l_step);
        r["after_l_step"] = breakdown_to_json(rec.after_l_step);
        r["objective_before"] = rec.objective_before;
        r["objective_after"] = rec.objective_after;
        r["diagnostics"] = Json{{"mu", rec.mu},
                                {"variant", rec.variant == birkhoff::Variant::plain ? "plain" : "centered"},
                                {"plain_convex", rec.thresholds.plain_convex},
                                {"centered_convex", rec.thresholds.centered_convex},
                                {"concave", rec.thresholds.concave},
                                {"relaxation_iterations", rec.relaxation_iterations},
                                {"relaxation_converged", rec.relaxation_converged},
                                {"max_projection_gap", rec.max_projection_gap},
                                {"unconverged_projections", rec.unconverged_projections},
                                {"snapped", rec.snapped},
                                {"candidates", rec.candidates},
                                {"solver_converged", rec.solver_converged},
                                {"max_sweeps", rec.max_sweeps},
                                {"total_sweeps", rec.total_sweeps}};
        trace.push_back(std::move(r));
    }
    j["score_trace"] = trace;
    return j;
}

TuningGrid grid_from_json(const Json& j) {
    if (!j.is_object()) throw InvalidArgument("grid must be a JSON object");
    TuningGrid g;
    g.lambdas = get_or(j, "lambdas", g.lambdas);
    g.gammas = get_or(j, "gammas", g.gammas);
    g.mus = get_or(j, "mus", g.mus);
    g.etas = get_or(j, "etas", g.etas);
    g.gamma_bic = get_or(j, "gamma_bic", g.gamma_bic);
    g.outer_k_max = get_or(j, "outer_k_max", g.outer_k_max);
    g.validate();
    return g;
}

Json point_to_json(const TuningPoint& point) {
    Json j;
    j["lambda"] = point.lambda;
    j["gamma"] = point.gamma;
    j["mu"] = point.mu ? Json(*point.mu) : Json(nullptr);
    j["eta"] = point.eta ? Json(*point.eta) : Json(nullptr);
    return j;
}

void write_tuning_csv(std::ostream& out, const TuningResult& result) {
    out << "lambda,gamma,mu,eta,support,nll,ebic\n";
    for (const auto& row : result.table) {
        out << fmt(row.point.lambda) << ',' << fmt(row.point.gamma) << ',' << (row.point.mu ? fmt(*row.point.mu) : "")
            << ',' << (row.point.eta ? fmt(*row.point.eta) : "") << ',' << row.support << ',' << fmt(row.nll) << ','
            << fmt(row.ebic) << '\n';
    }
}

eval::BenchmarkSpec benchmark_spec_from_json(const Json& j) {
    if (!j.is_object()) throw InvalidArgument("benchmark spec must be a JSON object");
    eval::BenchmarkSpec spec;
    if (!j.contains("settings") || !j["settings"].is_array())
        throw InvalidArgument("benchmark spec needs a 'settings' array");
    for (const auto& st : j["settings"]) {
        try {
            if (st.is_array() && st.size() == 2)
                spec.settings.push_back({st[0].get<int>(), st[1].get<int>()});
            else if (st.is_object())
                spec.settings.push_back({st.at("p").get<int>(), st.at("s").get<int>()});
            else
                throw InvalidArgument("each setting must be [p, s] or {\"p\": .., \"s\": ..}");
        } catch (const Json::exception& e) {
            throw InvalidArgument(std::string("bad setting: ") + e.what());
        }
    }
    spec.n = get_or(j, "n", spec.n);
    spec.reps = get_or(j, "reps", spec.reps);
    spec.seed = get_or<std::uint64_t>(j, "seed", spec.seed);
    spec.edge_threshold = get_or(j, "edge_threshold", spec.edge_threshold);
    spec.record_runtime = get_or(j, "record_runtime", spec.record_runtime);
    if (j.contains("grid")) spec.grid = grid_from_json(j["grid"]);
    if (j.contains("config")) {
        const Json& c = j["config"];
        if (!c.is_object()) throw InvalidArgument("'config' must be a JSON object");
        RrcfConfig& cfg = spec.config;
        cfg.outer_k_max = get_or(c, "outer_k_max", cfg.outer_k_max);
        cfg.outer_eps = get_or(c, "outer_eps", cfg.outer_eps);
        cfg.solver.eps = get_or(c, "solver_eps", cfg.solver.eps);
        cfg.solver.k_max = get_or(c, "solver_k_max", cfg.solver.k_max);
        cfg.relax.k_max = get_or(c, "relax_k_max", cfg.relax.k_max);
        cfg.relax.eps = get_or(c, "relax_eps", cfg.relax.eps);
        cfg.relax.n_samples = get_or(c, "n_samples", cfg.relax.n_samples);
    }
    spec.validate();
    return spec;
}

Json read_json(const std::string& path) {
    auto in = open_in(path);
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw IoError(path + ": invalid JSON: " + e.what());
    }
}

void write_json(const std::string& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

void write_text(const std::string& path, const std::string& text) {
    auto out = open_out(path);
    out << text;
    finish(out, path);
}

}  // namespace rrcf::io
