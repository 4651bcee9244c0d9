#include "rrcf/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace rrcf::eval {

void EdgeSet::validate() const {
    for (const auto& [k, j] : edges) {
        if (k == j) throw InvalidArgument("edge set contains a self-loop");
        if (k < 0 || j < 0 || k >= p || j >= p) throw InvalidArgument("edge endpoint out of range");
    }
}

EdgeSet extract_edges(const sem::WeightedAdjacency& b, double threshold) {
    if (!(threshold >= 0.0)) throw InvalidArgument("edge threshold must be >= 0");
    EdgeSet out;
    out.p = b.dim();
    for (int j = 0; j < out.p; ++j)
        for (int k = 0; k < out.p; ++k)
            if (j != k && std::abs(b.b(j, k)) > threshold) out.edges.emplace(k, j);
    return out;
}

StructureMetrics structure_metrics(const EdgeSet& estimated, const EdgeSet& truth) {
    if (estimated.p != truth.p) throw InvalidArgument("edge sets have different dimensions");
    estimated.validate();
    truth.validate();
    const double p = truth.p;

    int hits = 0;
    for (const auto& e : estimated.edges)
        if (truth.edges.count(e)) ++hits;
    const int false_pos = static_cast<int>(estimated.edges.size()) - hits;

    StructureMetrics m;
    m.tpr = truth.edges.empty() ? 1.0 : static_cast<double>(hits) / static_cast<double>(truth.edges.size());
    const double negatives = p * (p - 1.0) - static_cast<double>(truth.edges.size());
    m.fpr = negatives > 0.0 ? static_cast<double>(false_pos) / negatives : 0.0;

    auto state = [](const EdgeSet& es, int a, int b) {
        return (es.edges.count({a, b}) ? 1 : 0) | (es.edges.count({b, a}) ? 2 : 0);
    };
    std::set<std::pair<int, int>> pairs;
    for (const auto* es : {&estimated, &truth})
        for (const auto& [k, j] : es->edges) pairs.emplace(std::min(k, j), std::max(k, j));
    for (const auto& [a, b] : pairs)
        if (state(estimated, a, b) != state(truth, a, b)) ++m.shd;
    return m;
}

double scaled_frobenius(const sem::WeightedAdjacency& b_hat, const sem::WeightedAdjacency& b) {
    if (b_hat.dim() != b.dim()) throw InvalidArgument("adjacency matrices have different dimensions");
    return (b_hat.b - b.b).norm() / static_cast<double>(b.dim());
}

void BenchmarkSpec::validate() const {
    if (settings.empty()) throw InvalidArgument("benchmark needs at least one (p, s) setting");
    for (const auto& st : settings) {
        if (st.p < 2) throw InvalidArgument("benchmark settings need p >= 2");
        if (st.s < 0) throw InvalidArgument("benchmark settings need s >= 0");
    }
    if (n < 1) throw InvalidArgument("benchmark n must be >= 1");
    if (reps < 1) throw InvalidArgument("benchmark reps must be >= 1");
    if (!(edge_threshold >= 0.0)) throw InvalidArgument("edge threshold must be >= 0");
    grid.validate();
    config.validate();
}

std::uint64_t replicate_seed(std::uint64_t base, std::size_t index, int rep) {
    return derive_seed(derive_seed(base, index), static_cast<std::uint64_t>(rep));
}

ReplicateOutcome run_replicate(const BenchmarkSpec& spec, const BenchmarkSetting& setting, std::uint64_t seed,
                               int threads) {
    const auto start = std::chrono::steady_clock::now();
    Rng rng(seed);
    ReplicateOutcome out;
    out.instance = sem::generate_dag(setting.p, setting.s, rng);
    out.instance.seed = seed;
    const sem::DataMatrix x = sem::sample_data(out.instance, spec.n, rng);
    const sem::SampleCovariance s = sem::sample_covariance(x);

    RrcfConfig cfg = spec.config;
    cfg.seed = derive_seed(seed, 1);
    cfg.threads = threads;
    cfg.gamma_bic = spec.grid.gamma_bic;
    out.tuning = tune_covariance(s, spec.n, spec.grid, cfg);
    out.fit = fit_covariance(s, spec.n, apply_point(cfg, out.tuning.best));

    const StructureMetrics m = structure_metrics(extract_edges(out.fit.b_hat, spec.edge_threshold),
                                                 extract_edges(out.instance.adjacency, 0.0));
    out.report.tpr = m.tpr;
    out.report.fpr = m.fpr;
    out.report.shd = m.shd;
    out.report.scaled_frob = scaled_frobenius(out.fit.b_hat, out.instance.adjacency);
    out.report.ebic = out.fit.ebic_value;
    out.report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

BenchmarkTable run_benchmark(const BenchmarkSpec& spec) {
    spec.validate();
    const std::size_t n_set = spec.settings.size();
    const std::size_t reps = static_cast<std::size_t>(spec.reps);
    std::vector<BenchmarkRow> rows(n_set * reps);

    parallel_for(rows.size(), spec.threads, [&](std::size_t job) {
        const std::size_t idx = job / reps;
        const int rep = static_cast<int>(job % reps) + 1;
        BenchmarkRow& row = rows[job];
        row.setting = spec.settings[idx];
        row.rep = rep;
        row.seed = replicate_seed(spec.seed, idx, rep);
        try {
            row.report = run_replicate(spec, row.setting, row.seed, 1).report;
            row.status = "ok";
        } catch (const std::exception&) {
            row.report = MetricReport{};
            row.status = "error";
        }
    });

    BenchmarkTable table;
    for (std::size_t idx = 0; idx < n_set; ++idx) {
        BenchmarkRow mean;
        mean.setting = spec.settings[idx];
        mean.rep = 0;
        mean.seed = spec.seed;
        int ok = 0;
        for (std::size_t r = 0; r < reps; ++r) {
            const BenchmarkRow& row = rows[idx * reps + r];
            table.rows.push_back(row);
            if (row.status != "ok") {
                ++table.failures;
                continue;
            }
            ++ok;
            mean.report.tpr += row.report.tpr;
            mean.report.fpr += row.report.fpr;
            mean.report.shd += row.report.shd;
            mean.report.scaled_frob += row.report.scaled_frob;
            mean.report.ebic += row.report.ebic;
            mean.report.runtime_seconds += row.report.runtime_seconds;
        }
        if (ok > 0) {
            const double d = ok;
            mean.report.tpr /= d;
            mean.report.fpr /= d;
            mean.report.shd /= d;
            mean.report.scaled_frob /= d;
            mean.report.ebic /= d;
            mean.report.runtime_seconds /= d;
        } else {
            const double nan = std::nan("");
            mean.report = MetricReport{nan, nan, nan, nan, nan, nan};
        }
        mean.status = ok == spec.reps ? "ok" : "partial";
        table.rows.push_back(mean);
    }
    return table;
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void write_benchmark_csv(std::ostream& out, const BenchmarkTable& table, bool record_runtime) {
    out << kBenchmarkHeader << '\n';
    for (const auto& row : table.rows) {
        out << row.setting.p << ',' << row.setting.s << ',';
        if (row.is_mean())
            out << "mean";
        else
            out << row.rep;
        out << ',' << row.seed << ',' << fmt(row.report.tpr) << ',' << fmt(row.report.fpr) << ','
            << fmt(row.report.shd) << ',' << fmt(row.report.scaled_frob) << ',' << fmt(row.report.ebic) << ','
            << fmt(record_runtime ? row.report.runtime_seconds : 0.0) << ',' << row.status << '\n';
    }
}

}  // namespace rrcf::eval
