#pragma once

// Structure-recovery metrics and the simulation benchmark harness.

#include "rrcf/rrcf.hpp"

#include <cstdint>
#include <iosfwd>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace rrcf::eval {

/// Directed edges (k, j) meaning k -> j, i.e. b(j, k) != 0.
struct EdgeSet {
    int p = 0;
    std::set<std::pair<int, int>> edges;

    /// Throws InvalidArgument on self-loops or out-of-range endpoints.
    void validate() const;
};

/// Edges with |b(j, k)| > threshold.
EdgeSet extract_edges(const sem::WeightedAdjacency& b, double threshold = 0.0);

struct StructureMetrics {
    double tpr = 0.0;
    double fpr = 0.0;
    int shd = 0;
};

/// TPR = |E_hat & E| / |E| (1 when E is empty); FPR = |E_hat \ E| over the
/// p (p - 1) - |E| ordered non-edges (0 when there are none); SHD counts
/// unordered pairs whose edge state differs, so a reversal costs 1.
StructureMetrics structure_metrics(const EdgeSet& estimated, const EdgeSet& truth);

/// ||b_hat - b||_F / p.
double scaled_frobenius(const sem::WeightedAdjacency& b_hat, const sem::WeightedAdjacency& b);

struct MetricReport {
    double tpr = 0.0;
    double fpr = 0.0;
    double shd = 0.0;  // integer on replicate rows, averaged on mean rows
    double scaled_frob = 0.0;
    double ebic = 0.0;
    double runtime_seconds = 0.0;
};

struct BenchmarkSetting {
    int p = 0;
    int s = 0;
};

struct BenchmarkSpec {
    std::vector<BenchmarkSetting> settings;
    int n = 150;
    int reps = 20;
    TuningGrid grid;
    RrcfConfig config;            // base configuration; tuned (lambda, gamma) override it
    std::uint64_t seed = 0;
    int threads = 1;              // replicates run concurrently
    double edge_threshold = 0.0;
    bool record_runtime = false;  // write measured runtimes to the CSV (breaks byte determinism)

    void validate() const;
};

struct BenchmarkRow {
    BenchmarkSetting setting;
    int rep = 0;  // 1-based; 0 marks the per-setting mean
    std::uint64_t seed = 0;
    MetricReport report;
    std::string status;  // "ok", "error", or "ok" / "partial" on mean rows

    bool is_mean() const { return rep == 0; }
};

struct BenchmarkTable {
    std::vector<BenchmarkRow> rows;  // per setting: replicates in order, then the mean
    int failures = 0;
};

/// Seed of replicate `rep` (1-based) of setting `index`.
std::uint64_t replicate_seed(std::uint64_t base, std::size_t index, int rep);

struct ReplicateOutcome {
    MetricReport report;
    FitResult fit;
    TuningResult tuning;
    sem::SemInstance instance;
};

/// Generate an instance, draw n rows, tune on the grid, refit at the
/// selected point with the full outer loop and score against the truth.
ReplicateOutcome run_replicate(const BenchmarkSpec& spec, const BenchmarkSetting& setting, std::uint64_t seed,
                               int threads = 1);

/// Replicate failures become "error" rows and are excluded from the means.
BenchmarkTable run_benchmark(const BenchmarkSpec& spec);

inline constexpr const char* kBenchmarkHeader =
    "setting_p,setting_s,rep,seed,tpr,fpr,shd,scaled_frob,ebic,runtime_seconds,status";

/// Runtime column holds 0 unless record_runtime is set.
void write_benchmark_csv(std::ostream& out, const BenchmarkTable& table, bool record_runtime);

struct ReferenceRow {
    int p;
    int s;
    double tpr;
    double fpr;
    double scaled_frob;
};

/// Published averages over 20 replicates at n = 150 for this method.
inline constexpr ReferenceRow kReferenceRows[] = {
    {100, 100, 0.603, 0.001, 6.868},
    {100, 200, 0.649, 0.009, 10.599},
    {200, 200, 0.623, 0.003, 12.509},
    {200, 400, 0.643, 0.001, 12.752},
};

}  // namespace rrcf::eval
