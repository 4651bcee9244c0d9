#include "doctest.h"
#include "support.hpp"

#include "rrcf/eval.hpp"

#include <sstream>

using namespace rrcf;
using namespace rrcf::testing;
using eval::EdgeSet;

namespace {

EdgeSet random_edges(int p, double density, Rng& rng) {
    EdgeSet e{p, {}};
    for (int a = 0; a < p; ++a)
        for (int b = a + 1; b < p; ++b)
            if (uniform(rng, 0.0, 1.0) < density) {
                if (uniform(rng, 0.0, 1.0) < 0.5)
                    e.edges.insert({a, b});
                else
                    e.edges.insert({b, a});
            }
    return e;
}

// Insertions + deletions + reversals from set differences.
int shd_oracle(const EdgeSet& est, const EdgeSet& truth) {
    int missing = 0, extra = 0, reversed = 0;
    for (const auto& e : truth.edges)
        if (!est.edges.count(e)) ++missing;
    for (const auto& e : est.edges)
        if (!truth.edges.count(e)) {
            ++extra;
            if (truth.edges.count({e.second, e.first})) ++reversed;
        }
    return missing + extra - reversed;
}

eval::BenchmarkSpec tiny_spec() {
    eval::BenchmarkSpec spec;
    spec.settings = {{10, 10}};
    spec.n = 150;
    spec.reps = 1;
    spec.seed = 5;
    spec.grid.lambdas = {0.3, 0.6};
    return spec;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("extract_edges examples") {
    sem::WeightedAdjacency b{Matrix::Zero(3, 3)};
    CHECK(eval::extract_edges(b).edges.empty());
    b.b(1, 0) = 0.5;
    const auto e = eval::extract_edges(b);
    CHECK(e.edges.size() == 1);
    CHECK(e.edges.count({0, 1}) == 1);
    CHECK(eval::extract_edges(b, 0.6).edges.empty());
}

TEST_CASE("edge set validation") {
    CHECK_THROWS_AS((EdgeSet{3, {{1, 1}}}.validate()), InvalidArgument);
    CHECK_THROWS_AS((EdgeSet{3, {{0, 3}}}.validate()), InvalidArgument);
    CHECK_THROWS_AS(eval::structure_metrics(EdgeSet{3, {}}, EdgeSet{4, {}}), InvalidArgument);
}

TEST_CASE("structure metrics examples") {
    const EdgeSet truth{4, {{0, 1}, {1, 2}, {0, 3}}};
    const auto same = eval::structure_metrics(truth, truth);
    CHECK(same.tpr == 1.0);
    CHECK(same.fpr == 0.0);
    CHECK(same.shd == 0);

    const EdgeSet reversed{4, {{1, 0}, {1, 2}, {0, 3}}};
    const auto rev = eval::structure_metrics(reversed, truth);
    CHECK(rev.shd == 1);
    CHECK(rev.tpr == doctest::Approx(2.0 / 3.0));
    CHECK(rev.fpr == doctest::Approx(1.0 / 9.0));

    const EdgeSet disjoint{4, {{2, 3}, {3, 1}}};
    CHECK(eval::structure_metrics(disjoint, truth).shd == 5);

    const EdgeSet empty{4, {}};
    CHECK(eval::structure_metrics(disjoint, empty).tpr == 1.0);
    EdgeSet complete{2, {{0, 1}, {1, 0}}};
    CHECK(eval::structure_metrics(complete, complete).fpr == 0.0);
}

TEST_CASE("structure metrics properties") {
    Rng rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        const int p = uniform_int(rng, 2, 12);
        const EdgeSet a = random_edges(p, uniform(rng, 0.0, 0.6), rng);
        const EdgeSet b = random_edges(p, uniform(rng, 0.0, 0.6), rng);
        const auto m = eval::structure_metrics(a, b);
        CHECK(m.tpr >= 0.0);
        CHECK(m.tpr <= 1.0);
        CHECK(m.fpr >= 0.0);
        CHECK(m.fpr <= 1.0);
        CHECK(m.shd == shd_oracle(a, b));
        CHECK(m.shd == eval::structure_metrics(b, a).shd);
        CHECK(m.shd <= static_cast<int>(a.edges.size() + b.edges.size()));
        CHECK((m.shd == 0) == (a.edges == b.edges));

        int tp = 0;
        for (const auto& e : a.edges) tp += static_cast<int>(b.edges.count(e));
        const double fp = static_cast<double>(a.edges.size()) - tp;
        if (!b.edges.empty()) CHECK(m.tpr == doctest::Approx(static_cast<double>(tp) / b.edges.size()));
        CHECK(m.fpr == doctest::Approx(fp / (p * (p - 1) - static_cast<double>(b.edges.size()))));
    }
}

TEST_CASE("scaled frobenius") {
    sem::WeightedAdjacency a{Matrix::Zero(2, 2)}, b{Matrix::Zero(2, 2)};
    b.b(1, 0) = 1.0;
    CHECK(eval::scaled_frobenius(a, a) == 0.0);
    CHECK(eval::scaled_frobenius(a, b) == doctest::Approx(0.5));
    Rng rng(2);
    const sem::WeightedAdjacency x{random_normal(5, 5, rng)}, y{random_normal(5, 5, rng)};
    double acc = 0.0;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) acc += (x.b(i, j) - y.b(i, j)) * (x.b(i, j) - y.b(i, j));
    CHECK(std::abs(eval::scaled_frobenius(x, y) - std::sqrt(acc) / 5.0) <= 1e-12);
}

TEST_CASE("reference rows") {
    const auto& r = eval::kReferenceRows[0];
    CHECK(r.p == 100);
    CHECK(r.s == 100);
    CHECK(r.tpr == 0.603);
    CHECK(r.fpr == 0.001);
    CHECK(r.scaled_frob == 6.868);
    CHECK(std::size(eval::kReferenceRows) == 4);
}

TEST_CASE("benchmark spec validation") {
    auto spec = tiny_spec();
    spec.reps = 0;
    CHECK_THROWS_AS(spec.validate(), InvalidArgument);
    spec = tiny_spec();
    spec.settings = {{1, 0}};
    CHECK_THROWS_AS(spec.validate(), InvalidArgument);
    spec = tiny_spec();
    spec.settings.clear();
    CHECK_THROWS_AS(spec.validate(), InvalidArgument);
}

TEST_CASE("tiny benchmark: one replicate row plus one mean row, finite, deterministic") {
    const auto spec = tiny_spec();
    const auto table = eval::run_benchmark(spec);
    REQUIRE(table.rows.size() == 2);
    CHECK(table.failures == 0);
    CHECK(table.rows[0].rep == 1);
    CHECK(table.rows[1].is_mean());
    for (const auto& row : table.rows) {
        CHECK(std::isfinite(row.report.tpr));
        CHECK(std::isfinite(row.report.fpr));
        CHECK(std::isfinite(row.report.shd));
        CHECK(std::isfinite(row.report.scaled_frob));
        CHECK(std::isfinite(row.report.ebic));
        CHECK(row.status == "ok");
    }
    CHECK(table.rows[1].report.tpr == table.rows[0].report.tpr);

    std::ostringstream a, b;
    eval::write_benchmark_csv(a, table, false);
    eval::write_benchmark_csv(b, eval::run_benchmark(spec), false);
    CHECK(a.str() == b.str());
    std::istringstream lines(a.str());
    std::string header, first, mean;
    std::getline(lines, header);
    std::getline(lines, first);
    std::getline(lines, mean);
    CHECK(header == eval::kBenchmarkHeader);
    CHECK(first.rfind("10,10,1,", 0) == 0);
    CHECK(mean.rfind("10,10,mean,", 0) == 0);
}

TEST_CASE("replicate agrees with the benchmark row and its metrics") {
    const auto spec = tiny_spec();
    const auto seed = eval::replicate_seed(spec.seed, 0, 1);
    const auto out = eval::run_replicate(spec, spec.settings[0], seed);
    const auto table = eval::run_benchmark(spec);
    CHECK(table.rows[0].seed == seed);
    CHECK(table.rows[0].report.tpr == out.report.tpr);
    CHECK(table.rows[0].report.shd == out.report.shd);
    const auto m = eval::structure_metrics(eval::extract_edges(out.fit.b_hat), eval::extract_edges(out.instance.adjacency));
    CHECK(out.report.shd == m.shd);
    CHECK(out.report.scaled_frob == eval::scaled_frobenius(out.fit.b_hat, out.instance.adjacency));
}

TEST_CASE("benchmark means and thread independence") {
    auto spec = tiny_spec();
    spec.reps = 3;
    spec.settings = {{8, 6}, {9, 12}};
    const auto serial = eval::run_benchmark(spec);
    spec.threads = 3;
    const auto threaded = eval::run_benchmark(spec);
    std::ostringstream a, b;
    eval::write_benchmark_csv(a, serial, false);
    eval::write_benchmark_csv(b, threaded, false);
    CHECK(a.str() == b.str());
    REQUIRE(serial.rows.size() == 8);
    double tpr = 0.0;
    for (int r = 0; r < 3; ++r) tpr += serial.rows[static_cast<std::size_t>(r)].report.tpr;
    CHECK(serial.rows[3].is_mean());
    CHECK(serial.rows[3].report.tpr == doctest::Approx(tpr / 3.0));
    CHECK(serial.rows[7].setting.p == 9);
}

TEST_CASE("replicate seeds are distinct across settings and replicates") {
    std::set<std::uint64_t> seen;
    for (std::size_t i = 0; i < 4; ++i)
        for (int r = 1; r <= 20; ++r) seen.insert(eval::replicate_seed(3, i, r));
    CHECK(seen.size() == 80);
}

}
