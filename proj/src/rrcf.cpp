#include "rrcf/rrcf.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <tuple>

namespace rrcf {

void RrcfConfig::validate() const {
    mcp.validate();
    relax.validate();
    solver.validate();
    if (outer_k_max < 1) throw InvalidArgument("outer_k_max must be >= 1");
    if (!(outer_eps >= 0.0)) throw InvalidArgument("outer_eps must be >= 0");
    if (!(gamma_bic >= 0.0 && gamma_bic <= 1.0)) throw InvalidArgument("gamma_bic must lie in [0, 1]");
}

void TuningGrid::validate() const {
    if (lambdas.empty() || gammas.empty() || mus.empty()) throw InvalidArgument("tuning grid lists must be non-empty");
    for (double l : lambdas)
        if (!(l >= 0.0) || !std::isfinite(l)) throw InvalidArgument("grid lambdas must be finite and >= 0");
    for (double g : gammas)
        if (!(g > 1.0) || !std::isfinite(g)) throw InvalidArgument("grid gammas must be finite and > 1");
    for (double m : mus)
        if (!(m >= 0.0) || !std::isfinite(m)) throw InvalidArgument("grid mus must be finite and >= 0");
    for (double e : etas)
        if (!(e > 0.0) || !std::isfinite(e)) throw InvalidArgument("grid etas must be finite and > 0");
    if (!(gamma_bic >= 0.0 && gamma_bic <= 1.0)) throw InvalidArgument("gamma_bic must lie in [0, 1]");
    if (outer_k_max < 1) throw InvalidArgument("tuning outer_k_max must be >= 1");
}

namespace {

birkhoff::RelaxationConfig step_relaxation(const RrcfConfig& cfg, const Matrix& l, const Matrix& s, int n,
                                           birkhoff::ConvexityThresholds& thresholds) {
    birkhoff::RelaxationConfig relax = cfg.relax;
    thresholds = birkhoff::convexity_thresholds(l, s);
    if (cfg.auto_relaxation) {
        if (n >= s.rows()) {
            relax.variant = birkhoff::Variant::centered;
            relax.mu = thresholds.centered_convex;
        } else {
            relax.variant = birkhoff::Variant::plain;
        }
    }
    return relax;
}

struct PStep {
    birkhoff::PermutationEstimate est;
    birkhoff::RelaxationConfig relax;
    birkhoff::ConvexityThresholds thresholds;
    Rng rng_after;  // stream state once the step has drawn its samples
};

PStep run_p_step(const RrcfConfig& cfg, const Matrix& l, const Matrix& s, int n, const Permutation& current, Rng& rng) {
    PStep step;
    step.relax = step_relaxation(cfg, l, s, n, step.thresholds);
    std::optional<birkhoff::DoublyStochastic> init;
    if (cfg.warm_start_relaxation) init = birkhoff::DoublyStochastic::vertex(current);
    step.est = birkhoff::estimate_permutation(l, s, step.relax, rng, init, cfg.threads);
    step.rng_after = rng;
    return step;
}

FitResult fit_impl(const sem::SampleCovariance& s, int n, const RrcfConfig& cfg, const std::optional<PStep>& first) {
    cfg.validate();
    const int p = s.dim();
    if (p < 2) throw InvalidArgument("fit needs p >= 2");
    if (n < 1) throw InvalidArgument("fit needs n >= 1");
    const Matrix& sm = s.matrix();
    for (Index i = 0; i < p; ++i)
        if (!(sm(i, i) > 0.0)) throw DegenerateInput("sample covariance has a non-positive diagonal entry");

    Rng rng(cfg.seed);
    solver::SolverSettings settings = cfg.solver;
    settings.threads = cfg.threads;

    Permutation perm = Permutation::identity(p);
    sem::CholeskyFactor l = sem::CholeskyFactor::diagonal(sm.diagonal().cwiseSqrt().cwiseInverse());

    FitResult out;
    out.n = n;
    out.p = p;
    double best = std::numeric_limits<double>::infinity();
    double prev_objective = std::numeric_limits<double>::infinity();
    bool fixed_point = false;
    bool rows_converged = false;

    for (int k = 1; k <= cfg.outer_k_max; ++k) {
        PStep step = (k == 1 && first) ? *first : run_p_step(cfg, l.matrix(), sm, n, perm, rng);
        if (k == 1 && first) rng = first->rng_after;
        const Permutation next = step.est.perm;

        IterationRecord rec;
        rec.perm = next;
        rec.before_l_step = score::penalized_score(l, next, s, cfg.mcp);
        rec.objective_before = score::decoupled_objective(rec.before_l_step);
        rec.mu = step.relax.mu;
        rec.variant = step.relax.variant;
        rec.thresholds = step.thresholds;
        rec.relaxation_iterations = step.est.relaxation.iterations;
        rec.relaxation_converged = step.est.relaxation.converged;
        rec.max_projection_gap = step.est.relaxation.max_projection_gap;
        rec.unconverged_projections = step.est.relaxation.unconverged_projections;
        rec.snapped = step.est.snapped;
        rec.candidates = step.est.candidates;

        solver::CholeskyEstimate est = solver::estimate_cholesky(next, s, cfg.mcp, settings, l);
        rec.after_l_step = score::penalized_score(est.l, next, s, cfg.mcp);
        rec.objective_after = score::decoupled_objective(rec.after_l_step);
        rec.solver_converged = est.converged;
        rec.max_sweeps = est.max_sweeps;
        rec.total_sweeps = est.total_sweeps;
        out.trace.push_back(rec);

        if (rec.objective_after < best) {
            best = rec.objective_after;
            out.best_iteration = k;
            out.l_hat = est.l;
            out.perm_hat = next;
            out.score = rec.after_l_step;
            out.objective = rec.objective_after;
        }

        const bool repeated = next == perm;
        const double improvement = prev_objective - rec.objective_after;
        perm = next;
        l = est.l;
        prev_objective = rec.objective_after;
        rows_converged = est.converged;
        if (repeated && std::abs(improvement) < cfg.outer_eps) {
            fixed_point = true;
            break;
        }
    }

    out.converged = fixed_point && rows_converged;
    const sem::SemParameters params = sem::cholesky_to_adjacency(out.l_hat);
    out.b_hat.b = out.perm_hat.unconjugate(params.adjacency.b);
    // Position i holds variable at(i), so P^t maps the frame back to labels.
    out.omega_hat.omega2 = out.perm_hat.matrix().transpose() * params.noise.omega2;
    out.ebic_value = score::ebic(out.score.nll, score::support_size(out.l_hat), n, p, cfg.gamma_bic);
    return out;
}

}  // namespace

FitResult fit_covariance(const sem::SampleCovariance& s, int n, const RrcfConfig& cfg) {
    return fit_impl(s, n, cfg, std::nullopt);
}

FitResult fit(const sem::DataMatrix& x, const RrcfConfig& cfg) {
    return fit_covariance(sem::sample_covariance(x), x.n(), cfg);
}

RrcfConfig apply_point(const RrcfConfig& cfg, const TuningPoint& point) {
    RrcfConfig out = cfg;
    out.mcp.lambda = point.lambda;
    out.mcp.gamma = point.gamma;
    if (point.mu) out.relax.mu = *point.mu;
    if (point.eta) out.relax.eta = *point.eta;
    return out;
}

TuningResult tune_covariance(const sem::SampleCovariance& s, int n, const TuningGrid& grid, const RrcfConfig& cfg) {
    grid.validate();
    cfg.validate();
    const bool relaxation_grid = n < s.dim();

    std::vector<TuningPoint> points;
    for (double lambda : grid.lambdas)
        for (double gamma : grid.gammas) {
            if (!relaxation_grid) {
                points.push_back({lambda, gamma, std::nullopt, std::nullopt});
                continue;
            }
            for (double mu : grid.mus) {
                if (grid.etas.empty()) {
                    points.push_back({lambda, gamma, mu, std::nullopt});
                    continue;
                }
                for (double eta : grid.etas) points.push_back({lambda, gamma, mu, eta});
            }
        }

    // The first P-step depends only on the relaxation settings, not on
    // (lambda, gamma), so it is shared between grid points.
    std::map<std::tuple<double, double, bool>, PStep> first_steps;
    const Matrix& sm = s.matrix();
    const Matrix l0 = sm.diagonal().cwiseSqrt().cwiseInverse().asDiagonal();

    TuningResult result;
    result.table.reserve(points.size());
    for (const TuningPoint& point : points) {
        RrcfConfig local = apply_point(cfg, point);
        local.outer_k_max = grid.outer_k_max;
        local.gamma_bic = grid.gamma_bic;
        local.validate();
        const auto key = std::make_tuple(local.relax.mu, local.relax.eta.value_or(0.0), local.relax.eta.has_value());
        auto it = first_steps.find(key);
        if (it == first_steps.end()) {
            Rng rng(local.seed);
            it = first_steps.emplace(key, run_p_step(local, l0, sm, n, Permutation::identity(s.dim()), rng)).first;
        }
        const FitResult fitted = fit_impl(s, n, local, it->second);
        result.table.push_back({point, fitted.ebic_value, score::support_size(fitted.l_hat), fitted.score.nll});
    }

    for (std::size_t i = 1; i < result.table.size(); ++i)
        if (result.table[i].ebic < result.table[result.best_index].ebic) result.best_index = i;
    result.best = result.table[result.best_index].point;
    return result;
}

TuningResult tune(const sem::DataMatrix& x, const TuningGrid& grid, const RrcfConfig& cfg) {
    return tune_covariance(sem::sample_covariance(x), x.n(), grid, cfg);
}

}  // namespace rrcf
