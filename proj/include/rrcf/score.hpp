#pragma once

// Gaussian negative log-likelihood in the Cholesky parameterisation, the
// minimax concave penalty, and the extended BIC used for tuning.

#include "rrcf/sem_model.hpp"

namespace rrcf::score {

struct McpParams {
    double lambda = 0.1;
    double gamma = 2.0;

    /// Throws InvalidArgument unless lambda >= 0 and gamma > 1.
    void validate() const;
};

/// rho(theta) = lambda |theta| - theta^2 / (2 gamma) for |theta| < gamma lambda,
/// gamma lambda^2 / 2 otherwise.
double mcp(double theta, const McpParams& params);

struct ScoreBreakdown {
    double nll = 0.0;      // 1/2 tr(P S P^t L^t L) - sum log L_jj
    double penalty = 0.0;  // sum of rho(|L_ij|) over the strict lower triangle
    double total = 0.0;    // nll + penalty
};

/// 1/2 tr(P S P^t L^t L) - sum_j log L_jj.
double neg_log_likelihood(const sem::CholeskyFactor& l, const Permutation& perm, const sem::SampleCovariance& s);

/// Same, for an already permuted covariance S^P.
double neg_log_likelihood_permuted(const Matrix& l, const Matrix& sp);

ScoreBreakdown penalized_score(const sem::CholeskyFactor& l, const Permutation& perm, const sem::SampleCovariance& s,
                               const McpParams& params);

/// Row-decoupled objective minimised by the coordinate-descent solver:
/// tr(L S^P L^t) - 2 sum log L_ii + sum rho(|L_ij|) = 2 nll + penalty.
/// Equals the sum of the per-row objectives h_i.
double decoupled_objective(const ScoreBreakdown& score);

/// Gradient of neg_log_likelihood with respect to the free entries of L:
/// lower triangle of L (P S P^t) - diag(1 / L_jj). Entries above the
/// diagonal are exactly zero.
Matrix nll_gradient_in_l(const sem::CholeskyFactor& l, const Permutation& perm, const sem::SampleCovariance& s);

/// Number of nonzero strict-lower-triangle entries.
int support_size(const sem::CholeskyFactor& l);

/// -2 loglik + s log n + 4 s gamma_bic log p, with loglik the maximised
/// log-likelihood.
double ebic_from_loglik(double loglik, int support, int n, int p, double gamma_bic);

/// eBIC for a per-sample negative log-likelihood value (the normalisation of
/// neg_log_likelihood, where S = X^t X / n). The total log-likelihood is
/// loglik = -n * nll_value.
double ebic(double nll_value, int support, int n, int p, double gamma_bic);

/// Lower-triangular L with L^t L = sigma^{-1} (inverse of the standard lower
/// Cholesky factor of sigma). This is the unpenalised maximiser for a fixed
/// ordering when sigma is positive definite.
Matrix mle_cholesky(const Matrix& sigma);

}  // namespace rrcf::score
