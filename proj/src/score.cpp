#include "rrcf/score.hpp"

#include <cmath>

namespace rrcf::score {

void McpParams::validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("MCP lambda must be a finite value >= 0");
    if (!(gamma > 1.0) || !std::isfinite(gamma)) throw InvalidArgument("MCP gamma must be a finite value > 1");
}

double mcp(double theta, const McpParams& params) {
    const double a = std::abs(theta);
    const double knot = params.gamma * params.lambda;
    if (a < knot) return params.lambda * a - a * a / (2.0 * params.gamma);
    return 0.5 * params.gamma * params.lambda * params.lambda;
}

namespace {

void check_dims(const sem::CholeskyFactor& l, const Permutation& perm, const sem::SampleCovariance& s) {
    if (l.dim() != s.dim() || perm.size() != s.dim()) throw InvalidArgument("dimension mismatch between L, P and S");
}

double strict_lower_penalty(const Matrix& l, const McpParams& params) {
    double penalty = 0.0;
    for (Index j = 0; j < l.cols(); ++j)
        for (Index i = j + 1; i < l.rows(); ++i) penalty += mcp(l(i, j), params);
    return penalty;
}

}  // namespace

double neg_log_likelihood_permuted(const Matrix& l, const Matrix& sp) {
    double log_det = 0.0;
    for (Index j = 0; j < l.rows(); ++j) {
        if (!(l(j, j) > 0.0)) throw InvalidArgument("negative log-likelihood needs a strictly positive diagonal");
        log_det += std::log(l(j, j));
    }
    // tr(S^P L^t L) = tr(L S^P L^t) = sum over rows of l_i^t S^P l_i.
    const auto lower = l.triangularView<Eigen::Lower>();
    const Matrix ls = lower * sp;
    const double trace = (ls.cwiseProduct(l)).sum();
    return 0.5 * trace - log_det;
}

double neg_log_likelihood(const sem::CholeskyFactor& l, const Permutation& perm, const sem::SampleCovariance& s) {
    check_dims(l, perm, s);
    return neg_log_likelihood_permuted(l.matrix(), perm.conjugate(s.matrix()));
}

ScoreBreakdown penalized_score(const sem::CholeskyFactor& l, const Permutation& perm, const sem::SampleCovariance& s,
                               const McpParams& params) {
    params.validate();
    ScoreBreakdown out;
    out.nll = neg_log_likelihood(l, perm, s);
    out.penalty = strict_lower_penalty(l.matrix(), params);
    out.total = out.nll + out.penalty;
    return out;
}

double decoupled_objective(const ScoreBreakdown& score) { return 2.0 * score.nll + score.penalty; }

Matrix nll_gradient_in_l(const sem::CholeskyFactor& l, const Permutation& perm, const sem::SampleCovariance& s) {
    check_dims(l, perm, s);
    const Matrix sp = perm.conjugate(s.matrix());
    Matrix grad = l.matrix() * sp;
    grad.triangularView<Eigen::StrictlyUpper>().setZero();
    for (Index j = 0; j < grad.rows(); ++j) grad(j, j) -= 1.0 / l(j, j);
    return grad;
}

int support_size(const sem::CholeskyFactor& l) {
    const Matrix& m = l.matrix();
    int count = 0;
    for (Index j = 0; j < m.cols(); ++j)
        for (Index i = j + 1; i < m.rows(); ++i)
            if (m(i, j) != 0.0) ++count;
    return count;
}

double ebic_from_loglik(double loglik, int support, int n, int p, double gamma_bic) {
    if (n < 1 || p < 1 || support < 0) throw InvalidArgument("eBIC requires n >= 1, p >= 1 and support >= 0");
    if (!(gamma_bic >= 0.0 && gamma_bic <= 1.0)) throw InvalidArgument("eBIC gamma must lie in [0, 1]");
    const double s = static_cast<double>(support);
    return -2.0 * loglik + s * std::log(static_cast<double>(n)) + 4.0 * s * gamma_bic * std::log(static_cast<double>(p));
}

double ebic(double nll_value, int support, int n, int p, double gamma_bic) {
    return ebic_from_loglik(-static_cast<double>(n) * nll_value, support, n, p, gamma_bic);
}

Matrix mle_cholesky(const Matrix& sigma) {
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success) throw DegenerateInput("covariance is not positive definite");
    const Index p = sigma.rows();
    Matrix l = llt.matrixL().solve(Matrix::Identity(p, p));
    l.triangularView<Eigen::StrictlyUpper>().setZero();
    return l;
}

}  // namespace rrcf::score
