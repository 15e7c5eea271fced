#include "proprep/glm.hpp"

#include <cmath>

#include "proprep/util.hpp"

namespace proprep {

namespace {

double weighted_loglik(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& w, const Eigen::VectorXd& beta) {
    double ll = 0.0;
    const Eigen::VectorXd eta = x * beta;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        if (w[i] == 0.0) continue;
        double p = expit(eta[i]);
        ll += w[i] * (y[i] * std::log(p) + (1.0 - y[i]) * std::log(1.0 - p));
    }
    return ll;
}

}  // namespace

GlmFit fit_pooled_logistic(const Eigen::MatrixXd& design, const Eigen::VectorXd& outcome,
                           const Eigen::VectorXd& case_weights, std::vector<std::string> columns,
                           const GlmOptions& options) {
    const Eigen::Index n = design.rows();
    const Eigen::Index p = design.cols();
    if (outcome.size() != n || case_weights.size() != n)
        throw NumericError("design, outcome, and weights must have equal row counts");
    if (p == 0) throw NumericError("empty design matrix");
    if ((case_weights.array() < 0.0).any())
        throw NumericError("case weights must be nonnegative");

    double wy1 = 0.0, wy0 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) (outcome[i] > 0.5 ? wy1 : wy0) += case_weights[i];
    if (wy1 == 0.0 || wy0 == 0.0)
        throw NumericError("degenerate outcome: both levels need positive weight");

    if (columns.empty())
        for (Eigen::Index j = 0; j < p; ++j) columns.push_back("x" + std::to_string(j));

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd score(p);
    Eigen::MatrixXd hessian(p, p);
    double ll = weighted_loglik(design, outcome, case_weights, beta);

    auto evaluate = [&](const Eigen::VectorXd& b) {
        score.setZero();
        hessian.setZero();
        const Eigen::VectorXd eta = design * b;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (case_weights[i] == 0.0) continue;
            double pi = expit(eta[i]);
            double r = case_weights[i] * (outcome[i] - pi);
            double v = case_weights[i] * pi * (1.0 - pi);
            score.noalias() += r * design.row(i).transpose();
            hessian.selfadjointView<Eigen::Lower>().rankUpdate(design.row(i).transpose(), v);
        }
        hessian = hessian.selfadjointView<Eigen::Lower>();
        hessian.diagonal().array() += options.ridge;
    };

    GlmFit fit;
    const double separation_bound = 1e3;
    bool converged = false;
    int iter = 0;
    for (; iter < options.max_iterations; ++iter) {
        evaluate(beta);
        if (score.cwiseAbs().maxCoeff() < options.tol) {
            converged = true;
            break;
        }
        Eigen::VectorXd step = hessian.ldlt().solve(score);
        // Step-halving until the weighted log-likelihood does not decrease.
        double scale = 1.0;
        double ll_new = ll;
        Eigen::VectorXd beta_new = beta;
        for (int h = 0; h < 40; ++h) {
            beta_new = beta + scale * step;
            ll_new = weighted_loglik(design, outcome, case_weights, beta_new);
            if (ll_new >= ll - 1e-14 * std::abs(ll)) break;
            scale *= 0.5;
        }
        beta = beta_new;
        ll = ll_new;
        if (beta.cwiseAbs().maxCoeff() > separation_bound) {
            Eigen::Index worst;
            beta.cwiseAbs().maxCoeff(&worst);
            throw NumericError("complete separation detected: coefficient of '" +
                               columns[worst] + "' diverges");
        }
    }
    if (!converged) {
        evaluate(beta);
        if (score.cwiseAbs().maxCoeff() >= options.tol)
            throw NumericError("logistic fit did not converge in " +
                               std::to_string(options.max_iterations) + " iterations (max score " +
                               format_double(score.cwiseAbs().maxCoeff()) + ")");
        converged = true;
    }

    // The probability clamp flattens the likelihood once |eta| ~ 36, so a
    // separated fit can satisfy the score tolerance at large coefficients;
    // catch that here rather than report a bogus MLE.
    if (beta.cwiseAbs().maxCoeff() > 30.0) {
        Eigen::Index worst;
        beta.cwiseAbs().maxCoeff(&worst);
        throw NumericError("complete separation detected: coefficient of '" + columns[worst] +
                           "' diverges");
    }

    // One polishing step: quadratic convergence puts the score near machine
    // precision, which saturated fits rely on.
    evaluate(beta);
    Eigen::VectorXd polish = hessian.ldlt().solve(score);
    Eigen::VectorXd beta_polished = beta + polish;
    double ll_polished = weighted_loglik(design, outcome, case_weights, beta_polished);
    if (ll_polished >= ll) {
        beta = beta_polished;
        ll = ll_polished;
    }
    evaluate(beta);

    fit.coef = beta;
    fit.columns = std::move(columns);
    fit.converged = true;
    fit.iterations = iter;
    fit.loglik = ll;
    fit.covariance = hessian.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
    return fit;
}

double predict_prob(const GlmFit& fit, std::span<const double> row) {
    if (static_cast<Eigen::Index>(row.size()) != fit.coef.size())
        throw NumericError("design row width " + std::to_string(row.size()) +
                           " does not match fit width " + std::to_string(fit.coef.size()));
    double eta = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) eta += row[j] * fit.coef[j];
    return expit(eta);
}

double max_abs_score(const GlmFit& fit, const Eigen::MatrixXd& design,
                     const Eigen::VectorXd& outcome, const Eigen::VectorXd& case_weights) {
    Eigen::VectorXd score = Eigen::VectorXd::Zero(fit.coef.size());
    const Eigen::VectorXd eta = design * fit.coef;
    for (Eigen::Index i = 0; i < design.rows(); ++i)
        score.noalias() += case_weights[i] * (outcome[i] - expit(eta[i])) * design.row(i).transpose();
    return score.cwiseAbs().maxCoeff();
}

}  // namespace proprep
