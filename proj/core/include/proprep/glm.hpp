#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "proprep/errors.hpp"

namespace proprep {

struct GlmOptions {
    double tol = 1e-8;          // convergence on the max absolute score
    int max_iterations = 100;
    double ridge = 1e-10;       // Hessian diagonal damping for collinear bases
};

struct GlmFit {
    Eigen::VectorXd coef;
    std::vector<std::string> columns;
    bool converged = false;
    int iterations = 0;
    double loglik = 0.0;
    Eigen::MatrixXd covariance;  // inverse observed information at the solution

    double se(int j) const { return std::sqrt(covariance(j, j)); }
};

// Weighted Bernoulli MLE: maximizes sum_i w_i [y_i log p_i + (1-y_i) log(1-p_i)]
// with p = expit(X beta), by damped Newton steps with step-halving. Converged
// when max_j |sum_i w_i (y_i - p_i) x_ij| < tol; one extra Newton step then
// polishes the root. Throws NumericError on non-convergence and on complete
// separation (named offending column).
GlmFit fit_pooled_logistic(const Eigen::MatrixXd& design, const Eigen::VectorXd& outcome,
                           const Eigen::VectorXd& case_weights,
                           std::vector<std::string> columns = {},
                           const GlmOptions& options = {});

// expit(row . coef), clamped to [1e-15, 1 - 1e-15].
double predict_prob(const GlmFit& fit, std::span<const double> row);

// Max absolute component of the weighted score at the fitted coefficients.
double max_abs_score(const GlmFit& fit, const Eigen::MatrixXd& design,
                     const Eigen::VectorXd& outcome, const Eigen::VectorXd& case_weights);

}  // namespace proprep
