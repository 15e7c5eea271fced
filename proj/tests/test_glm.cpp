#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "proprep/glm.hpp"
#include "proprep/util.hpp"

using namespace proprep;

namespace {

struct Problem {
    Eigen::MatrixXd x;
    Eigen::VectorXd y, w;
};

Problem random_problem(unsigned seed, int n, int p, bool random_weights) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Problem prob;
    prob.x.resize(n, p);
    prob.y.resize(n);
    prob.w.resize(n);
    Eigen::VectorXd beta(p);
    for (int j = 0; j < p; ++j) beta[j] = 0.5 * normal(rng);
    for (int i = 0; i < n; ++i) {
        prob.x(i, 0) = 1.0;
        for (int j = 1; j < p; ++j) prob.x(i, j) = normal(rng);
        const double eta = prob.x.row(i).dot(beta);
        prob.y[i] = unif(rng) < expit(eta) ? 1.0 : 0.0;
        prob.w[i] = random_weights ? 0.25 + 2.0 * unif(rng) : 1.0;
    }
    return prob;
}

double weighted_loglik(const Problem& prob, const Eigen::VectorXd& beta) {
    double ll = 0.0;
    for (int i = 0; i < prob.x.rows(); ++i) {
        const double p = expit(prob.x.row(i).dot(beta));
        ll += prob.w[i] * (prob.y[i] * std::log(p) + (1.0 - prob.y[i]) * std::log(1.0 - p));
    }
    return ll;
}

}  // namespace

TEST_CASE("intercept-only fit is logit of the weighted mean") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Ones(10, 1);
    Eigen::VectorXd y(10), w = Eigen::VectorXd::Ones(10);
    y << 1, 1, 1, 0, 0, 0, 0, 0, 0, 0;
    const auto fit = fit_pooled_logistic(x, y, w);
    CHECK(fit.coef[0] == doctest::Approx(logit(0.3)).epsilon(1e-10));

    w << 2, 2, 2, 1, 1, 1, 1, 1, 1, 1;  // weighted mean 6/13
    const auto wfit = fit_pooled_logistic(x, y, w);
    CHECK(wfit.coef[0] == doctest::Approx(logit(6.0 / 13.0)).epsilon(1e-10));
}

TEST_CASE("saturated dummy design reproduces stratum proportions") {
    // Three strata with direct proportions 2/5, 1/4, 3/3-eps avoided (keep interior).
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(12, 3);
    Eigen::VectorXd y(12), w = Eigen::VectorXd::Ones(12);
    // stratum 0: rows 0-4, 2 ones; stratum 1: rows 5-8, 1 one; stratum 2: rows 9-11, 2 ones.
    for (int i = 0; i < 5; ++i) x(i, 0) = 1;
    for (int i = 5; i < 9; ++i) x(i, 1) = 1;
    for (int i = 9; i < 12; ++i) x(i, 2) = 1;
    y << 1, 1, 0, 0, 0, 1, 0, 0, 0, 1, 1, 0;
    const auto fit = fit_pooled_logistic(x, y, w);
    const double direct[3] = {2.0 / 5.0, 1.0 / 4.0, 2.0 / 3.0};
    for (int s = 0; s < 3; ++s) {
        std::vector<double> row(3, 0.0);
        row[s] = 1.0;
        CHECK(std::abs(predict_prob(fit, row) - direct[s]) < 1e-12);
    }
}

TEST_CASE("doubling all case weights leaves the coefficients unchanged") {
    auto prob = random_problem(11, 300, 4, true);
    const auto fit1 = fit_pooled_logistic(prob.x, prob.y, prob.w);
    const auto fit2 = fit_pooled_logistic(prob.x, prob.y, 2.0 * prob.w);
    CHECK((fit1.coef - fit2.coef).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("score at the solution is below 1e-8") {
    auto prob = random_problem(17, 500, 5, true);
    const auto fit = fit_pooled_logistic(prob.x, prob.y, prob.w);
    CHECK(max_abs_score(fit, prob.x, prob.y, prob.w) < 1e-8);
}

TEST_CASE("analytic score matches central finite differences") {
    auto prob = random_problem(23, 200, 4, true);
    Eigen::VectorXd beta(4);
    beta << 0.2, -0.4, 0.1, 0.3;
    const double h = 1e-6;
    for (int j = 0; j < 4; ++j) {
        Eigen::VectorXd up = beta, dn = beta;
        up[j] += h;
        dn[j] -= h;
        const double fd = (weighted_loglik(prob, up) - weighted_loglik(prob, dn)) / (2.0 * h);
        double analytic = 0.0;
        for (int i = 0; i < prob.x.rows(); ++i)
            analytic += prob.w[i] * (prob.y[i] - expit(prob.x.row(i).dot(beta))) * prob.x(i, j);
        CHECK(std::abs(fd - analytic) / std::max(1.0, std::abs(analytic)) < 1e-6);
    }
}

TEST_CASE("permuting rows leaves the coefficients unchanged") {
    auto prob = random_problem(31, 250, 4, true);
    const auto fit1 = fit_pooled_logistic(prob.x, prob.y, prob.w);
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(prob.x.rows());
    perm.setIdentity();
    std::mt19937 rng(5);
    std::shuffle(perm.indices().data(), perm.indices().data() + perm.indices().size(), rng);
    Eigen::MatrixXd xp = perm * prob.x;
    Eigen::VectorXd yp = perm * prob.y;
    Eigen::VectorXd wp = perm * prob.w;
    const auto fit2 = fit_pooled_logistic(xp, yp, wp);
    CHECK((fit1.coef - fit2.coef).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("complete separation raises an error naming the offending column") {
    Eigen::MatrixXd x(8, 2);
    Eigen::VectorXd y(8), w = Eigen::VectorXd::Ones(8);
    for (int i = 0; i < 8; ++i) {
        x(i, 0) = 1.0;
        x(i, 1) = i < 4 ? -1.0 : 1.0;
        y[i] = i < 4 ? 0.0 : 1.0;
    }
    CHECK_THROWS_WITH_AS(fit_pooled_logistic(x, y, w, {"(intercept)", "sep"}),
                         doctest::Contains("separation"), NumericError);
}

TEST_CASE("degenerate outcome is rejected") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Ones(4, 1);
    Eigen::VectorXd y = Eigen::VectorXd::Ones(4), w = Eigen::VectorXd::Ones(4);
    CHECK_THROWS_AS(fit_pooled_logistic(x, y, w), NumericError);
}

TEST_CASE("predict_prob") {
    GlmFit fit;
    fit.coef = Eigen::VectorXd::Zero(1);
    SUBCASE("zero coefficients give one half") {
        CHECK(predict_prob(fit, std::vector<double>{1.0}) == 0.5);
    }
    SUBCASE("intercept logit(0.3) gives 0.3") {
        fit.coef[0] = logit(0.3);
        CHECK(predict_prob(fit, std::vector<double>{1.0}) == doctest::Approx(0.3).epsilon(1e-12));
    }
    SUBCASE("linear predictor 40 clamps to 1 - 1e-15") {
        fit.coef[0] = 40.0;
        CHECK(predict_prob(fit, std::vector<double>{1.0}) == 1.0 - 1e-15);
    }
    SUBCASE("width mismatch") {
        CHECK_THROWS_AS(predict_prob(fit, std::vector<double>{1.0, 2.0}), NumericError);
    }
}
