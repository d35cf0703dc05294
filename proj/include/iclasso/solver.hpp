#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "iclasso/errors.hpp"
#include "iclasso/types.hpp"

namespace iclasso {

/// min_b (1/n)||y - X b||^2 + 2 lambda sum_j w_j |b_j|.
/// Holds references: the caller keeps X and y alive for the duration of a fit.
struct LassoProblem {
    const Matrix& X;
    const Vector& y;
    double lambda = 0.0;
    std::optional<Vector> weights{};  ///< absent means all ones

    Index n() const { return X.rows(); }
    Index p() const { return X.cols(); }
    double weight(Index j) const { return weights ? (*weights)(j) : 1.0; }

    void validate() const {
        if (X.rows() != y.size())
            throw ConfigError("X has " + std::to_string(X.rows()) + " rows but y has " + std::to_string(y.size()));
        if (X.rows() < 1 || X.cols() < 1) throw ConfigError("empty design matrix");
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be finite and nonnegative");
        if (weights) {
            if (weights->size() != X.cols()) throw ConfigError("weights length does not match the number of columns");
            for (Index j = 0; j < weights->size(); ++j) {
                const double w = (*weights)(j);
                if (!(w > 0.0 && w <= 1.0)) throw ConfigError("penalty weights must lie in (0, 1]");
            }
        }
        if (!X.allFinite() || !y.allFinite()) throw NumericError("non-finite entries in X or y");
    }
};

struct SolverSettings {
    double tol = 1e-8;           ///< max absolute coordinate change per sweep
    int max_sweeps = 10000;
    double kkt_tol = 1e-6;
    double support_tol = 1e-10;
    bool standardize = false;    ///< solve on columns scaled to unit mean square
    bool record_trace = false;   ///< keep the objective after every sweep
};

struct Fit {
    Vector beta_hat;
    double lambda = 0.0;
    std::vector<Index> support;
    double objective = 0.0;
    int sweeps = 0;
    bool converged = false;
    double kkt_violation = 0.0;
    std::vector<double> objective_trace;
};

inline double soft_threshold(double z, double gamma) {
    if (z > gamma) return z - gamma;
    if (z < -gamma) return z + gamma;
    return 0.0;
}

inline double predict(const Vector& beta, const Vector& x) {
    if (beta.size() != x.size())
        throw ConfigError("predict: beta has length " + std::to_string(beta.size()) + ", x has length " + std::to_string(x.size()));
    return x.dot(beta);
}

inline double penalty_l1(const LassoProblem& problem, const Vector& beta) {
    double s = 0.0;
    for (Index j = 0; j < beta.size(); ++j) s += problem.weight(j) * std::abs(beta(j));
    return s;
}

inline double lasso_objective(const LassoProblem& problem, const Vector& beta) {
    const double n = static_cast<double>(problem.n());
    return (problem.y - problem.X * beta).squaredNorm() / n + 2.0 * problem.lambda * penalty_l1(problem, beta);
}

/// Largest violation of the subgradient optimality conditions at beta.
inline double check_kkt(const LassoProblem& problem, const Vector& beta) {
    if (beta.size() != problem.p()) throw ConfigError("check_kkt: beta length does not match p");
    const double n = static_cast<double>(problem.n());
    const Vector g = problem.X.transpose() * (problem.y - problem.X * beta) / n;
    double worst = 0.0;
    for (Index j = 0; j < beta.size(); ++j) {
        const double pen = problem.lambda * problem.weight(j);
        const double v = beta(j) != 0.0 ? std::abs(g(j) - pen * (beta(j) > 0 ? 1.0 : -1.0))
                                        : std::max(std::abs(g(j)) - pen, 0.0);
        worst = std::max(worst, v);
    }
    return worst;
}

inline std::vector<Index> support_of(const Vector& beta, double support_tol) {
    std::vector<Index> s;
    for (Index j = 0; j < beta.size(); ++j)
        if (std::abs(beta(j)) > support_tol) s.push_back(j);
    return s;
}

namespace detail {

// Cyclic coordinate descent with an incrementally maintained residual.
// Full sweeps alternate with sweeps restricted to the current nonzeros;
// termination is only declared after a full sweep.
inline Fit coordinate_descent(const LassoProblem& problem, const std::optional<Vector>& init,
                              const SolverSettings& settings) {
    const Index n = problem.n();
    const Index p = problem.p();
    const double inv_n = 1.0 / static_cast<double>(n);
    const auto& X = problem.X;

    Vector beta = init ? *init : Vector::Zero(p);
    if (beta.size() != p) throw ConfigError("initial vector length does not match p");
    if (!beta.allFinite()) throw NumericError("non-finite initial vector");

    Vector a(p);
    for (Index j = 0; j < p; ++j) {
        a(j) = X.col(j).squaredNorm() * inv_n;
        if (a(j) == 0.0) {
            if (problem.lambda * problem.weight(j) == 0.0) throw DegenerateColumnError(static_cast<std::size_t>(j));
            beta(j) = 0.0;
        }
    }
    Vector pen(p);
    for (Index j = 0; j < p; ++j) pen(j) = problem.lambda * problem.weight(j);

    Vector r = problem.y - X * beta;

    Fit fit;
    fit.lambda = problem.lambda;

    auto update = [&](Index j) -> double {
        if (a(j) == 0.0) return 0.0;
        const double c = X.col(j).dot(r) * inv_n + a(j) * beta(j);
        const double next = soft_threshold(c, pen(j)) / a(j);
        const double delta = next - beta(j);
        if (delta != 0.0) {
            r.noalias() -= delta * X.col(j);
            beta(j) = next;
        }
        return std::abs(delta);
    };
    auto record = [&]() {
        if (settings.record_trace) {
            double l1 = 0.0;
            for (Index j = 0; j < p; ++j) l1 += pen(j) * std::abs(beta(j));
            fit.objective_trace.push_back(r.squaredNorm() * inv_n + 2.0 * l1);
        }
    };
    auto finite_or_throw = [&](double change) {
        if (!std::isfinite(change) || !r.allFinite())
            throw NumericError("non-finite value during coordinate descent at sweep " + std::to_string(fit.sweeps));
    };

    std::vector<Index> active;
    active.reserve(static_cast<std::size_t>(p));
    record();
    while (fit.sweeps < settings.max_sweeps) {
        double change = 0.0;
        for (Index j = 0; j < p; ++j) change = std::max(change, update(j));
        ++fit.sweeps;
        finite_or_throw(change);
        record();
        if (change <= settings.tol) {
            if (check_kkt(problem, beta) <= settings.kkt_tol) {
                fit.converged = true;
                break;
            }
            continue;
        }
        active.clear();
        for (Index j = 0; j < p; ++j)
            if (beta(j) != 0.0) active.push_back(j);
        while (fit.sweeps < settings.max_sweeps) {
            double inner = 0.0;
            for (Index j : active) inner = std::max(inner, update(j));
            ++fit.sweeps;
            finite_or_throw(inner);
            record();
            if (inner <= settings.tol) break;
        }
    }

    fit.beta_hat = std::move(beta);
    fit.objective = lasso_objective(problem, fit.beta_hat);
    fit.kkt_violation = check_kkt(problem, fit.beta_hat);
    if (fit.kkt_violation > settings.kkt_tol) fit.converged = false;
    fit.support = support_of(fit.beta_hat, settings.support_tol);
    return fit;
}

} // namespace detail

/// Solves the (weighted) Lasso by cyclic coordinate descent.
///
/// With settings.standardize the columns are rescaled to unit mean square
/// before solving; beta_hat is reported in the original units while
/// objective and kkt_violation refer to the rescaled problem.
inline Fit fit_lasso(const LassoProblem& problem, const std::optional<Vector>& init = std::nullopt,
                     const SolverSettings& settings = {}) {
    problem.validate();
    if (!(settings.tol > 0.0)) throw ConfigError("solver tolerance must be positive");
    if (settings.max_sweeps < 1) throw ConfigError("max_sweeps must be positive");
    if (!settings.standardize) return detail::coordinate_descent(problem, init, settings);

    const Index p = problem.p();
    Vector scale(p);
    for (Index j = 0; j < p; ++j) {
        const double ms = problem.X.col(j).squaredNorm() / static_cast<double>(problem.n());
        scale(j) = ms > 0.0 ? std::sqrt(ms) : 1.0;
    }
    const Matrix Xs = problem.X * scale.cwiseInverse().asDiagonal();
    LassoProblem scaled{Xs, problem.y, problem.lambda, problem.weights};
    std::optional<Vector> init_scaled;
    if (init) init_scaled = init->cwiseProduct(scale);
    Fit fit = detail::coordinate_descent(scaled, init_scaled, settings);
    fit.beta_hat = fit.beta_hat.cwiseQuotient(scale);
    fit.support = support_of(fit.beta_hat, settings.support_tol);
    return fit;
}

} // namespace iclasso
