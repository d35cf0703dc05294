#pragma once

#include <algorithm>
#include <cmath>
#include <optional>

#include "iclasso/errors.hpp"
#include "iclasso/solver.hpp"
#include "iclasso/types.hpp"

namespace iclasso {

struct WeightVector {
    Vector w;
    double lambda_prec = 0.0;
};

struct ConservativeFit {
    Fit first_step;
    WeightVector weights;
    Fit second_step;
};

/// w_j = lambda_prec / max(|beta_j|, lambda_prec). Zeroed coordinates keep
/// weight one; large first-step coefficients are penalized less.
inline WeightVector compute_weights(const Vector& first_step_beta, double lambda_prec) {
    if (!(lambda_prec > 0.0)) throw ConfigError("lambda_prec must be positive");
    WeightVector out;
    out.lambda_prec = lambda_prec;
    out.w.resize(first_step_beta.size());
    for (Index j = 0; j < first_step_beta.size(); ++j) {
        const double b = std::abs(first_step_beta(j));
        out.w(j) = b > lambda_prec ? lambda_prec / b : 1.0;
    }
    return out;
}

/// Operational lambda_prec: a multiple of lambda_n.
inline double lambda_prec_default(double lambda_n, double multiplier = 1.0) {
    if (!(lambda_n > 0.0)) throw ConfigError("lambda_n must be positive");
    if (!(multiplier > 0.0)) throw ConfigError("lambda_prec multiplier must be positive");
    return multiplier * lambda_n;
}

/// Sup-norm error radius of the first-step Lasso:
/// ||Theta||_inf * (lambda/2 + t1 * 24 lambda s0 / phi_sq + lambda).
/// Needs population quantities, so it is only used to reason about the multiplier.
inline double lambda_prec_theoretical(double lambda_n, double theta_linf, double t1, double s0, double phi_sq) {
    if (!(phi_sq > 0.0)) throw ConfigError("restricted eigenvalue must be positive");
    return theta_linf * (lambda_n / 2.0 + t1 * 24.0 * lambda_n * s0 / phi_sq + lambda_n);
}

/// Two-step Conservative Lasso at a common lambda_n.
/// The optional warm starts seed the first and second step respectively.
inline ConservativeFit fit_conservative(const Matrix& X, const Vector& y, double lambda_n, double lambda_prec,
                                        const SolverSettings& settings = {},
                                        const std::optional<Vector>& init_first = std::nullopt,
                                        const std::optional<Vector>& init_second = std::nullopt) {
    if (!(lambda_n > 0.0)) throw ConfigError("lambda_n must be positive");
    ConservativeFit out;
    out.first_step = fit_lasso(LassoProblem{X, y, lambda_n}, init_first, settings);
    out.weights = compute_weights(out.first_step.beta_hat, lambda_prec);
    const std::optional<Vector> second_init = init_second ? init_second : std::optional<Vector>(out.first_step.beta_hat);
    out.second_step = fit_lasso(LassoProblem{X, y, lambda_n, out.weights.w}, second_init, settings);
    return out;
}

} // namespace iclasso
