#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "iclasso/errors.hpp"
#include "iclasso/solver.hpp"
#include "iclasso/types.hpp"
#include "iclasso/weighted.hpp"

namespace iclasso {

enum class Estimator { lasso, conservative };

inline std::string_view to_string(Estimator e) { return e == Estimator::lasso ? "lasso" : "conservative"; }

inline Estimator parse_estimator(std::string_view s) {
    if (s == "lasso") return Estimator::lasso;
    if (s == "conservative") return Estimator::conservative;
    throw ConfigError("unknown estimator '" + std::string(s) + "' (expected lasso or conservative)");
}

inline const std::vector<double>& default_c2_values() {
    static const std::vector<double> v{0.01, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0};
    return v;
}

/// Exponent of the incentive-compatible grid: 1/8 for Lasso, 1/12 for Conservative Lasso.
inline double default_exponent(Estimator e) { return e == Estimator::lasso ? 1.0 / 8.0 : 1.0 / 12.0; }

struct TuningGrid {
    std::vector<double> c2_values;
    double exponent = 1.0 / 8.0;
    Index p = 0;
    std::vector<double> lambdas;
};

/// lambda_k = (2 + C2_k / (ln p)^2)^exponent
inline double grid_lambda(Index p, double exponent, double c2) {
    const double lp = std::log(static_cast<double>(p));
    return std::pow(2.0 + c2 / (lp * lp), exponent);
}

inline TuningGrid build_grid(Index p, double exponent, const std::vector<double>& c2_values = default_c2_values()) {
    if (p < 3) throw ConfigError("the tuning grid needs p >= 3, got p=" + std::to_string(p));
    if (!(exponent > 0.0) || !std::isfinite(exponent)) throw ConfigError("grid exponent must be positive");
    if (c2_values.empty()) throw ConfigError("C2 grid is empty");
    TuningGrid grid{c2_values, exponent, p, {}};
    grid.lambdas.reserve(c2_values.size());
    for (double c2 : c2_values) {
        if (!(c2 > 0.0) || !std::isfinite(c2)) throw ConfigError("C2 values must be positive");
        grid.lambdas.push_back(grid_lambda(p, exponent, c2));
    }
    return grid;
}

struct GicScore {
    double c2 = 0.0;
    double lambda = 0.0;
    double sigma_hat_sq = 0.0;
    Index s_hat = 0;
    double score = 0.0;
    bool degenerate = false;  ///< sigma_hat_sq was floored
};

inline constexpr double kSigmaFloor = 1e-12;

/// ln(sigma^2) + (s/n) ln(n) ln(ln p), with sigma^2 floored at kSigmaFloor.
inline double gic_score(double sigma_hat_sq, Index s_hat, Index n, Index p) {
    const double nn = static_cast<double>(n);
    return std::log(std::max(sigma_hat_sq, kSigmaFloor)) +
           static_cast<double>(s_hat) / nn * std::log(nn) * std::log(std::log(static_cast<double>(p)));
}

struct TuningSettings {
    SolverSettings solver{};
    double lambda_prec_multiplier = 1.0;
    bool warm_start = true;
    double tie_tol = 1e-12;  ///< score differences below this count as ties
};

struct GicSelection {
    double lambda_star = 0.0;
    std::size_t index_star = 0;      ///< position in grid order
    std::vector<GicScore> scores;    ///< grid order
    Vector beta_star;                ///< estimator output at lambda_star
    std::vector<std::string> warnings;
};

/// Index of the minimum score; near-ties resolve to the largest lambda.
inline std::size_t argmin_gic(const std::vector<GicScore>& scores, double tie_tol) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a].lambda > scores[b].lambda; });
    std::size_t best = order.front();
    for (std::size_t k = 1; k < order.size(); ++k)
        if (scores[order[k]].score < scores[best].score - tie_tol) best = order[k];
    return best;
}

/// Fits the estimator along the grid in descending lambda (warm-started
/// unless disabled) and picks the GIC minimizer.
inline GicSelection gic_select(const Matrix& X, const Vector& y, const TuningGrid& grid, Estimator estimator,
                               const TuningSettings& settings = {}) {
    if (grid.lambdas.empty()) throw ConfigError("empty tuning grid");
    if (grid.p != X.cols()) throw ConfigError("tuning grid was built for a different p");
    if (X.cols() < 3) throw ConfigError("GIC needs p >= 3");
    const Index n = X.rows();
    const Index p = X.cols();

    std::vector<std::size_t> order(grid.lambdas.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return grid.lambdas[a] > grid.lambdas[b]; });

    GicSelection sel;
    sel.scores.resize(grid.lambdas.size());
    std::vector<Vector> betas(grid.lambdas.size());
    std::optional<Vector> warm_first, warm_second;

    for (std::size_t k : order) {
        const double lambda = grid.lambdas[k];
        Vector beta;
        if (estimator == Estimator::lasso) {
            Fit f = fit_lasso(LassoProblem{X, y, lambda}, warm_first, settings.solver);
            beta = f.beta_hat;
            if (settings.warm_start) warm_first = std::move(f.beta_hat);
        } else {
            const double lp = lambda_prec_default(lambda, settings.lambda_prec_multiplier);
            ConservativeFit cf = fit_conservative(X, y, lambda, lp, settings.solver, warm_first, warm_second);
            beta = cf.second_step.beta_hat;
            if (settings.warm_start) {
                warm_first = std::move(cf.first_step.beta_hat);
                warm_second = std::move(cf.second_step.beta_hat);
            }
        }
        GicScore& s = sel.scores[k];
        s.c2 = k < grid.c2_values.size() ? grid.c2_values[k] : 0.0;
        s.lambda = lambda;
        s.sigma_hat_sq = (y - X * beta).squaredNorm() / static_cast<double>(n);
        s.s_hat = static_cast<Index>(support_of(beta, settings.solver.support_tol).size());
        s.degenerate = s.sigma_hat_sq < kSigmaFloor;
        s.score = gic_score(s.sigma_hat_sq, s.s_hat, n, p);
        if (s.degenerate)
            sel.warnings.push_back("degenerate fit at lambda=" + std::to_string(lambda) +
                                   ": residual variance floored at 1e-12");
        betas[k] = std::move(beta);
    }

    sel.index_star = argmin_gic(sel.scores, settings.tie_tol);
    sel.lambda_star = grid.lambdas[sel.index_star];
    sel.beta_star = std::move(betas[sel.index_star]);
    return sel;
}

enum class BoundRule { lasso, conservative };

/// Lower bound on lambda that guarantees incentive compatibility given an
/// estimate of the exception probability P(F^c).
inline double ic_lower_bound(double p_fc_estimate, double s0, double s1, BoundRule rule) {
    if (!(p_fc_estimate >= 0.0 && p_fc_estimate <= 1.0)) throw ConfigError("P(F^c) estimate must lie in [0, 1]");
    if (!(s0 > 0.0) || !(s1 > 0.0)) throw ConfigError("s0 and s1 must be positive");
    if (rule == BoundRule::lasso) return std::pow(p_fc_estimate, 1.0 / 8.0) / std::sqrt(s0);
    return std::max(std::pow(p_fc_estimate, 1.0 / 8.0) / (std::pow(s0, 0.25) * std::sqrt(s1)),
                    std::pow(p_fc_estimate, 1.0 / 12.0) / (std::cbrt(s0) * std::cbrt(s1)));
}

inline bool ic_lower_bound_ok(double lambda, double p_fc_estimate, double s0, double s1 = 1.0,
                              BoundRule rule = BoundRule::lasso) {
    return lambda >= ic_lower_bound(p_fc_estimate, s0, s1, rule);
}

} // namespace iclasso
