#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "iclasso/datagen.hpp"
#include "iclasso/errors.hpp"
#include "iclasso/parallel.hpp"
#include "iclasso/rng.hpp"
#include "iclasso/solver.hpp"
#include "iclasso/summation.hpp"
#include "iclasso/tuning.hpp"
#include "iclasso/types.hpp"
#include "iclasso/weighted.hpp"

namespace iclasso {

// ---------------------------------------------------------------------------
// Maximal statistics
// ---------------------------------------------------------------------------

struct MaxStats {
    double m1 = 0.0;  ///< max_{i,j} |X_ij u_i|
    double m2 = 0.0;  ///< max_{i,j,l} |X_il X_ij - Sigma_lj|
    double m3 = 0.0;  ///< ||x_new||_inf
    double m4 = 0.0;  ///< ||report - x_new||_inf
};

inline MaxStats compute_max_stats(const Dataset& ds, const NewUser& user, const Matrix& sigma) {
    const Index n = ds.n();
    const Index p = ds.p();
    if (ds.u.size() != n) throw ConfigError("dataset noise vector has the wrong length");
    if (sigma.rows() != p || sigma.cols() != p) throw ConfigError("covariance dimension does not match the design");
    if (user.x_new.size() != p || user.report.size() != p) throw ConfigError("new user dimension does not match the design");

    MaxStats s;
    s.m1 = (ds.X.array().colwise() * ds.u.array()).abs().maxCoeff();
    for (Index i = 0; i < n; ++i) {
        const auto row = ds.X.row(i);
        for (Index l = 0; l < p; ++l)
            for (Index j = l; j < p; ++j) s.m2 = std::max(s.m2, std::abs(row(l) * row(j) - sigma(l, j)));
    }
    s.m3 = user.x_new.lpNorm<Eigen::Infinity>();
    s.m4 = (user.report - user.x_new).lpNorm<Eigen::Infinity>();
    return s;
}

// ---------------------------------------------------------------------------
// Restricted-eigenvalue cone sampling and the events A1, A2
// ---------------------------------------------------------------------------

/// Direction with few nonzeros, stored as (index, value) pairs.
struct SparseDirection {
    std::vector<Index> idx;
    std::vector<double> val;
};

/// Random directions in the cone {||d_{S^c}||_1 <= 3 sqrt(s) ||d_S||_2}.
/// The on-support part is Gaussian; between 0 and 3s off-support
/// coordinates are drawn either uniformly or next to the support, and
/// their l1 mass is scaled to a uniform fraction of the cone radius.
inline std::vector<SparseDirection> sample_cone_directions(Index p, const std::vector<Index>& support, int count,
                                                            std::uint64_t seed) {
    const Index s = static_cast<Index>(support.size());
    if (s < 1) throw ConfigError("cone sampling needs a nonempty support");
    std::vector<char> in_support(static_cast<std::size_t>(p), 0);
    for (Index j : support) in_support[static_cast<std::size_t>(j)] = 1;
    std::vector<Index> off;
    for (Index j = 0; j < p; ++j)
        if (!in_support[static_cast<std::size_t>(j)]) off.push_back(j);

    // off-support coordinates ordered by distance to the support
    std::vector<Index> near = off;
    auto dist = [&](Index j) {
        Index d = p;
        for (Index k : support) d = std::min(d, std::abs(j - k));
        return d;
    };
    std::stable_sort(near.begin(), near.end(), [&](Index a, Index b) { return dist(a) < dist(b); });

    Engine eng = make_engine(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const Index kmax = std::min<Index>(static_cast<Index>(off.size()), 3 * s);
    std::uniform_int_distribution<Index> kdist(0, kmax);
    const double radius_factor = 3.0 * std::sqrt(static_cast<double>(s));

    std::vector<SparseDirection> dirs;
    dirs.reserve(static_cast<std::size_t>(count));
    std::vector<Index> pool;
    for (int c = 0; c < count; ++c) {
        SparseDirection d;
        double on_norm_sq = 0.0;
        for (Index j : support) {
            const double v = normal(eng);
            d.idx.push_back(j);
            d.val.push_back(v);
            on_norm_sq += v * v;
        }
        const Index k = kdist(eng);
        if (k > 0) {
            const bool use_near = unif(eng) < 0.5;
            if (use_near) {
                const Index window = std::min<Index>(static_cast<Index>(near.size()), 2 * k);
                pool.assign(near.begin(), near.begin() + window);
            } else {
                pool = off;
            }
            std::shuffle(pool.begin(), pool.end(), eng);
            std::vector<double> vals(static_cast<std::size_t>(k));
            double l1 = 0.0;
            for (auto& v : vals) {
                v = normal(eng);
                l1 += std::abs(v);
            }
            const double target = unif(eng) * radius_factor * std::sqrt(on_norm_sq);
            const double scale = l1 > 0.0 ? target / l1 : 0.0;
            for (Index t = 0; t < k; ++t) {
                d.idx.push_back(pool[static_cast<std::size_t>(t)]);
                d.val.push_back(vals[static_cast<std::size_t>(t)] * scale);
            }
        }
        dirs.push_back(std::move(d));
    }
    return dirs;
}

inline bool in_cone(const Vector& delta, const std::vector<Index>& support) {
    std::vector<char> mask(static_cast<std::size_t>(delta.size()), 0);
    double on = 0.0;
    for (Index j : support) {
        mask[static_cast<std::size_t>(j)] = 1;
        on += delta(j) * delta(j);
    }
    double off = 0.0;
    for (Index j = 0; j < delta.size(); ++j)
        if (!mask[static_cast<std::size_t>(j)]) off += std::abs(delta(j));
    return on > 0.0 && off <= 3.0 * std::sqrt(static_cast<double>(support.size())) * std::sqrt(on);
}

namespace detail {

inline double support_norm_sq(const SparseDirection& d, std::size_t s) {
    double v = 0.0;
    for (std::size_t t = 0; t < s; ++t) v += d.val[t] * d.val[t];
    return v;
}

// d' (X'X/n) d / ||d_S||^2
inline double empirical_quotient(const Matrix& X, const SparseDirection& d, std::size_t s, Vector& work) {
    work.setZero();
    for (std::size_t t = 0; t < d.idx.size(); ++t) work.noalias() += d.val[t] * X.col(d.idx[t]);
    return work.squaredNorm() / static_cast<double>(X.rows()) / support_norm_sq(d, s);
}

// d' Sigma d / ||d_S||^2
inline double population_quotient(const Matrix& sigma, const SparseDirection& d, std::size_t s) {
    double q = 0.0;
    for (std::size_t a = 0; a < d.idx.size(); ++a)
        for (std::size_t b = 0; b < d.idx.size(); ++b) q += d.val[a] * d.val[b] * sigma(d.idx[a], d.idx[b]);
    return q / support_norm_sq(d, s);
}

} // namespace detail

struct EventReport {
    bool a1_holds = false;
    bool a2_holds = false;
    double noise_stat = 0.0;     ///< 2 ||u'X/n||_inf
    double re_estimate = 0.0;    ///< sampled cone minimum against X'X/n
    double re_population = 0.0;  ///< sampled cone minimum against Sigma
    bool error_direction_used = false;
};

struct EventSettings {
    int cone_samples = 1000;
    SolverSettings solver{};
};

/// Evaluates the noise event and the empirical restricted-eigenvalue event
/// for a synthetic dataset. Both cone minima are taken over the same sampled
/// directions (plus the realized Lasso error when it lies in the cone), so
/// each is an upper bound on the true infimum.
inline EventReport check_events(const Dataset& ds, const Matrix& sigma, double lambda, std::uint64_t seed,
                                const EventSettings& settings = {}) {
    if (ds.u.size() != ds.n() || ds.beta0.size() != ds.p())
        throw ConfigError("check_events needs a synthetic dataset with known noise and beta0");
    if (settings.cone_samples < 1) throw ConfigError("cone_samples must be positive");
    const double n = static_cast<double>(ds.n());
    const std::vector<Index> support = support_of(ds.beta0, 0.0);
    const std::size_t s = support.size();

    EventReport rep;
    rep.noise_stat = 2.0 * (ds.X.transpose() * ds.u / n).lpNorm<Eigen::Infinity>();
    rep.a1_holds = rep.noise_stat <= lambda;

    rep.re_estimate = std::numeric_limits<double>::infinity();
    rep.re_population = std::numeric_limits<double>::infinity();
    Vector work(ds.n());
    for (const auto& d : sample_cone_directions(ds.p(), support, settings.cone_samples, seed)) {
        rep.re_estimate = std::min(rep.re_estimate, detail::empirical_quotient(ds.X, d, s, work));
        rep.re_population = std::min(rep.re_population, detail::population_quotient(sigma, d, s));
    }

    const Fit fit = fit_lasso(LassoProblem{ds.X, ds.y, lambda}, std::nullopt, settings.solver);
    const Vector delta = fit.beta_hat - ds.beta0;
    if (in_cone(delta, support)) {
        double on = 0.0;
        for (Index j : support) on += delta(j) * delta(j);
        rep.re_estimate = std::min(rep.re_estimate, (ds.X * delta).squaredNorm() / n / on);
        rep.re_population = std::min(rep.re_population, delta.dot(sigma * delta) / on);
        rep.error_direction_used = true;
    }
    rep.a2_holds = rep.re_estimate >= rep.re_population / 2.0;
    return rep;
}

struct MonteCarloSettings {
    EventSettings events{};
    double lambda_prec_multiplier = 1.0;
    unsigned threads = 0;
};

/// Replication r uses dataset seed derive_seed(seed, {replication, r}) and
/// cone seed derive_seed(seed, {cone, r}); lambda plays no part in either.
inline double estimate_exception_probability(const DgpConfig& config, double lambda, int reps, std::uint64_t seed,
                                             const MonteCarloSettings& settings = {}) {
    config.validate();
    if (reps < 1) throw ConfigError("reps must be at least 1");
    const Matrix sigma = toeplitz_sigma(config.p, config.rho);
    std::vector<char> failed(static_cast<std::size_t>(reps), 0);
    parallel_for(static_cast<std::size_t>(reps), settings.threads, [&](std::size_t r) {
        DgpConfig c = config;
        c.seed = derive_seed(seed, {stream::replication, r});
        const Dataset ds = sample_dataset(c);
        const EventReport ev = check_events(ds, sigma, lambda, derive_seed(seed, {stream::cone, r}), settings.events);
        failed[r] = !(ev.a1_holds && ev.a2_holds);
    });
    const auto bad = std::count(failed.begin(), failed.end(), 1);
    return static_cast<double>(bad) / static_cast<double>(reps);
}

// ---------------------------------------------------------------------------
// Moment bounds
// ---------------------------------------------------------------------------

struct MomentReport {
    int k = 1;
    double mean_l1_error_k = 0.0;  ///< mean of ||beta_hat - beta0||_1^k
    double mean_l1_norm_k = 0.0;   ///< mean of ||beta_hat||_1^k
    double ratio_error = 0.0;       ///< mean_l1_error_k^(1/k) / (s0 lambda)
    double ratio_norm = 0.0;       ///< mean_l1_norm_k^(1/k) / sqrt(s0)
    int reps = 0;
};

inline Vector fit_estimator(const Matrix& X, const Vector& y, Estimator estimator, double lambda,
                            double lambda_prec_multiplier, const SolverSettings& solver) {
    if (estimator == Estimator::lasso) return fit_lasso(LassoProblem{X, y, lambda}, std::nullopt, solver).beta_hat;
    return fit_conservative(X, y, lambda, lambda_prec_default(lambda, lambda_prec_multiplier), solver)
        .second_step.beta_hat;
}

inline MomentReport estimate_moment_bounds(const DgpConfig& config, Estimator estimator, double lambda, int k,
                                           int reps, std::uint64_t seed, const MonteCarloSettings& settings = {}) {
    config.validate();
    if (k < 1) throw ConfigError("moment order k must be at least 1");
    if (reps < 30) throw ConfigError("moment estimation needs at least 30 replications");
    if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");

    std::vector<double> err(static_cast<std::size_t>(reps)), norm(static_cast<std::size_t>(reps));
    parallel_for(static_cast<std::size_t>(reps), settings.threads, [&](std::size_t r) {
        DgpConfig c = config;
        c.seed = derive_seed(seed, {stream::replication, r});
        const Dataset ds = sample_dataset(c);
        const Vector b = fit_estimator(ds.X, ds.y, estimator, lambda, settings.lambda_prec_multiplier,
                                       settings.events.solver);
        err[r] = std::pow((b - ds.beta0).lpNorm<1>(), k);
        norm[r] = std::pow(b.lpNorm<1>(), k);
    });

    MomentReport rep;
    rep.k = k;
    rep.reps = reps;
    rep.mean_l1_error_k = compensated_mean(err);
    rep.mean_l1_norm_k = compensated_mean(norm);
    const double s0 = static_cast<double>(config.s0);
    rep.ratio_error = std::pow(rep.mean_l1_error_k, 1.0 / k) / (s0 * lambda);
    rep.ratio_norm = std::pow(rep.mean_l1_norm_k, 1.0 / k) / std::sqrt(s0);
    return rep;
}

// ---------------------------------------------------------------------------
// Incentive-compatibility decomposition and growth condition
// ---------------------------------------------------------------------------

struct IcDecomposition {
    double quad = 0.0;    ///< (D' b)^2
    double cross1 = 0.0;  ///< (b' D) (x' (b - beta0))
    double cross2 = 0.0;  ///< ((b - beta0)' x) (D' b)

    double total() const { return quad + cross1 + cross2; }
};

/// Splits (report'b - x'beta0)^2 - (x'b - x'beta0)^2 into quad + cross1 + cross2,
/// with D = report - x the misreport.
inline IcDecomposition ic_decomposition(const Vector& fit_beta, const Vector& beta0, const NewUser& user) {
    const Index p = fit_beta.size();
    if (beta0.size() != p || user.x_new.size() != p || user.report.size() != p)
        throw ConfigError("ic_decomposition: dimension mismatch");
    const Vector d = user.report - user.x_new;
    const double misreport_shift = d.dot(fit_beta);
    const double truth_error = user.x_new.dot(fit_beta - beta0);
    return {misreport_shift * misreport_shift, misreport_shift * truth_error, truth_error * misreport_shift};
}

enum class SparsityExponent { three_halves, two };

/// s0^a sqrt(ln p / n) M3 M4 with a = 3/2, or a = 2 for the weaker-signal variant.
inline double check_ic_condition(double s0, Index n, Index p, double m3, double m4,
                                 SparsityExponent variant = SparsityExponent::three_halves) {
    if (n < 3) throw ConfigError("check_ic_condition needs n >= 3");
    if (p < 1) throw ConfigError("p must be positive");
    const double a = variant == SparsityExponent::three_halves ? 1.5 : 2.0;
    return std::pow(s0, a) * std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(n)) * m3 * m4;
}

} // namespace iclasso
