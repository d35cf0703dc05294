#pragma once

#include <cmath>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "iclasso/datagen.hpp"
#include "iclasso/diagnostics.hpp"
#include "iclasso/errors.hpp"
#include "iclasso/parallel.hpp"
#include "iclasso/rng.hpp"
#include "iclasso/summation.hpp"
#include "iclasso/tuning.hpp"
#include "iclasso/types.hpp"

namespace iclasso {

struct ExperimentConfig {
    std::vector<Index> p_values{100, 200, 300};
    std::vector<Index> n_values{100, 200, 300};
    std::vector<double> lies{2.0, 0.2};
    std::vector<Estimator> estimators{Estimator::lasso, Estimator::conservative};
    int iterations = 200;
    std::uint64_t master_seed = 1;
    DgpConfig dgp{};                     ///< p, n and seed are overridden per cell
    std::vector<double> c2_values = default_c2_values();
    std::optional<double> exponent{};    ///< default: 1/8 for Lasso, 1/12 for Conservative Lasso
    double lambda_prec_multiplier = 1.0;
    bool freeze_lambda = false;          ///< select lambda on iteration 0 only
    int t_df = 3;
    unsigned threads = 0;
    SolverSettings solver{};

    static constexpr int paper_scale_iterations = 1000;

    void validate() const {
        if (p_values.empty() || n_values.empty() || lies.empty())
            throw ConfigError("p, n and lie lists must be nonempty");
        if (estimators.empty()) throw ConfigError("no estimator selected");
        if (iterations < 1) throw ConfigError("iterations must be at least 1");
        if (c2_values.empty()) throw ConfigError("C2 grid is empty");
        if (exponent && !(*exponent > 0.0)) throw ConfigError("grid exponent must be positive");
        if (!(lambda_prec_multiplier > 0.0)) throw ConfigError("lambda_prec multiplier must be positive");
        if (t_df < 1) throw ConfigError("t degrees of freedom must be at least 1");
        for (Index p : p_values) {
            if (p < 3) throw ConfigError("every p must be at least 3");
            if (dgp.s0 > p) throw ConfigError("s0 exceeds p=" + std::to_string(p));
        }
        for (double lie : lies)
            if (!std::isfinite(lie)) throw ConfigError("lies must be finite");
        for (Index n : n_values)
            if (n < 2) throw ConfigError("every n must be at least 2");
        DgpConfig probe = dgp;
        probe.p = p_values.front();
        probe.n = n_values.front();
        probe.validate();
    }
};

struct ICCell {
    Estimator estimator = Estimator::lasso;
    Index p = 0;
    Index n = 0;
    double lie = 0.0;
    double truth_mse = 0.0;   ///< mean (x'b - x'beta0)^2
    double report_mse = 0.0;  ///< mean (r'b - x'beta0)^2
    double lambda_used = 0.0; ///< mean selected lambda
    double quad = 0.0;
    double cross1 = 0.0;
    double cross2 = 0.0;
    int iterations = 0;
    std::uint64_t seed = 0;
};

struct ExperimentResult {
    std::vector<ICCell> cells;
    std::vector<std::string> failures;
    bool ok() const { return failures.empty(); }
};

/// Seed of the dataset used by iteration k of the (p, n) cells. Independent
/// of estimator and lie, so all of them see the same data.
inline std::uint64_t dataset_seed(std::uint64_t master, Index p, Index n, int k) {
    return derive_seed(master, {stream::dataset, static_cast<std::uint64_t>(p), static_cast<std::uint64_t>(n),
                                static_cast<std::uint64_t>(k)});
}

/// x_new comes from its own substream: it depends only on the master seed
/// (and p through its length), never on n, the lie or the estimator.
inline NewUser experiment_new_user(std::uint64_t master, Index p, int df, double lie) {
    return sample_new_user(p, df, lie, derive_seed(master, {stream::new_user}));
}

namespace detail {

struct CellGroup {
    Estimator estimator;
    Index p;
    Index n;
    std::vector<double> lies;
};

struct IterationOutcome {
    double truth_sq = 0.0;
    double lambda = 0.0;
    std::vector<double> report_sq, quad, cross1, cross2;  // one entry per lie
};

class GroupRunner {
public:
    GroupRunner(const CellGroup& group, const ExperimentConfig& config)
        : group_(group),
          config_(config),
          grid_(build_grid(group.p, config.exponent.value_or(default_exponent(group.estimator)), config.c2_values)),
          user_(experiment_new_user(config.master_seed, group.p, config.t_df, 0.0)) {
        tuning_.solver = config.solver;
        tuning_.lambda_prec_multiplier = config.lambda_prec_multiplier;
    }

    Dataset dataset(int k) const {
        DgpConfig c = config_.dgp;
        c.p = group_.p;
        c.n = group_.n;
        c.seed = dataset_seed(config_.master_seed, group_.p, group_.n, k);
        return sample_dataset(c);
    }

    void freeze_lambda() { frozen_ = gic_select(dataset(0).X, dataset(0).y, grid_, group_.estimator, tuning_).lambda_star; }

    IterationOutcome run(int k) const {
        const Dataset ds = dataset(k);
        IterationOutcome out;
        Vector beta;
        if (frozen_) {
            out.lambda = *frozen_;
            beta = fit_estimator(ds.X, ds.y, group_.estimator, out.lambda, config_.lambda_prec_multiplier,
                                 config_.solver);
        } else {
            GicSelection sel = gic_select(ds.X, ds.y, grid_, group_.estimator, tuning_);
            out.lambda = sel.lambda_star;
            beta = std::move(sel.beta_star);
        }
        const double target = user_.x_new.dot(ds.beta0);
        const double truth_pred = user_.x_new.dot(beta);
        out.truth_sq = (truth_pred - target) * (truth_pred - target);
        for (double lie : group_.lies) {
            NewUser liar{user_.x_new, user_.x_new.array() + lie};
            const double report_pred = liar.report.dot(beta);
            out.report_sq.push_back((report_pred - target) * (report_pred - target));
            const IcDecomposition dec = ic_decomposition(beta, ds.beta0, liar);
            out.quad.push_back(dec.quad);
            out.cross1.push_back(dec.cross1);
            out.cross2.push_back(dec.cross2);
        }
        return out;
    }

    std::vector<ICCell> aggregate(const std::vector<IterationOutcome>& its) const {
        std::vector<ICCell> cells;
        CompensatedSum truth, lambda;
        for (const auto& it : its) {
            truth.add(it.truth_sq);
            lambda.add(it.lambda);
        }
        const double m = static_cast<double>(its.size());
        for (std::size_t l = 0; l < group_.lies.size(); ++l) {
            CompensatedSum rep, q, c1, c2;
            for (const auto& it : its) {
                rep.add(it.report_sq[l]);
                q.add(it.quad[l]);
                c1.add(it.cross1[l]);
                c2.add(it.cross2[l]);
            }
            ICCell cell;
            cell.estimator = group_.estimator;
            cell.p = group_.p;
            cell.n = group_.n;
            cell.lie = group_.lies[l];
            cell.truth_mse = truth.value() / m;
            cell.report_mse = group_.lies[l] == 0.0 ? cell.truth_mse : rep.value() / m;
            cell.lambda_used = lambda.value() / m;
            cell.quad = q.value() / m;
            cell.cross1 = c1.value() / m;
            cell.cross2 = c2.value() / m;
            cell.iterations = static_cast<int>(its.size());
            cell.seed = config_.master_seed;
            cells.push_back(cell);
        }
        return cells;
    }

private:
    CellGroup group_;
    const ExperimentConfig& config_;
    TuningGrid grid_;
    NewUser user_;
    TuningSettings tuning_;
    std::optional<double> frozen_;
};

} // namespace detail

/// Runs every (estimator, p, n, lie) cell. Iterations of all cells share one
/// worker pool; results are reduced in iteration order, so the output does
/// not depend on the number of workers. A failing cell is reported in
/// `failures` and left out of `cells`.
inline ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();
    std::vector<detail::CellGroup> groups;
    for (Estimator e : config.estimators)
        for (Index p : config.p_values)
            for (Index n : config.n_values) groups.push_back({e, p, n, config.lies});

    std::vector<detail::GroupRunner> runners;
    runners.reserve(groups.size());
    for (const auto& g : groups) runners.emplace_back(g, config);

    const std::size_t iters = static_cast<std::size_t>(config.iterations);
    std::vector<std::string> group_error(groups.size());
    std::vector<int> group_error_iter(groups.size(), config.iterations);
    std::mutex err_mutex;
    auto record_error = [&](std::size_t g, int k, const std::exception& ex) {
        std::lock_guard lock(err_mutex);
        if (k < group_error_iter[g]) {
            group_error_iter[g] = k;
            group_error[g] = ex.what();
        }
    };

    if (config.freeze_lambda) {
        parallel_for(groups.size(), config.threads, [&](std::size_t g) {
            try {
                runners[g].freeze_lambda();
            } catch (const std::exception& ex) {
                record_error(g, 0, ex);
            }
        });
    }

    std::vector<char> skip(groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) skip[g] = !group_error[g].empty();

    std::vector<std::vector<detail::IterationOutcome>> outcomes(groups.size(),
                                                                std::vector<detail::IterationOutcome>(iters));
    parallel_for(groups.size() * iters, config.threads, [&](std::size_t task) {
        const std::size_t g = task / iters;
        const int k = static_cast<int>(task % iters);
        if (skip[g]) return;
        try {
            outcomes[g][static_cast<std::size_t>(k)] = runners[g].run(k);
        } catch (const std::exception& ex) {
            record_error(g, k, ex);
        }
    });

    ExperimentResult result;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (!group_error[g].empty()) {
            for (double lie : groups[g].lies)
                result.failures.push_back("cell (" + std::string(to_string(groups[g].estimator)) +
                                          ", p=" + std::to_string(groups[g].p) + ", n=" + std::to_string(groups[g].n) +
                                          ", lie=" + std::to_string(lie) + ") failed at iteration " +
                                          std::to_string(group_error_iter[g]) + ": " + group_error[g]);
            continue;
        }
        for (auto& cell : runners[g].aggregate(outcomes[g])) result.cells.push_back(cell);
    }
    return result;
}

/// Single cell. Identical to the matching cell of run_experiment.
inline ICCell run_cell(Estimator estimator, Index p, Index n, double lie, const ExperimentConfig& config) {
    ExperimentConfig c = config;
    c.estimators = {estimator};
    c.p_values = {p};
    c.n_values = {n};
    c.lies = {lie};
    ExperimentResult r = run_experiment(c);
    if (!r.ok()) throw NumericError(r.failures.front());
    return r.cells.front();
}

} // namespace iclasso
