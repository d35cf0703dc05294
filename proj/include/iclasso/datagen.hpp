#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "iclasso/errors.hpp"
#include "iclasso/rng.hpp"
#include "iclasso/types.hpp"

namespace iclasso {

/// Synthetic design: Gaussian rows with Toeplitz covariance rho^|j-m|,
/// sparse unit signal and Gaussian noise.
struct DgpConfig {
    Index p = 100;
    Index n = 200;
    Index s0 = 5;
    double rho = 0.5;
    double noise_sd = 1.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (p < 1) throw ConfigError("p must be positive");
        if (n < 2) throw ConfigError("n must be at least 2");
        if (s0 < 1 || s0 > p) throw ConfigError("s0 must lie in [1, p]");
        if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("rho must lie in [0, 1)");
        if (!(noise_sd > 0.0) || !std::isfinite(noise_sd)) throw ConfigError("noise_sd must be positive");
    }
};

struct Dataset {
    Matrix X;
    Vector y;
    Vector beta0;
    Vector u;

    Index n() const { return X.rows(); }
    Index p() const { return X.cols(); }
};

/// Attributes of the strategic (n+1)-th user and what they report.
struct NewUser {
    Vector x_new;
    Vector report;

    Vector lie() const { return report - x_new; }
};

/// (1, 0_{p-s0}, 1_{s0-1}): first coordinate and the last s0-1 are active.
inline Vector build_beta0(Index p, Index s0) {
    if (p < 1) throw ConfigError("p must be positive");
    if (s0 < 1 || s0 > p) throw ConfigError("s0 must lie in [1, p], got s0=" + std::to_string(s0) + ", p=" + std::to_string(p));
    Vector beta = Vector::Zero(p);
    beta(0) = 1.0;
    beta.tail(s0 - 1).setOnes();
    return beta;
}

inline Matrix toeplitz_sigma(Index p, double rho) {
    if (p < 1) throw ConfigError("p must be positive");
    if (!(std::abs(rho) < 1.0)) throw ConfigError("toeplitz_sigma requires |rho| < 1");
    Matrix sigma(p, p);
    for (Index j = 0; j < p; ++j)
        for (Index m = 0; m < p; ++m)
            sigma(j, m) = std::pow(rho, static_cast<double>(std::abs(j - m)));
    return sigma;
}

/// Lower-triangular L with L L^T = sigma. Throws NumericError with a
/// conditioning report when sigma is not positive definite.
inline Matrix cholesky_lower(const Matrix& sigma) {
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(sigma, Eigen::EigenvaluesOnly);
        std::ostringstream msg;
        msg << "Cholesky factorization failed: covariance is not positive definite"
            << " (min eigenvalue " << es.eigenvalues().minCoeff()
            << ", max eigenvalue " << es.eigenvalues().maxCoeff() << ")";
        throw NumericError(msg.str());
    }
    return llt.matrixL();
}

inline Dataset sample_dataset(const DgpConfig& config) {
    config.validate();
    const Matrix L = cholesky_lower(toeplitz_sigma(config.p, config.rho));

    Engine eng = make_engine(config.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    // Draw row by row so that row i only depends on the draws before it.
    Matrix Z(config.n, config.p);
    for (Index i = 0; i < config.n; ++i)
        for (Index j = 0; j < config.p; ++j) Z(i, j) = normal(eng);
    Vector u(config.n);
    for (Index i = 0; i < config.n; ++i) u(i) = config.noise_sd * normal(eng);

    Dataset ds;
    ds.X = Z * L.transpose();
    ds.beta0 = build_beta0(config.p, config.s0);
    ds.u = std::move(u);
    ds.y = ds.X * ds.beta0 + ds.u;
    return ds;
}

/// Student-t(df) as N(0,1) / sqrt(chi2_df / df), chi2 built from df squared normals.
inline double draw_student_t(Engine& eng, int df) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const double z = normal(eng);
    double chi2 = 0.0;
    for (int k = 0; k < df; ++k) {
        const double g = normal(eng);
        chi2 += g * g;
    }
    return z / std::sqrt(chi2 / df);
}

/// Draws x_new with p i.i.d. t(df) coordinates and reports x_new + lie.
/// Coordinates are drawn in order, so x_new for a smaller p is a prefix
/// of x_new for a larger p under the same seed.
inline NewUser sample_new_user(Index p, int df, double lie, std::uint64_t seed) {
    if (p < 1) throw ConfigError("p must be positive");
    if (df < 1) throw ConfigError("degrees of freedom must be at least 1");
    if (!std::isfinite(lie)) throw ConfigError("lie must be finite");
    Engine eng = make_engine(seed);
    NewUser user;
    user.x_new.resize(p);
    for (Index j = 0; j < p; ++j) user.x_new(j) = draw_student_t(eng, df);
    user.report = user.x_new.array() + lie;
    return user;
}

} // namespace iclasso
