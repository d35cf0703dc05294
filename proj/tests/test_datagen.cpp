#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "iclasso/datagen.hpp"
#include "iclasso/io.hpp"
#include "oracles.hpp"

namespace iclasso {
namespace {

TEST(BuildBeta0, BaselineDesignP10) {
    const Vector b = build_beta0(10, 5);
    const double expected[] = {1, 0, 0, 0, 0, 0, 1, 1, 1, 1};
    ASSERT_EQ(b.size(), 10);
    for (int j = 0; j < 10; ++j) EXPECT_EQ(b(j), expected[j]) << j;
}

TEST(BuildBeta0, NoZeroBlock) { EXPECT_EQ(build_beta0(3, 3), Vector::Ones(3)); }

TEST(BuildBeta0, SingleActive) {
    Vector e = Vector::Zero(5);
    e(0) = 1.0;
    EXPECT_EQ(build_beta0(5, 1), e);
}

TEST(BuildBeta0, RejectsBadSparsity) {
    EXPECT_THROW(build_beta0(4, 5), ConfigError);
    EXPECT_THROW(build_beta0(4, 0), ConfigError);
}

TEST(BuildBeta0, SparsityAndNorm) {
    for (Index p : {5, 17, 100, 300}) {
        const Vector b = build_beta0(p, 5);
        EXPECT_EQ((b.array() != 0.0).count(), 5);
        EXPECT_DOUBLE_EQ(b.norm(), std::sqrt(5.0));
    }
}

TEST(ToeplitzSigma, ThreeByThree) {
    const Matrix s = toeplitz_sigma(3, 0.5);
    Matrix e(3, 3);
    e << 1, 0.5, 0.25, 0.5, 1, 0.5, 0.25, 0.5, 1;
    EXPECT_EQ(s, e);
}

TEST(ToeplitzSigma, IndependenceIsIdentity) { EXPECT_EQ(toeplitz_sigma(2, 0.0), Matrix::Identity(2, 2)); }

TEST(ToeplitzSigma, PositiveDefiniteByJacobiOracle) {
    const Matrix s = toeplitz_sigma(4, 0.5);
    std::vector<std::vector<double>> a(4, std::vector<double>(4));
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) a[i][j] = s(i, j);
    const auto ev = test::jacobi_eigenvalues(a);
    EXPECT_GT(ev.front(), 0.0);
    // trace check on the oracle itself
    EXPECT_NEAR(ev[0] + ev[1] + ev[2] + ev[3], 4.0, 1e-12);
}

TEST(ToeplitzSigma, RejectsUnitRho) {
    EXPECT_THROW(toeplitz_sigma(3, 1.0), ConfigError);
    EXPECT_THROW(toeplitz_sigma(3, -1.5), ConfigError);
}

TEST(Cholesky, ReproducesSigma) {
    for (Index p : {1, 4, 50, 120}) {
        const Matrix s = toeplitz_sigma(p, 0.5);
        const Matrix L = cholesky_lower(s);
        EXPECT_LE((L * L.transpose() - s).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_TRUE(L.isLowerTriangular());
    }
}

TEST(Cholesky, NonPositiveDefiniteReportsCondition) {
    Matrix bad(2, 2);
    bad << 1, 2, 2, 1;
    try {
        cholesky_lower(bad);
        FAIL() << "expected NumericError";
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("min eigenvalue"), std::string::npos);
    }
}

TEST(SampleDataset, DeterministicPerSeed) {
    DgpConfig c;
    c.p = 100;
    c.n = 200;
    c.seed = 42;
    const Dataset a = sample_dataset(c);
    const Dataset b = sample_dataset(c);
    EXPECT_EQ(a.X, b.X);
    EXPECT_EQ(a.y, b.y);
    EXPECT_EQ(a.u, b.u);
    c.seed = 43;
    EXPECT_NE(sample_dataset(c).X, a.X);
}

TEST(SampleDataset, ReconstructionIdentity) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        DgpConfig c;
        c.p = 30 + static_cast<Index>(seed);
        c.n = 40;
        c.seed = seed;
        const Dataset d = sample_dataset(c);
        EXPECT_LE((d.y - d.X * d.beta0 - d.u).lpNorm<Eigen::Infinity>(), 1e-12);
    }
}

double sample_correlation(const Vector& a, const Vector& b) {
    const double ma = a.mean(), mb = b.mean();
    const Vector ca = a.array() - ma, cb = b.array() - mb;
    return ca.dot(cb) / std::sqrt(ca.squaredNorm() * cb.squaredNorm());
}

TEST(SampleDataset, LargeSampleCorrelation) {
    for (double rho : {0.0, 0.5}) {
        DgpConfig c;
        c.p = 2;
        c.n = 100000;
        c.s0 = 1;
        c.rho = rho;
        c.seed = 2024;
        const Dataset d = sample_dataset(c);
        EXPECT_NEAR(sample_correlation(d.X.col(0), d.X.col(1)), rho, 0.02) << "rho=" << rho;
        EXPECT_NEAR(d.u.squaredNorm() / c.n, 1.0, 0.02);
    }
}

TEST(SampleDataset, ValidatesConfig) {
    DgpConfig c;
    c.p = 3;
    c.s0 = 4;
    EXPECT_THROW(sample_dataset(c), ConfigError);
    c.s0 = 2;
    c.n = 1;
    EXPECT_THROW(sample_dataset(c), ConfigError);
    c.n = 10;
    c.rho = 1.0;
    EXPECT_THROW(sample_dataset(c), ConfigError);
}

TEST(SampleNewUser, TruthfulReport) {
    const NewUser u = sample_new_user(10, 3, 0.0, 5);
    EXPECT_EQ(u.report, u.x_new);
    EXPECT_TRUE(u.x_new.allFinite());
}

TEST(SampleNewUser, ConstantLie) {
    const NewUser u = sample_new_user(3, 3, 2.0, 11);
    for (int j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(u.report(j), u.x_new(j) + 2.0);
}

TEST(SampleNewUser, SharedDrawAcrossLies) {
    const NewUser small = sample_new_user(50, 3, 0.2, 77);
    const NewUser large = sample_new_user(50, 3, 2.0, 77);
    EXPECT_EQ(small.x_new, large.x_new);
    EXPECT_NE(small.report, large.report);
}

TEST(SampleNewUser, PrefixStableInP) {
    const NewUser a = sample_new_user(100, 3, 0.0, 9);
    const NewUser b = sample_new_user(300, 3, 0.0, 9);
    EXPECT_EQ(a.x_new, b.x_new.head(100));
}

TEST(SampleNewUser, HeavyTailedT3Moments) {
    // t3: mean 0, variance 3, and P(|T| > 3.182) = 0.05.
    const NewUser u = sample_new_user(200000, 3, 0.0, 3);
    EXPECT_NEAR(u.x_new.mean(), 0.0, 0.03);
    const double tail = static_cast<double>((u.x_new.array().abs() > 3.182446305284263).count()) / 200000.0;
    EXPECT_NEAR(tail, 0.05, 0.003);
}

TEST(SampleNewUser, RejectsBadArguments) {
    EXPECT_THROW(sample_new_user(0, 3, 0.0, 1), ConfigError);
    EXPECT_THROW(sample_new_user(3, 0, 0.0, 1), ConfigError);
}

TEST(DatasetCsv, RoundTripIsBitExact) {
    DgpConfig c;
    c.p = 7;
    c.n = 25;
    c.seed = 8;
    const Dataset d = sample_dataset(c);
    std::stringstream ss;
    write_dataset_csv(ss, d.X, d.y);
    const std::string text = ss.str();
    EXPECT_EQ(text.substr(0, text.find('\n')), "y,x1,x2,x3,x4,x5,x6,x7");
    const Dataset back = read_dataset_csv(ss);
    EXPECT_EQ(back.X, d.X);
    EXPECT_EQ(back.y, d.y);
}

TEST(DatasetCsv, RejectsMalformedInput) {
    std::istringstream bad_header("z,x1\n1,2\n");
    EXPECT_THROW(read_dataset_csv(bad_header), ConfigError);
    std::istringstream ragged("y,x1,x2\n1,2\n");
    EXPECT_THROW(read_dataset_csv(ragged), ConfigError);
    std::istringstream junk("y,x1\n1,abc\n");
    EXPECT_THROW(read_dataset_csv(junk), ConfigError);
}

} // namespace
} // namespace iclasso
