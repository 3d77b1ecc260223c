#include "oracles.hpp"

#include <sss/dataset.hpp>
#include <sss/sem.hpp>

#include <gtest/gtest.h>

#include <algorithm>

using namespace sss;

namespace {

Eigen::MatrixXd random_normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = standard_normal(rng);
        }
    }
    return m;
}

CovMatrix random_cov(int p, Rng& rng, Eigen::Index n = 200) {
    const Eigen::MatrixXd a = random_normal_matrix(p + 6, p, rng);
    return CovMatrix(a.transpose() * a / (p + 6) + 0.1 * Eigen::MatrixXd::Identity(p, p), n);
}

Dataset names_for(Eigen::MatrixXd m) {
    std::vector<std::string> names;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        names.push_back("x" + std::to_string(c));
    }
    return Dataset(std::move(m), std::move(names));
}

} // namespace

TEST(Dataset, RequiresMoreRowsThanColumns) {
    EXPECT_THROW(Dataset(Eigen::MatrixXd::Zero(3, 2), {"a", "b"}), ConfigError);
    EXPECT_THROW(Dataset(Eigen::MatrixXd::Zero(10, 2), {"a"}), StructuralError);
}

TEST(SampleCovariance, PerfectlyCorrelatedColumnsAreDegenerate) {
    Rng rng(1);
    Eigen::MatrixXd m = random_normal_matrix(50, 3, rng);
    m.col(2) = 2.0 * m.col(0);
    EXPECT_THROW(sample_covariance(names_for(m)), DegenerateDataError);
}

TEST(SampleCovariance, IndependentColumnsNearZeroOffDiagonal) {
    Rng rng(2);
    const CovMatrix s = sample_covariance(names_for(random_normal_matrix(10000, 4, rng)));
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            if (i != j) {
                EXPECT_LT(std::abs(s.matrix()(i, j)), 0.05);
            }
        }
    }
}

TEST(SampleCovariance, TranslationInvariant) {
    Rng rng(3);
    const Eigen::MatrixXd m = random_normal_matrix(100, 3, rng);
    Eigen::MatrixXd shifted = m;
    shifted.rowwise() += Eigen::RowVector3d(5.0, -3.0, 100.0);
    EXPECT_TRUE(sample_covariance(names_for(m)).matrix().isApprox(sample_covariance(names_for(shifted)).matrix(),
                                                                   1e-9));
}

TEST(SampleCovariance, SymmetricWithUnbiasedDivisor) {
    Eigen::MatrixXd m(4, 2);
    m << 1, 2, 2, 1, 3, 5, 6, 0;
    const CovMatrix s = sample_covariance(names_for(m));
    // var of {1,2,3,6} with divisor 3.
    EXPECT_NEAR(s.matrix()(0, 0), 14.0 / 3.0, 1e-12);
    EXPECT_EQ(s.matrix()(0, 1), s.matrix()(1, 0));
}

TEST(MlFit, SaturatedModelFitsExactly) {
    Rng rng(4);
    for (int k = 0; k < 20; ++k) {
        const CovMatrix s = random_cov(5, rng);
        const FitResult fit = ml_fit(random_complete_dag(5, {}, rng), s);
        EXPECT_LT(fit.chi2, 1e-8);
        EXPECT_EQ(fit.df, 0);
        EXPECT_EQ(fit.complexity, 10);
    }
}

TEST(MlFit, EmptyDagOnDiagonalCovariance) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(3, 3);
    d.diagonal() << 1.0, 2.5, 0.7;
    const FitResult fit = ml_fit(Dag(3), CovMatrix(d, 100));
    EXPECT_LT(fit.chi2, 1e-12);
    EXPECT_EQ(fit.df, 3);
}

TEST(MlFit, ChainMatchesNumericalOptimizer) {
    Eigen::MatrixXd s(3, 3);
    s << 1.0, 0.5, 0.3, 0.5, 1.2, 0.6, 0.3, 0.6, 1.1;
    const Dag chain = Dag::from_arcs(3, {{0, 1}, {1, 2}});
    const FitResult fit = ml_fit(chain, CovMatrix(s, 200));
    // Frozen from the Nelder-Mead oracle: chi2 = 199 * 0.00395517984 = 0.787081.
    EXPECT_NEAR(fit.chi2, 0.787081, 0.787081 * 1e-4);
    EXPECT_NEAR(fit.f_ml, oracle::fml_min(chain, s), 1e-4 * fit.f_ml);
    EXPECT_NEAR(fit.coefficients(0, 1), 0.5, 1e-12);
    EXPECT_NEAR(fit.coefficients(1, 2), 0.5, 1e-12);
    EXPECT_NEAR(fit.residual_variances(2), 0.8, 1e-12);
    EXPECT_EQ(fit.df, 1);
    EXPECT_NEAR(fit.bic, fit.chi2 + std::log(200.0) * 5, 1e-12);
}

TEST(MlFit, MatchesOptimizerOnRandomInstances) {
    Rng rng(5);
    for (int k = 0; k < 15; ++k) {
        const int p = 2 + static_cast<int>(uniform_index(rng, 4));
        const CovMatrix s = random_cov(p, rng);
        const Dag g = random_dag(p, {}, rng);
        const FitResult fit = ml_fit(g, s);
        const double reference = oracle::fml_min(g, s.matrix());
        EXPECT_NEAR(fit.f_ml, reference, 1e-4 * std::max(std::abs(reference), 1e-6)) << "instance " << k;
    }
}

TEST(MlFit, NestedMonotonicity) {
    Rng rng(6);
    for (int k = 0; k < 50; ++k) {
        const CovMatrix s = random_cov(6, rng);
        const Dag super = random_dag(6, {}, rng);
        Bits sub = super.bits();
        for (auto& b : sub) {
            b = b && coin(rng) ? 1 : 0;
        }
        const double small = ml_fit(Dag::from_bits(sub, 6), s).chi2;
        const double big = ml_fit(super, s).chi2;
        EXPECT_LE(big, small + 1e-8);
    }
}

TEST(MlFit, InvariantToRowPermutationAndShift) {
    Rng rng(7);
    Eigen::MatrixXd m = random_normal_matrix(80, 4, rng);
    m.col(1) += 0.8 * m.col(0);
    m.col(3) += 0.5 * m.col(1) - 0.4 * m.col(2);
    Eigen::MatrixXd permuted = m.colwise().reverse();
    permuted.col(2).array() += 42.0;
    const Dag g = Dag::from_arcs(4, {{0, 1}, {1, 3}, {2, 3}});
    const double a = ml_fit(g, sample_covariance(names_for(m))).chi2;
    const double b = ml_fit(g, sample_covariance(names_for(permuted))).chi2;
    EXPECT_NEAR(a, b, 1e-9 * std::max(1.0, a));
}

TEST(MlFit, NonNegativeChi2) {
    Rng rng(8);
    for (int k = 0; k < 100; ++k) {
        const CovMatrix s = random_cov(5, rng);
        EXPECT_GE(ml_fit(random_dag(5, {}, rng), s).chi2, 0.0);
    }
}

TEST(MlFit, SizeMismatchIsStructuralError) {
    EXPECT_THROW(ml_fit(Dag(3), CovMatrix(Eigen::MatrixXd::Identity(4, 4), 10)), StructuralError);
}

TEST(CovMatrix, RejectsSingular) {
    Eigen::MatrixXd s = Eigen::MatrixXd::Ones(2, 2);
    EXPECT_THROW(CovMatrix(s, 10), DegenerateDataError);
}

TEST(Complexity, CountsArcs) {
    Rng rng(9);
    EXPECT_EQ(complexity(Dag(4)), 0);
    EXPECT_EQ(complexity(random_complete_dag(6, {}, rng)), 15);
}
