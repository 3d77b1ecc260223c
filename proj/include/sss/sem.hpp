#pragma once

#include <sss/dataset.hpp>
#include <sss/errors.hpp>
#include <sss/graph.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

namespace sss {

/// Sample covariance; symmetric and positive definite by construction.
class CovMatrix {
public:
    CovMatrix(Eigen::MatrixXd s, Eigen::Index sample_size) : s_(std::move(s)), n_(sample_size) {
        if (s_.rows() != s_.cols()) {
            throw StructuralError("covariance matrix must be square");
        }
        if (n_ < 2) {
            throw ConfigError("covariance needs a sample size of at least 2");
        }
        s_ = 0.5 * (s_ + s_.transpose()).eval();
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s_, Eigen::EigenvaluesOnly);
        const double smallest = eig.eigenvalues().size() ? eig.eigenvalues()(0) : 1.0;
        const double largest = eig.eigenvalues().size() ? eig.eigenvalues().maxCoeff() : 1.0;
        if (!(smallest > 1e-12 * std::max(1.0, largest))) {
            throw DegenerateDataError("covariance matrix is not positive definite (smallest eigenvalue " +
                                      std::to_string(smallest) + ")");
        }
        log_det_ = 2.0 * Eigen::LLT<Eigen::MatrixXd>(s_).matrixLLT().diagonal().array().log().sum();
    }

    const Eigen::MatrixXd& matrix() const { return s_; }
    Eigen::Index sample_size() const { return n_; }
    int dimension() const { return static_cast<int>(s_.rows()); }
    double log_det() const { return log_det_; }

private:
    Eigen::MatrixXd s_;
    Eigen::Index n_;
    double log_det_ = 0.0;
};

/// Unbiased (N-1) covariance of the dataset columns.
inline CovMatrix sample_covariance(const Dataset& d) {
    const Eigen::MatrixXd centered = d.values().rowwise() - d.values().colwise().mean();
    Eigen::MatrixXd s = (centered.transpose() * centered) / static_cast<double>(d.rows() - 1);
    return CovMatrix(std::move(s), d.rows());
}

struct FitResult {
    double chi2 = 0.0;
    int complexity = 0;
    int df = 0;
    double bic = 0.0;
    double f_ml = 0.0;
    Eigen::MatrixXd coefficients;  // (from, to) path weight
    Eigen::VectorXd residual_variances;
};

inline int complexity(const Dag& g) {
    return static_cast<int>(g.arc_count());
}

/// ML fit of the recursive linear-Gaussian SEM implied by `g`. Each equation is an OLS regression
/// on its parents computed from S, which is the global ML optimum for recursive models.
inline FitResult ml_fit(const Dag& g, const CovMatrix& s) {
    const int p = s.dimension();
    if (g.size() != p) {
        throw StructuralError("DAG has " + std::to_string(g.size()) + " nodes but covariance is " +
                              std::to_string(p) + "x" + std::to_string(p));
    }
    const Eigen::MatrixXd& S = s.matrix();
    FitResult fit;
    fit.complexity = complexity(g);
    fit.df = p * (p + 1) / 2 - (fit.complexity + p);
    fit.coefficients = Eigen::MatrixXd::Zero(p, p);
    fit.residual_variances.resize(p);

    for (int i = 0; i < p; ++i) {
        const auto pa = g.parents(i);
        double psi = S(i, i);
        if (!pa.empty()) {
            const auto k = static_cast<Eigen::Index>(pa.size());
            Eigen::MatrixXd block(k, k);
            Eigen::VectorXd rhs(k);
            for (Eigen::Index a = 0; a < k; ++a) {
                rhs(a) = S(pa[a], i);
                for (Eigen::Index b = 0; b < k; ++b) {
                    block(a, b) = S(pa[a], pa[b]);
                }
            }
            const Eigen::LLT<Eigen::MatrixXd> llt(block);
            if (llt.info() != Eigen::Success || llt.matrixLLT().diagonal().minCoeff() <= 1e-12) {
                throw DegenerateDataError("parent covariance block of variable " + std::to_string(i) +
                                          " is singular");
            }
            const Eigen::VectorXd b = llt.solve(rhs);
            psi -= b.dot(rhs);
            for (Eigen::Index a = 0; a < k; ++a) {
                fit.coefficients(pa[a], i) = b(a);
            }
        }
        if (!(psi > 0.0)) {
            throw DegenerateDataError("non-positive residual variance for variable " + std::to_string(i));
        }
        fit.residual_variances(i) = psi;
    }

    // B(i, j) = weight of j -> i, so x = Bx + e and Sigma = (I-B)^-1 Psi (I-B)^-T.
    const Eigen::MatrixXd B = fit.coefficients.transpose();
    const Eigen::MatrixXd inv_ib = (Eigen::MatrixXd::Identity(p, p) - B).inverse();
    const Eigen::MatrixXd sigma = inv_ib * fit.residual_variances.asDiagonal() * inv_ib.transpose();
    const Eigen::LLT<Eigen::MatrixXd> sigma_llt(sigma);
    if (sigma_llt.info() != Eigen::Success) {
        throw DegenerateDataError("model-implied covariance is not positive definite");
    }
    const double log_det_sigma = 2.0 * sigma_llt.matrixLLT().diagonal().array().log().sum();
    const double trace = sigma_llt.solve(S).trace();
    fit.f_ml = log_det_sigma + trace - s.log_det() - p;
    const auto n = static_cast<double>(s.sample_size());
    // Saturated fits land a few ulps either side of zero.
    fit.chi2 = std::max(0.0, (n - 1.0) * fit.f_ml);
    fit.bic = fit.chi2 + std::log(n) * (fit.complexity + p);
    return fit;
}

} // namespace sss
