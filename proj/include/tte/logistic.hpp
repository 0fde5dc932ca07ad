#pragma once

// Weighted logistic regression by iteratively reweighted least squares.
// Responses may be fractional (pseudo-outcomes from the sequential
// regressions), weights nonnegative, and a fixed offset is supported for
// the targeting step. The fitted information matrix is kept so callers can
// draw parameters from the asymptotic normal approximation.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <vector>

#include "tte/errors.hpp"
#include "tte/rng.hpp"
#include "tte/stats.hpp"

namespace tte {

struct LogisticFit {
    Eigen::VectorXd beta;
    Eigen::MatrixXd covariance;  // inverse observed information
    bool converged = false;
    bool separated = false;      // coefficients ran away; fit truncated
    int iterations = 0;
    double deviance = 0.0;

    double linear_predictor(const Eigen::RowVectorXd& x, double offset = 0.0) const {
        return x.dot(beta) + offset;
    }
    double predict(const Eigen::RowVectorXd& x, double offset = 0.0) const {
        return expit(linear_predictor(x, offset));
    }

    // One multivariate normal draw beta + chol(cov) * z.
    Eigen::VectorXd draw(Rng& rng) const {
        Eigen::LLT<Eigen::MatrixXd> llt(covariance);
        Eigen::MatrixXd l;
        if (llt.info() == Eigen::Success) {
            l = llt.matrixL();
        } else {
            // Covariance can be semidefinite after separation truncation;
            // fall back to a spectral square root with clipped eigenvalues.
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(covariance);
            Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
            l = es.eigenvectors() * ev.asDiagonal();
        }
        Eigen::VectorXd z(beta.size());
        for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
        return beta + l * z;
    }
};

struct LogisticOptions {
    int max_iter = 100;
    double grad_tol = 1e-8;
    double coef_cap = 30.0;  // |beta_j| beyond this flags separation
    double ridge = 0.0;      // tiny ridge stabilizes near-singular fits when > 0
};

// Fits P(y=1|x) = expit(x beta + offset) by Newton scoring. Throws
// SingularDesignError when the weighted design is rank deficient.
inline LogisticFit fit_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                const Eigen::VectorXd& w,
                                const std::optional<Eigen::VectorXd>& offset = std::nullopt,
                                const LogisticOptions& opts = {}) {
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    if (y.size() != n || w.size() != n) throw DomainError("logistic fit: length mismatch");
    if (offset && offset->size() != n) throw DomainError("logistic fit: offset length mismatch");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(w(i) >= 0.0)) throw DomainError("logistic fit: weights must be nonnegative");
        if (!(y(i) >= 0.0 && y(i) <= 1.0))
            throw DomainError("logistic fit: responses must lie in [0, 1]");
    }

    // Rank check on the weighted design.
    {
        Eigen::MatrixXd xw = x;
        for (Eigen::Index i = 0; i < n; ++i) xw.row(i) *= std::sqrt(w(i));
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xw);
        qr.setThreshold(1e-10);
        if (qr.rank() < p)
            throw SingularDesignError("design matrix is rank deficient (rank " +
                                      std::to_string(qr.rank()) + " of " + std::to_string(p) + ")");
    }

    LogisticFit fit;
    fit.beta = Eigen::VectorXd::Zero(p);

    Eigen::VectorXd eta(n), mu(n), score(p);
    Eigen::MatrixXd info(p, p);

    for (int it = 1; it <= opts.max_iter; ++it) {
        fit.iterations = it;
        eta = x * fit.beta;
        if (offset) eta += *offset;
        for (Eigen::Index i = 0; i < n; ++i) mu(i) = expit(eta(i));

        score = x.transpose() * (w.array() * (y - mu).array()).matrix();
        if (opts.ridge > 0.0) score -= opts.ridge * fit.beta;

        Eigen::VectorXd irls_w = (w.array() * mu.array() * (1.0 - mu.array())).matrix();
        info = x.transpose() * irls_w.asDiagonal() * x;
        if (opts.ridge > 0.0) info.diagonal().array() += opts.ridge;

        Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
        if (ldlt.info() != Eigen::Success)
            throw SingularDesignError("information matrix factorization failed");
        Eigen::VectorXd step = ldlt.solve(score);
        if (!step.allFinite())
            throw SingularDesignError("information matrix is effectively singular");

        // Damp huge steps (perfect separation drives them to infinity).
        const double step_max = step.cwiseAbs().maxCoeff();
        if (step_max > 10.0) step *= 10.0 / step_max;
        fit.beta += step;

        if (fit.beta.cwiseAbs().maxCoeff() > opts.coef_cap) {
            fit.separated = true;
            fit.beta = fit.beta.cwiseMax(-opts.coef_cap).cwiseMin(opts.coef_cap);
            break;
        }
        if (score.cwiseAbs().maxCoeff() < opts.grad_tol) {
            fit.converged = true;
            break;
        }
    }

    // Final state at the returned beta.
    eta = x * fit.beta;
    if (offset) eta += *offset;
    fit.deviance = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        mu(i) = expit(eta(i));
        if (w(i) <= 0.0) continue;
        double dev = 0.0;
        if (y(i) > 0.0) dev += y(i) * std::log(y(i) / mu(i));
        if (y(i) < 1.0) dev += (1.0 - y(i)) * std::log((1.0 - y(i)) / (1.0 - mu(i)));
        fit.deviance += 2.0 * w(i) * dev;
    }
    Eigen::VectorXd irls_w = (w.array() * mu.array() * (1.0 - mu.array())).matrix();
    info = x.transpose() * irls_w.asDiagonal() * x;
    if (opts.ridge > 0.0) info.diagonal().array() += opts.ridge;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(info);
    if (lu.isInvertible()) {
        fit.covariance = lu.inverse();
    } else {
        // Report a conservative diagonal when the curvature degenerated.
        fit.covariance = Eigen::MatrixXd::Zero(p, p);
        fit.covariance.diagonal().setConstant(1e6);
    }
    return fit;
}

inline LogisticFit fit_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    return fit_logistic(x, y, Eigen::VectorXd::Ones(x.rows()));
}

// Drops columns that are constant under positive weight, keeping column 0
// (the intercept) always. Returns kept column indices.
inline std::vector<Eigen::Index> nonconstant_columns(const Eigen::MatrixXd& x,
                                                     const Eigen::VectorXd& w) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        if (j == 0) {
            keep.push_back(j);
            continue;
        }
        bool constant = true;
        double ref = 0.0;
        bool have_ref = false;
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            if (w(i) <= 0.0) continue;
            if (!have_ref) {
                ref = x(i, j);
                have_ref = true;
            } else if (x(i, j) != ref) {
                constant = false;
                break;
            }
        }
        if (!constant) keep.push_back(j);
    }
    return keep;
}

inline Eigen::MatrixXd select_columns(const Eigen::MatrixXd& x,
                                      const std::vector<Eigen::Index>& cols) {
    Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = x.col(cols[j]);
    return out;
}

}  // namespace tte
