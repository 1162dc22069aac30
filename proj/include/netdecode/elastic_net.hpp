#pragma once

#include "netdecode/learners.hpp"
#include "netdecode/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace netdecode {

namespace detail {

inline double soft_threshold(double z, double gamma) {
    if (z > gamma) return z - gamma;
    if (z < -gamma) return z + gamma;
    return 0.0;
}

} // namespace detail

/// Elastic-net linear regression by cyclic coordinate descent:
///
///   minimize (1/2n) sum_i (y_i - b - w.x_i)^2
///            + lambda * (alpha |w|_1 + (1-alpha)/2 |w|_2^2)
///
/// The intercept is unpenalized. Loss carries the 1/(2n) scaling so a given
/// lambda means the same thing at any sample size. Converges when no
/// coefficient moves more than `tol` in a sweep.
inline LinearModel train_elastic_net_regression(const Matrix& X, std::span<const double> y,
                                                double alpha, double lambda, double tol = 1e-7,
                                                std::size_t max_sweeps = 10000) {
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw Error("elastic net alpha must be in [0,1]");
    if (!(lambda > 0.0)) throw Error("elastic net lambda must be > 0");
    const std::size_t n = X.rows(), p = X.cols();
    if (n == 0 || y.size() != n) throw Error("elastic net: bad training shape");

    const double inv_n = 1.0 / static_cast<double>(n);
    std::vector<double> col_sq(p, 0.0); // (1/n) sum_i x_ij^2
    for (std::size_t j = 0; j < p; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += X(i, j) * X(i, j);
        col_sq[j] = s * inv_n;
    }

    LinearModel m;
    m.learner = Learner::elastic_net_regression;
    m.w.assign(p, 0.0);
    m.b = mean(y);

    std::vector<double> r(n); // residual y - b - Xw
    for (std::size_t i = 0; i < n; ++i) r[i] = y[i] - m.b;

    const double l1 = lambda * alpha;
    const double l2 = lambda * (1.0 - alpha);

    std::size_t sweep = 0;
    double max_change = 0.0;
    for (; sweep < max_sweeps; ++sweep) {
        max_change = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            if (col_sq[j] == 0.0) continue; // constant (all-zero) column stays at 0
            double rho = 0.0;
            for (std::size_t i = 0; i < n; ++i) rho += X(i, j) * r[i];
            rho = rho * inv_n + col_sq[j] * m.w[j];
            const double w_new = detail::soft_threshold(rho, l1) / (col_sq[j] + l2);
            const double delta = w_new - m.w[j];
            if (delta != 0.0) {
                for (std::size_t i = 0; i < n; ++i) r[i] -= delta * X(i, j);
                m.w[j] = w_new;
                max_change = std::max(max_change, std::fabs(delta));
            }
        }
        // unpenalized intercept re-centers the residual
        double shift = 0.0;
        for (std::size_t i = 0; i < n; ++i) shift += r[i];
        shift *= inv_n;
        if (shift != 0.0) {
            m.b += shift;
            for (std::size_t i = 0; i < n; ++i) r[i] -= shift;
            max_change = std::max(max_change, std::fabs(shift));
        }
        if (max_change < tol) { ++sweep; break; }
    }
    m.iterations = sweep;
    m.final_violation = max_change;
    m.converged = max_change < tol;
    return m;
}

/// Elastic-net binary classifier: penalized binomial log-likelihood
///
///   minimize (1/n) sum_i log(1 + exp(-y_i (b + w.x_i)))
///            + lambda * (alpha |w|_1 + (1-alpha)/2 |w|_2^2)
///
/// solved by iteratively reweighted least squares with an inner cyclic
/// coordinate-descent loop over the working response. Labels must be -1/+1.
inline LinearModel train_elastic_net_classifier(const Matrix& X, std::span<const double> y,
                                                double alpha, double lambda, double tol = 1e-7,
                                                std::size_t max_sweeps = 10000) {
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw Error("elastic net alpha must be in [0,1]");
    if (!(lambda > 0.0)) throw Error("elastic net lambda must be > 0");
    detail::require_both_classes(y);
    const std::size_t n = X.rows(), p = X.cols();
    const double inv_n = 1.0 / static_cast<double>(n);
    constexpr double p_eps = 1e-5; // probability clamp for the IRLS weights

    LinearModel m;
    m.learner = Learner::elastic_net_classifier;
    m.w.assign(p, 0.0);
    m.b = 0.0;

    std::vector<double> f(n, 0.0);       // current linear predictor
    std::vector<double> weights(n), z(n); // IRLS weights and working response

    std::size_t total_sweeps = 0;
    double outer_change = 0.0;
    constexpr std::size_t max_outer = 100;
    for (std::size_t outer = 0; outer < max_outer; ++outer) {
        // quadratic approximation at the current predictor
        for (std::size_t i = 0; i < n; ++i) {
            double prob = 1.0 / (1.0 + std::exp(-f[i]));
            double v = prob * (1.0 - prob);
            if (prob < p_eps) { prob = 0.0; v = p_eps; }
            else if (prob > 1.0 - p_eps) { prob = 1.0; v = p_eps; }
            const double y01 = y[i] > 0 ? 1.0 : 0.0;
            weights[i] = v;
            z[i] = f[i] + (y01 - prob) / v;
        }

        std::vector<double> wcol_sq(p, 0.0); // (1/n) sum_i v_i x_ij^2
        for (std::size_t j = 0; j < p; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += weights[i] * X(i, j) * X(i, j);
            wcol_sq[j] = s * inv_n;
        }
        double weight_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) weight_sum += weights[i];

        std::vector<double> r(n); // weighted-problem residual z - b - Xw
        for (std::size_t i = 0; i < n; ++i) r[i] = z[i] - m.b - dot(X.row(i), m.w);

        const double l1 = lambda * alpha;
        const double l2 = lambda * (1.0 - alpha);
        const double w_before_b = m.b;
        std::vector<double> w_before = m.w;

        for (std::size_t sweep = 0; sweep < max_sweeps && total_sweeps < max_sweeps; ++sweep) {
            ++total_sweeps;
            double max_change = 0.0;
            for (std::size_t j = 0; j < p; ++j) {
                if (wcol_sq[j] == 0.0) continue;
                double rho = 0.0;
                for (std::size_t i = 0; i < n; ++i) rho += weights[i] * X(i, j) * r[i];
                rho = rho * inv_n + wcol_sq[j] * m.w[j];
                const double w_new = detail::soft_threshold(rho, l1) / (wcol_sq[j] + l2);
                const double delta = w_new - m.w[j];
                if (delta != 0.0) {
                    for (std::size_t i = 0; i < n; ++i) r[i] -= delta * X(i, j);
                    m.w[j] = w_new;
                    max_change = std::max(max_change, std::fabs(delta));
                }
            }
            double shift = 0.0;
            for (std::size_t i = 0; i < n; ++i) shift += weights[i] * r[i];
            shift /= weight_sum;
            if (shift != 0.0) {
                m.b += shift;
                for (std::size_t i = 0; i < n; ++i) r[i] -= shift;
                max_change = std::max(max_change, std::fabs(shift));
            }
            if (max_change < tol) break;
        }

        for (std::size_t i = 0; i < n; ++i) f[i] = m.b + dot(X.row(i), m.w);
        outer_change = std::fabs(m.b - w_before_b);
        for (std::size_t j = 0; j < p; ++j)
            outer_change = std::max(outer_change, std::fabs(m.w[j] - w_before[j]));
        if (outer_change < tol) break;
    }
    m.iterations = total_sweeps;
    m.final_violation = outer_change;
    m.converged = outer_change < tol;
    return m;
}

} // namespace netdecode
