#pragma once

#include "netdecode/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace netdecode {

namespace detail {

constexpr double svm_tau = 1e-12;

/// Dense linear-kernel Gram matrix (problems here have at most a few
/// hundred rows, so the full matrix is cheap and keeps the solvers simple).
inline std::vector<double> gram_matrix(const Matrix& X) {
    const std::size_t n = X.rows();
    std::vector<double> K(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            const double v = dot(X.row(i), X.row(j));
            K[i * n + j] = v;
            K[j * n + i] = v;
        }
    }
    return K;
}

} // namespace detail

/// Soft-margin linear SV classifier:
///
///   minimize (1/2)|w|^2 + C sum_i max(0, 1 - y_i (w.x_i + b))
///
/// solved on the dual (min (1/2) a'Qa - e'a, 0 <= a_i <= C, y'a = 0) by
/// pairwise coordinate descent with second-order working-set selection.
/// Stops when the maximal violating pair gap falls below `eps` or after
/// `max_epochs` passes (one epoch = n pair updates), with a non-convergence
/// flag in that case.
inline LinearModel train_linear_svc(const Matrix& X, std::span<const double> y, double C,
                                    double eps = 1e-6, std::size_t max_epochs = 10000) {
    if (!(C > 0.0)) throw Error("SVC penalty C must be > 0");
    detail::require_both_classes(y);
    const std::size_t n = X.rows();
    if (y.size() != n) throw Error("SVC: label count mismatch");

    const auto K = detail::gram_matrix(X);
    const auto Q = [&](std::size_t i, std::size_t j) { return y[i] * y[j] * K[i * n + j]; };

    std::vector<double> alpha(n, 0.0);
    std::vector<double> grad(n, -1.0); // dual gradient at alpha = 0

    const auto in_up = [&](std::size_t t) {
        return (y[t] > 0 && alpha[t] < C) || (y[t] < 0 && alpha[t] > 0);
    };
    const auto in_low = [&](std::size_t t) {
        return (y[t] > 0 && alpha[t] > 0) || (y[t] < 0 && alpha[t] < C);
    };

    const double inf = std::numeric_limits<double>::infinity();
    const std::size_t max_pairs = max_epochs * n;
    std::size_t pairs = 0;
    double gap = inf;

    while (pairs < max_pairs) {
        // i maximizes -y G over I_up; j maximizes the second-order decrease
        // among violating members of I_low
        double g_max = -inf, g_min = inf;
        std::size_t i = n;
        for (std::size_t t = 0; t < n; ++t) {
            if (in_up(t) && -y[t] * grad[t] >= g_max) {
                g_max = -y[t] * grad[t];
                i = t;
            }
        }
        std::size_t j = n;
        double best = inf;
        for (std::size_t t = 0; t < n; ++t) {
            if (!in_low(t)) continue;
            const double v = -y[t] * grad[t];
            g_min = std::min(g_min, v);
            const double grad_diff = g_max - v;
            if (grad_diff > 0.0 && i != n) {
                double quad = K[i * n + i] + K[t * n + t] - 2.0 * K[i * n + t];
                if (quad <= 0.0) quad = detail::svm_tau;
                const double dec = -(grad_diff * grad_diff) / quad;
                if (dec <= best) {
                    best = dec;
                    j = t;
                }
            }
        }
        gap = g_max - g_min;
        if (gap < eps || j == n) break;

        const double old_ai = alpha[i], old_aj = alpha[j];
        if (y[i] != y[j]) {
            double quad = Q(i, i) + Q(j, j) + 2.0 * Q(i, j);
            if (quad <= 0.0) quad = detail::svm_tau;
            const double delta = (-grad[i] - grad[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0.0) {
                if (alpha[j] < 0.0) { alpha[j] = 0.0; alpha[i] = diff; }
            } else {
                if (alpha[i] < 0.0) { alpha[i] = 0.0; alpha[j] = -diff; }
            }
            if (diff > 0.0) {
                if (alpha[i] > C) { alpha[i] = C; alpha[j] = C - diff; }
            } else {
                if (alpha[j] > C) { alpha[j] = C; alpha[i] = C + diff; }
            }
        } else {
            double quad = Q(i, i) + Q(j, j) - 2.0 * Q(i, j);
            if (quad <= 0.0) quad = detail::svm_tau;
            const double delta = (grad[i] - grad[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > C) {
                if (alpha[i] > C) { alpha[i] = C; alpha[j] = sum - C; }
            } else {
                if (alpha[j] < 0.0) { alpha[j] = 0.0; alpha[i] = sum; }
            }
            if (sum > C) {
                if (alpha[j] > C) { alpha[j] = C; alpha[i] = sum - C; }
            } else {
                if (alpha[i] < 0.0) { alpha[i] = 0.0; alpha[j] = sum; }
            }
        }
        const double di = alpha[i] - old_ai, dj = alpha[j] - old_aj;
        if (di != 0.0 || dj != 0.0)
            for (std::size_t t = 0; t < n; ++t) grad[t] += Q(t, i) * di + Q(t, j) * dj;
        ++pairs;
    }
    if (!std::isfinite(gap)) gap = 0.0;

    LinearModel m;
    m.learner = Learner::linear_svc;
    m.w.assign(X.cols(), 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        if (alpha[t] == 0.0) continue;
        const double coef = alpha[t] * y[t];
        const auto row = X.row(t);
        for (std::size_t c = 0; c < X.cols(); ++c) m.w[c] += coef * row[c];
    }
    // intercept: average of y_i - w.x_i over free support vectors, or the
    // midpoint of the KKT interval when every multiplier sits on a bound
    double free_sum = 0.0;
    std::size_t free_count = 0;
    for (std::size_t t = 0; t < n; ++t) {
        if (alpha[t] > 0.0 && alpha[t] < C) {
            free_sum += -y[t] * grad[t];
            ++free_count;
        }
    }
    if (free_count > 0) {
        m.b = free_sum / static_cast<double>(free_count);
    } else {
        double up = -inf, low = inf;
        for (std::size_t t = 0; t < n; ++t) {
            if (in_up(t)) up = std::max(up, -y[t] * grad[t]);
            if (in_low(t)) low = std::min(low, -y[t] * grad[t]);
        }
        m.b = 0.5 * (up + low);
    }
    m.iterations = pairs / std::max<std::size_t>(n, 1);
    m.final_violation = gap;
    m.converged = gap < eps;
    m.dual_coefs = std::move(alpha);
    return m;
}

/// nu-SV regression with a linear kernel:
///
///   minimize (1/2)|w|^2 + C (nu*n*tube + sum_i (xi_i + xi*_i))
///
/// where the tube half-width is optimized jointly. Solved by SMO on the
/// doubled dual (2n variables; one equality constraint per sign class);
/// working pairs always share a sign class, which preserves both
/// constraints. C defaults to 1 and is exposed only as an advanced override.
/// The recovered tube half-width lands in LinearModel::svr_tube.
inline LinearModel train_nu_svr(const Matrix& X, std::span<const double> y, double nu,
                                double C = 1.0, double eps = 1e-6,
                                std::size_t max_epochs = 10000) {
    if (!(nu > 0.0 && nu <= 1.0)) throw Error("nu must be in (0,1]");
    if (!(C > 0.0)) throw Error("SVR penalty C must be > 0");
    const std::size_t n = X.rows();
    if (n < 2) throw Error("nu-SVR needs at least two rows");
    if (y.size() != n) throw Error("nu-SVR: target count mismatch");

    const auto K = detail::gram_matrix(X);
    const std::size_t m2 = 2 * n;
    // extended problem: t < n carries sign +1 (alpha), t >= n sign -1 (alpha*)
    const auto sign_of = [&](std::size_t t) { return t < n ? 1.0 : -1.0; };
    const auto base = [&](std::size_t t) { return t < n ? t : t - n; };
    const auto Q = [&](std::size_t s, std::size_t t) {
        return sign_of(s) * sign_of(t) * K[base(s) * n + base(t)];
    };

    std::vector<double> beta(m2, 0.0), lin(m2, 0.0);
    double budget = C * nu * static_cast<double>(n) / 2.0;
    for (std::size_t i = 0; i < n; ++i) {
        beta[i] = beta[i + n] = std::min(budget, C);
        budget -= beta[i];
        lin[i] = -y[i];
        lin[i + n] = y[i];
    }

    std::vector<double> grad(lin); // gradient = Q beta + lin
    for (std::size_t s = 0; s < m2; ++s) {
        if (beta[s] == 0.0) continue;
        for (std::size_t t = 0; t < m2; ++t) grad[t] += Q(t, s) * beta[s];
    }

    const double inf = std::numeric_limits<double>::infinity();
    const std::size_t max_pairs = max_epochs * m2;
    std::size_t pairs = 0;
    double gap = inf;

    while (pairs < max_pairs) {
        // maximal violating pair, restricted to one sign class
        double gmax_p = -inf, gmax_p2 = -inf, gmax_n = -inf, gmax_n2 = -inf;
        std::size_t ip = m2, in_neg = m2;
        for (std::size_t t = 0; t < m2; ++t) {
            if (sign_of(t) > 0) {
                if (beta[t] < C && -grad[t] >= gmax_p) { gmax_p = -grad[t]; ip = t; }
            } else {
                if (beta[t] > 0.0 && grad[t] >= gmax_n) { gmax_n = grad[t]; in_neg = t; }
            }
        }
        std::size_t jsel = m2;
        double best = inf;
        for (std::size_t t = 0; t < m2; ++t) {
            if (sign_of(t) > 0) {
                if (beta[t] <= 0.0) continue;
                const double grad_diff = gmax_p + grad[t];
                gmax_p2 = std::max(gmax_p2, grad[t]);
                if (grad_diff > 0.0 && ip != m2) {
                    double quad = Q(ip, ip) + Q(t, t) - 2.0 * Q(ip, t);
                    if (quad <= 0.0) quad = detail::svm_tau;
                    const double dec = -(grad_diff * grad_diff) / quad;
                    if (dec <= best) { best = dec; jsel = t; }
                }
            } else {
                if (beta[t] >= C) continue;
                const double grad_diff = gmax_n - grad[t];
                gmax_n2 = std::max(gmax_n2, -grad[t]);
                if (grad_diff > 0.0 && in_neg != m2) {
                    double quad = Q(in_neg, in_neg) + Q(t, t) - 2.0 * Q(in_neg, t);
                    if (quad <= 0.0) quad = detail::svm_tau;
                    const double dec = -(grad_diff * grad_diff) / quad;
                    if (dec <= best) { best = dec; jsel = t; }
                }
            }
        }
        gap = std::max(gmax_p + gmax_p2, gmax_n + gmax_n2);
        if (gap < eps || jsel == m2) break;

        const std::size_t i = sign_of(jsel) > 0 ? ip : in_neg;
        const std::size_t j = jsel;
        const double old_bi = beta[i], old_bj = beta[j];
        double quad = Q(i, i) + Q(j, j) - 2.0 * Q(i, j);
        if (quad <= 0.0) quad = detail::svm_tau;
        const double delta = (grad[i] - grad[j]) / quad;
        const double sum = beta[i] + beta[j];
        beta[i] -= delta;
        beta[j] += delta;
        if (sum > C) {
            if (beta[i] > C) { beta[i] = C; beta[j] = sum - C; }
        } else {
            if (beta[j] < 0.0) { beta[j] = 0.0; beta[i] = sum; }
        }
        if (sum > C) {
            if (beta[j] > C) { beta[j] = C; beta[i] = sum - C; }
        } else {
            if (beta[i] < 0.0) { beta[i] = 0.0; beta[j] = sum; }
        }
        const double di = beta[i] - old_bi, dj = beta[j] - old_bj;
        if (di != 0.0 || dj != 0.0)
            for (std::size_t t = 0; t < m2; ++t) grad[t] += Q(t, i) * di + Q(t, j) * dj;
        ++pairs;
    }
    if (!std::isfinite(gap)) gap = 0.0;

    // KKT interval per sign class gives the intercept and tube width
    double ub1 = inf, lb1 = -inf, ub2 = inf, lb2 = -inf;
    double sum_free1 = 0.0, sum_free2 = 0.0;
    std::size_t nf1 = 0, nf2 = 0;
    for (std::size_t t = 0; t < m2; ++t) {
        if (sign_of(t) > 0) {
            if (beta[t] >= C) lb1 = std::max(lb1, grad[t]);
            else if (beta[t] <= 0.0) ub1 = std::min(ub1, grad[t]);
            else { sum_free1 += grad[t]; ++nf1; }
        } else {
            if (beta[t] >= C) lb2 = std::max(lb2, grad[t]);
            else if (beta[t] <= 0.0) ub2 = std::min(ub2, grad[t]);
            else { sum_free2 += grad[t]; ++nf2; }
        }
    }
    const double r1 = nf1 ? sum_free1 / static_cast<double>(nf1) : 0.5 * (ub1 + lb1);
    const double r2 = nf2 ? sum_free2 / static_cast<double>(nf2) : 0.5 * (ub2 + lb2);

    LinearModel m;
    m.learner = Learner::nu_svr;
    m.w.assign(X.cols(), 0.0);
    m.dual_coefs.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double coef = beta[i] - beta[i + n];
        m.dual_coefs[i] = coef;
        if (coef == 0.0) continue;
        const auto row = X.row(i);
        for (std::size_t c = 0; c < X.cols(); ++c) m.w[c] += coef * row[c];
    }
    m.b = -(r1 - r2) / 2.0;
    m.svr_tube = std::max(0.0, -(r1 + r2) / 2.0);
    m.iterations = pairs / m2;
    m.final_violation = gap;
    m.converged = gap < eps;
    return m;
}

} // namespace netdecode
