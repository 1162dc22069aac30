#pragma once

#include "netdecode/core.hpp"

#include <string>
#include <vector>

namespace netdecode {

enum class Learner { linear_svc, nu_svr, elastic_net_regression, elastic_net_classifier };
enum class Task { classification, regression };

inline Task task_of(Learner l) {
    return (l == Learner::linear_svc || l == Learner::elastic_net_classifier)
               ? Task::classification
               : Task::regression;
}

inline std::string learner_name(Learner l) {
    switch (l) {
        case Learner::linear_svc: return "linear_svc";
        case Learner::nu_svr: return "nu_svr";
        case Learner::elastic_net_regression: return "elastic_net_regression";
        case Learner::elastic_net_classifier: return "elastic_net_classifier";
    }
    return "";
}

/// Hyperparameters; each learner reads only its own fields. Values double
/// as the fixed presets used when neither a grid search nor manual entry
/// applies.
struct HyperParams {
    double C = 1.0;      // SV margin penalty
    double nu = 0.5;     // nu-SVR, in (0,1]
    double alpha = 0.5;  // elastic net L1/L2 mix, in [0,1]
    double lambda = 1.0; // elastic net penalty strength, > 0

    bool operator==(const HyperParams&) const = default;
};

/// Linear model w.x + b shared by all learners, with training diagnostics.
struct LinearModel {
    std::vector<double> w;
    double b = 0.0;
    Learner learner = Learner::elastic_net_regression;
    std::size_t iterations = 0;    // epochs (solvers) or sweeps (coordinate descent)
    double final_violation = 0.0;  // KKT gap or max coefficient change at exit
    bool converged = true;
    double svr_tube = 0.0;         // nu-SVR only: recovered tube half-width
    std::vector<double> dual_coefs; // SV solvers: alpha_i (SVC) or alpha_i - alpha*_i (SVR)
};

/// Decision values w.x_i + b for every row.
inline std::vector<double> predict(const LinearModel& m, const Matrix& X) {
    if (X.cols() != m.w.size())
        throw Error("predict: feature count mismatch (" + std::to_string(X.cols()) + " vs " +
                    std::to_string(m.w.size()) + ")");
    std::vector<double> out(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) out[i] = dot(X.row(i), m.w) + m.b;
    return out;
}

/// Classifier label for a decision value; sign(0) is +1 by convention.
inline double predicted_label(double decision_value) { return decision_value >= 0.0 ? 1.0 : -1.0; }

namespace detail {

inline void require_both_classes(std::span<const double> y) {
    bool pos = false, neg = false;
    for (double v : y) {
        if (v > 0) pos = true;
        else neg = true;
    }
    if (!pos || !neg) throw Error("training labels contain a single class");
}

} // namespace detail

} // namespace netdecode
