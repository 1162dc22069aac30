#pragma once

#include "netdecode/elastic_net.hpp"
#include "netdecode/svm.hpp"

namespace netdecode {

/// Trains the chosen learner; each learner reads only its own fields of hp.
inline LinearModel train(Learner learner, const Matrix& X, std::span<const double> y,
                         const HyperParams& hp) {
    switch (learner) {
        case Learner::linear_svc:
            return train_linear_svc(X, y, hp.C);
        case Learner::nu_svr:
            return train_nu_svr(X, y, hp.nu, hp.C);
        case Learner::elastic_net_regression:
            return train_elastic_net_regression(X, y, hp.alpha, hp.lambda);
        case Learner::elastic_net_classifier:
            return train_elastic_net_classifier(X, y, hp.alpha, hp.lambda);
    }
    throw Error("unknown learner");
}

} // namespace netdecode
