#pragma once

#include "miloc/nn/prior.hpp"

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>

namespace miloc::nn {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Logits = Eigen::VectorXd;

// log(sum(exp(v))) evaluated as max + log(sum(exp(v - max))); finite for
// any finite input, including magnitudes up to 1e300.
template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::DenseBase<Derived>& values)
{
    using std::exp;
    using std::log;
    if (values.size() == 0)
        throw std::invalid_argument("log_sum_exp of an empty vector");
    const auto top = values.maxCoeff();
    if (!std::isfinite(static_cast<double>(top)))
        return top;
    return top + log((values.derived().array() - top).exp().sum());
}

template <typename Derived>
Vector<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& logits)
{
    const auto lse = log_sum_exp(logits);
    return (logits.array() - lse).exp().matrix();
}

template <typename Derived>
Vector<typename Derived::Scalar> log_softmax(const Eigen::MatrixBase<Derived>& logits)
{
    return (logits.array() - log_sum_exp(logits)).matrix();
}

// log sum_y' P(y') exp(n_y'), the prior-weighted normalizer.
template <typename Derived>
typename Derived::Scalar log_prior_normalizer(const Eigen::MatrixBase<Derived>& logits,
                                              const PriorDistribution& prior)
{
    using Scalar = typename Derived::Scalar;
    if (prior.size() != logits.size())
        throw std::invalid_argument("prior has " + std::to_string(prior.size()) + " classes, logits have "
                                    + std::to_string(logits.size()));
    const Vector<Scalar> shifted = logits + prior.log_probs().template cast<Scalar>();
    return log_sum_exp(shifted);
}

// Probability-corrected softmax: exp(n_y) / sum_y' P(y') exp(n_y').
// The result does not sum to one unless the prior is degenerate.
template <typename Derived>
Vector<typename Derived::Scalar> pc_softmax(const Eigen::MatrixBase<Derived>& logits,
                                            const PriorDistribution& prior)
{
    const auto log_norm = log_prior_normalizer(logits, prior);
    return (logits.array() - log_norm).exp().matrix();
}

template <typename Derived>
Eigen::Index argmax(const Eigen::DenseBase<Derived>& values)
{
    Eigen::Index best = 0;
    values.maxCoeff(&best);
    return best;
}

} // namespace miloc::nn
