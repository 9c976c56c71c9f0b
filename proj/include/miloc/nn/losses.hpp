#pragma once

#include "miloc/nn/softmax.hpp"

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <string>

namespace miloc::nn {

template <typename Scalar>
struct LossWithGrad {
    Scalar loss;
    Vector<Scalar> grad; // d loss / d logits
};

namespace detail {
inline void check_label(Eigen::Index label, Eigen::Index num_classes)
{
    if (label < 0 || label >= num_classes)
        throw std::out_of_range("label " + std::to_string(label) + " outside [0, "
                                + std::to_string(num_classes) + ")");
}
} // namespace detail

// -(n_label - log sum exp n); gradient softmax(n) - onehot(label).
template <typename Derived>
LossWithGrad<typename Derived::Scalar> cross_entropy_loss(const Eigen::MatrixBase<Derived>& logits,
                                                          Eigen::Index label)
{
    using Scalar = typename Derived::Scalar;
    detail::check_label(label, logits.size());
    const Scalar lse = log_sum_exp(logits);
    Vector<Scalar> grad = (logits.array() - lse).exp().matrix();
    grad[label] -= Scalar(1);
    return {lse - logits[label], std::move(grad)};
}

// -log pc_softmax(n, prior)_label. The normalizer's derivative is the
// ordinary softmax of the prior-shifted logits n + log P.
template <typename Derived>
LossWithGrad<typename Derived::Scalar> pc_cross_entropy_loss(const Eigen::MatrixBase<Derived>& logits,
                                                             Eigen::Index label,
                                                             const PriorDistribution& prior)
{
    using Scalar = typename Derived::Scalar;
    detail::check_label(label, logits.size());
    const Vector<Scalar> shifted = logits + prior.log_probs().template cast<Scalar>();
    const Scalar log_norm = log_sum_exp(shifted);
    Vector<Scalar> grad = (shifted.array() - log_norm).exp().matrix();
    grad[label] -= Scalar(1);
    return {log_norm - logits[label], std::move(grad)};
}

// Multi-label loss: every slot j is a two-class problem {absent, present}
// with logit pair (0, l_j). With `corrected` the pair is scored by the
// prior-corrected softmax under priors (1 - p_j, p_j).
template <typename Derived, typename LabelsDerived, typename PriorsDerived>
LossWithGrad<typename Derived::Scalar> sigmoid_heads_loss(const Eigen::MatrixBase<Derived>& logits,
                                                          const Eigen::DenseBase<LabelsDerived>& labels,
                                                          const Eigen::DenseBase<PriorsDerived>& priors,
                                                          bool corrected)
{
    using Scalar = typename Derived::Scalar;
    using std::exp;
    using std::log;
    const Eigen::Index n = logits.size();
    if (labels.size() != n || (corrected && priors.size() != n))
        throw std::invalid_argument("sigmoid heads: logits, labels and priors must have equal length");

    Scalar total(0);
    Vector<Scalar> grad(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const Scalar l = logits[j];
        const bool present = labels[j] > 0.5;
        Scalar absent_term(0);
        Scalar present_term = l;
        if (corrected) {
            const double p = static_cast<double>(priors[j]);
            if (!(p > 0.0 && p < 1.0))
                throw std::invalid_argument("PC-sigmoid prior for label " + std::to_string(j)
                                            + " must lie strictly inside (0, 1)");
            absent_term = Scalar(std::log1p(-p));
            present_term = l + Scalar(std::log(p));
        }
        const Scalar hi = std::max(absent_term, present_term);
        const Scalar lse = hi + log(exp(absent_term - hi) + exp(present_term - hi));
        total += lse - (present ? l : Scalar(0));
        grad[j] = exp(present_term - lse) - (present ? Scalar(1) : Scalar(0));
    }
    return {total, std::move(grad)};
}

} // namespace miloc::nn
