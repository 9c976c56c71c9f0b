#pragma once

#include "miloc/dataset.hpp"
#include "miloc/estimate.hpp"
#include "miloc/nn/network.hpp"
#include "miloc/nn/softmax.hpp"
#include "miloc/nn/trainer.hpp"

#include <Eigen/Core>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace miloc::miest {

// PMI under a uniform label marginal: n_y - log sum exp n + log M.
template <typename Derived>
nn::Vector<typename Derived::Scalar> pmi(const Eigen::MatrixBase<Derived>& logits)
{
    using Scalar = typename Derived::Scalar;
    using std::log;
    const Scalar offset = log(static_cast<Scalar>(logits.size())) - nn::log_sum_exp(logits);
    return (logits.array() + offset).matrix();
}

// log pc_softmax(n, P)_y = n_y - log sum_y' P(y') exp n_y'.
template <typename Derived>
nn::Vector<typename Derived::Scalar> pc_pmi(const Eigen::MatrixBase<Derived>& logits,
                                            const nn::PriorDistribution& prior)
{
    return (logits.array() - nn::log_prior_normalizer(logits, prior)).matrix();
}

// log softmax(n)_y - log P(y): the softmax posterior measured against the
// empirical label marginal instead of log M.
template <typename Derived>
nn::Vector<typename Derived::Scalar> posterior_pmi(const Eigen::MatrixBase<Derived>& logits,
                                                   const nn::PriorDistribution& prior)
{
    if (prior.size() != logits.size())
        throw std::invalid_argument("prior and logits disagree on the number of classes");
    return (nn::log_softmax(logits) - prior.log_probs().template cast<typename Derived::Scalar>()).eval();
}

enum class PmiKind {
    softmax,     // pmi, log M offset
    pc_softmax,  // pc_pmi
    posterior,   // posterior_pmi
};

std::string to_string(PmiKind kind);
PmiKind parse_pmi_kind(const std::string& name);

// Per-sample PMI at the true label for logits M x N.
Eigen::VectorXd pmi_at_labels(const Eigen::MatrixXd& logits, const std::vector<int>& labels, PmiKind kind,
                              const std::optional<nn::PriorDistribution>& prior = std::nullopt);

MiEstimate estimate_from_logits(const Eigen::MatrixXd& logits, const std::vector<int>& labels, PmiKind kind,
                                const std::optional<nn::PriorDistribution>& prior = std::nullopt);

// Mean PMI at the true labels of `data`: pc_pmi when a prior is given,
// plain pmi otherwise.
MiEstimate estimate_mi(nn::Network& net, const LabeledDataset& data,
                       const std::optional<nn::PriorDistribution>& prior = std::nullopt);

struct ClassifierScores {
    double micro = 0.0;
    double per_class = 0.0;
    std::vector<double> recall;       // NaN for classes absent from the data
    std::vector<int> absent_classes;
    long long n_samples = 0;
};

ClassifierScores score_predictions(const std::vector<int>& predictions, const std::vector<int>& labels,
                                   int num_classes);

// Prediction is the argmax of the head output (softmax or pc_softmax).
ClassifierScores evaluate_classifier(nn::Network& net, const LabeledDataset& data, nn::Head head,
                                     const std::optional<nn::PriorDistribution>& prior = std::nullopt);

} // namespace miloc::miest
