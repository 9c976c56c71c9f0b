#include "miloc/miest/pmi.hpp"

#include <iostream>
#include <limits>
#include <stdexcept>

namespace miloc::miest {

using Eigen::Index;

std::string to_string(PmiKind kind)
{
    switch (kind) {
    case PmiKind::softmax: return "softmax";
    case PmiKind::pc_softmax: return "pc_softmax";
    case PmiKind::posterior: return "softmax_prior";
    }
    return "?";
}

PmiKind parse_pmi_kind(const std::string& name)
{
    if (name == "softmax")
        return PmiKind::softmax;
    if (name == "pc_softmax")
        return PmiKind::pc_softmax;
    if (name == "softmax_prior")
        return PmiKind::posterior;
    throw std::invalid_argument("unknown PMI kind '" + name + "'");
}

Eigen::VectorXd pmi_at_labels(const Eigen::MatrixXd& logits, const std::vector<int>& labels, PmiKind kind,
                              const std::optional<nn::PriorDistribution>& prior)
{
    if (static_cast<std::size_t>(logits.cols()) != labels.size())
        throw std::invalid_argument("logits and labels disagree on the sample count");
    if (kind != PmiKind::softmax && !prior)
        throw std::invalid_argument(to_string(kind) + " PMI needs a label prior");
    const Index m = logits.rows();
    Eigen::VectorXd out(logits.cols());
    for (Index i = 0; i < logits.cols(); ++i) {
        const int y = labels[static_cast<std::size_t>(i)];
        if (y < 0 || y >= m)
            throw std::out_of_range("label " + std::to_string(y) + " outside [0, " + std::to_string(m) + ")");
        const auto col = logits.col(i);
        switch (kind) {
        case PmiKind::softmax: out[i] = pmi(col)[y]; break;
        case PmiKind::pc_softmax: out[i] = pc_pmi(col, *prior)[y]; break;
        case PmiKind::posterior: out[i] = posterior_pmi(col, *prior)[y]; break;
        }
    }
    return out;
}

MiEstimate estimate_from_logits(const Eigen::MatrixXd& logits, const std::vector<int>& labels, PmiKind kind,
                                const std::optional<nn::PriorDistribution>& prior)
{
    if (labels.empty())
        throw std::invalid_argument("cannot estimate mutual information from an empty dataset");
    return mean_with_error(pmi_at_labels(logits, labels, kind, prior));
}

MiEstimate estimate_mi(nn::Network& net, const LabeledDataset& data,
                       const std::optional<nn::PriorDistribution>& prior)
{
    if (data.size() == 0)
        throw std::invalid_argument("cannot estimate mutual information from an empty dataset");
    return estimate_from_logits(net.predict_logits(data.inputs), data.labels,
                                prior ? PmiKind::pc_softmax : PmiKind::softmax, prior);
}

ClassifierScores score_predictions(const std::vector<int>& predictions, const std::vector<int>& labels,
                                   int num_classes)
{
    if (predictions.size() != labels.size())
        throw std::invalid_argument("predictions and labels disagree on the sample count");
    if (labels.empty())
        throw std::invalid_argument("cannot score an empty dataset");
    std::vector<long long> hits(static_cast<std::size_t>(num_classes), 0);
    std::vector<long long> totals(static_cast<std::size_t>(num_classes), 0);
    long long correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int y = labels[i];
        if (y < 0 || y >= num_classes)
            throw std::out_of_range("label " + std::to_string(y) + " outside [0, " + std::to_string(num_classes)
                                    + ")");
        ++totals[static_cast<std::size_t>(y)];
        if (predictions[i] == y) {
            ++hits[static_cast<std::size_t>(y)];
            ++correct;
        }
    }
    ClassifierScores scores;
    scores.n_samples = static_cast<long long>(labels.size());
    scores.micro = static_cast<double>(correct) / static_cast<double>(labels.size());
    double sum = 0.0;
    int present = 0;
    for (int c = 0; c < num_classes; ++c) {
        const auto k = static_cast<std::size_t>(c);
        if (totals[k] == 0) {
            scores.recall.push_back(std::numeric_limits<double>::quiet_NaN());
            scores.absent_classes.push_back(c);
            std::cerr << "warning: class " << c << " has no samples; excluded from the per-class mean\n";
            continue;
        }
        scores.recall.push_back(static_cast<double>(hits[k]) / static_cast<double>(totals[k]));
        sum += scores.recall.back();
        ++present;
    }
    scores.per_class = sum / present;
    return scores;
}

ClassifierScores evaluate_classifier(nn::Network& net, const LabeledDataset& data, nn::Head head,
                                     const std::optional<nn::PriorDistribution>& prior)
{
    if (head != nn::Head::softmax && head != nn::Head::pc_softmax)
        throw std::invalid_argument("evaluate_classifier handles single-label heads only");
    if (head == nn::Head::pc_softmax && !prior)
        throw std::invalid_argument("pc_softmax evaluation needs a label prior");
    const Eigen::MatrixXd logits = net.predict_logits(data.inputs);
    std::vector<int> predictions(static_cast<std::size_t>(logits.cols()));
    for (Index i = 0; i < logits.cols(); ++i) {
        const auto out = head == nn::Head::softmax ? nn::softmax(logits.col(i)) : nn::pc_softmax(logits.col(i), *prior);
        predictions[static_cast<std::size_t>(i)] = static_cast<int>(nn::argmax(out));
    }
    return score_predictions(predictions, data.labels, data.num_classes);
}

} // namespace miloc::miest
