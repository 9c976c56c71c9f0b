#include "miloc/nn/prior.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace miloc::nn {

PriorDistribution::PriorDistribution(Eigen::VectorXd probs) : probs_(std::move(probs))
{
    if (probs_.size() == 0)
        throw std::invalid_argument("prior distribution must have at least one class");
    for (Eigen::Index i = 0; i < probs_.size(); ++i) {
        const double p = probs_[i];
        if (!(p > 0.0 && p <= 1.0))
            throw std::invalid_argument("prior probability for class " + std::to_string(i)
                                        + " must lie in (0, 1], got " + std::to_string(p));
    }
    if (std::abs(probs_.sum() - 1.0) > 1e-9)
        throw std::invalid_argument("prior probabilities must sum to 1, got "
                                    + std::to_string(probs_.sum()));
}

PriorDistribution PriorDistribution::uniform(Eigen::Index num_classes)
{
    if (num_classes < 1)
        throw std::invalid_argument("uniform prior needs at least one class");
    return PriorDistribution(Eigen::VectorXd::Constant(num_classes, 1.0 / static_cast<double>(num_classes)));
}

PriorDistribution PriorDistribution::from_counts(const std::vector<long long>& counts)
{
    long long total = 0;
    for (std::size_t y = 0; y < counts.size(); ++y) {
        if (counts[y] <= 0)
            throw std::invalid_argument("class " + std::to_string(y)
                                        + " has zero count; prior-corrected heads are undefined");
        total += counts[y];
    }
    Eigen::VectorXd probs(static_cast<Eigen::Index>(counts.size()));
    for (std::size_t y = 0; y < counts.size(); ++y)
        probs[static_cast<Eigen::Index>(y)] = static_cast<double>(counts[y]) / static_cast<double>(total);
    return PriorDistribution(std::move(probs));
}

double PriorDistribution::entropy() const
{
    return -(probs_.array() * probs_.array().log()).sum();
}

bool PriorDistribution::is_uniform(double tol) const
{
    return (probs_.array() - 1.0 / static_cast<double>(probs_.size())).abs().maxCoeff() <= tol;
}

} // namespace miloc::nn
