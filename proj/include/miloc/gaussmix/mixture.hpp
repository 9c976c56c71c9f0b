#pragma once

#include "miloc/dataset.hpp"
#include "miloc/estimate.hpp"
#include "miloc/nn/prior.hpp"
#include "miloc/nn/softmax.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace miloc::gaussmix {

using Index = Eigen::Index;

// Mixture of isotropic unit-covariance Gaussians: P(x) = sum_y P(y) N(x | mu_y, I).
struct MixtureSpec {
    Index dim = 1;
    std::vector<Eigen::VectorXd> means;
    nn::PriorDistribution priors = nn::PriorDistribution::uniform(1);

    Index num_classes() const { return static_cast<Index>(means.size()); }
};

// Each mean vector repeats its scalar across all `dim` coordinates.
MixtureSpec make_spec(const std::vector<double>& scalar_means, Index dim, nn::PriorDistribution priors);

struct MixtureDesign {
    MixtureSpec spec;
    std::vector<long long> counts;
};

// The five-component benchmark: means 0, +2, -2, +4, -4. Balanced draws
// 12000 per class; unbalanced draws 6000..30000 and the priors are the exact
// count ratios (1/15, 2/15, ..., 5/15).
MixtureDesign standard_design(bool balanced, Index dim = 1);

struct SplitDataset {
    LabeledDataset train;
    LabeledDataset valid;
    LabeledDataset test;

    LabeledDataset all() const;
};

// counts[y] i.i.d. draws from N(mu_y, I) per class (class y uses its own
// derived stream), shuffled with a seeded permutation, then split 70/15/15
// (sizes rounded to nearest; test takes the remainder).
SplitDataset sample(const MixtureSpec& spec, const std::vector<long long>& counts, std::uint64_t seed);

struct LogDensity {
    double log_marginal = 0.0;          // log P(x)
    Eigen::VectorXd log_conditional;    // log P(x | y), one per component
};

template <typename Derived>
LogDensity log_density(const MixtureSpec& spec, const Eigen::MatrixBase<Derived>& x)
{
    if (x.size() != spec.dim)
        throw std::invalid_argument("log_density: point has " + std::to_string(x.size())
                                    + " coordinates, mixture dim is " + std::to_string(spec.dim));
    const double norm = -0.5 * static_cast<double>(spec.dim) * std::log(2.0 * std::numbers::pi);
    LogDensity out;
    out.log_conditional.resize(spec.num_classes());
    for (Index y = 0; y < spec.num_classes(); ++y)
        out.log_conditional[y] = norm - 0.5 * (x - spec.means[static_cast<std::size_t>(y)]).squaredNorm();
    out.log_marginal = nn::log_sum_exp(out.log_conditional + spec.priors.log_probs());
    return out;
}

// (1/N) sum_i [log P(x_i | y_i) - log P(x_i)] with its standard error.
MiEstimate mc_mutual_information(const MixtureSpec& spec, const LabeledDataset& samples);

} // namespace miloc::gaussmix
