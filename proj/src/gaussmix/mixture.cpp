#include "miloc/gaussmix/mixture.hpp"

#include "miloc/rng.hpp"

#include <numeric>
#include <stdexcept>

namespace miloc::gaussmix {

MixtureSpec make_spec(const std::vector<double>& scalar_means, Index dim, nn::PriorDistribution priors)
{
    if (dim < 1)
        throw std::invalid_argument("mixture dimension must be positive");
    if (static_cast<Index>(scalar_means.size()) != priors.size())
        throw std::invalid_argument("mixture needs one prior per component");
    MixtureSpec spec;
    spec.dim = dim;
    for (double m : scalar_means) {
        if (!std::isfinite(m))
            throw std::invalid_argument("mixture means must be finite");
        spec.means.push_back(Eigen::VectorXd::Constant(dim, m));
    }
    spec.priors = std::move(priors);
    return spec;
}

MixtureDesign standard_design(bool balanced, Index dim)
{
    MixtureDesign design;
    design.counts = balanced ? std::vector<long long>(5, 12000)
                             : std::vector<long long>{6000, 12000, 18000, 24000, 30000};
    design.spec = make_spec({0.0, 2.0, -2.0, 4.0, -4.0}, dim, nn::PriorDistribution::from_counts(design.counts));
    return design;
}

namespace {

LabeledDataset take(const LabeledDataset& all, const std::vector<std::size_t>& order, std::size_t begin,
                    std::size_t end, Split split)
{
    LabeledDataset out;
    out.num_classes = all.num_classes;
    out.split = split;
    out.inputs.resize(all.dim(), static_cast<Index>(end - begin));
    out.labels.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
        out.inputs.col(static_cast<Index>(i - begin)) = all.inputs.col(static_cast<Index>(order[i]));
        out.labels.push_back(all.labels[order[i]]);
    }
    return out;
}

} // namespace

LabeledDataset SplitDataset::all() const
{
    LabeledDataset out;
    out.num_classes = train.num_classes;
    out.inputs.resize(train.dim(), train.size() + valid.size() + test.size());
    out.inputs << train.inputs, valid.inputs, test.inputs;
    for (const auto* part : {&train, &valid, &test})
        out.labels.insert(out.labels.end(), part->labels.begin(), part->labels.end());
    return out;
}

SplitDataset sample(const MixtureSpec& spec, const std::vector<long long>& counts, std::uint64_t seed)
{
    if (static_cast<Index>(counts.size()) != spec.num_classes())
        throw std::invalid_argument("sample: need one count per mixture component");
    long long total = 0;
    for (long long c : counts) {
        if (c < 0)
            throw std::invalid_argument("sample: negative class count");
        total += c;
    }
    if (total == 0)
        throw std::invalid_argument("sample: total sample count is zero");

    LabeledDataset all;
    all.num_classes = static_cast<int>(spec.num_classes());
    all.inputs.resize(spec.dim, total);
    all.labels.reserve(static_cast<std::size_t>(total));
    Index col = 0;
    for (std::size_t y = 0; y < counts.size(); ++y) {
        Rng rng = Rng::stream(seed, y);
        for (long long i = 0; i < counts[y]; ++i, ++col) {
            for (Index d = 0; d < spec.dim; ++d)
                all.inputs(d, col) = spec.means[y][d] + rng.normal();
            all.labels.push_back(static_cast<int>(y));
        }
    }

    Rng shuffle_rng = Rng::stream(seed, 0x5348554646ull);
    const auto order = permutation(static_cast<std::size_t>(total), shuffle_rng);
    const auto n = static_cast<std::size_t>(total);
    const auto n_train = static_cast<std::size_t>(std::floor(0.70 * static_cast<double>(n) + 0.5));
    const auto n_valid = std::min(n - n_train, static_cast<std::size_t>(std::floor(0.15 * static_cast<double>(n) + 0.5)));

    SplitDataset out;
    out.train = take(all, order, 0, n_train, Split::train);
    out.valid = take(all, order, n_train, n_train + n_valid, Split::valid);
    out.test = take(all, order, n_train + n_valid, n, Split::test);
    return out;
}

MiEstimate mc_mutual_information(const MixtureSpec& spec, const LabeledDataset& samples)
{
    if (samples.size() == 0)
        throw std::invalid_argument("mc_mutual_information: empty sample set");
    Eigen::VectorXd terms(samples.size());
    for (Index i = 0; i < samples.size(); ++i) {
        const auto density = log_density(spec, samples.inputs.col(i));
        terms[i] = density.log_conditional[samples.labels[static_cast<std::size_t>(i)]] - density.log_marginal;
    }
    return mean_with_error(terms);
}

} // namespace miloc::gaussmix
