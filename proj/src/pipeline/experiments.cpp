#include "miloc/pipeline/experiments.hpp"

#include "miloc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace miloc::pipeline {

namespace {

nn::Targets single_label(const std::vector<int>& labels) { return {labels, {}}; }

nn::HeadSpec head_spec(nn::Head head, const std::optional<nn::PriorDistribution>& prior,
                       const Eigen::VectorXd& label_priors = {})
{
    nn::HeadSpec spec;
    spec.head = head;
    if (head == nn::Head::pc_softmax)
        spec.prior = prior;
    if (head == nn::Head::pc_sigmoid)
        spec.label_priors = label_priors;
    return spec;
}

} // namespace

nn::TrainOptions TrainSettings::options(std::uint64_t seed) const
{
    nn::TrainOptions o;
    o.epochs = epochs;
    o.batch_size = batch_size;
    o.optimizer = optimizer;
    o.lr_decay = lr_decay;
    o.seed = seed;
    o.on_epoch = on_epoch;
    return o;
}

MixtureReport run_mixture(const MixtureRun& run)
{
    if (run.head != nn::Head::softmax && run.head != nn::Head::pc_softmax)
        throw std::invalid_argument("mixture runs use the softmax or pc_softmax head");
    const auto design = gaussmix::standard_design(run.balanced, run.dim);
    auto splits = gaussmix::sample(design.spec, design.counts, run.seed);

    MixtureReport report;
    report.counts = design.counts;
    report.mc_test = gaussmix::mc_mutual_information(design.spec, splits.test);
    if (run.shuffle_labels) {
        splits.train = permute_labels(splits.train, run.seed + 1);
        splits.valid = permute_labels(splits.valid, run.seed + 2);
        splits.test = permute_labels(splits.test, run.seed + 3);
    }
    report.train_prior = nn::PriorDistribution::from_counts(splits.train.class_counts());

    auto net = nn::make_mlp(run.dim, run.hidden, 5);
    net.initialize(Rng::stream(run.seed, 0x4E4554).next());
    const auto spec = head_spec(run.head, report.train_prior);
    auto options = run.train.options(run.seed);
    options.selection = nn::Selection::loss;
    report.log = nn::fit(net, splits.train.inputs, single_label(splits.train.labels), splits.valid.inputs,
                         single_label(splits.valid.labels), spec, options);

    const std::optional<nn::PriorDistribution> prior =
        run.head == nn::Head::pc_softmax ? std::optional(report.train_prior) : std::nullopt;
    const Eigen::MatrixXd test_logits = net.predict_logits(splits.test.inputs);
    for (auto kind : {miest::PmiKind::softmax, miest::PmiKind::pc_softmax, miest::PmiKind::posterior})
        report.variants_test[miest::to_string(kind)] =
            miest::estimate_from_logits(test_logits, splits.test.labels, kind, report.train_prior);
    report.model_test = miest::estimate_mi(net, splits.test, prior);
    report.model_train = miest::estimate_mi(net, splits.train, prior);
    report.test_scores = miest::evaluate_classifier(net, splits.test, run.head, prior);
    return report;
}

MnistReport run_mnist(const MnistRun& run)
{
    if (run.head != nn::Head::softmax && run.head != nn::Head::pc_softmax)
        throw std::invalid_argument("MNIST classification uses the softmax or pc_softmax head");
    auto train_all = data::load_mnist(true);
    auto test = data::load_mnist(false);
    if (run.unbalanced) {
        train_all = data::make_unbalanced(train_all, {0, 2, 4, 6, 8}, 0.1, run.seed);
        test = data::make_unbalanced(test, {0, 2, 4, 6, 8}, 0.1, run.seed + 1);
    }
    if (run.train_limit > 0 && run.train_limit < train_all.size()) {
        Rng rng(run.seed ^ 0x4C494D4954ull);
        auto order = permutation(static_cast<std::size_t>(train_all.size()), rng);
        order.resize(static_cast<std::size_t>(run.train_limit));
        std::sort(order.begin(), order.end());
        train_all = data::subset(train_all, order);
    }
    auto [train, valid] = data::split_holdout(train_all, run.valid_fraction, run.seed);

    MnistReport report;
    report.train_counts = train.class_counts();
    const auto prior = data::empirical_priors(train);
    auto net = nn::make_pool_cnn({1, 28, 28}, run.conv1, run.conv2, run.hidden, 10);
    net.initialize(Rng::stream(run.seed, 0x4E4554).next());
    report.log = nn::fit(net, train.images, train.targets(), valid.images, valid.targets(), head_spec(run.head, prior),
                         run.train.options(run.seed));

    LabeledDataset test_set;
    test_set.inputs = test.images;
    test_set.labels = test.labels;
    test_set.num_classes = 10;
    const std::optional<nn::PriorDistribution> pc =
        run.head == nn::Head::pc_softmax ? std::optional(prior) : std::nullopt;
    report.test_scores = miest::evaluate_classifier(net, test_set, run.head, pc);
    report.mi_test = miest::estimate_mi(net, test_set, pc);
    return report;
}

MultiLabelScores score_multi_label(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& presence)
{
    if (logits.rows() != presence.rows() || logits.cols() != presence.cols() || logits.cols() == 0)
        throw std::invalid_argument("logits and presence must have the same non-empty shape");
    const Index m = logits.rows(), n = logits.cols();
    MultiLabelScores s;
    long long exact = 0;
    std::vector<long long> tp(m, 0), pos(m, 0), tn(m, 0), neg(m, 0);
    for (Index i = 0; i < n; ++i) {
        bool all = true;
        for (Index c = 0; c < m; ++c) {
            const bool present = presence(c, i) > 0.5, predicted = logits(c, i) > 0.0;
            all = all && present == predicted;
            if (present) {
                ++pos[c];
                tp[c] += predicted;
            } else {
                ++neg[c];
                tn[c] += !predicted;
            }
        }
        exact += all;
    }
    auto ratio = [](long long a, long long b) { return b > 0 ? static_cast<double>(a) / b : std::nan(""); };
    for (Index c = 0; c < m; ++c) {
        s.recall.push_back(ratio(tp[c], pos[c]));
        s.specificity.push_back(ratio(tn[c], neg[c]));
        s.balanced.push_back(0.5 * (s.recall.back() + s.specificity.back()));
        s.accuracy.push_back(ratio(tp[c] + tn[c], n));
        s.mean_recall += s.recall.back() / m;
        s.mean_balanced += s.balanced.back() / m;
        s.mean_accuracy += s.accuracy.back() / m;
    }
    s.exact_match = ratio(exact, n);
    return s;
}

DoubleDigitSplits make_double_digit_splits(const WsolRun& run)
{
    const auto train_digits = data::load_mnist(true);
    const auto test_digits = data::load_mnist(false);
    DoubleDigitSplits splits;
    auto pool = data::make_double_digit(train_digits, run.n_train + run.n_valid, run.seed, run.digits);
    std::vector<std::size_t> first(static_cast<std::size_t>(run.n_train)), second(static_cast<std::size_t>(run.n_valid));
    for (std::size_t i = 0; i < first.size(); ++i)
        first[i] = i;
    for (std::size_t i = 0; i < second.size(); ++i)
        second[i] = first.size() + i;
    splits.train = data::subset(pool, first);
    splits.valid = data::subset(pool, second);
    splits.test = data::make_double_digit(test_digits, run.n_test, run.seed + 1, run.digits);
    return splits;
}

std::vector<wsol::LocalizationResult> localize_suite(nn::Network& net, const data::ImageDataset& test,
                                                     const wsol::LocalizeOptions& options)
{
    if (!net.has_gap_head())
        throw std::invalid_argument("localization needs a network ending in GAP and a bias-free dense layer");
    const Eigen::MatrixXd weights = net.final_weights();
    std::vector<wsol::LocalizationResult> results;
    for (Index i = 0; i < test.size(); ++i) {
        const auto forward = net.forward(test.image(i));
        for (const auto& target : test.gt_boxes[static_cast<std::size_t>(i)])
            results.push_back(wsol::localize_forward(forward, weights, test.height, test.width, target.label, target.box,
                                                     options));
    }
    return results;
}

WsolReport run_wsol(const WsolRun& run, const DoubleDigitSplits& splits)
{
    if (!nn::is_multi_label(run.head))
        throw std::invalid_argument("the double-digit task needs a sigmoid or pc_sigmoid head");
    WsolReport report;
    report.label_priors = data::label_priors(splits.train);
    auto net = nn::make_gap_cnn({1, splits.train.height, splits.train.width}, run.blocks, 10);
    net.initialize(Rng::stream(run.seed, 0x4E4554).next());
    report.log = nn::fit(net, splits.train.images, splits.train.targets(), splits.valid.images, splits.valid.targets(),
                         head_spec(run.head, std::nullopt, report.label_priors), run.train.options(run.seed));
    report.test_scores = score_multi_label(net.predict_logits(splits.test.images), splits.test.presence);

    for (auto kind : run.map_kinds) {
        wsol::LocalizeOptions options;
        options.map.kind = kind;
        options.map.region = run.region;
        options.map.contrast = run.contrast;
        options.map.region_summed = run.region_summed;
        options.ratio = run.ratio;
        options.multi_label = true;
        const auto results = localize_suite(net, splits.test, options);
        if (run.on_record)
            for (std::size_t k = 0; k < results.size(); ++k)
                run.on_record(static_cast<long long>(k), kind, results[k]);
        report.localization[infocam::to_string(kind)] = wsol::score_suite(results);
    }
    return report;
}

WsolReport run_wsol(const WsolRun& run) { return run_wsol(run, make_double_digit_splits(run)); }

} // namespace miloc::pipeline
