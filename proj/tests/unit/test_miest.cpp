#include "miloc/gaussmix/mixture.hpp"
#include "miloc/miest/pmi.hpp"
#include "miloc/nn/losses.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace miloc;
using Eigen::Index;
using miloc::test::random_vector;

namespace {

nn::PriorDistribution random_prior(Rng& rng, Index m)
{
    Eigen::VectorXd p(m);
    for (Index i = 0; i < m; ++i)
        p[i] = 0.05 + rng.uniform();
    return nn::PriorDistribution(p / p.sum());
}

} // namespace

TEST(Pmi, UniformLogitsGiveZero)
{
    EXPECT_TRUE(miest::pmi(Eigen::VectorXd::Constant(5, 2.5)).isZero(1e-15));
}

TEST(Pmi, DominantLogit)
{
    Eigen::VectorXd l = Eigen::VectorXd::Zero(5);
    l[0] = 10.0;
    const long double expected = 10.0L - std::log(std::exp(10.0L) + 4.0L) + std::log(5.0L);
    EXPECT_NEAR(miest::pmi(l)[0], static_cast<double>(expected), 1e-14);
    EXPECT_NEAR(miest::pmi(l)[0], 1.60926, 1e-5);
}

TEST(Pmi, PlusCrossEntropyIsLogM)
{
    Rng rng(1);
    for (int trial = 0; trial < 1000; ++trial) {
        const Index m = 2 + static_cast<Index>(rng.below(9));
        const Eigen::VectorXd l = random_vector(rng, m, -20.0, 20.0);
        const Index y = static_cast<Index>(rng.below(static_cast<std::uint64_t>(m)));
        EXPECT_NEAR(miest::pmi(l)[y] + nn::cross_entropy_loss(l, y).loss, std::log(static_cast<double>(m)), 1e-12);
    }
}

TEST(PcPmi, UniformPriorMatchesPmi)
{
    Rng rng(2);
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::VectorXd l = random_vector(rng, 6, -30.0, 30.0);
        EXPECT_LE((miest::pc_pmi(l, nn::PriorDistribution::uniform(6)) - miest::pmi(l)).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(PcPmi, ZeroLogitsAndNaiveFormula)
{
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const auto prior = random_prior(rng, 5);
        EXPECT_TRUE(miest::pc_pmi(Eigen::VectorXd::Zero(5), prior).isZero(1e-15));
        const Eigen::VectorXd l = random_vector(rng, 5, -8.0, 8.0);
        long double norm = 0.0L;
        for (Index i = 0; i < 5; ++i)
            norm += static_cast<long double>(prior[i]) * std::exp(static_cast<long double>(l[i]));
        const auto got = miest::pc_pmi(l, prior);
        for (Index y = 0; y < 5; ++y)
            EXPECT_NEAR(got[y], static_cast<double>(l[y] - std::log(norm)), 1e-12);
    }
}

TEST(PcPmi, ArgmaxAgreesWithLogits)
{
    Rng rng(4);
    for (int trial = 0; trial < 500; ++trial) {
        const auto prior = random_prior(rng, 7);
        const Eigen::VectorXd l = random_vector(rng, 7, -5.0, 5.0);
        EXPECT_EQ(nn::argmax(miest::pmi(l)), nn::argmax(l));
        EXPECT_EQ(nn::argmax(miest::pc_pmi(l, prior)), nn::argmax(l));
    }
}

TEST(PcPmi, PriorMustMatchLogits)
{
    EXPECT_THROW(miest::pc_pmi(Eigen::VectorXd::Zero(3), nn::PriorDistribution::uniform(4)), std::invalid_argument);
    EXPECT_THROW(nn::PriorDistribution(Eigen::Vector3d(0.5, 0.5, 0.0)), std::invalid_argument);
}

TEST(EstimateMi, BatchIdentities)
{
    Rng rng(5);
    const Index m = 5, n = 300;
    const Eigen::MatrixXd logits = miloc::test::random_matrix(rng, m, n, -6.0, 6.0);
    std::vector<int> labels(n);
    for (auto& y : labels)
        y = static_cast<int>(rng.below(m));
    const auto prior = random_prior(rng, m);

    double ce = 0.0, pc_ce = 0.0;
    for (Index i = 0; i < n; ++i) {
        ce += nn::cross_entropy_loss(logits.col(i), labels[static_cast<std::size_t>(i)]).loss;
        pc_ce += nn::pc_cross_entropy_loss(logits.col(i), labels[static_cast<std::size_t>(i)], prior).loss;
    }
    const auto plain = miest::estimate_from_logits(logits, labels, miest::PmiKind::softmax);
    const auto corrected = miest::estimate_from_logits(logits, labels, miest::PmiKind::pc_softmax, prior);
    EXPECT_NEAR(plain.value + ce / n, std::log(5.0), 1e-10);
    EXPECT_NEAR(corrected.value + pc_ce / n, 0.0, 1e-10);
    EXPECT_EQ(plain.n_samples, n);
    EXPECT_GT(plain.std_error, 0.0);

    const auto posterior = miest::estimate_from_logits(logits, labels, miest::PmiKind::posterior, prior);
    EXPECT_NEAR(posterior.value, plain.value - std::log(5.0) - [&] {
        double s = 0.0;
        for (int y : labels)
            s += prior.log_probs()[y];
        return s / n;
    }(), 1e-10);
    EXPECT_THROW(miest::estimate_from_logits(logits, labels, miest::PmiKind::pc_softmax), std::invalid_argument);
}

TEST(EstimateMi, ZeroWeightNetGivesZero)
{
    auto net = nn::make_mlp(3, {8}, 5);
    for (auto* p : net.params())
        p->set_zero();
    LabeledDataset data;
    data.inputs = Eigen::MatrixXd::Random(3, 40);
    data.labels.assign(40, 2);
    data.num_classes = 5;
    const auto est = miest::estimate_mi(net, data);
    EXPECT_EQ(est.value, 0.0);
    EXPECT_EQ(est.std_error, 0.0);
    EXPECT_EQ(est.n_samples, 40);

    LabeledDataset empty;
    empty.inputs.resize(3, 0);
    empty.num_classes = 5;
    EXPECT_THROW(miest::estimate_mi(net, empty), std::invalid_argument);
}

TEST(EstimateMi, ShuffledLabelsOnTrainedNetGiveNoInformation)
{
    const auto design = gaussmix::standard_design(true, 2);
    std::vector<long long> counts(5, 1200);
    const auto split = gaussmix::sample(design.spec, counts, 11);
    auto net = nn::make_mlp(2, {32}, 5);
    net.initialize(1);
    nn::TrainOptions options;
    options.epochs = 20;
    options.optimizer.learning_rate = 3e-3;
    options.seed = 2;
    nn::Targets train{split.train.labels, {}}, valid{split.valid.labels, {}};
    nn::fit(net, split.train.inputs, train, split.valid.inputs, valid, {}, options);

    const auto real = miest::estimate_mi(net, split.test);
    EXPECT_GT(real.value, 1.0);
    // A model trained on shuffled labels has nothing to learn.
    const auto shuffled_train = permute_labels(split.train, 3);
    const auto shuffled_valid = permute_labels(split.valid, 4);
    auto control = nn::make_mlp(2, {32}, 5);
    control.initialize(1);
    nn::fit(control, shuffled_train.inputs, {shuffled_train.labels, {}}, shuffled_valid.inputs,
            {shuffled_valid.labels, {}}, {}, options);
    const auto none = miest::estimate_mi(control, permute_labels(split.test, 5));
    EXPECT_LE(std::abs(none.value), 3.0 * none.std_error + 0.01);
}

TEST(ScorePredictions, ForcedArithmetic)
{
    std::vector<int> labels(100, 0);
    std::fill(labels.begin() + 90, labels.end(), 1);
    const auto scores = miest::score_predictions(std::vector<int>(100, 0), labels, 2);
    EXPECT_DOUBLE_EQ(scores.micro, 0.90);
    EXPECT_DOUBLE_EQ(scores.per_class, 0.50);

    const auto perfect = miest::score_predictions(labels, labels, 2);
    EXPECT_EQ(perfect.micro, 1.0);
    EXPECT_EQ(perfect.per_class, 1.0);
}

TEST(ScorePredictions, AbsentClassIsExcluded)
{
    const auto scores = miest::score_predictions({0, 1, 1, 0}, {0, 1, 0, 0}, 3);
    EXPECT_EQ(scores.absent_classes, std::vector<int>{2});
    EXPECT_TRUE(std::isnan(scores.recall[2]));
    EXPECT_DOUBLE_EQ(scores.per_class, (2.0 / 3.0 + 1.0) / 2.0);
    EXPECT_DOUBLE_EQ(scores.micro, 0.75);
}
