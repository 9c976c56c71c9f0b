#include "miloc/nn/checkpoint.hpp"
#include "miloc/nn/losses.hpp"
#include "miloc/nn/network.hpp"
#include "miloc/nn/optimizer.hpp"
#include "miloc/nn/softmax.hpp"
#include "miloc/nn/trainer.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

using namespace miloc;
using namespace miloc::nn;
using miloc::test::assign_params;
using miloc::test::flatten_grads;
using miloc::test::flatten_params;
using miloc::test::numeric_gradient;
using miloc::test::random_matrix;
using miloc::test::random_vector;
using miloc::test::relative_error;

namespace {

// ---- naive forward oracle: straightforward nested loops over the documented
// parameter layouts, independent of the im2col / batch-matrix path.

using Volume = std::vector<std::vector<std::vector<double>>>; // [c][h][w]

Volume naive_conv(const Volume& in, const Tensor& w, const Tensor& b, Index stride, Index pad)
{
    const Index out_c = w.shape()[0], k = w.shape()[1], in_c = w.shape()[3];
    const Index h = static_cast<Index>(in[0].size()), wd = static_cast<Index>(in[0][0].size());
    const Index oh = (h + 2 * pad - k) / stride + 1, ow = (wd + 2 * pad - k) / stride + 1;
    Volume out(out_c, std::vector<std::vector<double>>(oh, std::vector<double>(ow, 0.0)));
    for (Index o = 0; o < out_c; ++o)
        for (Index y = 0; y < oh; ++y)
            for (Index x = 0; x < ow; ++x) {
                double s = b.at({o});
                for (Index c = 0; c < in_c; ++c)
                    for (Index i = 0; i < k; ++i)
                        for (Index j = 0; j < k; ++j) {
                            const Index iy = y * stride - pad + i, ix = x * stride - pad + j;
                            if (iy >= 0 && iy < h && ix >= 0 && ix < wd)
                                s += w.at({o, i, j, c}) * in[c][iy][ix];
                        }
                out[o][y][x] = s;
            }
    return out;
}

Volume naive_relu(Volume v)
{
    for (auto& c : v)
        for (auto& row : c)
            for (double& x : row)
                x = std::max(0.0, x);
    return v;
}

Volume naive_pool(const Volume& in, Index win)
{
    Volume out(in.size());
    for (std::size_t c = 0; c < in.size(); ++c) {
        const std::size_t oh = in[c].size() / win, ow = in[c][0].size() / win;
        out[c].assign(oh, std::vector<double>(ow, -std::numeric_limits<double>::infinity()));
        for (std::size_t y = 0; y < oh; ++y)
            for (std::size_t x = 0; x < ow; ++x)
                for (Index i = 0; i < win; ++i)
                    for (Index j = 0; j < win; ++j)
                        out[c][y][x] = std::max(out[c][y][x], in[c][y * win + i][x * win + j]);
    }
    return out;
}

std::vector<double> naive_gap(const Volume& in)
{
    std::vector<double> out;
    for (const auto& c : in) {
        double s = 0.0;
        for (const auto& row : c)
            for (double x : row)
                s += x;
        out.push_back(s / static_cast<double>(c.size() * c[0].size()));
    }
    return out;
}

std::vector<double> naive_dense(const std::vector<double>& in, const Tensor& w, const Tensor* b)
{
    std::vector<double> out(static_cast<std::size_t>(w.shape()[0]));
    for (Index o = 0; o < w.shape()[0]; ++o) {
        double s = b ? b->at({o}) : 0.0;
        for (Index i = 0; i < w.shape()[1]; ++i)
            s += w.at({o, i}) * in[static_cast<std::size_t>(i)];
        out[static_cast<std::size_t>(o)] = s;
    }
    return out;
}

void check_network_gradients(Network net, std::uint64_t seed)
{
    Rng rng(seed * 7 + 1);
    const Eigen::MatrixXd x = random_matrix(rng, net.input_shape().size(), 3);
    const Eigen::MatrixXd weights = random_matrix(rng, net.num_classes(), 3);
    // Loss = sum(weights .* logits), so d loss / d logits = weights.
    auto loss = [&](const Eigen::VectorXd& p) {
        Network copy = net;
        assign_params(copy, p);
        return (copy.forward_batch(x).array() * weights.array()).sum();
    };
    net.forward_batch(x);
    net.backward(weights);
    const Eigen::VectorXd analytic = flatten_grads(net);
    const Eigen::VectorXd numeric = numeric_gradient(loss, flatten_params(net));
    for (Index i = 0; i < analytic.size(); ++i)
        EXPECT_LT(relative_error(analytic[i], numeric[i]), 1e-4)
            << "seed " << seed << " param " << i << " analytic " << analytic[i] << " numeric " << numeric[i];
}

} // namespace

// ------------------------------------------------------------------ forward

TEST(Forward, ConstantFeatureMapThroughGapHead)
{
    Network net({1, 2, 2});
    net.emplace<GlobalAvgPool>().emplace<Dense>(1, 1, false);
    net.params()[0]->values()[0] = 2.0;
    const auto result = net.forward(Tensor::constant({1, 2, 2}, 1.0));
    ASSERT_EQ(result.logits.size(), 1);
    EXPECT_DOUBLE_EQ(result.logits[0], 2.0);
    EXPECT_EQ(result.features.height, 2);
    EXPECT_TRUE(net.has_gap_head());
}

TEST(Forward, ZeroWeightsGiveZeroLogits)
{
    Network net = make_gap_cnn({1, 8, 8}, {{4, true}, {6, false}}, 5);
    for (Tensor* t : net.params())
        t->set_zero();
    Rng rng(3);
    const auto result = net.forward(Tensor({1, 8, 8}, random_vector(rng, 64)));
    EXPECT_EQ(result.logits, Eigen::VectorXd::Zero(5));
}

TEST(Forward, MatchesNaiveNestedLoopOracle)
{
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Network net = miloc::test::random_flatten_net(seed);
        Rng rng(seed);
        const Eigen::VectorXd input = random_vector(rng, 2 * 6 * 6, -1.0, 1.0);

        Volume v(2, std::vector<std::vector<double>>(6, std::vector<double>(6)));
        for (int c = 0; c < 2; ++c)
            for (int h = 0; h < 6; ++h)
                for (int w = 0; w < 6; ++w)
                    v[c][h][w] = input[c * 36 + h * 6 + w];
        const auto p = net.params();
        v = naive_pool(naive_relu(naive_conv(v, *p[0], *p[1], 1, 1)), 2);
        v = naive_relu(naive_conv(v, *p[2], *p[3], 2, 1));
        std::vector<double> flat;
        for (const auto& c : v)
            for (const auto& row : c)
                for (double x : row)
                    flat.push_back(x);
        auto hidden = naive_dense(flat, *p[4], p[5]);
        for (double& h : hidden)
            h = std::max(0.0, h);
        const auto expected = naive_dense(hidden, *p[6], nullptr);

        const auto logits = net.forward(Tensor({2, 6, 6}, input)).logits;
        for (std::size_t i = 0; i < expected.size(); ++i)
            EXPECT_NEAR(logits[static_cast<Index>(i)], expected[i], 1e-10);

        // GAP variant.
        Network gap = miloc::test::random_gap_net(seed, 4, 1, 8);
        const Eigen::VectorXd img = random_vector(rng, 64, -1.0, 1.0);
        Volume g(1, std::vector<std::vector<double>>(8, std::vector<double>(8)));
        for (int h = 0; h < 8; ++h)
            for (int w = 0; w < 8; ++w)
                g[0][h][w] = img[h * 8 + w];
        const auto q = gap.params();
        g = naive_pool(naive_relu(naive_conv(g, *q[0], *q[1], 1, 1)), 2);
        g = naive_relu(naive_conv(g, *q[2], *q[3], 1, 1));
        const auto gap_expected = naive_dense(naive_gap(g), *q[4], nullptr);
        const auto gap_logits = gap.forward(Tensor({1, 8, 8}, img)).logits;
        for (std::size_t i = 0; i < gap_expected.size(); ++i)
            EXPECT_NEAR(gap_logits[static_cast<Index>(i)], gap_expected[i], 1e-10);
    }
}

TEST(Forward, ShapeMismatchNamesTheLayer)
{
    Network net = make_mlp(4, {8}, 3);
    try {
        net.forward(Tensor({5}));
        FAIL() << "expected a shape error";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("input"), std::string::npos);
    }
    Network bad({1, 4, 4});
    bad.emplace<Conv2d>(1, 2, 3);
    try {
        bad.emplace<Conv2d>(3, 2, 3);
        FAIL() << "expected a shape error";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("layer 1 (conv2d"), std::string::npos) << e.what();
    }
}

TEST(Forward, GapOfConstantMapIsTheConstant)
{
    GlobalAvgPool gap;
    Batch in;
    in.height = 3;
    in.width = 5;
    in.values = Eigen::MatrixXd::Constant(2, 2 * 15, 0.75);
    const auto out = gap.forward(in);
    EXPECT_TRUE(out.values.isApproxToConstant(0.75, 1e-15));
}

// ------------------------------------------------------------------ backward

TEST(Backward, ScalarChainRule)
{
    Network net({1, 1, 1});
    net.emplace<Dense>(1, 1, false);
    net.params()[0]->values()[0] = 0.7;
    net.forward(Tensor({1}, Eigen::VectorXd::Constant(1, 3.0)));
    net.backward(Eigen::MatrixXd::Ones(1, 1));
    EXPECT_DOUBLE_EQ(net.grads()[0]->values()[0], 3.0);
}

TEST(Backward, EveryParameterMatchesFiniteDifferences)
{
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        check_network_gradients(miloc::test::random_flatten_net(seed), seed);
        check_network_gradients(miloc::test::random_gap_net(seed, 3, 2, 6), seed);
        Network mlp = make_mlp(3, {6, 5}, 4);
        mlp.initialize(seed);
        check_network_gradients(mlp, seed);
    }
}

TEST(Backward, ZeroLossGradGivesZeroGrads)
{
    Network net = miloc::test::random_flatten_net(4);
    Rng rng(1);
    net.forward_batch(random_matrix(rng, 72, 2));
    net.backward(Eigen::MatrixXd::Zero(3, 2));
    for (Tensor* g : net.grads())
        EXPECT_TRUE(g->values().isZero(0.0));
}

TEST(Backward, BeforeForwardIsAnError)
{
    Network net = make_mlp(2, {3}, 2);
    EXPECT_THROW(net.backward(Eigen::MatrixXd::Zero(2, 1)), std::logic_error);
    Relu relu;
    EXPECT_THROW(relu.backward(Batch{}), std::logic_error);
}

// ------------------------------------------------------------------ log-sum-exp / softmax

TEST(LogSumExp, Examples)
{
    EXPECT_NEAR(log_sum_exp(Eigen::VectorXd::Zero(5)), std::log(5.0), 1e-15);
    Eigen::Vector2d big(1000.0, 0.0);
    EXPECT_NEAR(log_sum_exp(big), 1000.0, 1e-12);
    Eigen::Vector2d huge(1e300, -1e300);
    EXPECT_DOUBLE_EQ(log_sum_exp(huge), 1e300);
    EXPECT_THROW(log_sum_exp(Eigen::VectorXd()), std::invalid_argument);
}

TEST(LogSumExp, MatchesExtendedPrecisionDirectEvaluation)
{
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::VectorXd v = random_vector(rng, 5, -10.0, 10.0);
        long double sum = 0.0L;
        for (Index i = 0; i < v.size(); ++i)
            sum += std::exp(static_cast<long double>(v[i]));
        EXPECT_NEAR(log_sum_exp(v), static_cast<double>(std::log(sum)), 1e-12);
    }
}

TEST(Softmax, Examples)
{
    EXPECT_TRUE(softmax(Eigen::Vector2d(0.0, 0.0)).isApprox(Eigen::Vector2d(0.5, 0.5), 1e-15));
    const Eigen::Vector2d p = softmax(Eigen::Vector2d(std::log(1.0), std::log(3.0)));
    EXPECT_NEAR(p[0], 0.25, 1e-15);
    EXPECT_NEAR(p[1], 0.75, 1e-15);
}

TEST(Softmax, PropertiesOverRandomLogits)
{
    Rng rng(5);
    for (int trial = 0; trial < 1000; ++trial) {
        const Index m = 2 + static_cast<Index>(rng.below(8));
        const Eigen::VectorXd l = random_vector(rng, m, -20.0, 20.0);
        const Eigen::VectorXd p = softmax(l);
        EXPECT_NEAR(p.sum(), 1.0, 1e-12);
        EXPECT_EQ(argmax(p), argmax(l));
        const Eigen::VectorXd shifted = softmax((l.array() + rng.uniform(-50.0, 50.0)).matrix());
        EXPECT_LT((shifted - p).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(PcSoftmax, UniformPriorIsScaledSoftmax)
{
    Rng rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        const Index m = 2 + static_cast<Index>(rng.below(8));
        const Eigen::VectorXd l = random_vector(rng, m);
        const auto prior = PriorDistribution::uniform(m);
        const Eigen::VectorXd pc = pc_softmax(l, prior);
        const Eigen::VectorXd diff =
            pc.array().log().matrix() - softmax(l).array().log().matrix();
        EXPECT_LT((diff.array() - std::log(static_cast<double>(m))).abs().maxCoeff(), 1e-12);
    }
}

TEST(PcSoftmax, ZeroLogitsGiveOnes)
{
    Eigen::VectorXd probs(5);
    probs << 0.07, 0.13, 0.20, 0.27, 0.33;
    const PriorDistribution prior(probs);
    EXPECT_TRUE(pc_softmax(Eigen::VectorXd::Zero(5), prior).isApprox(Eigen::VectorXd::Ones(5), 1e-15));
}

TEST(PcSoftmax, MatchesNaiveFormulaAndPreservesArgmax)
{
    Rng rng(21);
    for (int trial = 0; trial < 500; ++trial) {
        const Index m = 2 + static_cast<Index>(rng.below(6));
        const Eigen::VectorXd l = random_vector(rng, m, -5.0, 5.0);
        Eigen::VectorXd raw = random_vector(rng, m, 0.05, 1.0);
        const PriorDistribution prior(raw / raw.sum());
        double denom = 0.0;
        for (Index y = 0; y < m; ++y)
            denom += prior[y] * std::exp(l[y]);
        const Eigen::VectorXd pc = pc_softmax(l, prior);
        for (Index y = 0; y < m; ++y)
            EXPECT_NEAR(pc[y], std::exp(l[y]) / denom, 1e-12 * std::max(1.0, pc[y]));
        EXPECT_EQ(argmax(pc), argmax(l));
    }
}

TEST(PcSoftmax, ZeroPriorIsRejected)
{
    EXPECT_THROW(PriorDistribution(Eigen::Vector3d(0.5, 0.5, 0.0)), std::invalid_argument);
    EXPECT_THROW(PriorDistribution(Eigen::Vector2d(0.5, 0.6)), std::invalid_argument);
}

// ------------------------------------------------------------------ losses

TEST(CrossEntropy, UniformLogits)
{
    const auto r = cross_entropy_loss(Eigen::VectorXd::Zero(5), 2);
    EXPECT_NEAR(r.loss, std::log(5.0), 1e-15);
    EXPECT_THROW(cross_entropy_loss(Eigen::VectorXd::Zero(5), 5), std::out_of_range);
    EXPECT_THROW(cross_entropy_loss(Eigen::VectorXd::Zero(5), -1), std::out_of_range);
}

TEST(CrossEntropy, GradientMatchesFiniteDifferences)
{
    Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::VectorXd l = random_vector(rng, 6);
        const Index label = static_cast<Index>(rng.below(6));
        const auto r = cross_entropy_loss(l, label);
        const auto g = numeric_gradient([&](const Eigen::VectorXd& x) { return cross_entropy_loss(x, label).loss; }, l);
        for (Index i = 0; i < 6; ++i)
            EXPECT_LT(relative_error(r.grad[i], g[i]), 1e-6);
    }
}

TEST(PcCrossEntropy, ExamplesAndGradient)
{
    Rng rng(41);
    const auto uniform = PriorDistribution::uniform(4);
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::VectorXd l = random_vector(rng, 4);
        const Index label = static_cast<Index>(rng.below(4));
        EXPECT_NEAR(pc_cross_entropy_loss(l, label, uniform).loss, cross_entropy_loss(l, label).loss - std::log(4.0),
                    1e-12);

        Eigen::VectorXd raw = random_vector(rng, 4, 0.1, 1.0);
        const PriorDistribution prior(raw / raw.sum());
        EXPECT_NEAR(pc_cross_entropy_loss(Eigen::VectorXd::Zero(4), label, prior).loss, 0.0, 1e-15);
        const auto r = pc_cross_entropy_loss(l, label, prior);
        const auto g = numeric_gradient(
            [&](const Eigen::VectorXd& x) { return pc_cross_entropy_loss(x, label, prior).loss; }, l);
        for (Index i = 0; i < 4; ++i)
            EXPECT_LT(relative_error(r.grad[i], g[i]), 1e-6);
    }
}

TEST(SigmoidHeads, ExamplesAndGradient)
{
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
    const Eigen::VectorXd present = Eigen::VectorXd::Ones(1);
    EXPECT_NEAR(sigmoid_heads_loss(zero, present, Eigen::VectorXd::Constant(1, 0.3), false).loss, std::log(2.0),
                1e-15);

    Rng rng(51);
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::VectorXd l = random_vector(rng, 5, -4.0, 4.0);
        Eigen::VectorXd labels(5);
        for (Index j = 0; j < 5; ++j)
            labels[j] = rng.bernoulli(0.4) ? 1.0 : 0.0;
        const Eigen::VectorXd half = Eigen::VectorXd::Constant(5, 0.5);
        EXPECT_NEAR(sigmoid_heads_loss(l, labels, half, true).loss,
                    sigmoid_heads_loss(l, labels, half, false).loss - 5.0 * std::log(2.0), 1e-12);

        const Eigen::VectorXd priors = random_vector(rng, 5, 0.05, 0.95);
        for (bool corrected : {false, true}) {
            const auto r = sigmoid_heads_loss(l, labels, priors, corrected);
            const auto g = numeric_gradient(
                [&](const Eigen::VectorXd& x) { return sigmoid_heads_loss(x, labels, priors, corrected).loss; }, l);
            for (Index j = 0; j < 5; ++j)
                EXPECT_LT(relative_error(r.grad[j], g[j]), 1e-6);
        }
    }
    EXPECT_THROW(sigmoid_heads_loss(zero, present, Eigen::VectorXd::Ones(1), true), std::invalid_argument);
    EXPECT_THROW(sigmoid_heads_loss(zero, present, Eigen::VectorXd::Zero(1), true), std::invalid_argument);
}

TEST(HeadLoss, BatchGradientFlowsThroughNetwork)
{
    // End-to-end gradient of the mean head loss w.r.t. every parameter.
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Network net = miloc::test::random_gap_net(seed, 3, 1, 6);
        Rng rng(seed);
        const Eigen::MatrixXd x = random_matrix(rng, 36, 4);
        Targets single;
        single.labels = {0, 2, 1, 2};
        Targets multi;
        multi.presence = (random_matrix(rng, 3, 4, 0.0, 1.0).array() > 0.5).cast<double>();
        const std::vector<std::size_t> columns = {0, 1, 2, 3};

        std::vector<std::pair<HeadSpec, const Targets*>> heads;
        heads.push_back({HeadSpec{Head::softmax, {}, {}}, &single});
        heads.push_back({HeadSpec{Head::pc_softmax, PriorDistribution(Eigen::Vector3d(0.2, 0.5, 0.3)), {}}, &single});
        heads.push_back({HeadSpec{Head::sigmoid, {}, Eigen::Vector3d(0.3, 0.4, 0.2)}, &multi});
        heads.push_back({HeadSpec{Head::pc_sigmoid, {}, Eigen::Vector3d(0.3, 0.4, 0.2)}, &multi});
        for (const auto& [head, targets] : heads) {
            Eigen::MatrixXd grad;
            head_loss(head, net.forward_batch(x), *targets, columns, &grad);
            net.backward(grad);
            const Eigen::VectorXd analytic = flatten_grads(net);
            auto loss = [&](const Eigen::VectorXd& p) {
                Network copy = net;
                assign_params(copy, p);
                return head_loss(head, copy.forward_batch(x), *targets, columns, nullptr);
            };
            const Eigen::VectorXd numeric = numeric_gradient(loss, flatten_params(net));
            for (Index i = 0; i < analytic.size(); ++i)
                EXPECT_LT(relative_error(analytic[i], numeric[i]), 1e-4) << to_string(head.head) << " param " << i;
        }
    }
}

// ------------------------------------------------------------------ optimizer

TEST(Optimizer, ZeroGradsLeaveParamsUnchanged)
{
    for (auto kind : {OptimizerKind::adam, OptimizerKind::sgd}) {
        Network net = make_mlp(3, {4}, 2);
        net.initialize(9);
        const Network before = net;
        net.zero_grads();
        Optimizer opt({kind});
        opt.step(net);
        for (std::size_t i = 0; i < net.params().size(); ++i)
            EXPECT_EQ(net.params()[i]->values(), before.params()[i]->values());
    }
}

TEST(Optimizer, MinimizesOneDimensionalQuadratic)
{
    // loss = (w - 0.5)^2, optimum w* = 0.5.
    for (auto kind : {OptimizerKind::adam, OptimizerKind::sgd}) {
        OptimizerConfig cfg{kind};
        cfg.learning_rate = 0.01;
        Optimizer opt(cfg);
        Tensor w({1}), g({1});
        Tensor* params[] = {&w};
        Tensor* grads[] = {&g};
        for (int step = 0; step < 1000; ++step) {
            g[0] = 2.0 * (w[0] - 0.5);
            opt.step(params, grads);
        }
        EXPECT_LT(std::abs(w[0] - 0.5), 1e-3) << to_string(kind);
    }
}

TEST(Optimizer, NonFiniteGradientIsAnError)
{
    Network net = make_mlp(2, {2}, 2);
    net.zero_grads();
    net.grads()[0]->values()[0] = std::numeric_limits<double>::quiet_NaN();
    Optimizer opt;
    EXPECT_THROW(opt.step(net), std::runtime_error);
}

// ------------------------------------------------------------------ training / determinism

namespace {
struct Toy {
    Eigen::MatrixXd x;
    Targets t;
};

Toy toy_problem(std::uint64_t seed, Index n)
{
    Rng rng(seed);
    Toy toy;
    toy.x.resize(2, n);
    for (Index i = 0; i < n; ++i) {
        const int y = static_cast<int>(rng.below(3));
        toy.x(0, i) = (y - 1) * 3.0 + rng.normal() * 0.5;
        toy.x(1, i) = rng.normal() * 0.5;
        toy.t.labels.push_back(y);
    }
    return toy;
}
} // namespace

TEST(Trainer, LearnsSeparableProblemAndIsDeterministic)
{
    const Toy train = toy_problem(1, 600);
    const Toy valid = toy_problem(2, 200);
    TrainOptions options;
    options.epochs = 5;
    options.optimizer.learning_rate = 1e-2;
    options.seed = 77;

    auto run = [&] {
        Network net = make_mlp(2, {16}, 3);
        net.initialize(5);
        const auto log = fit(net, train.x, train.t, valid.x, valid.t, {}, options);
        return std::make_pair(net, log);
    };
    auto [a, log_a] = run();
    auto [b, log_b] = run();
    EXPECT_GT(log_a.best_valid_accuracy, 0.95);
    ASSERT_EQ(log_a.epochs.size(), 5u);
    for (std::size_t i = 0; i < a.params().size(); ++i)
        EXPECT_EQ(a.params()[i]->values(), b.params()[i]->values());
    for (std::size_t e = 0; e < log_a.epochs.size(); ++e)
        EXPECT_EQ(log_a.epochs[e].train_loss, log_b.epochs[e].train_loss);
}

TEST(Trainer, LossSelectionKeepsLowestValidationLossEpoch)
{
    const Toy train = toy_problem(1, 300);
    const Toy valid = toy_problem(2, 100);
    TrainOptions options;
    options.epochs = 6;
    options.optimizer.learning_rate = 1e-2;
    options.seed = 5;
    options.selection = Selection::loss;
    Network net = make_mlp(2, {16}, 3);
    net.initialize(9);
    const auto log = fit(net, train.x, train.t, valid.x, valid.t, {}, options);
    ASSERT_EQ(log.epochs.size(), 6u);
    const auto lowest = std::min_element(log.epochs.begin(), log.epochs.end(),
                                         [](const auto& a, const auto& b) { return a.valid_loss < b.valid_loss; });
    EXPECT_EQ(log.best_epoch, lowest->epoch);
    EXPECT_EQ(log.best_valid_loss, lowest->valid_loss);
    std::vector<std::size_t> columns(static_cast<std::size_t>(valid.x.cols()));
    std::iota(columns.begin(), columns.end(), std::size_t{0});
    EXPECT_NEAR(head_loss({}, net.predict_logits(valid.x), valid.t, columns, nullptr), lowest->valid_loss, 1e-12);
}

TEST(Trainer, ZeroEpochsKeepsInitialization)
{
    const Toy train = toy_problem(1, 50);
    Network net = make_mlp(2, {4}, 3);
    net.initialize(3);
    const Network init = net;
    TrainOptions options;
    options.epochs = 0;
    fit(net, train.x, train.t, train.x, train.t, {}, options);
    for (std::size_t i = 0; i < net.params().size(); ++i)
        EXPECT_EQ(net.params()[i]->values(), init.params()[i]->values());
}

TEST(Trainer, DivergenceIsReported)
{
    const Toy train = toy_problem(1, 64);
    Network net = make_mlp(2, {4}, 3);
    net.initialize(3);
    net.params()[0]->values()[0] = std::numeric_limits<double>::infinity();
    TrainOptions options;
    options.epochs = 1;
    EXPECT_THROW(fit(net, train.x, train.t, Eigen::MatrixXd(), Targets{}, {}, options), std::runtime_error);
}

TEST(Initialization, GlorotBoundsAndSeedDeterminism)
{
    Network a = make_mlp(10, {20}, 5);
    Network b = make_mlp(10, {20}, 5);
    a.initialize(1234);
    b.initialize(1234);
    const double limit = std::sqrt(6.0 / 30.0);
    EXPECT_LE(a.params()[0]->values().cwiseAbs().maxCoeff(), limit);
    EXPECT_TRUE(a.params()[1]->values().isZero(0.0));
    EXPECT_EQ(a.params()[0]->values(), b.params()[0]->values());
    b.initialize(1235);
    EXPECT_NE(a.params()[0]->values(), b.params()[0]->values());
}

// ------------------------------------------------------------------ checkpoint

TEST(Checkpoint, RoundTripIsExact)
{
    Network net = miloc::test::random_flatten_net(12);
    std::stringstream buffer;
    write_checkpoint(buffer, net);
    Network loaded = read_checkpoint(buffer);
    ASSERT_EQ(loaded.descriptors(), net.descriptors());
    for (std::size_t i = 0; i < net.params().size(); ++i)
        EXPECT_EQ(*loaded.params()[i], *static_cast<const Network&>(net).params()[i]);

    std::stringstream garbage("XXXX");
    EXPECT_THROW(read_checkpoint(garbage), std::runtime_error);
    std::string bytes = buffer.str();
    std::stringstream again;
    write_checkpoint(again, net);
    std::string truncated = again.str().substr(0, again.str().size() - 3);
    std::stringstream cut(truncated);
    EXPECT_THROW(read_checkpoint(cut), std::runtime_error);
}
