#include "miloc/nn/trainer.hpp"

#include "miloc/nn/losses.hpp"
#include "miloc/rng.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace miloc::nn {

Head parse_head(const std::string& name)
{
    if (name == "softmax")
        return Head::softmax;
    if (name == "pc_softmax")
        return Head::pc_softmax;
    if (name == "sigmoid")
        return Head::sigmoid;
    if (name == "pc_sigmoid")
        return Head::pc_sigmoid;
    throw std::invalid_argument("unknown head '" + name + "'");
}

std::string to_string(Head head)
{
    switch (head) {
    case Head::softmax: return "softmax";
    case Head::pc_softmax: return "pc_softmax";
    case Head::sigmoid: return "sigmoid";
    case Head::pc_sigmoid: return "pc_sigmoid";
    }
    return "?";
}

bool is_multi_label(Head head) { return head == Head::sigmoid || head == Head::pc_sigmoid; }

double head_loss(const HeadSpec& head, const Eigen::MatrixXd& logits, const Targets& targets,
                 std::span<const std::size_t> columns, Eigen::MatrixXd* grad)
{
    const Index batch = logits.cols();
    if (static_cast<Index>(columns.size()) != batch)
        throw std::invalid_argument("head_loss: column selection does not match logits");
    if (is_multi_label(head.head) != targets.multi_label())
        throw std::invalid_argument("head " + to_string(head.head) + " does not match the target kind");
    if (head.head == Head::pc_softmax && !head.prior)
        throw std::invalid_argument("pc_softmax head needs a prior");
    if (head.head == Head::pc_sigmoid && head.label_priors.size() != logits.rows())
        throw std::invalid_argument("pc_sigmoid head needs one prior per label");

    if (grad)
        grad->resize(logits.rows(), batch);
    const double scale = 1.0 / static_cast<double>(batch);
    double total = 0.0;
    for (Index b = 0; b < batch; ++b) {
        const auto sample = static_cast<Index>(columns[static_cast<std::size_t>(b)]);
        LossWithGrad<double> r{0.0, {}};
        switch (head.head) {
        case Head::softmax:
            r = cross_entropy_loss(logits.col(b), targets.labels[static_cast<std::size_t>(sample)]);
            break;
        case Head::pc_softmax:
            r = pc_cross_entropy_loss(logits.col(b), targets.labels[static_cast<std::size_t>(sample)], *head.prior);
            break;
        case Head::sigmoid:
            r = sigmoid_heads_loss(logits.col(b), targets.presence.col(sample), head.label_priors, false);
            break;
        case Head::pc_sigmoid:
            r = sigmoid_heads_loss(logits.col(b), targets.presence.col(sample), head.label_priors, true);
            break;
        }
        total += r.loss;
        if (grad)
            grad->col(b) = r.grad * scale;
    }
    return total * scale;
}

double decision_accuracy(const Eigen::MatrixXd& logits, const Targets& targets)
{
    if (logits.cols() == 0)
        return 0.0;
    if (targets.multi_label()) {
        const auto predicted = (logits.array() > 0.0).cast<double>();
        const auto truth = (targets.presence.array() > 0.5).cast<double>();
        return (predicted == truth).cast<double>().mean();
    }
    Index correct = 0;
    for (Index b = 0; b < logits.cols(); ++b)
        correct += argmax(logits.col(b)) == targets.labels[static_cast<std::size_t>(b)];
    return static_cast<double>(correct) / static_cast<double>(logits.cols());
}

Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& source, std::span<const std::size_t> columns)
{
    Eigen::MatrixXd out(source.rows(), static_cast<Index>(columns.size()));
    for (std::size_t i = 0; i < columns.size(); ++i)
        out.col(static_cast<Index>(i)) = source.col(static_cast<Index>(columns[i]));
    return out;
}

TrainLog fit(Network& net, const Eigen::MatrixXd& train_inputs, const Targets& train_targets,
             const Eigen::MatrixXd& valid_inputs, const Targets& valid_targets, const HeadSpec& head,
             const TrainOptions& options)
{
    if (train_inputs.cols() != train_targets.size())
        throw std::invalid_argument("training inputs and targets differ in length");
    if (options.batch_size < 1)
        throw std::invalid_argument("batch size must be positive");
    const bool validate = valid_inputs.cols() > 0;

    TrainLog log;
    Optimizer optimizer(options.optimizer);
    std::optional<Network> best;
    const auto n = static_cast<std::size_t>(train_inputs.cols());
    Eigen::MatrixXd grad;
    std::vector<std::size_t> valid_columns(static_cast<std::size_t>(valid_inputs.cols()));
    std::iota(valid_columns.begin(), valid_columns.end(), std::size_t{0});

    for (int epoch = 1; epoch <= options.epochs; ++epoch) {
        Rng rng = Rng::stream(options.seed, static_cast<std::uint64_t>(epoch));
        const auto order = permutation(n, rng);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(options.batch_size)) {
            const std::size_t count = std::min(static_cast<std::size_t>(options.batch_size), n - start);
            const std::span<const std::size_t> columns(order.data() + start, count);
            const Eigen::MatrixXd logits = net.forward_batch(gather_columns(train_inputs, columns));
            const double loss = head_loss(head, logits, train_targets, columns, &grad);
            if (!std::isfinite(loss))
                throw std::runtime_error("training diverged: non-finite loss in epoch " + std::to_string(epoch));
            loss_sum += loss * static_cast<double>(count);
            net.backward(grad);
            optimizer.step(net);
        }
        optimizer.set_learning_rate(optimizer.config().learning_rate * options.lr_decay);

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = loss_sum / static_cast<double>(n);
        if (validate) {
            const Eigen::MatrixXd logits = net.predict_logits(valid_inputs);
            stats.valid_accuracy = decision_accuracy(logits, valid_targets);
            stats.valid_loss = head_loss(head, logits, valid_targets, valid_columns, nullptr);
            const bool improved = options.selection == Selection::accuracy
                                      ? stats.valid_accuracy > log.best_valid_accuracy
                                      : stats.valid_loss < log.best_valid_loss;
            if (!best || improved) {
                best = net;
                log.best_epoch = epoch;
                log.best_valid_accuracy = stats.valid_accuracy;
                log.best_valid_loss = stats.valid_loss;
            }
        } else {
            log.best_epoch = epoch;
        }
        log.epochs.push_back(stats);
        if (options.on_epoch)
            options.on_epoch(stats);
    }
    if (best)
        net = std::move(*best);
    return log;
}

} // namespace miloc::nn
