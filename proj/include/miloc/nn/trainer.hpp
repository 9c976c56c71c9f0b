#pragma once

#include "miloc/nn/network.hpp"
#include "miloc/nn/optimizer.hpp"
#include "miloc/nn/prior.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace miloc::nn {

enum class Head { softmax, pc_softmax, sigmoid, pc_sigmoid };

Head parse_head(const std::string& name);
std::string to_string(Head head);
bool is_multi_label(Head head);

// Supervision for a set of samples: class indices for single-label heads,
// an M x N 0/1 presence matrix for the sigmoid heads.
struct Targets {
    std::vector<int> labels;
    Eigen::MatrixXd presence;

    bool multi_label() const { return presence.size() > 0; }
    Index size() const { return multi_label() ? presence.cols() : static_cast<Index>(labels.size()); }
};

struct HeadSpec {
    Head head = Head::softmax;
    std::optional<PriorDistribution> prior; // pc_softmax
    Eigen::VectorXd label_priors;           // pc_sigmoid, per-label Bernoulli P(present)
};

// Mean loss over the selected columns of `logits` (column i pairs with
// target sample columns[i]). When `grad` is given it receives the M x B
// gradient of that mean.
double head_loss(const HeadSpec& head, const Eigen::MatrixXd& logits, const Targets& targets,
                 std::span<const std::size_t> columns, Eigen::MatrixXd* grad);

// Top-1 accuracy (single label) or mean per-slot decision accuracy with the
// present-iff-logit>0 rule (multi-label).
double decision_accuracy(const Eigen::MatrixXd& logits, const Targets& targets);

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double valid_accuracy = 0.0;
    double valid_loss = 0.0;
};

enum class Selection { accuracy, loss };

struct TrainOptions {
    int epochs = 20;
    Index batch_size = 64;
    OptimizerConfig optimizer;
    double lr_decay = 1.0; // learning rate multiplier applied after every epoch
    std::uint64_t seed = 0;
    Selection selection = Selection::accuracy; // validation quantity that picks the kept epoch
    std::function<void(const EpochStats&)> on_epoch;
};

struct TrainLog {
    std::vector<EpochStats> epochs;
    int best_epoch = 0; // 0 = initial parameters kept
    double best_valid_accuracy = 0.0;
    double best_valid_loss = 0.0;
};

// Mini-batch training. After every epoch the validation accuracy and loss are
// measured and the parameters of the best epoch by the selected quantity
// (highest accuracy or lowest loss, earliest on ties) are restored at the end. Without validation data the last epoch is kept. Throws
// std::runtime_error if the loss becomes non-finite.
TrainLog fit(Network& net, const Eigen::MatrixXd& train_inputs, const Targets& train_targets,
             const Eigen::MatrixXd& valid_inputs, const Targets& valid_targets, const HeadSpec& head,
             const TrainOptions& options);

Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& source, std::span<const std::size_t> columns);

} // namespace miloc::nn
