#pragma once

#include "miloc/nn/network.hpp"

#include <span>
#include <string>
#include <vector>

namespace miloc::nn {

enum class OptimizerKind { adam, sgd };

OptimizerKind parse_optimizer_kind(const std::string& name);
std::string to_string(OptimizerKind kind);

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double momentum = 0.9; // sgd only
};

// Adam or SGD with momentum. State is allocated on the first step and tied to
// the parameter order of the network it is used with.
class Optimizer {
public:
    explicit Optimizer(OptimizerConfig config = {});

    void step(Network& net);
    // Throws std::runtime_error on a non-finite gradient.
    void step(std::span<Tensor* const> params, std::span<Tensor* const> grads);

    const OptimizerConfig& config() const { return config_; }
    void set_learning_rate(double lr) { config_.learning_rate = lr; }
    long steps() const { return steps_; }

private:
    OptimizerConfig config_;
    std::vector<Eigen::VectorXd> first_;
    std::vector<Eigen::VectorXd> second_;
    long steps_ = 0;
};

} // namespace miloc::nn
