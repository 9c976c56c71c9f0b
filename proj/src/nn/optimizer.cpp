#include "miloc/nn/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace miloc::nn {

OptimizerKind parse_optimizer_kind(const std::string& name)
{
    if (name == "adam")
        return OptimizerKind::adam;
    if (name == "sgd")
        return OptimizerKind::sgd;
    throw std::invalid_argument("unknown optimizer '" + name + "' (expected adam or sgd)");
}

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::adam ? "adam" : "sgd"; }

Optimizer::Optimizer(OptimizerConfig config) : config_(config) {}

void Optimizer::step(Network& net)
{
    const auto params = net.params();
    const auto grads = net.grads();
    step(params, grads);
}

void Optimizer::step(std::span<Tensor* const> params, std::span<Tensor* const> grads)
{
    if (params.size() != grads.size())
        throw std::invalid_argument("optimizer: parameter and gradient lists differ in length");
    for (std::size_t i = 0; i < grads.size(); ++i)
        if (!grads[i]->values().allFinite())
            throw std::runtime_error("optimizer: non-finite gradient in parameter tensor " + std::to_string(i)
                                     + " (training diverged)");

    if (first_.empty()) {
        for (const Tensor* p : params) {
            first_.push_back(Eigen::VectorXd::Zero(p->size()));
            if (config_.kind == OptimizerKind::adam)
                second_.push_back(Eigen::VectorXd::Zero(p->size()));
        }
    }
    if (first_.size() != params.size())
        throw std::logic_error("optimizer reused with a different parameter set");

    ++steps_;
    const double lr = config_.learning_rate;
    if (config_.kind == OptimizerKind::sgd) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            first_[i] = config_.momentum * first_[i] + grads[i]->values();
            params[i]->values() -= lr * first_[i];
        }
        return;
    }

    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double correction1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
    const double correction2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& g = grads[i]->values();
        first_[i] = b1 * first_[i] + (1.0 - b1) * g;
        second_[i] = b2 * second_[i] + (1.0 - b2) * g.cwiseAbs2();
        params[i]->values().array() -= lr * (first_[i].array() / correction1)
                                       / ((second_[i].array() / correction2).sqrt() + config_.epsilon);
    }
}

} // namespace miloc::nn
