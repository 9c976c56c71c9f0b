#pragma once

#include <Eigen/Core>

#include <vector>

namespace miloc::nn {

// Class prior P(y). Every entry lies in (0, 1] and the entries sum to one
// within 1e-9; construction throws otherwise.
class PriorDistribution {
public:
    explicit PriorDistribution(Eigen::VectorXd probs);

    static PriorDistribution uniform(Eigen::Index num_classes);
    // Normalized counts; throws if any count is zero.
    static PriorDistribution from_counts(const std::vector<long long>& counts);

    const Eigen::VectorXd& probs() const noexcept { return probs_; }
    Eigen::Index size() const noexcept { return probs_.size(); }
    double operator[](Eigen::Index i) const { return probs_[i]; }

    Eigen::VectorXd log_probs() const { return probs_.array().log().matrix(); }
    double entropy() const;
    bool is_uniform(double tol = 1e-12) const;

private:
    Eigen::VectorXd probs_;
};

} // namespace miloc::nn
