#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>

namespace miloc {

// A Monte-Carlo style mean with its standard error, in nats.
struct MiEstimate {
    double value = 0.0;
    long long n_samples = 0;
    double std_error = 0.0;
};

// Sample mean and std / sqrt(N) (unbiased variance; zero error for N = 1).
template <typename Derived>
MiEstimate mean_with_error(const Eigen::DenseBase<Derived>& values)
{
    const auto n = values.size();
    if (n == 0)
        throw std::invalid_argument("cannot average an empty sample");
    MiEstimate est;
    est.n_samples = static_cast<long long>(n);
    est.value = static_cast<double>(values.derived().array().mean());
    if (n > 1) {
        const double var = (values.derived().array() - est.value).square().sum() / static_cast<double>(n - 1);
        est.std_error = std::sqrt(var / static_cast<double>(n));
    }
    return est;
}

} // namespace miloc
