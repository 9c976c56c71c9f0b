#pragma once

#include "miloc/nn/network.hpp"
#include "miloc/rng.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>

namespace miloc::test {

inline Eigen::VectorXd random_vector(Rng& rng, Eigen::Index n, double lo = -3.0, double hi = 3.0)
{
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i)
        v[i] = rng.uniform(lo, hi);
    return v;
}

inline Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double lo = -1.0,
                                     double hi = 1.0)
{
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i)
            m(i, j) = rng.uniform(lo, hi);
    return m;
}

inline double relative_error(double analytic, double numeric)
{
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

// Central difference of f at x along every coordinate.
inline Eigen::VectorXd numeric_gradient(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x,
                                        double eps = 1e-5)
{
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + eps;
        const double up = f(x);
        x[i] = saved - eps;
        const double down = f(x);
        x[i] = saved;
        g[i] = (up - down) / (2.0 * eps);
    }
    return g;
}

// Small GAP network with random parameters (biases included) for identity
// checks: conv -> relu -> pool -> conv -> relu -> GAP -> dense.
inline nn::Network random_gap_net(std::uint64_t seed, nn::Index classes = 4, nn::Index in_channels = 1,
                                  nn::Index size = 8)
{
    nn::Network net = nn::make_gap_cnn({in_channels, size, size}, {{3, true}, {5, false}}, classes);
    net.initialize(seed);
    Rng rng(seed ^ 0xABCDEFull);
    for (nn::Tensor* t : net.params())
        for (nn::Index i = 0; i < t->size(); ++i)
            t->values()[i] = rng.uniform(-1.0, 1.0);
    return net;
}

// Every layer kind once: conv(stride 1) -> relu -> pool -> conv(stride 2,
// pad 1) -> relu -> flatten -> dense+bias -> relu -> dense (no bias).
inline nn::Network random_flatten_net(std::uint64_t seed)
{
    nn::Network net({2, 6, 6});
    net.emplace<nn::Conv2d>(2, 3, 3).emplace<nn::Relu>().emplace<nn::MaxPool2d>(2);
    net.emplace<nn::Conv2d>(3, 4, 3, 2, 1).emplace<nn::Relu>().emplace<nn::Flatten>();
    net.emplace<nn::Dense>(net.output_shape().channels, 5).emplace<nn::Relu>().emplace<nn::Dense>(5, 3, false);
    net.initialize(seed);
    Rng rng(seed + 99);
    for (nn::Tensor* t : net.params())
        for (nn::Index i = 0; i < t->size(); ++i)
            t->values()[i] = rng.uniform(-1.0, 1.0);
    return net;
}

inline Eigen::VectorXd flatten_params(const nn::Network& net)
{
    Eigen::Index n = 0;
    for (const nn::Tensor* t : net.params())
        n += t->size();
    Eigen::VectorXd flat(n);
    Eigen::Index at = 0;
    for (const nn::Tensor* t : net.params()) {
        flat.segment(at, t->size()) = t->values();
        at += t->size();
    }
    return flat;
}

inline void assign_params(nn::Network& net, const Eigen::VectorXd& flat)
{
    Eigen::Index at = 0;
    for (nn::Tensor* t : net.params()) {
        t->values() = flat.segment(at, t->size());
        at += t->size();
    }
}

inline Eigen::VectorXd flatten_grads(nn::Network& net)
{
    Eigen::VectorXd flat(net.parameter_count());
    Eigen::Index at = 0;
    for (nn::Tensor* t : net.grads()) {
        flat.segment(at, t->size()) = t->values();
        at += t->size();
    }
    return flat;
}

} // namespace miloc::test
