#include "miloc/nn/tensor.hpp"

#include <sstream>
#include <stdexcept>

namespace miloc::nn {

Index shape_product(const std::vector<Index>& shape)
{
    Index n = 1;
    for (Index d : shape) {
        if (d < 1)
            throw std::invalid_argument("tensor shape entries must be >= 1, got " + shape_string(shape));
        n *= d;
    }
    return n;
}

std::string shape_string(const std::vector<Index>& shape)
{
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i)
        out << (i ? "x" : "") << shape[i];
    out << ']';
    return out.str();
}

Tensor::Tensor(std::vector<Index> shape)
    : shape_(std::move(shape)), values_(Eigen::VectorXd::Zero(shape_product(shape_)))
{
}

Tensor::Tensor(std::vector<Index> shape, Eigen::VectorXd values)
    : shape_(std::move(shape)), values_(std::move(values))
{
    if (shape_product(shape_) != values_.size())
        throw std::invalid_argument("tensor data length " + std::to_string(values_.size())
                                    + " does not match shape " + shape_string(shape_));
}

Tensor Tensor::constant(std::vector<Index> shape, double value)
{
    Tensor t(std::move(shape));
    t.values_.setConstant(value);
    return t;
}

Index Tensor::offset(std::initializer_list<Index> index) const
{
    if (static_cast<Index>(index.size()) != rank())
        throw std::out_of_range("tensor index rank mismatch");
    Index flat = 0;
    std::size_t axis = 0;
    for (Index i : index) {
        if (i < 0 || i >= shape_[axis])
            throw std::out_of_range("tensor index out of range");
        flat = flat * shape_[axis] + i;
        ++axis;
    }
    return flat;
}

double Tensor::at(std::initializer_list<Index> index) const { return values_[offset(index)]; }
double& Tensor::at(std::initializer_list<Index> index) { return values_[offset(index)]; }

} // namespace miloc::nn
