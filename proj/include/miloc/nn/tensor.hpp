#pragma once

#include <Eigen/Core>

#include <initializer_list>
#include <string>
#include <vector>

namespace miloc::nn {

using Index = Eigen::Index;

// Dense n-dimensional array of doubles in row-major order.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<Index> shape);
    Tensor(std::vector<Index> shape, Eigen::VectorXd values);

    static Tensor constant(std::vector<Index> shape, double value);

    const std::vector<Index>& shape() const noexcept { return shape_; }
    Index rank() const noexcept { return static_cast<Index>(shape_.size()); }
    Index size() const noexcept { return values_.size(); }

    Eigen::VectorXd& values() noexcept { return values_; }
    const Eigen::VectorXd& values() const noexcept { return values_; }

    double operator[](Index i) const { return values_[i]; }
    double& operator[](Index i) { return values_[i]; }

    double at(std::initializer_list<Index> index) const;
    double& at(std::initializer_list<Index> index);

    void set_zero() { values_.setZero(); }

    friend bool operator==(const Tensor& a, const Tensor& b)
    {
        return a.shape_ == b.shape_ && a.values_ == b.values_;
    }

private:
    Index offset(std::initializer_list<Index> index) const;

    std::vector<Index> shape_;
    Eigen::VectorXd values_;
};

Index shape_product(const std::vector<Index>& shape);
std::string shape_string(const std::vector<Index>& shape);

} // namespace miloc::nn
