#pragma once

#include "miloc/nn/tensor.hpp"

#include <Eigen/Core>

#include <memory>
#include <string>
#include <vector>

namespace miloc::nn {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Activations for a mini-batch. Rows are channels; column b*H*W + h*W + w
// holds spatial position (h, w) of sample b. Vector activations are the
// H = W = 1 case, i.e. a plain features x batch matrix.
struct Batch {
    Eigen::MatrixXd values;
    Index height = 1;
    Index width = 1;

    Index channels() const { return values.rows(); }
    Index spatial() const { return height * width; }
    Index batch_size() const { return spatial() == 0 ? 0 : values.cols() / spatial(); }
};

struct LayerShape {
    Index channels = 1;
    Index height = 1;
    Index width = 1;

    Index size() const { return channels * height * width; }
    friend bool operator==(const LayerShape&, const LayerShape&) = default;
};

enum class LayerKind : std::uint32_t { dense = 1, conv2d = 2, max_pool = 3, relu = 4, global_avg_pool = 5, flatten = 6 };

std::string to_string(LayerKind kind);

// Kind plus integer hyperparameters, enough to rebuild the layer.
//   dense:    {in, out, has_bias}
//   conv2d:   {in_channels, out_channels, kernel, stride, padding}
//   max_pool: {window}
struct LayerDescriptor {
    LayerKind kind;
    std::vector<Index> dims;
    friend bool operator==(const LayerDescriptor&, const LayerDescriptor&) = default;
};

class Layer {
public:
    virtual ~Layer() = default;

    virtual LayerKind kind() const = 0;
    virtual LayerDescriptor descriptor() const = 0;
    virtual std::string describe() const;

    // Throws std::invalid_argument when `in` is incompatible with the layer.
    virtual LayerShape output_shape(const LayerShape& in) const = 0;

    // Forward caches whatever backward needs; backward writes parameter
    // gradients (overwriting) and returns the gradient w.r.t. the input.
    virtual Batch forward(const Batch& in) = 0;
    virtual Batch backward(const Batch& grad_out) = 0;

    virtual std::vector<Tensor*> params() { return {}; }
    virtual std::vector<Tensor*> grads() { return {}; }
    std::vector<const Tensor*> params() const;

    virtual Index fan_in() const { return 0; }
    virtual Index fan_out() const { return 0; }

    virtual std::unique_ptr<Layer> clone() const = 0;

    bool has_cache() const { return cached_; }
    void clear_cache() { cached_ = false; }

protected:
    void require_cache(const char* what) const;
    bool cached_ = false;
};

class Dense final : public Layer {
public:
    Dense(Index in, Index out, bool bias = true);

    LayerKind kind() const override { return LayerKind::dense; }
    LayerDescriptor descriptor() const override;
    LayerShape output_shape(const LayerShape& in) const override;
    Batch forward(const Batch& in) override;
    Batch backward(const Batch& grad_out) override;
    std::vector<Tensor*> params() override;
    std::vector<Tensor*> grads() override;
    Index fan_in() const override { return in_; }
    Index fan_out() const override { return out_; }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Dense>(*this); }

    bool has_bias() const { return bias_; }
    // out x in, row y holds the weights feeding output y.
    Eigen::Map<const RowMatrix> weights() const;
    Eigen::Map<RowMatrix> weights();

private:
    Index in_, out_;
    bool bias_;
    Tensor weight_, bias_values_;
    Tensor weight_grad_, bias_grad_;
    Eigen::MatrixXd input_;
};

// 2-D convolution (cross-correlation), square kernel, zero padding.
// Weight tensor layout: out x in x k x k.
class Conv2d final : public Layer {
public:
    Conv2d(Index in_channels, Index out_channels, Index kernel, Index stride = 1, Index padding = -1);

    LayerKind kind() const override { return LayerKind::conv2d; }
    LayerDescriptor descriptor() const override;
    LayerShape output_shape(const LayerShape& in) const override;
    Batch forward(const Batch& in) override;
    Batch backward(const Batch& grad_out) override;
    std::vector<Tensor*> params() override;
    std::vector<Tensor*> grads() override;
    Index fan_in() const override { return in_ * kernel_ * kernel_; }
    Index fan_out() const override { return out_ * kernel_ * kernel_; }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv2d>(*this); }

private:
    Index in_, out_, kernel_, stride_, padding_;
    Tensor weight_, bias_;
    Tensor weight_grad_, bias_grad_;
    Eigen::MatrixXd patches_;
    Index in_height_ = 0, in_width_ = 0, out_height_ = 0, out_width_ = 0, batch_ = 0;
};

// Non-overlapping max pooling (window == stride); trailing rows/cols that do
// not fill a window are dropped.
class MaxPool2d final : public Layer {
public:
    explicit MaxPool2d(Index window = 2);

    LayerKind kind() const override { return LayerKind::max_pool; }
    LayerDescriptor descriptor() const override { return {kind(), {window_}}; }
    LayerShape output_shape(const LayerShape& in) const override;
    Batch forward(const Batch& in) override;
    Batch backward(const Batch& grad_out) override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<MaxPool2d>(*this); }

private:
    Index window_;
    Index in_height_ = 0, in_width_ = 0, in_cols_ = 0;
    Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic> winners_;
};

class Relu final : public Layer {
public:
    LayerKind kind() const override { return LayerKind::relu; }
    LayerDescriptor descriptor() const override { return {kind(), {}}; }
    LayerShape output_shape(const LayerShape& in) const override { return in; }
    Batch forward(const Batch& in) override;
    Batch backward(const Batch& grad_out) override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Relu>(*this); }

private:
    Eigen::ArrayXXd active_;
};

// Spatial mean of every channel: C x (B*H*W) -> C x B.
class GlobalAvgPool final : public Layer {
public:
    LayerKind kind() const override { return LayerKind::global_avg_pool; }
    LayerDescriptor descriptor() const override { return {kind(), {}}; }
    LayerShape output_shape(const LayerShape& in) const override { return {in.channels, 1, 1}; }
    Batch forward(const Batch& in) override;
    Batch backward(const Batch& grad_out) override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<GlobalAvgPool>(*this); }

private:
    Index height_ = 0, width_ = 0;
};

// C x (B*H*W) -> (C*H*W) x B with feature index c*H*W + h*W + w.
class Flatten final : public Layer {
public:
    LayerKind kind() const override { return LayerKind::flatten; }
    LayerDescriptor descriptor() const override { return {kind(), {}}; }
    LayerShape output_shape(const LayerShape& in) const override { return {in.size(), 1, 1}; }
    Batch forward(const Batch& in) override;
    Batch backward(const Batch& grad_out) override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Flatten>(*this); }

private:
    Index channels_ = 0, height_ = 0, width_ = 0;
};

std::unique_ptr<Layer> make_layer(const LayerDescriptor& descriptor);

} // namespace miloc::nn
