#include "miloc/nn/layers.hpp"

#include <limits>
#include <sstream>
#include <stdexcept>

namespace miloc::nn {

std::string to_string(LayerKind kind)
{
    switch (kind) {
    case LayerKind::dense: return "dense";
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::max_pool: return "max_pool";
    case LayerKind::relu: return "relu";
    case LayerKind::global_avg_pool: return "global_avg_pool";
    case LayerKind::flatten: return "flatten";
    }
    return "unknown";
}

std::string Layer::describe() const
{
    std::ostringstream out;
    const auto desc = descriptor();
    out << to_string(desc.kind);
    if (!desc.dims.empty()) {
        out << '(';
        for (std::size_t i = 0; i < desc.dims.size(); ++i)
            out << (i ? "," : "") << desc.dims[i];
        out << ')';
    }
    return out.str();
}

std::vector<const Tensor*> Layer::params() const
{
    auto mutable_params = const_cast<Layer*>(this)->params();
    return {mutable_params.begin(), mutable_params.end()};
}

void Layer::require_cache(const char* what) const
{
    if (!cached_)
        throw std::logic_error(std::string(what) + ": backward called before forward");
}

// ---------------------------------------------------------------- Dense

Dense::Dense(Index in, Index out, bool bias)
    : in_(in), out_(out), bias_(bias), weight_({out, in}), bias_values_({bias ? out : 1}),
      weight_grad_({out, in}), bias_grad_({bias ? out : 1})
{
    if (in < 1 || out < 1)
        throw std::invalid_argument("dense layer dimensions must be positive");
}

LayerDescriptor Dense::descriptor() const { return {kind(), {in_, out_, bias_ ? 1 : 0}}; }

LayerShape Dense::output_shape(const LayerShape& in) const
{
    if (in.height != 1 || in.width != 1 || in.channels != in_)
        throw std::invalid_argument("expected " + std::to_string(in_) + " input features, got "
                                    + std::to_string(in.channels) + "x" + std::to_string(in.height) + "x"
                                    + std::to_string(in.width));
    return {out_, 1, 1};
}

Eigen::Map<const RowMatrix> Dense::weights() const { return {weight_.values().data(), out_, in_}; }
Eigen::Map<RowMatrix> Dense::weights() { return {weight_.values().data(), out_, in_}; }

Batch Dense::forward(const Batch& in)
{
    output_shape({in.channels(), in.height, in.width});
    input_ = in.values;
    Batch out;
    out.values.noalias() = weights() * in.values;
    if (bias_)
        out.values.colwise() += bias_values_.values();
    cached_ = true;
    return out;
}

Batch Dense::backward(const Batch& grad_out)
{
    require_cache("dense");
    Eigen::Map<RowMatrix> dw(weight_grad_.values().data(), out_, in_);
    dw.noalias() = grad_out.values * input_.transpose();
    if (bias_)
        bias_grad_.values() = grad_out.values.rowwise().sum();
    Batch grad_in;
    grad_in.values.noalias() = weights().transpose() * grad_out.values;
    return grad_in;
}

std::vector<Tensor*> Dense::params()
{
    if (bias_)
        return {&weight_, &bias_values_};
    return {&weight_};
}

std::vector<Tensor*> Dense::grads()
{
    if (bias_)
        return {&weight_grad_, &bias_grad_};
    return {&weight_grad_};
}

// ---------------------------------------------------------------- Conv2d
//
// The weight tensor is stored out x k x k x in so that one im2col column
// (k*k*in entries) is laid out kernel-row, kernel-col, channel; this keeps the
// channel loop contiguous on both sides of the copy.

Conv2d::Conv2d(Index in_channels, Index out_channels, Index kernel, Index stride, Index padding)
    : in_(in_channels), out_(out_channels), kernel_(kernel), stride_(stride),
      padding_(padding < 0 ? kernel / 2 : padding), weight_({out_channels, kernel, kernel, in_channels}),
      bias_({out_channels}), weight_grad_({out_channels, kernel, kernel, in_channels}), bias_grad_({out_channels})
{
    if (in_ < 1 || out_ < 1 || kernel_ < 1 || stride_ < 1)
        throw std::invalid_argument("conv2d parameters must be positive");
}

LayerDescriptor Conv2d::descriptor() const { return {kind(), {in_, out_, kernel_, stride_, padding_}}; }

LayerShape Conv2d::output_shape(const LayerShape& in) const
{
    if (in.channels != in_)
        throw std::invalid_argument("expected " + std::to_string(in_) + " input channels, got "
                                    + std::to_string(in.channels));
    const Index h = (in.height + 2 * padding_ - kernel_) / stride_ + 1;
    const Index w = (in.width + 2 * padding_ - kernel_) / stride_ + 1;
    if (in.height + 2 * padding_ < kernel_ || in.width + 2 * padding_ < kernel_)
        throw std::invalid_argument("input " + std::to_string(in.height) + "x" + std::to_string(in.width)
                                    + " smaller than kernel");
    return {out_, h, w};
}

Batch Conv2d::forward(const Batch& in)
{
    const LayerShape out_shape = output_shape({in.channels(), in.height, in.width});
    in_height_ = in.height;
    in_width_ = in.width;
    out_height_ = out_shape.height;
    out_width_ = out_shape.width;
    batch_ = in.batch_size();

    const Index patch_rows = kernel_ * kernel_ * in_;
    const Index out_spatial = out_height_ * out_width_;
    const Index in_spatial = in_height_ * in_width_;
    patches_.setZero(patch_rows, batch_ * out_spatial);

    const double* src = in.values.data();
    double* dst = patches_.data();
    for (Index b = 0; b < batch_; ++b) {
        for (Index oh = 0; oh < out_height_; ++oh) {
            for (Index ow = 0; ow < out_width_; ++ow) {
                double* column = dst + (b * out_spatial + oh * out_width_ + ow) * patch_rows;
                for (Index ki = 0; ki < kernel_; ++ki) {
                    const Index ih = oh * stride_ - padding_ + ki;
                    if (ih < 0 || ih >= in_height_)
                        continue;
                    for (Index kj = 0; kj < kernel_; ++kj) {
                        const Index iw = ow * stride_ - padding_ + kj;
                        if (iw < 0 || iw >= in_width_)
                            continue;
                        const double* from = src + (b * in_spatial + ih * in_width_ + iw) * in_;
                        double* to = column + (ki * kernel_ + kj) * in_;
                        std::copy(from, from + in_, to);
                    }
                }
            }
        }
    }

    Eigen::Map<const RowMatrix> w(weight_.values().data(), out_, patch_rows);
    Batch out;
    out.height = out_height_;
    out.width = out_width_;
    out.values.noalias() = w * patches_;
    out.values.colwise() += bias_.values();
    cached_ = true;
    return out;
}

Batch Conv2d::backward(const Batch& grad_out)
{
    require_cache("conv2d");
    const Index patch_rows = kernel_ * kernel_ * in_;
    Eigen::Map<const RowMatrix> w(weight_.values().data(), out_, patch_rows);
    Eigen::Map<RowMatrix> dw(weight_grad_.values().data(), out_, patch_rows);
    dw.noalias() = grad_out.values * patches_.transpose();
    bias_grad_.values() = grad_out.values.rowwise().sum();

    const Eigen::MatrixXd grad_patches = w.transpose() * grad_out.values;

    const Index out_spatial = out_height_ * out_width_;
    const Index in_spatial = in_height_ * in_width_;
    Batch grad_in;
    grad_in.height = in_height_;
    grad_in.width = in_width_;
    grad_in.values.setZero(in_, batch_ * in_spatial);
    const double* src = grad_patches.data();
    double* dst = grad_in.values.data();
    for (Index b = 0; b < batch_; ++b) {
        for (Index oh = 0; oh < out_height_; ++oh) {
            for (Index ow = 0; ow < out_width_; ++ow) {
                const double* column = src + (b * out_spatial + oh * out_width_ + ow) * patch_rows;
                for (Index ki = 0; ki < kernel_; ++ki) {
                    const Index ih = oh * stride_ - padding_ + ki;
                    if (ih < 0 || ih >= in_height_)
                        continue;
                    for (Index kj = 0; kj < kernel_; ++kj) {
                        const Index iw = ow * stride_ - padding_ + kj;
                        if (iw < 0 || iw >= in_width_)
                            continue;
                        const double* from = column + (ki * kernel_ + kj) * in_;
                        double* to = dst + (b * in_spatial + ih * in_width_ + iw) * in_;
                        for (Index c = 0; c < in_; ++c)
                            to[c] += from[c];
                    }
                }
            }
        }
    }
    return grad_in;
}

std::vector<Tensor*> Conv2d::params() { return {&weight_, &bias_}; }
std::vector<Tensor*> Conv2d::grads() { return {&weight_grad_, &bias_grad_}; }

// ---------------------------------------------------------------- MaxPool2d

MaxPool2d::MaxPool2d(Index window) : window_(window)
{
    if (window_ < 1)
        throw std::invalid_argument("max_pool window must be positive");
}

LayerShape MaxPool2d::output_shape(const LayerShape& in) const
{
    if (in.height < window_ || in.width < window_)
        throw std::invalid_argument("input " + std::to_string(in.height) + "x" + std::to_string(in.width)
                                    + " smaller than pooling window");
    return {in.channels, in.height / window_, in.width / window_};
}

Batch MaxPool2d::forward(const Batch& in)
{
    const LayerShape shape = output_shape({in.channels(), in.height, in.width});
    in_height_ = in.height;
    in_width_ = in.width;
    in_cols_ = in.values.cols();
    const Index batch = in.batch_size();
    const Index channels = in.channels();
    const Index out_spatial = shape.height * shape.width;
    const Index in_spatial = in.spatial();

    Batch out;
    out.height = shape.height;
    out.width = shape.width;
    out.values.resize(channels, batch * out_spatial);
    winners_.resize(channels, batch * out_spatial);
    for (Index b = 0; b < batch; ++b) {
        for (Index oh = 0; oh < shape.height; ++oh) {
            for (Index ow = 0; ow < shape.width; ++ow) {
                const Index out_col = b * out_spatial + oh * shape.width + ow;
                for (Index c = 0; c < channels; ++c) {
                    double best = -std::numeric_limits<double>::infinity();
                    Index best_col = b * in_spatial + oh * window_ * in_width_ + ow * window_;
                    for (Index i = 0; i < window_; ++i) {
                        for (Index j = 0; j < window_; ++j) {
                            const Index col = b * in_spatial + (oh * window_ + i) * in_width_ + ow * window_ + j;
                            const double v = in.values(c, col);
                            if (v > best) {
                                best = v;
                                best_col = col;
                            }
                        }
                    }
                    out.values(c, out_col) = best;
                    winners_(c, out_col) = best_col;
                }
            }
        }
    }
    cached_ = true;
    return out;
}

Batch MaxPool2d::backward(const Batch& grad_out)
{
    require_cache("max_pool");
    Batch grad_in;
    grad_in.height = in_height_;
    grad_in.width = in_width_;
    grad_in.values.setZero(grad_out.values.rows(), in_cols_);
    for (Index col = 0; col < grad_out.values.cols(); ++col)
        for (Index c = 0; c < grad_out.values.rows(); ++c)
            grad_in.values(c, winners_(c, col)) += grad_out.values(c, col);
    return grad_in;
}

// ---------------------------------------------------------------- Relu

Batch Relu::forward(const Batch& in)
{
    active_ = (in.values.array() > 0.0).cast<double>();
    Batch out;
    out.height = in.height;
    out.width = in.width;
    out.values = in.values.cwiseMax(0.0);
    cached_ = true;
    return out;
}

Batch Relu::backward(const Batch& grad_out)
{
    require_cache("relu");
    Batch grad_in;
    grad_in.height = grad_out.height;
    grad_in.width = grad_out.width;
    grad_in.values = (grad_out.values.array() * active_).matrix();
    return grad_in;
}

// ---------------------------------------------------------------- GlobalAvgPool

Batch GlobalAvgPool::forward(const Batch& in)
{
    height_ = in.height;
    width_ = in.width;
    const Index spatial = in.spatial();
    const Index batch = in.batch_size();
    Batch out;
    out.values.resize(in.channels(), batch);
    for (Index b = 0; b < batch; ++b)
        out.values.col(b) = in.values.middleCols(b * spatial, spatial).rowwise().mean();
    cached_ = true;
    return out;
}

Batch GlobalAvgPool::backward(const Batch& grad_out)
{
    require_cache("global_avg_pool");
    const Index spatial = height_ * width_;
    const Index batch = grad_out.values.cols();
    Batch grad_in;
    grad_in.height = height_;
    grad_in.width = width_;
    grad_in.values.resize(grad_out.values.rows(), batch * spatial);
    for (Index b = 0; b < batch; ++b)
        grad_in.values.middleCols(b * spatial, spatial) =
            (grad_out.values.col(b) / static_cast<double>(spatial)).replicate(1, spatial);
    return grad_in;
}

// ---------------------------------------------------------------- Flatten

Batch Flatten::forward(const Batch& in)
{
    channels_ = in.channels();
    height_ = in.height;
    width_ = in.width;
    const Index spatial = in.spatial();
    const Index batch = in.batch_size();
    Batch out;
    out.values.resize(channels_ * spatial, batch);
    for (Index b = 0; b < batch; ++b)
        for (Index s = 0; s < spatial; ++s)
            for (Index c = 0; c < channels_; ++c)
                out.values(c * spatial + s, b) = in.values(c, b * spatial + s);
    cached_ = true;
    return out;
}

Batch Flatten::backward(const Batch& grad_out)
{
    require_cache("flatten");
    const Index spatial = height_ * width_;
    const Index batch = grad_out.values.cols();
    Batch grad_in;
    grad_in.height = height_;
    grad_in.width = width_;
    grad_in.values.resize(channels_, batch * spatial);
    for (Index b = 0; b < batch; ++b)
        for (Index s = 0; s < spatial; ++s)
            for (Index c = 0; c < channels_; ++c)
                grad_in.values(c, b * spatial + s) = grad_out.values(c * spatial + s, b);
    return grad_in;
}

// ----------------------------------------------------------------

std::unique_ptr<Layer> make_layer(const LayerDescriptor& d)
{
    auto need = [&](std::size_t n) {
        if (d.dims.size() != n)
            throw std::invalid_argument("layer descriptor for " + to_string(d.kind) + " needs "
                                        + std::to_string(n) + " dims");
    };
    switch (d.kind) {
    case LayerKind::dense:
        need(3);
        return std::make_unique<Dense>(d.dims[0], d.dims[1], d.dims[2] != 0);
    case LayerKind::conv2d:
        need(5);
        return std::make_unique<Conv2d>(d.dims[0], d.dims[1], d.dims[2], d.dims[3], d.dims[4]);
    case LayerKind::max_pool:
        need(1);
        return std::make_unique<MaxPool2d>(d.dims[0]);
    case LayerKind::relu: return std::make_unique<Relu>();
    case LayerKind::global_avg_pool: return std::make_unique<GlobalAvgPool>();
    case LayerKind::flatten: return std::make_unique<Flatten>();
    }
    throw std::invalid_argument("unknown layer kind " + std::to_string(static_cast<unsigned>(d.kind)));
}

} // namespace miloc::nn
