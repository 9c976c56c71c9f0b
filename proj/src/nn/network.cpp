#include "miloc/nn/network.hpp"

#include "miloc/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace miloc::nn {

Network::Network(LayerShape input_shape) : input_shape_(input_shape)
{
    if (input_shape_.channels < 1 || input_shape_.height < 1 || input_shape_.width < 1)
        throw std::invalid_argument("network input shape must be positive");
}

Network::Network(const Network& other)
    : input_shape_(other.input_shape_), gap_input_(other.gap_input_), has_forward_(false)
{
    layers_.reserve(other.layers_.size());
    for (const auto& layer : other.layers_)
        layers_.push_back(layer->clone());
}

Network& Network::operator=(const Network& other)
{
    if (this != &other) {
        Network copy(other);
        *this = std::move(copy);
    }
    return *this;
}

Network& Network::add(std::unique_ptr<Layer> layer)
{
    const LayerShape in = output_shape();
    try {
        layer->output_shape(in);
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument("layer " + std::to_string(layers_.size()) + " (" + layer->describe()
                                    + "): " + e.what());
    }
    layers_.push_back(std::move(layer));
    has_forward_ = false;
    return *this;
}

LayerShape Network::output_shape() const
{
    LayerShape shape = input_shape_;
    for (const auto& layer : layers_)
        shape = layer->output_shape(shape);
    return shape;
}

std::vector<LayerDescriptor> Network::descriptors() const
{
    std::vector<LayerDescriptor> out;
    out.reserve(layers_.size());
    for (const auto& layer : layers_)
        out.push_back(layer->descriptor());
    return out;
}

void Network::initialize(std::uint64_t seed)
{
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        auto params = layers_[i]->params();
        if (params.empty())
            continue;
        Rng rng = Rng::stream(seed, i);
        const double limit =
            std::sqrt(6.0 / static_cast<double>(layers_[i]->fan_in() + layers_[i]->fan_out()));
        auto& weight = params.front()->values();
        for (Index k = 0; k < weight.size(); ++k)
            weight[k] = rng.uniform(-limit, limit);
        for (std::size_t p = 1; p < params.size(); ++p)
            params[p]->set_zero();
    }
    has_forward_ = false;
}

Batch Network::to_batch(const Eigen::MatrixXd& inputs) const
{
    if (inputs.rows() != input_shape_.size())
        throw std::invalid_argument("network input: expected " + std::to_string(input_shape_.size())
                                    + " values per sample (" + std::to_string(input_shape_.channels) + "x"
                                    + std::to_string(input_shape_.height) + "x"
                                    + std::to_string(input_shape_.width) + "), got "
                                    + std::to_string(inputs.rows()));
    const Index channels = input_shape_.channels;
    const Index spatial = input_shape_.height * input_shape_.width;
    const Index batch = inputs.cols();
    Batch out;
    out.height = input_shape_.height;
    out.width = input_shape_.width;
    if (channels == 1 || spatial == 1) {
        out.values = Eigen::Map<const Eigen::MatrixXd>(inputs.data(), channels, batch * spatial);
        return out;
    }
    out.values.resize(channels, batch * spatial);
    for (Index b = 0; b < batch; ++b)
        for (Index c = 0; c < channels; ++c)
            for (Index s = 0; s < spatial; ++s)
                out.values(c, b * spatial + s) = inputs(c * spatial + s, b);
    return out;
}

Eigen::MatrixXd Network::forward_batch(const Eigen::MatrixXd& inputs)
{
    if (layers_.empty())
        throw std::logic_error("forward on an empty network");
    Batch act = to_batch(inputs);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        if (layers_[i]->kind() == LayerKind::global_avg_pool)
            gap_input_ = act;
        try {
            act = layers_[i]->forward(act);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("layer " + std::to_string(i) + " (" + layers_[i]->describe()
                                        + "): " + e.what());
        }
    }
    has_forward_ = true;
    last_batch_ = inputs.cols();
    return std::move(act.values);
}

ForwardResult Network::forward(const Tensor& input)
{
    const auto& shape = input.shape();
    const bool matches = (shape.size() == 3 && shape[0] == input_shape_.channels && shape[1] == input_shape_.height
                          && shape[2] == input_shape_.width)
                         || (shape.size() == 2 && input_shape_.channels == 1 && shape[0] == input_shape_.height
                             && shape[1] == input_shape_.width)
                         || (shape.size() == 1 && shape[0] == input_shape_.size());
    if (!matches)
        throw std::invalid_argument("network input: tensor shape " + shape_string(shape)
                                    + " does not match declared input "
                                    + shape_string({input_shape_.channels, input_shape_.height, input_shape_.width}));
    ForwardResult result;
    result.logits = forward_batch(input.values());
    if (has_gap_head())
        result.features = feature_maps(0);
    return result;
}

void Network::backward(const Eigen::MatrixXd& logit_grad)
{
    if (!has_forward_)
        throw std::logic_error("backward called before forward");
    if (logit_grad.rows() != num_classes() || logit_grad.cols() != last_batch_)
        throw std::invalid_argument("loss gradient shape does not match the last forward's logits");
    Batch grad;
    grad.values = logit_grad;
    for (std::size_t i = layers_.size(); i-- > 0;)
        grad = layers_[i]->backward(grad);
}

Eigen::MatrixXd Network::predict_logits(const Eigen::MatrixXd& inputs, Index chunk)
{
    Eigen::MatrixXd out(num_classes(), inputs.cols());
    for (Index start = 0; start < inputs.cols(); start += chunk) {
        const Index n = std::min(chunk, inputs.cols() - start);
        out.middleCols(start, n) = forward_batch(inputs.middleCols(start, n));
    }
    has_forward_ = false;
    return out;
}

bool Network::has_gap_head() const
{
    const std::size_t n = layers_.size();
    if (n < 2 || layers_[n - 2]->kind() != LayerKind::global_avg_pool || layers_[n - 1]->kind() != LayerKind::dense)
        return false;
    return !static_cast<const Dense&>(*layers_[n - 1]).has_bias();
}

const Dense& Network::final_dense() const
{
    if (!has_gap_head())
        throw std::logic_error("network has no GAP -> bias-free dense head");
    return static_cast<const Dense&>(*layers_.back());
}

Eigen::Map<const RowMatrix> Network::final_weights() const { return final_dense().weights(); }

FeatureMaps Network::feature_maps(Index b) const
{
    final_dense();
    if (!has_forward_ && gap_input_.values.size() == 0)
        throw std::logic_error("feature maps requested before forward");
    const Index spatial = gap_input_.spatial();
    if (b < 0 || b >= gap_input_.batch_size())
        throw std::out_of_range("feature map sample index out of range");
    return {gap_input_.values.middleCols(b * spatial, spatial), gap_input_.height, gap_input_.width};
}

std::vector<Tensor*> Network::params()
{
    std::vector<Tensor*> out;
    for (auto& layer : layers_)
        for (Tensor* t : layer->params())
            out.push_back(t);
    return out;
}

std::vector<const Tensor*> Network::params() const
{
    std::vector<const Tensor*> out;
    for (const auto& layer : layers_)
        for (const Tensor* t : static_cast<const Layer&>(*layer).params())
            out.push_back(t);
    return out;
}

std::vector<Tensor*> Network::grads()
{
    std::vector<Tensor*> out;
    for (auto& layer : layers_)
        for (Tensor* t : layer->grads())
            out.push_back(t);
    return out;
}

Index Network::parameter_count() const
{
    Index n = 0;
    for (const Tensor* t : params())
        n += t->size();
    return n;
}

void Network::zero_grads()
{
    for (Tensor* g : grads())
        g->set_zero();
}

Network make_mlp(Index input_dim, const std::vector<Index>& hidden, Index num_classes)
{
    Network net({input_dim, 1, 1});
    Index width = input_dim;
    for (Index h : hidden) {
        net.emplace<Dense>(width, h).emplace<Relu>();
        width = h;
    }
    net.emplace<Dense>(width, num_classes, false);
    return net;
}

Network make_gap_cnn(LayerShape input, const std::vector<ConvBlock>& blocks, Index num_classes)
{
    if (blocks.empty())
        throw std::invalid_argument("GAP network needs at least one conv block");
    Network net(input);
    Index channels = input.channels;
    for (const auto& block : blocks) {
        net.emplace<Conv2d>(channels, block.channels, 3).emplace<Relu>();
        if (block.pool_after)
            net.emplace<MaxPool2d>(2);
        channels = block.channels;
    }
    net.emplace<GlobalAvgPool>().emplace<Dense>(channels, num_classes, false);
    return net;
}

Network make_pool_cnn(LayerShape input, Index conv1, Index conv2, Index hidden, Index num_classes)
{
    Network net(input);
    net.emplace<Conv2d>(input.channels, conv1, 3).emplace<Relu>().emplace<MaxPool2d>(2);
    net.emplace<Conv2d>(conv1, conv2, 3).emplace<Relu>().emplace<MaxPool2d>(2);
    net.emplace<Flatten>();
    net.emplace<Dense>(net.output_shape().channels, hidden).emplace<Relu>();
    net.emplace<Dense>(hidden, num_classes, false);
    return net;
}

} // namespace miloc::nn
