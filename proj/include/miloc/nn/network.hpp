#pragma once

#include "miloc/nn/layers.hpp"
#include "miloc/nn/softmax.hpp"
#include "miloc/nn/tensor.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <vector>

namespace miloc::nn {

// Final convolutional activations of one sample: K x (H*W), column h*W + w.
struct FeatureMaps {
    Eigen::MatrixXd maps;
    Index height = 0;
    Index width = 0;

    Index channels() const { return maps.rows(); }
};

struct ForwardResult {
    Logits logits;
    FeatureMaps features; // empty when the network has no GAP head
};

// Ordered layer stack. Copies are deep; forward caches are per instance, so
// one Network must not be driven from several threads at once.
class Network {
public:
    explicit Network(LayerShape input_shape);
    Network(const Network& other);
    Network& operator=(const Network& other);
    Network(Network&&) noexcept = default;
    Network& operator=(Network&&) noexcept = default;
    ~Network() = default;

    Network& add(std::unique_ptr<Layer> layer);
    template <typename L, typename... Args>
    Network& emplace(Args&&... args)
    {
        return add(std::make_unique<L>(std::forward<Args>(args)...));
    }

    const LayerShape& input_shape() const { return input_shape_; }
    LayerShape output_shape() const;
    Index num_classes() const { return output_shape().channels; }
    std::size_t num_layers() const { return layers_.size(); }
    const Layer& layer(std::size_t i) const { return *layers_.at(i); }
    std::vector<LayerDescriptor> descriptors() const;

    // Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
    void initialize(std::uint64_t seed);

    // inputs: (C*H*W) x B, one flattened sample (channel-major) per column.
    // Returns logits, M x B. Caches activations for backward().
    Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs);
    ForwardResult forward(const Tensor& input);

    // logit_grad: M x B gradient of the loss w.r.t. the last forward's logits.
    void backward(const Eigen::MatrixXd& logit_grad);

    // Forward in chunks without keeping the result for backward.
    Eigen::MatrixXd predict_logits(const Eigen::MatrixXd& inputs, Index chunk = 256);

    // True when the stack ends in global-average-pool -> bias-free dense.
    bool has_gap_head() const;
    // M x K classifier weights of a GAP head; row y holds w^y.
    Eigen::Map<const RowMatrix> final_weights() const;
    // Feature maps (the GAP input) of sample `b` from the last forward pass.
    FeatureMaps feature_maps(Index b) const;

    std::vector<Tensor*> params();
    std::vector<Tensor*> grads();
    std::vector<const Tensor*> params() const;
    Index parameter_count() const;
    void zero_grads();

private:
    Batch to_batch(const Eigen::MatrixXd& inputs) const;
    const Dense& final_dense() const;

    LayerShape input_shape_;
    std::vector<std::unique_ptr<Layer>> layers_;
    Batch gap_input_;
    bool has_forward_ = false;
    Index last_batch_ = 0;
};

// Feed-forward classifier: Dense+ReLU for every hidden width, then a
// bias-free Dense to `num_classes`.
Network make_mlp(Index input_dim, const std::vector<Index>& hidden, Index num_classes);

// conv(3x3)+ReLU blocks, optional 2x2 max-pool after a block, then GAP and a
// bias-free Dense. The last conv block's output is the CAM feature map.
struct ConvBlock {
    Index channels;
    bool pool_after = false;
};
Network make_gap_cnn(LayerShape input, const std::vector<ConvBlock>& blocks, Index num_classes);

// conv+pool, conv+pool, flatten, dense+ReLU, dense: the plain MNIST
// classifier without a GAP head.
Network make_pool_cnn(LayerShape input, Index conv1, Index conv2, Index hidden, Index num_classes);

} // namespace miloc::nn
