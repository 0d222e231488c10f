#pragma once

#include <memory>
#include <string>
#include <vector>

#include "nn/layers.hpp"

namespace uclearn::nn {

// Activations of one forward pass; owned by the caller so a shared const
// network can run many passes concurrently.
struct ForwardPass {
    std::vector<Tensor> acts; // acts[0] = input, acts[i+1] = output of layer i
    const Tensor& output() const { return acts.back(); }
};

// Per-layer parameter gradients, same layout as Layer::params().
using GradBuffer = std::vector<std::vector<float>>;

class Network {
public:
    Network() = default;
    Network(Network&&) = default;
    Network& operator=(Network&&) = default;

    // Builds from a '|'-separated layer spec and seeds the parameters.
    static Network from_spec(const std::string& spec, std::uint64_t init_seed);

    std::string spec() const;

    const Tensor& forward(const Tensor& x, ForwardPass& fp) const;
    // Propagates dout back through the pass; fills dx (w.r.t. network input)
    // when non-null and accumulates parameter gradients when grads non-null.
    void backward(const ForwardPass& fp, const Tensor& dout, Tensor* dx, GradBuffer* grads) const;

    GradBuffer make_grad_buffer() const;
    static void add_grads(GradBuffer& into, const GradBuffer& from);

    std::size_t num_layers() const { return layers_.size(); }
    Layer& layer(std::size_t i) { return *layers_[i]; }
    const Layer& layer(std::size_t i) const { return *layers_[i]; }

    std::size_t total_params() const;
    Network copy() const;

    // FNV-1a over the parameter bytes; identifies the weights in descriptors.
    std::uint64_t weights_hash() const;

private:
    std::vector<std::unique_ptr<Layer>> layers_;
};

// Adam with bias correction; moments live here, params live in the network.
class Adam {
public:
    explicit Adam(double lr) : lr_(lr) {}
    void step(Network& net, const GradBuffer& grads);

private:
    double lr_;
    double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    long t_ = 0;
    GradBuffer m_, v_;
};

// Summed cross-entropy; each sample's dlogits row is scaled by grad_scale,
// so chunked batches can target d(mean)/dlogits with grad_scale = 1/batch.
double softmax_cross_entropy_sum(const Tensor& logits, const std::vector<int>& labels,
                                 Tensor* dlogits, float grad_scale);
double softmax_cross_entropy_soft_sum(const Tensor& logits, const std::vector<float>& targets,
                                      Tensor* dlogits, float grad_scale);

// Mean cross-entropy over the batch; dlogits gets d(mean loss)/dlogits.
double softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels, Tensor* dlogits);
// Soft-target variant (targets: n x classes, row-stochastic).
double softmax_cross_entropy_soft(const Tensor& logits, const std::vector<float>& targets, Tensor* dlogits);

std::vector<int> argmax_labels(const Tensor& logits);

} // namespace uclearn::nn
