#pragma once

#include <vector>

#include "nn/network.hpp"

namespace uclearn {

// Fixed chunk width for batch-parallel passes. The chunk partition (not the
// worker count) determines summation order, so results are identical for any
// UCLEARN_WORKERS setting.
constexpr int kBatchChunk = 32;

// One forward+backward of trunk+head on a batch. Hard labels are used unless
// soft_targets is non-empty (n*classes row-stochastic matrix). Gradients are
// accumulated into the provided buffers; returns the mean loss.
double classifier_forward_backward(const nn::Network& trunk, const nn::Network& head,
                                   const nn::Tensor& batch, const std::vector<int>& labels,
                                   const std::vector<float>& soft_targets,
                                   nn::GradBuffer& trunk_grads, nn::GradBuffer& head_grads);

// Forward-only predictions, chunk-parallel.
std::vector<int> classifier_predict(const nn::Network& trunk, const nn::Network& head,
                                    const nn::Tensor& batch);

} // namespace uclearn
