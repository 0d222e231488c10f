#pragma once

#include <vector>

#include "core/rng.hpp"
#include "nn/tensor.hpp"

namespace uclearn {

// Batch transforms used as target-training augmentations and defenses.
// Labels travel as a row-stochastic n x classes matrix so mixing defenses
// can soften them. All transforms keep pixel values in [0,1].

// Convex combination with a shuffled partner, lambda ~ Beta(alpha, alpha).
// Returns the drawn lambda.
float mixup(nn::Tensor& batch, std::vector<float>& labels, int classes, float alpha, Rng& rng);
// Deterministic core used by mixup and tests.
void mixup_fixed(nn::Tensor& batch, std::vector<float>& labels, int classes, float lambda,
                 const std::vector<int>& partner);

// Pastes a rectangle from a shuffled partner; labels mix with the realized
// area fraction. Returns the realized lambda.
float cutmix(nn::Tensor& batch, std::vector<float>& labels, int classes, float alpha, Rng& rng);

// Zeroes a mask_side x mask_side square per sample (mask fully inside).
void cutout(nn::Tensor& batch, int mask_side, Rng& rng);

// Normalized Gaussian kernel convolution with reflection padding, then a
// clip back to [0,1]. kernel must be odd.
void gaussian_smooth(nn::Tensor& batch, int kernel, float sigma);

// Zero-pad by `pad` then crop back at a per-sample uniform offset.
void random_crop(nn::Tensor& batch, int pad, Rng& rng);
void random_horizontal_flip(nn::Tensor& batch, Rng& rng);

// Nearest-neighbor resize (no-op when sizes already match).
nn::Tensor resize_nearest(const nn::Tensor& batch, int out_h, int out_w);

// Fixed affine map (x - 0.5) / 0.25.
void normalize_batch(nn::Tensor& batch);

std::vector<float> one_hot(const std::vector<int>& labels, int classes);

} // namespace uclearn
