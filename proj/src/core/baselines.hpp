#pragma once

#include <cstdint>
#include <vector>

#include "core/dataset.hpp"
#include "core/encoder.hpp"
#include "core/ucgen.hpp"

namespace uclearn {

// Reference noise generators. All of them consume surrogate-predicted
// labels; ground-truth labels never reach any of these functions.

struct EminnConfig {
    float eps = 16.0f / 255.0f;
    int surrogate_steps = 10;   // M training minibatches per round
    int pgd_steps = 20;         // T noise steps per round
    float pgd_alpha = 0.0f;     // 0 = eps/10
    int max_rounds = 30;
    float stop_train_acc = 0.95f;
    int batch = 64;
    float surrogate_lr = 2e-3f;
    std::uint64_t seed = 0;
};

struct EminnResult {
    PerturbationSet noise; // sample_wise
    ClassifierModel trained_copy;
};

// Bilevel min-min: alternate surrogate training on perturbed data with
// projected gradient steps that minimize its cross-entropy, until the copy
// fits the perturbed data or the round cap hits.
EminnResult eminn_generate(const LabeledImageDataset& ds, const ClassifierModel& surrogate,
                           const std::vector<int>& predicted_labels, const EminnConfig& cfg);

struct EmaxnConfig {
    float eps = 16.0f / 255.0f;
    int steps = 20;
    float alpha = 0.0f; // 0 = eps/10
    int batch = 64;
    std::uint64_t seed = 0;
};

// Projected gradient ascent on the frozen surrogate's cross-entropy
// (adversarial noise reused as poison).
PerturbationSet emaxn_generate(const LabeledImageDataset& ds, const ClassifierModel& surrogate,
                               const std::vector<int>& predicted_labels, const EmaxnConfig& cfg);

struct SynperConfig {
    float eps = 16.0f / 255.0f;
    int patch_size = 8;
    int max_resample = 100;
    std::uint64_t seed = 0;
};

// Class-wise +-eps patches tiled to image shape; patches of distinct classes
// differ in at least half their entries. Assignment is filled by the caller
// from predicted labels.
PerturbationSet synper_generate(int num_classes, int height, int width, int channels,
                                const SynperConfig& cfg);

} // namespace uclearn
