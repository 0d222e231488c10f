#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "core/image.hpp"

namespace uclearn {

struct ImageSample {
    Image pixels;
    int label = 0;
    std::string id;
};

// Ordered, immutable-after-construction collection of labeled images.
// Iteration order is manifest order.
struct LabeledImageDataset {
    std::vector<ImageSample> samples;
    int num_categories = 0;
    std::string name;
    std::uint64_t seed = 0;

    std::size_t size() const { return samples.size(); }
};

struct LabelMapping {
    int source_categories = 0;
    int target_categories = 0;
    std::vector<int> table; // length source_categories, values in [0, target_categories)
};

struct SynthParams {
    int num_categories = 10;
    int per_category = 500;
    int side = 32;
    std::uint64_t seed = 0;
};

// Synthetic "blobs" task: per category a base color, a geometric primitive
// and per-sample Gaussian texture, deterministic under (params, seed).
LabeledImageDataset synth_blobs(const SynthParams& params);

// Held-out split: identical per-category patterns, fresh noise stream.
LabeledImageDataset synth_blobs_test(const SynthParams& params, int per_category_test);

// Directory format: manifest.json + images/<id>.png (8-bit RGB).
void save_dataset(const LabeledImageDataset& ds, const std::filesystem::path& dir);
LabeledImageDataset load_dataset(const std::filesystem::path& dir);

// Throws on any ImageSample/LabeledImageDataset invariant violation.
void validate_dataset(const LabeledImageDataset& ds);

LabelMapping make_grouping(int m, int n, std::uint64_t seed);
LabeledImageDataset relabel(const LabeledImageDataset& ds, const LabelMapping& mapping);

LabeledImageDataset mix_datasets(const LabeledImageDataset& clean, const LabeledImageDataset& protected_ds,
                                 const std::set<int>& clean_categories);

// Samples whose label is in `categories`, order preserved; num_categories kept.
LabeledImageDataset subset_by_categories(const LabeledImageDataset& ds, const std::set<int>& categories);

} // namespace uclearn
