#pragma once

#include <vector>

#include "core/dataset.hpp"
#include "nn/tensor.hpp"

namespace uclearn {

// HWC image -> CHW tensor sample slot.
inline void image_into_tensor(const Image& img, nn::Tensor& t, int slot) {
    float* dst = t.sample(slot);
    for (int c = 0; c < img.channels; ++c) {
        for (int h = 0; h < img.height; ++h) {
            for (int w = 0; w < img.width; ++w) {
                *dst++ = img.at(h, w, c);
            }
        }
    }
}

inline Image tensor_sample_to_image(const nn::Tensor& t, int slot) {
    Image img(t.h, t.w, t.c);
    const float* src = t.sample(slot);
    for (int c = 0; c < t.c; ++c) {
        for (int h = 0; h < t.h; ++h) {
            for (int w = 0; w < t.w; ++w) {
                img.at(h, w, c) = *src++;
            }
        }
    }
    return img;
}

// Gathers ds.samples[idx] into an NCHW batch; labels optional.
inline nn::Tensor gather_batch(const LabeledImageDataset& ds, const std::vector<int>& idx,
                               std::vector<int>* labels) {
    const Image& first = ds.samples.at(idx.empty() ? 0 : idx[0]).pixels;
    nn::Tensor t(int(idx.size()), first.channels, first.height, first.width);
    if (labels) labels->resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto& s = ds.samples[idx[i]];
        image_into_tensor(s.pixels, t, int(i));
        if (labels) (*labels)[i] = s.label;
    }
    return t;
}

inline std::vector<int> iota_indices(std::size_t n) {
    std::vector<int> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = int(i);
    return v;
}

} // namespace uclearn
