#pragma once

#include <cstddef>
#include <vector>

namespace uclearn::nn {

// Dense NCHW float tensor.
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<float> data;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_), data(std::size_t(n_) * c_ * h_ * w_, 0.0f) {}

    std::size_t sample_size() const { return std::size_t(c) * h * w; }
    std::size_t size() const { return data.size(); }

    float* sample(int i) { return data.data() + std::size_t(i) * sample_size(); }
    const float* sample(int i) const { return data.data() + std::size_t(i) * sample_size(); }

    float& at(int ni, int ci, int hi, int wi) {
        return data[((std::size_t(ni) * c + ci) * h + hi) * w + wi];
    }
    float at(int ni, int ci, int hi, int wi) const {
        return data[((std::size_t(ni) * c + ci) * h + hi) * w + wi];
    }

    bool same_shape(const Tensor& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }

    void zero() { std::fill(data.begin(), data.end(), 0.0f); }
};

} // namespace uclearn::nn
