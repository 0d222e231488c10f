#pragma once

#include <memory>
#include <string>
#include <vector>

#include "core/rng.hpp"
#include "nn/tensor.hpp"

namespace uclearn::nn {

// Layers are immutable during inference: forward/backward are const and keep
// no per-call state, so one network instance can serve concurrent passes.
// backward receives the layer's own forward input x and output y.
class Layer {
public:
    virtual ~Layer() = default;

    virtual std::string spec() const = 0;
    virtual void forward(const Tensor& x, Tensor& y) const = 0;
    // wgrad (layout identical to params()) may be null when only input
    // gradients are needed, e.g. through a frozen encoder.
    virtual void backward(const Tensor& x, const Tensor& y, const Tensor& dy, Tensor& dx,
                          std::vector<float>* wgrad) const = 0;
    virtual void init_params(Rng&) {}

    std::vector<float>& params() { return w_; }
    const std::vector<float>& params() const { return w_; }

protected:
    std::vector<float> w_;
};

// 2-D convolution, square kernel, zero padding. Params: [out_c x in_c*k*k] row-major, then bias[out_c].
class Conv2d : public Layer {
public:
    Conv2d(int in_c, int out_c, int k, int stride, int pad);
    std::string spec() const override;
    void forward(const Tensor& x, Tensor& y) const override;
    void backward(const Tensor& x, const Tensor& y, const Tensor& dy, Tensor& dx,
                  std::vector<float>* wgrad) const override;
    void init_params(Rng& rng) override;

    int out_side(int in_side) const { return (in_side + 2 * pad_ - k_) / stride_ + 1; }

private:
    int in_c_, out_c_, k_, stride_, pad_;
    std::size_t weight_count() const { return std::size_t(out_c_) * in_c_ * k_ * k_; }
    void im2col(const float* x, int h, int w, float* col, int oh, int ow) const;
    void col2im_add(const float* col, int h, int w, float* dx, int oh, int ow) const;
};

class ReLU : public Layer {
public:
    std::string spec() const override { return "relu"; }
    void forward(const Tensor& x, Tensor& y) const override;
    void backward(const Tensor& x, const Tensor& y, const Tensor& dy, Tensor& dx,
                  std::vector<float>* wgrad) const override;
};

class TanhLayer : public Layer {
public:
    std::string spec() const override { return "tanh"; }
    void forward(const Tensor& x, Tensor& y) const override;
    void backward(const Tensor& x, const Tensor& y, const Tensor& dy, Tensor& dx,
                  std::vector<float>* wgrad) const override;
};

// Multiply by a compile-known constant (generator output scaling).
class ConstScale : public Layer {
public:
    explicit ConstScale(float s) : s_(s) {}
    std::string spec() const override;
    void forward(const Tensor& x, Tensor& y) const override;
    void backward(const Tensor& x, const Tensor& y, const Tensor& dy, Tensor& dx,
                  std::vector<float>* wgrad) const override;

private:
    float s_;
};

class AvgPool2 : public Layer {
public:
    std::string spec() const override { return "avgpool2"; }
    void forward(const Tensor& x, Tensor& y) const override;
    void backward(const Tensor& x, const Tensor& y, const Tensor& dy, Tensor& dx,
                  std::vector<float>* wgrad) const override;
};

// Collapses each channel plane to its mean: (N,C,H,W) -> (N,C,1,1).
class GlobalAvgPool : public Layer {
public:
    std::string spec() const override { return "gap"; }
    void forward(const Tensor& x, Tensor& y) const override;
    void backward(const Tensor& x, const Tensor& y, const Tensor& dy, Tensor& dx,
                  std::vector<float>* wgrad) const override;
};

class UpsampleNearest : public Layer {
public:
    explicit UpsampleNearest(int factor) : factor_(factor) {}
    std::string spec() const override { return "up:" + std::to_string(factor_); }
    void forward(const Tensor& x, Tensor& y) const override;
    void backward(const Tensor& x, const Tensor& y, const Tensor& dy, Tensor& dx,
                  std::vector<float>* wgrad) const override;

private:
    int factor_;
};

// Fully connected over the flattened sample. Params: [out x in] row-major, then bias[out].
class Linear : public Layer {
public:
    Linear(int in, int out);
    std::string spec() const override;
    void forward(const Tensor& x, Tensor& y) const override;
    void backward(const Tensor& x, const Tensor& y, const Tensor& dy, Tensor& dx,
                  std::vector<float>* wgrad) const override;
    void init_params(Rng& rng) override;

private:
    int in_, out_;
};

// Row-wise L2 normalization of the embedding vector (per sample).
class L2Normalize : public Layer {
public:
    std::string spec() const override { return "l2norm"; }
    void forward(const Tensor& x, Tensor& y) const override;
    void backward(const Tensor& x, const Tensor& y, const Tensor& dy, Tensor& dx,
                  std::vector<float>* wgrad) const override;
};

std::unique_ptr<Layer> layer_from_spec(const std::string& token);

} // namespace uclearn::nn
