#include "nn/layers.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdio>
#include <cstring>

#include "core/errors.hpp"

namespace uclearn::nn {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ColMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;
using MapRow = Eigen::Map<RowMat>;
using MapRowC = Eigen::Map<const RowMat>;
using MapCol = Eigen::Map<ColMat>;
using MapColC = Eigen::Map<const ColMat>;

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(s.substr(start));
            break;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

} // namespace

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(int in_c, int out_c, int k, int stride, int pad)
    : in_c_(in_c), out_c_(out_c), k_(k), stride_(stride), pad_(pad) {
    if (in_c < 1 || out_c < 1 || k < 1 || stride < 1 || pad < 0) {
        throw_param("conv: invalid geometry");
    }
    w_.assign(weight_count() + out_c_, 0.0f);
}

std::string Conv2d::spec() const {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "conv:%d,%d,%d,%d,%d", in_c_, out_c_, k_, stride_, pad_);
    return buf;
}

void Conv2d::init_params(Rng& rng) {
    const float scale = std::sqrt(2.0f / (float(in_c_) * k_ * k_));
    for (std::size_t i = 0; i < weight_count(); ++i) w_[i] = scale * rng.normal_f();
    for (int i = 0; i < out_c_; ++i) w_[weight_count() + i] = 0.0f;
}

void Conv2d::im2col(const float* x, int h, int w, float* col, int oh, int ow) const {
    // col is (in_c*k*k) x (oh*ow), column-major: one output position per column.
    const int K = in_c_ * k_ * k_;
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            float* dst = col + std::size_t(oy * ow + ox) * K;
            const int base_y = oy * stride_ - pad_;
            const int base_x = ox * stride_ - pad_;
            for (int c = 0; c < in_c_; ++c) {
                const float* plane = x + std::size_t(c) * h * w;
                for (int ky = 0; ky < k_; ++ky) {
                    const int iy = base_y + ky;
                    for (int kx = 0; kx < k_; ++kx) {
                        const int ix = base_x + kx;
                        *dst++ = (iy >= 0 && iy < h && ix >= 0 && ix < w)
                                     ? plane[std::size_t(iy) * w + ix]
                                     : 0.0f;
                    }
                }
            }
        }
    }
}

void Conv2d::col2im_add(const float* col, int h, int w, float* dx, int oh, int ow) const {
    const int K = in_c_ * k_ * k_;
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            const float* src = col + std::size_t(oy * ow + ox) * K;
            const int base_y = oy * stride_ - pad_;
            const int base_x = ox * stride_ - pad_;
            for (int c = 0; c < in_c_; ++c) {
                float* plane = dx + std::size_t(c) * h * w;
                for (int ky = 0; ky < k_; ++ky) {
                    const int iy = base_y + ky;
                    for (int kx = 0; kx < k_; ++kx) {
                        const int ix = base_x + kx;
                        const float v = *src++;
                        if (iy >= 0 && iy < h && ix >= 0 && ix < w) {
                            plane[std::size_t(iy) * w + ix] += v;
                        }
                    }
                }
            }
        }
    }
}

void Conv2d::forward(const Tensor& x, Tensor& y) const {
    if (x.c != in_c_) throw_param("conv: input channel mismatch");
    const int oh = out_side(x.h);
    const int ow = out_side(x.w);
    if (oh < 1 || ow < 1) throw_param("conv: input too small");
    y = Tensor(x.n, out_c_, oh, ow);

    const int K = in_c_ * k_ * k_;
    const int P = oh * ow;
    std::vector<float> col(std::size_t(K) * P);
    MapRowC W(w_.data(), out_c_, K);
    MapColC Cmat(col.data(), K, P);
    // Per-sample GEMM: values do not depend on batch size.
    for (int i = 0; i < x.n; ++i) {
        im2col(x.sample(i), x.h, x.w, col.data(), oh, ow);
        MapRow Y(y.sample(i), out_c_, P);
        Y.noalias() = W * Cmat;
        for (int oc = 0; oc < out_c_; ++oc) {
            Y.row(oc).array() += w_[weight_count() + oc];
        }
    }
}

void Conv2d::backward(const Tensor& x, const Tensor& y, const Tensor& dy, Tensor& dx,
                      std::vector<float>* wgrad) const {
    const int oh = y.h;
    const int ow = y.w;
    const int K = in_c_ * k_ * k_;
    const int P = oh * ow;
    dx = Tensor(x.n, x.c, x.h, x.w);

    std::vector<float> col(std::size_t(K) * P);
    std::vector<float> dcol(std::size_t(K) * P);
    MapRowC W(w_.data(), out_c_, K);
    MapCol DC(dcol.data(), K, P);
    for (int i = 0; i < x.n; ++i) {
        MapRowC DY(dy.sample(i), out_c_, P);
        if (wgrad) {
            im2col(x.sample(i), x.h, x.w, col.data(), oh, ow);
            MapColC Cmat(col.data(), K, P);
            MapRow GW(wgrad->data(), out_c_, K);
            GW.noalias() += DY * Cmat.transpose();
            for (int oc = 0; oc < out_c_; ++oc) {
                (*wgrad)[weight_count() + oc] += DY.row(oc).sum();
            }
        }
        DC.noalias() = W.transpose() * DY;
        col2im_add(dcol.data(), x.h, x.w, dx.sample(i), oh, ow);
    }
}

// ---------------------------------------------------------------- pointwise

void ReLU::forward(const Tensor& x, Tensor& y) const {
    y = x;
    for (float& v : y.data) v = v > 0.0f ? v : 0.0f;
}

void ReLU::backward(const Tensor& x, const Tensor&, const Tensor& dy, Tensor& dx,
                    std::vector<float>*) const {
    dx = dy;
    for (std::size_t i = 0; i < dx.data.size(); ++i) {
        if (x.data[i] <= 0.0f) dx.data[i] = 0.0f;
    }
}

void TanhLayer::forward(const Tensor& x, Tensor& y) const {
    y = x;
    for (float& v : y.data) v = std::tanh(v);
}

void TanhLayer::backward(const Tensor&, const Tensor& y, const Tensor& dy, Tensor& dx,
                         std::vector<float>*) const {
    dx = dy;
    for (std::size_t i = 0; i < dx.data.size(); ++i) {
        dx.data[i] *= 1.0f - y.data[i] * y.data[i];
    }
}

std::string ConstScale::spec() const {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "scale:%.9g", double(s_));
    return buf;
}

void ConstScale::forward(const Tensor& x, Tensor& y) const {
    y = x;
    for (float& v : y.data) v *= s_;
}

void ConstScale::backward(const Tensor&, const Tensor&, const Tensor& dy, Tensor& dx,
                          std::vector<float>*) const {
    dx = dy;
    for (float& v : dx.data) v *= s_;
}

// ---------------------------------------------------------------- pooling

void AvgPool2::forward(const Tensor& x, Tensor& y) const {
    if (x.h % 2 != 0 || x.w % 2 != 0) throw_param("avgpool2: odd input side");
    y = Tensor(x.n, x.c, x.h / 2, x.w / 2);
    for (int i = 0; i < x.n; ++i) {
        for (int c = 0; c < x.c; ++c) {
            for (int h = 0; h < y.h; ++h) {
                for (int w = 0; w < y.w; ++w) {
                    const float s = x.at(i, c, 2 * h, 2 * w) + x.at(i, c, 2 * h, 2 * w + 1) +
                                    x.at(i, c, 2 * h + 1, 2 * w) + x.at(i, c, 2 * h + 1, 2 * w + 1);
                    y.at(i, c, h, w) = 0.25f * s;
                }
            }
        }
    }
}

void AvgPool2::backward(const Tensor& x, const Tensor&, const Tensor& dy, Tensor& dx,
                        std::vector<float>*) const {
    dx = Tensor(x.n, x.c, x.h, x.w);
    for (int i = 0; i < dy.n; ++i) {
        for (int c = 0; c < dy.c; ++c) {
            for (int h = 0; h < dy.h; ++h) {
                for (int w = 0; w < dy.w; ++w) {
                    const float g = 0.25f * dy.at(i, c, h, w);
                    dx.at(i, c, 2 * h, 2 * w) = g;
                    dx.at(i, c, 2 * h, 2 * w + 1) = g;
                    dx.at(i, c, 2 * h + 1, 2 * w) = g;
                    dx.at(i, c, 2 * h + 1, 2 * w + 1) = g;
                }
            }
        }
    }
}

void GlobalAvgPool::forward(const Tensor& x, Tensor& y) const {
    y = Tensor(x.n, x.c, 1, 1);
    const float inv = 1.0f / float(x.h * x.w);
    for (int i = 0; i < x.n; ++i) {
        for (int c = 0; c < x.c; ++c) {
            const float* plane = x.sample(i) + std::size_t(c) * x.h * x.w;
            float s = 0.0f;
            for (int p = 0; p < x.h * x.w; ++p) s += plane[p];
            y.at(i, c, 0, 0) = s * inv;
        }
    }
}

void GlobalAvgPool::backward(const Tensor& x, const Tensor&, const Tensor& dy, Tensor& dx,
                             std::vector<float>*) const {
    dx = Tensor(x.n, x.c, x.h, x.w);
    const float inv = 1.0f / float(x.h * x.w);
    for (int i = 0; i < x.n; ++i) {
        for (int c = 0; c < x.c; ++c) {
            const float g = dy.at(i, c, 0, 0) * inv;
            float* plane = dx.sample(i) + std::size_t(c) * x.h * x.w;
            for (int p = 0; p < x.h * x.w; ++p) plane[p] = g;
        }
    }
}

void UpsampleNearest::forward(const Tensor& x, Tensor& y) const {
    y = Tensor(x.n, x.c, x.h * factor_, x.w * factor_);
    for (int i = 0; i < x.n; ++i) {
        for (int c = 0; c < x.c; ++c) {
            for (int h = 0; h < y.h; ++h) {
                for (int w = 0; w < y.w; ++w) {
                    y.at(i, c, h, w) = x.at(i, c, h / factor_, w / factor_);
                }
            }
        }
    }
}

void UpsampleNearest::backward(const Tensor& x, const Tensor&, const Tensor& dy, Tensor& dx,
                               std::vector<float>*) const {
    dx = Tensor(x.n, x.c, x.h, x.w);
    for (int i = 0; i < dy.n; ++i) {
        for (int c = 0; c < dy.c; ++c) {
            for (int h = 0; h < dy.h; ++h) {
                for (int w = 0; w < dy.w; ++w) {
                    dx.at(i, c, h / factor_, w / factor_) += dy.at(i, c, h, w);
                }
            }
        }
    }
}

// ---------------------------------------------------------------- linear

Linear::Linear(int in, int out) : in_(in), out_(out) {
    if (in < 1 || out < 1) throw_param("linear: invalid size");
    w_.assign(std::size_t(in) * out + out, 0.0f);
}

std::string Linear::spec() const {
    return "linear:" + std::to_string(in_) + "," + std::to_string(out_);
}

void Linear::init_params(Rng& rng) {
    const float scale = std::sqrt(2.0f / float(in_));
    for (std::size_t i = 0; i < std::size_t(in_) * out_; ++i) w_[i] = scale * rng.normal_f();
    for (int i = 0; i < out_; ++i) w_[std::size_t(in_) * out_ + i] = 0.0f;
}

void Linear::forward(const Tensor& x, Tensor& y) const {
    if (static_cast<int>(x.sample_size()) != in_) throw_param("linear: input size mismatch");
    y = Tensor(x.n, out_, 1, 1);
    MapRowC W(w_.data(), out_, in_);
    const float* b = w_.data() + std::size_t(in_) * out_;
    for (int i = 0; i < x.n; ++i) {
        Eigen::Map<const Eigen::VectorXf> xi(x.sample(i), in_);
        Eigen::Map<Eigen::VectorXf> yi(y.sample(i), out_);
        yi.noalias() = W * xi;
        for (int o = 0; o < out_; ++o) yi[o] += b[o];
    }
}

void Linear::backward(const Tensor& x, const Tensor&, const Tensor& dy, Tensor& dx,
                      std::vector<float>* wgrad) const {
    dx = Tensor(x.n, x.c, x.h, x.w);
    MapRowC W(w_.data(), out_, in_);
    for (int i = 0; i < x.n; ++i) {
        Eigen::Map<const Eigen::VectorXf> xi(x.sample(i), in_);
        Eigen::Map<const Eigen::VectorXf> gi(dy.sample(i), out_);
        Eigen::Map<Eigen::VectorXf> dxi(dx.sample(i), in_);
        dxi.noalias() = W.transpose() * gi;
        if (wgrad) {
            MapRow GW(wgrad->data(), out_, in_);
            GW.noalias() += gi * xi.transpose();
            float* gb = wgrad->data() + std::size_t(in_) * out_;
            for (int o = 0; o < out_; ++o) gb[o] += gi[o];
        }
    }
}

// ---------------------------------------------------------------- l2norm

void L2Normalize::forward(const Tensor& x, Tensor& y) const {
    y = x;
    const std::size_t d = x.sample_size();
    for (int i = 0; i < x.n; ++i) {
        const float* xi = x.sample(i);
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += double(xi[j]) * xi[j];
        const float inv = s > 0.0 ? float(1.0 / std::sqrt(s)) : 0.0f;
        float* yi = y.sample(i);
        for (std::size_t j = 0; j < d; ++j) yi[j] = xi[j] * inv;
    }
}

void L2Normalize::backward(const Tensor& x, const Tensor&, const Tensor& dy, Tensor& dx,
                           std::vector<float>*) const {
    // d(x/|x|) = (I - u u^T) / |x|, u = x/|x|
    dx = Tensor(x.n, x.c, x.h, x.w);
    const std::size_t d = x.sample_size();
    for (int i = 0; i < x.n; ++i) {
        const float* xi = x.sample(i);
        const float* gi = dy.sample(i);
        float* di = dx.sample(i);
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += double(xi[j]) * xi[j];
        if (s <= 0.0) {
            for (std::size_t j = 0; j < d; ++j) di[j] = 0.0f;
            continue;
        }
        const double norm = std::sqrt(s);
        double dot = 0.0;
        for (std::size_t j = 0; j < d; ++j) dot += double(gi[j]) * xi[j];
        const double scale = dot / (s * norm);
        for (std::size_t j = 0; j < d; ++j) {
            di[j] = float(gi[j] / norm - xi[j] * scale);
        }
    }
}

// ---------------------------------------------------------------- factory

std::unique_ptr<Layer> layer_from_spec(const std::string& token) {
    const std::size_t colon = token.find(':');
    const std::string name = token.substr(0, colon);
    std::vector<std::string> args;
    if (colon != std::string::npos) args = split(token.substr(colon + 1), ',');

    auto arg_int = [&](std::size_t i) { return std::stoi(args.at(i)); };

    if (name == "conv") {
        if (args.size() != 5) throw_format("conv spec needs 5 args: " + token);
        return std::make_unique<Conv2d>(arg_int(0), arg_int(1), arg_int(2), arg_int(3), arg_int(4));
    }
    if (name == "relu") return std::make_unique<ReLU>();
    if (name == "tanh") return std::make_unique<TanhLayer>();
    if (name == "scale") {
        if (args.size() != 1) throw_format("scale spec needs 1 arg: " + token);
        return std::make_unique<ConstScale>(std::stof(args[0]));
    }
    if (name == "avgpool2") return std::make_unique<AvgPool2>();
    if (name == "gap") return std::make_unique<GlobalAvgPool>();
    if (name == "up") {
        if (args.size() != 1) throw_format("up spec needs 1 arg: " + token);
        return std::make_unique<UpsampleNearest>(arg_int(0));
    }
    if (name == "linear") {
        if (args.size() != 2) throw_format("linear spec needs 2 args: " + token);
        return std::make_unique<Linear>(arg_int(0), arg_int(1));
    }
    if (name == "l2norm") return std::make_unique<L2Normalize>();
    throw_format("unknown layer spec: " + token);
}

} // namespace uclearn::nn
