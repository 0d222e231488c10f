#include "core/augment.hpp"

#include <cmath>

#include "core/errors.hpp"
#include "core/image.hpp"

namespace uclearn {

namespace {

// Marsaglia-Tsang gamma sampler (shape >= some small positive value).
double sample_gamma(double shape, Rng& rng) {
    if (shape < 1.0) {
        const double u = rng.uniform();
        return sample_gamma(shape + 1.0, rng) * std::pow(u <= 0.0 ? 1e-300 : u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    while (true) {
        double x = rng.normal();
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        const double u = rng.uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

float sample_beta(float alpha, Rng& rng) {
    const double x = sample_gamma(alpha, rng);
    const double y = sample_gamma(alpha, rng);
    const double s = x + y;
    return s > 0.0 ? float(x / s) : 0.5f;
}

std::vector<int> shuffled_partner(int n, Rng& rng) {
    std::vector<int> p(n);
    for (int i = 0; i < n; ++i) p[i] = i;
    rng.shuffle(p);
    return p;
}

} // namespace

std::vector<float> one_hot(const std::vector<int>& labels, int classes) {
    std::vector<float> out(labels.size() * std::size_t(classes), 0.0f);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out[i * classes + labels[i]] = 1.0f;
    }
    return out;
}

void mixup_fixed(nn::Tensor& batch, std::vector<float>& labels, int classes, float lambda,
                 const std::vector<int>& partner) {
    const std::size_t pix = batch.sample_size();
    nn::Tensor orig = batch;
    std::vector<float> orig_labels = labels;
    for (int i = 0; i < batch.n; ++i) {
        const int j = partner[i];
        float* x = batch.sample(i);
        const float* x2 = orig.sample(j);
        for (std::size_t k = 0; k < pix; ++k) {
            x[k] = lambda * x[k] + (1.0f - lambda) * x2[k];
        }
        for (int k = 0; k < classes; ++k) {
            labels[std::size_t(i) * classes + k] =
                lambda * labels[std::size_t(i) * classes + k] +
                (1.0f - lambda) * orig_labels[std::size_t(j) * classes + k];
        }
    }
}

float mixup(nn::Tensor& batch, std::vector<float>& labels, int classes, float alpha, Rng& rng) {
    if (!(alpha > 0.0f)) throw_param("mixup: alpha must be > 0");
    const float lambda = sample_beta(alpha, rng);
    mixup_fixed(batch, labels, classes, lambda, shuffled_partner(batch.n, rng));
    return lambda;
}

float cutmix(nn::Tensor& batch, std::vector<float>& labels, int classes, float alpha, Rng& rng) {
    if (!(alpha > 0.0f)) throw_param("cutmix: alpha must be > 0");
    const float lambda_raw = sample_beta(alpha, rng);
    const std::vector<int> partner = shuffled_partner(batch.n, rng);

    // One box for the whole batch, centered uniformly, clipped at borders.
    const float cut = std::sqrt(1.0f - lambda_raw);
    const int bh = int(std::lround(cut * batch.h));
    const int bw = int(std::lround(cut * batch.w));
    const int cy = rng.uniform_index(batch.h);
    const int cx = rng.uniform_index(batch.w);
    const int y0 = std::max(0, cy - bh / 2);
    const int y1 = std::min(batch.h, cy + (bh + 1) / 2);
    const int x0 = std::max(0, cx - bw / 2);
    const int x1 = std::min(batch.w, cx + (bw + 1) / 2);

    nn::Tensor orig = batch;
    std::vector<float> orig_labels = labels;
    const float area = float(std::max(0, y1 - y0)) * float(std::max(0, x1 - x0));
    const float lambda = 1.0f - area / (float(batch.h) * batch.w);
    for (int i = 0; i < batch.n; ++i) {
        const int j = partner[i];
        for (int c = 0; c < batch.c; ++c) {
            for (int y = y0; y < y1; ++y) {
                for (int x = x0; x < x1; ++x) {
                    batch.at(i, c, y, x) = orig.at(j, c, y, x);
                }
            }
        }
        for (int k = 0; k < classes; ++k) {
            labels[std::size_t(i) * classes + k] =
                lambda * labels[std::size_t(i) * classes + k] +
                (1.0f - lambda) * orig_labels[std::size_t(j) * classes + k];
        }
    }
    return lambda;
}

void cutout(nn::Tensor& batch, int mask_side, Rng& rng) {
    if (mask_side < 1 || mask_side > batch.h || mask_side > batch.w) {
        throw_param("cutout: mask must fit inside the image");
    }
    for (int i = 0; i < batch.n; ++i) {
        const int y0 = rng.uniform_index(batch.h - mask_side + 1);
        const int x0 = rng.uniform_index(batch.w - mask_side + 1);
        for (int c = 0; c < batch.c; ++c) {
            for (int y = y0; y < y0 + mask_side; ++y) {
                for (int x = x0; x < x0 + mask_side; ++x) {
                    batch.at(i, c, y, x) = 0.0f;
                }
            }
        }
    }
}

void gaussian_smooth(nn::Tensor& batch, int kernel, float sigma) {
    if (kernel < 1 || kernel % 2 == 0) throw_param("gaussian_smooth: kernel must be odd");
    if (sigma < 0.0f) throw_param("gaussian_smooth: sigma must be >= 0");
    const int r = kernel / 2;

    std::vector<float> w(kernel, 0.0f);
    if (sigma == 0.0f) {
        w[r] = 1.0f;
    } else {
        double sum = 0.0;
        for (int i = 0; i < kernel; ++i) {
            const double d = double(i - r);
            w[i] = float(std::exp(-d * d / (2.0 * double(sigma) * sigma)));
            sum += w[i];
        }
        for (auto& v : w) v = float(v / sum);
    }

    auto reflect = [](int i, int n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
        return i;
    };

    std::vector<float> tmp(std::size_t(batch.h) * batch.w);
    for (int i = 0; i < batch.n; ++i) {
        for (int c = 0; c < batch.c; ++c) {
            // horizontal then vertical pass
            for (int y = 0; y < batch.h; ++y) {
                for (int x = 0; x < batch.w; ++x) {
                    float acc = 0.0f;
                    for (int k = -r; k <= r; ++k) {
                        acc += w[k + r] * batch.at(i, c, y, reflect(x + k, batch.w));
                    }
                    tmp[std::size_t(y) * batch.w + x] = acc;
                }
            }
            for (int y = 0; y < batch.h; ++y) {
                for (int x = 0; x < batch.w; ++x) {
                    float acc = 0.0f;
                    for (int k = -r; k <= r; ++k) {
                        acc += w[k + r] * tmp[std::size_t(reflect(y + k, batch.h)) * batch.w + x];
                    }
                    batch.at(i, c, y, x) = clampf(acc, 0.0f, 1.0f);
                }
            }
        }
    }
}

void random_crop(nn::Tensor& batch, int pad, Rng& rng) {
    if (pad < 1) return;
    nn::Tensor orig = batch;
    for (int i = 0; i < batch.n; ++i) {
        const int oy = rng.uniform_index(2 * pad + 1) - pad;
        const int ox = rng.uniform_index(2 * pad + 1) - pad;
        for (int c = 0; c < batch.c; ++c) {
            for (int y = 0; y < batch.h; ++y) {
                for (int x = 0; x < batch.w; ++x) {
                    const int sy = y + oy;
                    const int sx = x + ox;
                    batch.at(i, c, y, x) =
                        (sy >= 0 && sy < batch.h && sx >= 0 && sx < batch.w)
                            ? orig.at(i, c, sy, sx)
                            : 0.0f;
                }
            }
        }
    }
}

void random_horizontal_flip(nn::Tensor& batch, Rng& rng) {
    for (int i = 0; i < batch.n; ++i) {
        if (rng.uniform() >= 0.5) continue;
        for (int c = 0; c < batch.c; ++c) {
            for (int y = 0; y < batch.h; ++y) {
                for (int x = 0; x < batch.w / 2; ++x) {
                    std::swap(batch.at(i, c, y, x), batch.at(i, c, y, batch.w - 1 - x));
                }
            }
        }
    }
}

nn::Tensor resize_nearest(const nn::Tensor& batch, int out_h, int out_w) {
    if (out_h == batch.h && out_w == batch.w) return batch;
    nn::Tensor out(batch.n, batch.c, out_h, out_w);
    for (int i = 0; i < batch.n; ++i) {
        for (int c = 0; c < batch.c; ++c) {
            for (int y = 0; y < out_h; ++y) {
                const int sy = std::min(batch.h - 1, y * batch.h / out_h);
                for (int x = 0; x < out_w; ++x) {
                    const int sx = std::min(batch.w - 1, x * batch.w / out_w);
                    out.at(i, c, y, x) = batch.at(i, c, sy, sx);
                }
            }
        }
    }
    return out;
}

void normalize_batch(nn::Tensor& batch) {
    for (float& v : batch.data) v = (v - 0.5f) * 4.0f;
}

} // namespace uclearn
