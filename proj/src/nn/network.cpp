#include "nn/network.hpp"

#include <cmath>
#include <cstring>

#include "core/errors.hpp"

namespace uclearn::nn {

Network Network::from_spec(const std::string& spec, std::uint64_t init_seed) {
    Network net;
    std::size_t start = 0;
    std::size_t layer_index = 0;
    while (start <= spec.size()) {
        const std::size_t pos = spec.find('|', start);
        const std::string token =
            pos == std::string::npos ? spec.substr(start) : spec.substr(start, pos - start);
        if (!token.empty()) {
            auto layer = layer_from_spec(token);
            Rng rng(derive_seed(init_seed, layer_index));
            layer->init_params(rng);
            net.layers_.push_back(std::move(layer));
        }
        if (pos == std::string::npos) break;
        start = pos + 1;
        ++layer_index;
    }
    if (net.layers_.empty()) throw_format("empty network spec");
    return net;
}

std::string Network::spec() const {
    std::string s;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        if (i) s += '|';
        s += layers_[i]->spec();
    }
    return s;
}

const Tensor& Network::forward(const Tensor& x, ForwardPass& fp) const {
    fp.acts.clear();
    fp.acts.reserve(layers_.size() + 1);
    fp.acts.push_back(x);
    for (const auto& layer : layers_) {
        Tensor y;
        layer->forward(fp.acts.back(), y);
        fp.acts.push_back(std::move(y));
    }
    return fp.acts.back();
}

void Network::backward(const ForwardPass& fp, const Tensor& dout, Tensor* dx, GradBuffer* grads) const {
    if (fp.acts.size() != layers_.size() + 1) throw_param("backward: stale forward pass");
    Tensor grad = dout;
    for (std::size_t i = layers_.size(); i-- > 0;) {
        Tensor dprev;
        std::vector<float>* wg = nullptr;
        if (grads && !layers_[i]->params().empty()) wg = &(*grads)[i];
        layers_[i]->backward(fp.acts[i], fp.acts[i + 1], grad, dprev, wg);
        grad = std::move(dprev);
    }
    if (dx) *dx = std::move(grad);
}

GradBuffer Network::make_grad_buffer() const {
    GradBuffer g(layers_.size());
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        g[i].assign(layers_[i]->params().size(), 0.0f);
    }
    return g;
}

void Network::add_grads(GradBuffer& into, const GradBuffer& from) {
    for (std::size_t i = 0; i < into.size(); ++i) {
        for (std::size_t j = 0; j < into[i].size(); ++j) into[i][j] += from[i][j];
    }
}

std::size_t Network::total_params() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l->params().size();
    return n;
}

Network Network::copy() const {
    Network out = from_spec(spec(), 0);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        out.layers_[i]->params() = layers_[i]->params();
    }
    return out;
}

std::uint64_t Network::weights_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](const void* data, std::size_t size) {
        const auto* p = static_cast<const std::uint8_t*>(data);
        for (std::size_t i = 0; i < size; ++i) {
            h ^= p[i];
            h *= 0x100000001b3ULL;
        }
    };
    for (const auto& l : layers_) {
        mix(l->params().data(), l->params().size() * sizeof(float));
    }
    return h;
}

void Adam::step(Network& net, const GradBuffer& grads) {
    if (m_.empty()) {
        m_ = net.make_grad_buffer();
        v_ = net.make_grad_buffer();
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, double(t_));
    const double bc2 = 1.0 - std::pow(beta2_, double(t_));
    for (std::size_t i = 0; i < net.num_layers(); ++i) {
        auto& w = net.layer(i).params();
        if (w.empty()) continue;
        const auto& g = grads[i];
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < w.size(); ++j) {
            m[j] = float(beta1_ * m[j] + (1.0 - beta1_) * g[j]);
            v[j] = float(beta2_ * v[j] + (1.0 - beta2_) * double(g[j]) * g[j]);
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            w[j] -= float(lr_ * mhat / (std::sqrt(vhat) + eps_));
        }
    }
}

double softmax_cross_entropy_sum(const Tensor& logits, const std::vector<int>& labels,
                                 Tensor* dlogits, float grad_scale) {
    const int n = logits.n;
    const int m = int(logits.sample_size());
    if (int(labels.size()) != n) throw_param("cross entropy: label count mismatch");
    if (dlogits) *dlogits = Tensor(logits.n, logits.c, logits.h, logits.w);

    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const float* z = logits.sample(i);
        float zmax = z[0];
        for (int k = 1; k < m; ++k) zmax = std::max(zmax, z[k]);
        double sum = 0.0;
        for (int k = 0; k < m; ++k) sum += std::exp(double(z[k]) - zmax);
        const int y = labels[i];
        if (y < 0 || y >= m) throw_param("cross entropy: label out of range");
        const double logp = double(z[y]) - zmax - std::log(sum);
        total -= logp;
        if (dlogits) {
            float* d = dlogits->sample(i);
            for (int k = 0; k < m; ++k) {
                const float p = float(std::exp(double(z[k]) - zmax) / sum);
                d[k] = (p - (k == y ? 1.0f : 0.0f)) * grad_scale;
            }
        }
    }
    if (!std::isfinite(total)) throw_training("cross entropy became non-finite");
    return total;
}

double softmax_cross_entropy_soft_sum(const Tensor& logits, const std::vector<float>& targets,
                                      Tensor* dlogits, float grad_scale) {
    const int n = logits.n;
    const int m = int(logits.sample_size());
    if (int(targets.size()) != n * m) throw_param("cross entropy: target shape mismatch");
    if (dlogits) *dlogits = Tensor(logits.n, logits.c, logits.h, logits.w);

    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const float* z = logits.sample(i);
        const float* q = targets.data() + std::size_t(i) * m;
        float zmax = z[0];
        for (int k = 1; k < m; ++k) zmax = std::max(zmax, z[k]);
        double sum = 0.0;
        for (int k = 0; k < m; ++k) sum += std::exp(double(z[k]) - zmax);
        const double logsum = std::log(sum);
        double loss = 0.0;
        for (int k = 0; k < m; ++k) {
            loss -= double(q[k]) * (double(z[k]) - zmax - logsum);
        }
        total += loss;
        if (dlogits) {
            float* d = dlogits->sample(i);
            for (int k = 0; k < m; ++k) {
                const float p = float(std::exp(double(z[k]) - zmax) / sum);
                d[k] = (p - q[k]) * grad_scale;
            }
        }
    }
    if (!std::isfinite(total)) throw_training("cross entropy became non-finite");
    return total;
}

double softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels, Tensor* dlogits) {
    return softmax_cross_entropy_sum(logits, labels, dlogits, 1.0f / float(logits.n)) / logits.n;
}

double softmax_cross_entropy_soft(const Tensor& logits, const std::vector<float>& targets,
                                  Tensor* dlogits) {
    return softmax_cross_entropy_soft_sum(logits, targets, dlogits, 1.0f / float(logits.n)) / logits.n;
}

std::vector<int> argmax_labels(const Tensor& logits) {
    const int m = int(logits.sample_size());
    std::vector<int> out(logits.n);
    for (int i = 0; i < logits.n; ++i) {
        const float* z = logits.sample(i);
        int best = 0;
        for (int k = 1; k < m; ++k) {
            if (z[k] > z[best]) best = k;
        }
        out[i] = best;
    }
    return out;
}

} // namespace uclearn::nn
