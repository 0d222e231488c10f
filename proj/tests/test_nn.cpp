#include <doctest.h>

#include <cmath>

#include "core/rng.hpp"
#include "nn/network.hpp"

using namespace uclearn;

namespace {

nn::Tensor random_tensor(int n, int c, int h, int w, std::uint64_t seed, float lo = -1.0f,
                         float hi = 1.0f) {
    nn::Tensor t(n, c, h, w);
    Rng rng(seed);
    for (float& v : t.data) v = lo + (hi - lo) * rng.uniform_f();
    return t;
}

// Scalar loss L = sum(out * probe) so dL/dout = probe; checks every
// parameter gradient against central differences.
void check_param_gradients(nn::Network& net, const nn::Tensor& x, double step, double rel_tol,
                           double abs_floor) {
    nn::ForwardPass fp;
    const nn::Tensor& out = net.forward(x, fp);
    nn::Tensor probe = random_tensor(out.n, out.c, out.h, out.w, 99);

    nn::GradBuffer grads = net.make_grad_buffer();
    net.backward(fp, probe, nullptr, &grads);

    auto loss_at = [&]() {
        nn::ForwardPass p;
        const nn::Tensor& o = net.forward(x, p);
        double s = 0.0;
        for (std::size_t i = 0; i < o.data.size(); ++i) s += double(o.data[i]) * probe.data[i];
        return s;
    };

    int checked = 0;
    for (std::size_t li = 0; li < net.num_layers(); ++li) {
        auto& params = net.layer(li).params();
        // Probe a deterministic subset per layer to keep runtime sane.
        const std::size_t stride = params.size() > 64 ? params.size() / 37 : 1;
        for (std::size_t j = 0; j < params.size(); j += stride) {
            const float orig = params[j];
            params[j] = float(orig + step);
            const double lp = loss_at();
            params[j] = float(orig - step);
            const double lm = loss_at();
            params[j] = orig;

            const double fd = (lp - lm) / (2.0 * step);
            const double an = double(grads[li][j]);
            const double denom = std::max({std::fabs(fd), std::fabs(an), abs_floor});
            CHECK(std::fabs(fd - an) / denom < rel_tol);
            ++checked;
        }
    }
    CHECK(checked > 0);
}

void check_input_gradients(const nn::Network& net, const nn::Tensor& x, double step,
                           double rel_tol, double abs_floor) {
    nn::ForwardPass fp;
    const nn::Tensor& out = net.forward(x, fp);
    nn::Tensor probe = random_tensor(out.n, out.c, out.h, out.w, 77);

    nn::Tensor dx;
    net.backward(fp, probe, &dx, nullptr);

    nn::Tensor xcopy = x;
    auto loss_at = [&]() {
        nn::ForwardPass p;
        const nn::Tensor& o = net.forward(xcopy, p);
        double s = 0.0;
        for (std::size_t i = 0; i < o.data.size(); ++i) s += double(o.data[i]) * probe.data[i];
        return s;
    };

    const std::size_t stride = x.size() > 64 ? x.size() / 29 : 1;
    for (std::size_t j = 0; j < x.size(); j += stride) {
        const float orig = xcopy.data[j];
        xcopy.data[j] = float(orig + step);
        const double lp = loss_at();
        xcopy.data[j] = float(orig - step);
        const double lm = loss_at();
        xcopy.data[j] = orig;

        const double fd = (lp - lm) / (2.0 * step);
        const double an = double(dx.data[j]);
        const double denom = std::max({std::fabs(fd), std::fabs(an), abs_floor});
        CHECK(std::fabs(fd - an) / denom < rel_tol);
    }
}

} // namespace

TEST_CASE("conv layer matches finite differences") {
    nn::Network net = nn::Network::from_spec("conv:2,3,3,2,1", 5);
    nn::Tensor x = random_tensor(2, 2, 6, 6, 1);
    check_param_gradients(net, x, 1e-3, 1e-2, 1e-4);
    check_input_gradients(net, x, 1e-3, 1e-2, 1e-4);
}

TEST_CASE("full classifier stack matches finite differences") {
    nn::Network net = nn::Network::from_spec(
        "conv:3,4,3,2,1|relu|conv:4,6,3,2,1|relu|gap|linear:6,5", 7);
    // Inputs kept away from ReLU kinks by the smooth conv mixing; tolerance
    // absorbs rare kink crossings.
    nn::Tensor x = random_tensor(2, 3, 8, 8, 2, 0.05f, 0.95f);
    check_param_gradients(net, x, 1e-3, 2e-2, 1e-4);
    check_input_gradients(net, x, 1e-3, 2e-2, 1e-4);
}

TEST_CASE("encoder-decoder generator gradients") {
    nn::Network net = nn::Network::from_spec(
        "conv:2,4,3,2,1|relu|conv:4,4,3,1,1|relu|up:2|conv:4,3,3,1,1|tanh|scale:0.0627451", 11);
    nn::Tensor sigma = random_tensor(1, 2, 8, 8, 3, 0.0f, 1.0f);
    check_param_gradients(net, sigma, 1e-3, 1e-2, 1e-5);
}

TEST_CASE("l2norm and avgpool gradients") {
    nn::Network net = nn::Network::from_spec("conv:2,4,3,1,1|avgpool2|gap|l2norm", 13);
    nn::Tensor x = random_tensor(2, 2, 4, 4, 4);
    check_param_gradients(net, x, 1e-3, 1e-2, 1e-4);
    check_input_gradients(net, x, 1e-3, 1e-2, 1e-4);
}

TEST_CASE("softmax cross entropy gradient and value") {
    nn::Tensor logits(2, 3, 1, 1);
    Rng rng(8);
    for (float& v : logits.data) v = rng.normal_f();
    std::vector<int> labels{2, 0};

    nn::Tensor dlogits;
    const double loss = nn::softmax_cross_entropy(logits, labels, &dlogits);
    CHECK(loss > 0.0);

    const double step = 1e-3;
    for (std::size_t j = 0; j < logits.data.size(); ++j) {
        const float orig = logits.data[j];
        logits.data[j] = float(orig + step);
        const double lp = nn::softmax_cross_entropy(logits, labels, nullptr);
        logits.data[j] = float(orig - step);
        const double lm = nn::softmax_cross_entropy(logits, labels, nullptr);
        logits.data[j] = orig;
        const double fd = (lp - lm) / (2.0 * step);
        CHECK(std::fabs(fd - double(dlogits.data[j])) < 1e-4);
    }
}

TEST_CASE("network copy and spec round trip") {
    nn::Network net = nn::Network::from_spec("conv:3,4,3,2,1|relu|gap|linear:4,2", 21);
    nn::Network dup = net.copy();
    CHECK(net.spec() == dup.spec());
    CHECK(net.weights_hash() == dup.weights_hash());

    nn::Tensor x = random_tensor(1, 3, 8, 8, 5);
    nn::ForwardPass fa, fb;
    const nn::Tensor& ya = net.forward(x, fa);
    const nn::Tensor& yb = dup.forward(x, fb);
    for (std::size_t i = 0; i < ya.data.size(); ++i) CHECK(ya.data[i] == yb.data[i]);
}

TEST_CASE("forward is batch-size invariant") {
    nn::Network net = nn::Network::from_spec("conv:3,4,3,2,1|relu|conv:4,5,3,2,1|relu|gap", 31);
    nn::Tensor big = random_tensor(5, 3, 8, 8, 6, 0.0f, 1.0f);

    nn::ForwardPass fp_all;
    const nn::Tensor out_all = net.forward(big, fp_all);
    for (int i = 0; i < big.n; ++i) {
        nn::Tensor one(1, big.c, big.h, big.w);
        std::copy(big.sample(i), big.sample(i) + big.sample_size(), one.data.begin());
        nn::ForwardPass fp;
        const nn::Tensor& out = net.forward(one, fp);
        for (std::size_t j = 0; j < out.sample_size(); ++j) {
            CHECK(out.data[j] == out_all.sample(i)[j]);
        }
    }
}
