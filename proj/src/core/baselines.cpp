#include "core/baselines.hpp"

#include <cmath>
#include <cstring>

#include "core/batching.hpp"
#include "core/errors.hpp"
#include "core/parallel.hpp"
#include "core/rng.hpp"
#include "core/train_util.hpp"

namespace uclearn {

namespace {

float signf(float v) { return v > 0.0f ? 1.0f : (v < 0.0f ? -1.0f : 0.0f); }

// One projected-gradient step over a batch of per-sample deltas.
// direction = -1 minimizes the cross-entropy (EMinN), +1 maximizes (EMaxN).
void pgd_sweep(const LabeledImageDataset& ds, const ClassifierModel& model,
               const std::vector<int>& labels, std::vector<Image>& deltas, float eps, float alpha,
               float direction, int batch) {
    const int n = int(ds.size());
    const int num_batches = (n + batch - 1) / batch;
    parallel_for(num_batches, [&](int bi) {
        const int start = bi * batch;
        const int count = std::min(batch, n - start);
        const Image& shape = ds.samples[start].pixels;
        nn::Tensor xp(count, shape.channels, shape.height, shape.width);
        const std::size_t pix = xp.sample_size();
        std::vector<std::uint8_t> open(std::size_t(count) * pix);

        // x' = clamp(x + delta, 0, 1), with the straight-through mask.
        nn::Tensor xt(count, shape.channels, shape.height, shape.width);
        nn::Tensor dt(count, shape.channels, shape.height, shape.width);
        for (int i = 0; i < count; ++i) {
            image_into_tensor(ds.samples[start + i].pixels, xt, i);
            image_into_tensor(deltas[start + i], dt, i);
            float* o = xp.sample(i);
            const float* x = xt.sample(i);
            const float* d = dt.sample(i);
            std::uint8_t* msk = open.data() + std::size_t(i) * pix;
            for (std::size_t j = 0; j < pix; ++j) {
                const float v = x[j] + d[j];
                o[j] = clampf(v, 0.0f, 1.0f);
                msk[j] = (v > 0.0f && v < 1.0f) ? 1 : 0;
            }
        }

        nn::ForwardPass tfp, hfp;
        const nn::Tensor& emb = model.trunk.forward(xp, tfp);
        const nn::Tensor& logits = model.head.forward(emb, hfp);
        std::vector<int> chunk_labels(labels.begin() + start, labels.begin() + start + count);
        nn::Tensor dlogits;
        nn::softmax_cross_entropy_sum(logits, chunk_labels, &dlogits, 1.0f);
        nn::Tensor demb, dx;
        model.head.backward(hfp, dlogits, &demb, nullptr);
        model.trunk.backward(tfp, demb, &dx, nullptr);

        for (int i = 0; i < count; ++i) {
            Image& delta = deltas[start + i];
            const float* g = dx.sample(i);
            const std::uint8_t* msk = open.data() + std::size_t(i) * pix;
            float* dvals = dt.sample(i);
            for (std::size_t j = 0; j < pix; ++j) {
                const float step = direction * alpha * (msk[j] ? signf(g[j]) : 0.0f);
                dvals[j] = clampf(dvals[j] + step, -eps, eps);
            }
            // dt sample order matches image_into_tensor's CHW layout.
            delta = tensor_sample_to_image(dt, i);
        }
    });
}

double perturbed_train_accuracy(const LabeledImageDataset& ds, const ClassifierModel& model,
                                const std::vector<int>& labels, const std::vector<Image>& deltas) {
    LabeledImageDataset perturbed = ds;
    for (std::size_t i = 0; i < perturbed.size(); ++i) {
        Image& px = perturbed.samples[i].pixels;
        for (std::size_t j = 0; j < px.data.size(); ++j) {
            px.data[j] = clampf(px.data[j] + deltas[i].data[j], 0.0f, 1.0f);
        }
    }
    const std::vector<int> preds = predict_labels(model, perturbed);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i] == labels[i]) ++correct;
    }
    return double(correct) / double(preds.size());
}

PerturbationSet make_sample_set(const LabeledImageDataset& ds, std::vector<Image>&& deltas,
                                float eps) {
    PerturbationSet ps;
    ps.mode = PerturbationSet::Mode::sample_wise;
    ps.eps = eps;
    ps.deltas = std::move(deltas);
    for (std::size_t i = 0; i < ds.size(); ++i) ps.assignment[ds.samples[i].id] = int(i);
    return ps;
}

} // namespace

EminnResult eminn_generate(const LabeledImageDataset& ds, const ClassifierModel& surrogate,
                           const std::vector<int>& predicted_labels, const EminnConfig& cfg) {
    if (predicted_labels.size() != ds.size()) throw_param("eminn: label count mismatch");
    if (!(cfg.eps >= 0.0f && cfg.eps < 1.0f)) throw_param("eminn: eps out of range");

    const Image& shape = ds.samples.front().pixels;
    std::vector<Image> deltas(ds.size(), Image(shape.height, shape.width, shape.channels));
    EminnResult result;
    result.trained_copy = surrogate.copy();

    if (cfg.eps == 0.0f) {
        result.noise = make_sample_set(ds, std::move(deltas), cfg.eps);
        result.noise.config_echo = {{"method", "eminn"}, {"eps", cfg.eps}, {"rounds", 0}};
        return result;
    }

    const float alpha = cfg.pgd_alpha > 0.0f ? cfg.pgd_alpha : cfg.eps / 10.0f;
    nn::Adam opt(cfg.surrogate_lr);
    Rng shuffle_rng(derive_seed(cfg.seed, 31));
    std::vector<int> order = iota_indices(ds.size());
    std::size_t cursor = order.size(); // forces a shuffle on first use

    int rounds = 0;
    for (; rounds < cfg.max_rounds; ++rounds) {
        // M surrogate steps on the current perturbed data.
        for (int step = 0; step < cfg.surrogate_steps; ++step) {
            std::vector<int> idx;
            std::vector<int> labels;
            for (int i = 0; i < cfg.batch; ++i) {
                if (cursor >= order.size()) {
                    shuffle_rng.shuffle(order);
                    cursor = 0;
                }
                idx.push_back(order[cursor++]);
            }
            nn::Tensor batch(int(idx.size()), shape.channels, shape.height, shape.width);
            labels.resize(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) {
                Image img = ds.samples[idx[i]].pixels;
                const Image& d = deltas[idx[i]];
                for (std::size_t j = 0; j < img.data.size(); ++j) {
                    img.data[j] = clampf(img.data[j] + d.data[j], 0.0f, 1.0f);
                }
                image_into_tensor(img, batch, int(i));
                labels[i] = predicted_labels[idx[i]];
            }
            nn::GradBuffer tg = result.trained_copy.trunk.make_grad_buffer();
            nn::GradBuffer hg = result.trained_copy.head.make_grad_buffer();
            const double loss = classifier_forward_backward(result.trained_copy.trunk,
                                                            result.trained_copy.head, batch, labels,
                                                            {}, tg, hg);
            if (!std::isfinite(loss)) throw_training("eminn: surrogate training diverged");
            opt.step(result.trained_copy.trunk, tg);
            opt.step(result.trained_copy.head, hg);
        }

        // T noise steps minimizing the copy's cross-entropy.
        for (int t = 0; t < cfg.pgd_steps; ++t) {
            pgd_sweep(ds, result.trained_copy, predicted_labels, deltas, cfg.eps, alpha, -1.0f,
                      cfg.batch);
        }

        const double acc =
            perturbed_train_accuracy(ds, result.trained_copy, predicted_labels, deltas);
        if (acc >= cfg.stop_train_acc) {
            ++rounds;
            break;
        }
    }

    result.noise = make_sample_set(ds, std::move(deltas), cfg.eps);
    result.noise.config_echo = {{"method", "eminn"},
                                {"eps", cfg.eps},
                                {"rounds", rounds},
                                {"surrogate_steps", cfg.surrogate_steps},
                                {"pgd_steps", cfg.pgd_steps},
                                {"alpha", alpha},
                                {"seed", cfg.seed}};
    return result;
}

PerturbationSet emaxn_generate(const LabeledImageDataset& ds, const ClassifierModel& surrogate,
                               const std::vector<int>& predicted_labels, const EmaxnConfig& cfg) {
    if (predicted_labels.size() != ds.size()) throw_param("emaxn: label count mismatch");
    if (!(cfg.eps >= 0.0f && cfg.eps < 1.0f)) throw_param("emaxn: eps out of range");
    if (cfg.steps < 0) throw_param("emaxn: steps must be >= 0");

    const Image& shape = ds.samples.front().pixels;
    std::vector<Image> deltas(ds.size(), Image(shape.height, shape.width, shape.channels));
    const float alpha = cfg.alpha > 0.0f ? cfg.alpha : cfg.eps / 10.0f;
    if (cfg.eps > 0.0f) {
        for (int t = 0; t < cfg.steps; ++t) {
            pgd_sweep(ds, surrogate, predicted_labels, deltas, cfg.eps, alpha, +1.0f, cfg.batch);
        }
    }

    PerturbationSet ps = make_sample_set(ds, std::move(deltas), cfg.eps);
    ps.config_echo = {{"method", "emaxn"},
                      {"eps", cfg.eps},
                      {"steps", cfg.steps},
                      {"alpha", alpha},
                      {"seed", cfg.seed}};
    return ps;
}

PerturbationSet synper_generate(int num_classes, int height, int width, int channels,
                                const SynperConfig& cfg) {
    if (num_classes < 2) throw_param("synper: num_classes must be >= 2");
    if (!(cfg.eps >= 0.0f && cfg.eps < 1.0f)) throw_param("synper: eps out of range");
    if (cfg.patch_size < 1) throw_param("synper: patch_size must be >= 1");

    Rng rng(cfg.seed);
    const int patch_entries = cfg.patch_size * cfg.patch_size * channels;
    std::vector<std::vector<float>> patches;

    auto differs_enough = [&](const std::vector<float>& a, const std::vector<float>& b) {
        int diff = 0;
        for (int i = 0; i < patch_entries; ++i) {
            if (a[i] != b[i]) ++diff;
        }
        return diff * 2 >= patch_entries;
    };

    for (int cls = 0; cls < num_classes; ++cls) {
        std::vector<float> patch(patch_entries);
        bool ok = false;
        for (int attempt = 0; attempt < cfg.max_resample; ++attempt) {
            for (auto& v : patch) v = rng.uniform() < 0.5 ? -cfg.eps : cfg.eps;
            ok = true;
            for (const auto& other : patches) {
                if (!differs_enough(patch, other)) {
                    ok = false;
                    break;
                }
            }
            if (ok) break;
        }
        if (!ok) throw Error(ErrorKind::training, "synper: could not separate class patterns");
        patches.push_back(std::move(patch));
    }

    PerturbationSet ps;
    ps.mode = PerturbationSet::Mode::class_wise;
    ps.eps = cfg.eps;
    ps.deltas.reserve(num_classes);
    for (int cls = 0; cls < num_classes; ++cls) {
        Image delta(height, width, channels);
        const auto& patch = patches[cls];
        for (int h = 0; h < height; ++h) {
            for (int w = 0; w < width; ++w) {
                for (int c = 0; c < channels; ++c) {
                    const int ph = h % cfg.patch_size;
                    const int pw = w % cfg.patch_size;
                    delta.at(h, w, c) = patch[(ph * cfg.patch_size + pw) * channels + c];
                }
            }
        }
        ps.deltas.push_back(std::move(delta));
    }
    ps.config_echo = {{"method", "synper"},
                      {"eps", cfg.eps},
                      {"patch_size", cfg.patch_size},
                      {"num_classes", num_classes},
                      {"seed", cfg.seed}};
    return ps;
}

} // namespace uclearn
