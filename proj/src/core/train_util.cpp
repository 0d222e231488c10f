#include "core/train_util.hpp"

#include <cstring>

#include "core/errors.hpp"
#include "core/parallel.hpp"

namespace uclearn {

namespace {

nn::Tensor slice_batch(const nn::Tensor& batch, int start, int count) {
    nn::Tensor t(count, batch.c, batch.h, batch.w);
    std::memcpy(t.data.data(), batch.sample(start), t.size() * sizeof(float));
    return t;
}

} // namespace

double classifier_forward_backward(const nn::Network& trunk, const nn::Network& head,
                                   const nn::Tensor& batch, const std::vector<int>& labels,
                                   const std::vector<float>& soft_targets,
                                   nn::GradBuffer& trunk_grads, nn::GradBuffer& head_grads) {
    const int n = batch.n;
    const int classes = soft_targets.empty() ? 0 : int(soft_targets.size() / std::size_t(n));
    const int num_chunks = (n + kBatchChunk - 1) / kBatchChunk;
    const float grad_scale = 1.0f / float(n);

    std::vector<double> losses(num_chunks, 0.0);
    std::vector<nn::GradBuffer> tg(num_chunks);
    std::vector<nn::GradBuffer> hg(num_chunks);

    parallel_for(num_chunks, [&](int ci) {
        const int start = ci * kBatchChunk;
        const int count = std::min(kBatchChunk, n - start);
        nn::Tensor x = slice_batch(batch, start, count);

        nn::ForwardPass trunk_fp, head_fp;
        const nn::Tensor& emb = trunk.forward(x, trunk_fp);
        const nn::Tensor& logits = head.forward(emb, head_fp);

        nn::Tensor dlogits;
        if (soft_targets.empty()) {
            std::vector<int> chunk_labels(labels.begin() + start, labels.begin() + start + count);
            losses[ci] = nn::softmax_cross_entropy_sum(logits, chunk_labels, &dlogits, grad_scale);
        } else {
            std::vector<float> chunk_targets(soft_targets.begin() + std::size_t(start) * classes,
                                             soft_targets.begin() + std::size_t(start + count) * classes);
            losses[ci] = nn::softmax_cross_entropy_soft_sum(logits, chunk_targets, &dlogits, grad_scale);
        }

        hg[ci] = head.make_grad_buffer();
        tg[ci] = trunk.make_grad_buffer();
        nn::Tensor demb;
        head.backward(head_fp, dlogits, &demb, &hg[ci]);
        trunk.backward(trunk_fp, demb, nullptr, &tg[ci]);
    });

    double total = 0.0;
    for (int ci = 0; ci < num_chunks; ++ci) {
        total += losses[ci];
        nn::Network::add_grads(trunk_grads, tg[ci]);
        nn::Network::add_grads(head_grads, hg[ci]);
    }
    return total / n;
}

std::vector<int> classifier_predict(const nn::Network& trunk, const nn::Network& head,
                                    const nn::Tensor& batch) {
    const int n = batch.n;
    const int num_chunks = (n + kBatchChunk - 1) / kBatchChunk;
    std::vector<std::vector<int>> chunk_preds(num_chunks);
    parallel_for(num_chunks, [&](int ci) {
        const int start = ci * kBatchChunk;
        const int count = std::min(kBatchChunk, n - start);
        nn::Tensor x = slice_batch(batch, start, count);
        nn::ForwardPass tfp, hfp;
        const nn::Tensor& emb = trunk.forward(x, tfp);
        const nn::Tensor& logits = head.forward(emb, hfp);
        chunk_preds[ci] = nn::argmax_labels(logits);
    });
    std::vector<int> out;
    out.reserve(n);
    for (auto& cp : chunk_preds) out.insert(out.end(), cp.begin(), cp.end());
    return out;
}

} // namespace uclearn
