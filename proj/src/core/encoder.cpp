#include "core/encoder.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>

#include "core/batching.hpp"
#include "core/errors.hpp"
#include "core/io_util.hpp"
#include "core/parallel.hpp"
#include "core/rng.hpp"
#include "core/train_util.hpp"

namespace fs = std::filesystem;

namespace uclearn {

namespace {

constexpr char kMagic[4] = {'U', 'C', 'W', 'T'};
constexpr std::uint16_t kVersion = 1;

std::string trunk_spec(int in_c, int width1, int width2, int embed_dim) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "conv:%d,%d,3,2,1|relu|conv:%d,%d,3,2,1|relu|conv:%d,%d,3,2,1|relu|gap",
                  in_c, width1, width1, width2, width2, embed_dim);
    return buf;
}

} // namespace

ClassifierModel ClassifierModel::copy() const {
    ClassifierModel out;
    out.trunk = trunk.copy();
    out.head = head.copy();
    out.embed_dim = embed_dim;
    out.num_classes = num_classes;
    return out;
}

Encoder Encoder::copy() const {
    Encoder out;
    out.trunk = trunk.copy();
    out.embed_dim = embed_dim;
    out.differentiable = differentiable;
    out.descriptor = descriptor;
    return out;
}

ClassifierModel make_classifier(int num_classes, int width1, int width2, int embed_dim,
                                std::uint64_t init_seed) {
    if (num_classes < 1) throw_param("make_classifier: num_classes must be >= 1");
    ClassifierModel model;
    model.trunk = nn::Network::from_spec(trunk_spec(3, width1, width2, embed_dim),
                                         derive_seed(init_seed, 1));
    model.head = nn::Network::from_spec(
        "linear:" + std::to_string(embed_dim) + "," + std::to_string(num_classes),
        derive_seed(init_seed, 2));
    model.embed_dim = embed_dim;
    model.num_classes = num_classes;
    return model;
}

ClassifierModel train_toy_surrogate(const LabeledImageDataset& ds, const SurrogateConfig& cfg) {
    if (ds.samples.empty()) throw_param("train_toy_surrogate: empty dataset");
    if (cfg.epochs < 1 || cfg.batch < 1) throw_param("train_toy_surrogate: invalid config");

    ClassifierModel model =
        make_classifier(ds.num_categories, cfg.width1, cfg.width2, cfg.embed_dim, cfg.seed);
    nn::Adam opt(cfg.lr);
    Rng shuffle_rng(derive_seed(cfg.seed, 3));

    std::vector<int> order = iota_indices(ds.size());
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += std::size_t(cfg.batch)) {
            const std::size_t end = std::min(order.size(), start + std::size_t(cfg.batch));
            std::vector<int> idx(order.begin() + start, order.begin() + end);
            std::vector<int> labels;
            nn::Tensor batch = gather_batch(ds, idx, &labels);

            nn::GradBuffer tg = model.trunk.make_grad_buffer();
            nn::GradBuffer hg = model.head.make_grad_buffer();
            const double loss =
                classifier_forward_backward(model.trunk, model.head, batch, labels, {}, tg, hg);
            if (!std::isfinite(loss)) throw_training("surrogate training diverged");
            opt.step(model.trunk, tg);
            opt.step(model.head, hg);
        }
    }
    return model;
}

std::vector<int> predict_labels(const ClassifierModel& model, const LabeledImageDataset& ds) {
    nn::Tensor batch = gather_batch(ds, iota_indices(ds.size()), nullptr);
    return classifier_predict(model.trunk, model.head, batch);
}

Encoder make_encoder(const ClassifierModel& model, bool normalize) {
    Encoder enc;
    enc.trunk = model.trunk.copy();
    if (normalize) {
        std::string spec = enc.trunk.spec() + "|l2norm";
        nn::Network with_norm = nn::Network::from_spec(spec, 0);
        for (std::size_t i = 0; i < enc.trunk.num_layers(); ++i) {
            with_norm.layer(i).params() = enc.trunk.layer(i).params();
        }
        enc.trunk = std::move(with_norm);
    }
    enc.embed_dim = model.embed_dim;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s#%016llx", enc.trunk.spec().c_str(),
                  static_cast<unsigned long long>(enc.trunk.weights_hash()));
    enc.descriptor = buf;
    return enc;
}

EmbeddingMatrix extract_embeddings(const Encoder& enc, const LabeledImageDataset& ds, int batch) {
    if (batch < 1) throw_param("extract_embeddings: batch must be >= 1");
    EmbeddingMatrix em;
    em.rows.resize(Eigen::Index(ds.size()), enc.embed_dim);
    em.ids.reserve(ds.size());
    for (const auto& s : ds.samples) em.ids.push_back(s.id);

    const int num_batches = int((ds.size() + std::size_t(batch) - 1) / std::size_t(batch));
    std::vector<std::string> bad(num_batches);
    parallel_for(num_batches, [&](int bi) {
        const std::size_t start = std::size_t(bi) * batch;
        const std::size_t end = std::min(ds.size(), start + std::size_t(batch));
        std::vector<int> idx;
        for (std::size_t i = start; i < end; ++i) idx.push_back(int(i));
        nn::Tensor x = gather_batch(ds, idx, nullptr);
        nn::ForwardPass fp;
        const nn::Tensor& emb = enc.trunk.forward(x, fp);
        for (std::size_t i = start; i < end; ++i) {
            const float* row = emb.sample(int(i - start));
            for (int d = 0; d < enc.embed_dim; ++d) {
                const float v = row[d];
                if (!std::isfinite(v)) bad[bi] = ds.samples[i].id;
                em.rows(Eigen::Index(i), d) = v;
            }
        }
    });
    for (const auto& id : bad) {
        if (!id.empty()) throw_numeric("non-finite embedding for sample '" + id + "'");
    }
    return em;
}

void save_model(const ClassifierModel& model, const fs::path& path) {
    ByteWriter w;
    w.raw(kMagic, 4);
    w.u16(kVersion);
    const std::string arch = model.trunk.spec() + "@" + model.head.spec();
    w.u32(std::uint32_t(arch.size()));
    w.raw(arch.data(), arch.size());
    w.u32(std::uint32_t(model.embed_dim));
    w.u32(std::uint32_t(model.num_classes));

    auto write_blocks = [&w](const nn::Network& net, const char* prefix) {
        for (std::size_t i = 0; i < net.num_layers(); ++i) {
            const auto& p = net.layer(i).params();
            if (p.empty()) continue;
            char name[32];
            std::snprintf(name, sizeof(name), "%s.L%02zu", prefix, i);
            const std::string n = name;
            w.u32(std::uint32_t(n.size()));
            w.raw(n.data(), n.size());
            w.u32(std::uint32_t(p.size()));
            w.f32_array(p.data(), p.size());
        }
    };
    std::uint32_t nblocks = 0;
    for (std::size_t i = 0; i < model.trunk.num_layers(); ++i) {
        if (!model.trunk.layer(i).params().empty()) ++nblocks;
    }
    for (std::size_t i = 0; i < model.head.num_layers(); ++i) {
        if (!model.head.layer(i).params().empty()) ++nblocks;
    }
    w.u32(nblocks);
    write_blocks(model.trunk, "trunk");
    write_blocks(model.head, "head");

    atomic_write_file(path, w.bytes().data(), w.bytes().size());
}

ClassifierModel load_model(const fs::path& path) {
    if (!fs::exists(path)) throw_config("weights artifact not found: " + path.string());
    const auto bytes = read_binary_file(path);
    ByteReader r(bytes);
    char magic[4];
    r.raw(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) throw_format("not a UCWT weights artifact: " + path.string());
    const std::uint16_t version = r.u16();
    if (version != kVersion) throw_format("unsupported UCWT version " + std::to_string(version));

    const std::uint32_t arch_len = r.u32();
    std::string arch(arch_len, '\0');
    r.raw(arch.data(), arch_len);
    const std::size_t at = arch.find('@');
    if (at == std::string::npos) throw_format("malformed UCWT architecture string");

    ClassifierModel model;
    model.trunk = nn::Network::from_spec(arch.substr(0, at), 0);
    model.head = nn::Network::from_spec(arch.substr(at + 1), 0);
    model.embed_dim = int(r.u32());
    model.num_classes = int(r.u32());

    const std::uint32_t nblocks = r.u32();
    for (std::uint32_t b = 0; b < nblocks; ++b) {
        const std::uint32_t name_len = r.u32();
        std::string name(name_len, '\0');
        r.raw(name.data(), name_len);
        const std::uint32_t count = r.u32();

        const std::size_t dot = name.find(".L");
        if (dot == std::string::npos) throw_format("malformed UCWT block name: " + name);
        const std::string prefix = name.substr(0, dot);
        const std::size_t layer_idx = std::size_t(std::stoi(name.substr(dot + 2)));
        nn::Network* target = nullptr;
        if (prefix == "trunk") target = &model.trunk;
        else if (prefix == "head") target = &model.head;
        else throw_format("unknown UCWT block prefix: " + prefix);
        if (layer_idx >= target->num_layers()) throw_format("UCWT block index out of range: " + name);
        auto& p = target->layer(layer_idx).params();
        if (p.size() != count) throw_format("UCWT block size mismatch: " + name);
        r.f32_array(p.data(), count);
    }
    return model;
}

Encoder load_pretrained_encoder(const std::string& descriptor, bool normalize) {
    if (!fs::exists(descriptor)) {
        throw_config("unknown encoder descriptor (no such weights artifact): " + descriptor);
    }
    const ClassifierModel model = load_model(descriptor);
    return make_encoder(model, normalize);
}

} // namespace uclearn
