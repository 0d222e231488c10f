#include "core/ucgen.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>

#include "core/batching.hpp"
#include "core/train_util.hpp"
#include "core/errors.hpp"
#include "core/io_util.hpp"
#include "core/parallel.hpp"
#include "core/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace uclearn {

namespace {

constexpr char kMagic[4] = {'U', 'C', 'P', 'X'};
constexpr std::uint16_t kVersion = 1;

const char* mode_tag(PerturbationSet::Mode m) {
    switch (m) {
    case PerturbationSet::Mode::cluster_wise: return "CLUS";
    case PerturbationSet::Mode::sample_wise: return "SAMP";
    case PerturbationSet::Mode::class_wise: return "CLSW";
    }
    return "CLUS";
}

PerturbationSet::Mode mode_from_tag(const char* tag) {
    if (std::memcmp(tag, "CLUS", 4) == 0) return PerturbationSet::Mode::cluster_wise;
    if (std::memcmp(tag, "SAMP", 4) == 0) return PerturbationSet::Mode::sample_wise;
    if (std::memcmp(tag, "CLSW", 4) == 0) return PerturbationSet::Mode::class_wise;
    throw_format("unknown perturbation mode tag");
}

// d(e, c) and dL/de for one embedding row.
double metric_value_grad(const float* e, const float* c, int d, DistanceMetric metric,
                         float* grad /*nullable*/) {
    if (metric == DistanceMetric::squared_euclidean) {
        double v = 0.0;
        for (int j = 0; j < d; ++j) {
            const double diff = double(e[j]) - c[j];
            v += diff * diff;
            if (grad) grad[j] = float(2.0 * diff);
        }
        return v;
    }
    double ee = 0.0, cc = 0.0, ec = 0.0;
    for (int j = 0; j < d; ++j) {
        ee += double(e[j]) * e[j];
        cc += double(c[j]) * c[j];
        ec += double(e[j]) * c[j];
    }
    if (ee <= 0.0 || cc <= 0.0) throw_numeric("cosine distance undefined for zero-norm vector");
    const double ne = std::sqrt(ee);
    const double nc = std::sqrt(cc);
    const double cosv = ec / (ne * nc);
    if (grad) {
        // d(1 - cos)/de = -c/(|e||c|) + (e.c) e/(|e|^3 |c|)
        const double s = ec / (ee * ne * nc);
        for (int j = 0; j < d; ++j) {
            grad[j] = float(-double(c[j]) / (ne * nc) + double(e[j]) * s);
        }
    }
    return 1.0 - cosv;
}

std::string generator_spec(int sigma_channels, int w1, int w2, float eps) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "conv:%d,%d,3,2,1|relu|conv:%d,%d,3,2,1|relu|conv:%d,%d,3,1,1|relu|up:4|"
                  "conv:%d,3,3,1,1|tanh|scale:%.9g",
                  sigma_channels, w1, w1, w2, w2, w1, w1, double(eps));
    return buf;
}

void check_generator_config(const GeneratorConfig& cfg) {
    if (!(cfg.eps > 0.0f && cfg.eps < 1.0f)) throw_param("generator config: eps must be in (0, 1)");
    if (cfg.epochs < 1) throw_param("generator config: epochs must be >= 1");
    if (cfg.batch < 1) throw_param("generator config: batch must be >= 1");
}

json config_to_json(const GeneratorConfig& cfg) {
    return json{{"eps", cfg.eps},
                {"epochs", cfg.epochs},
                {"batch", cfg.batch},
                {"lr", cfg.lr},
                {"metric", metric_name(cfg.metric)},
                {"seed", cfg.seed},
                {"sigma_channels", cfg.sigma_channels},
                {"gen_width1", cfg.gen_width1},
                {"gen_width2", cfg.gen_width2}};
}

} // namespace

const char* metric_name(DistanceMetric m) {
    return m == DistanceMetric::squared_euclidean ? "squared_euclidean" : "cosine_distance";
}

DistanceMetric metric_from_name(const std::string& name) {
    if (name == "squared_euclidean") return DistanceMetric::squared_euclidean;
    if (name == "cosine_distance") return DistanceMetric::cosine_distance;
    throw_param("unknown distance metric: " + name);
}

NoiseGenerator make_noise_generator(int height, int width, const GeneratorConfig& cfg,
                                    std::uint64_t cluster_seed) {
    if (height % 4 != 0 || width % 4 != 0) {
        throw_param("noise generator requires sides divisible by 4");
    }
    NoiseGenerator gen;
    gen.net = nn::Network::from_spec(
        generator_spec(cfg.sigma_channels, cfg.gen_width1, cfg.gen_width2, cfg.eps),
        derive_seed(cluster_seed, 11));
    gen.sigma = nn::Tensor(1, cfg.sigma_channels, height, width);
    Rng rng(derive_seed(cluster_seed, 12));
    for (float& v : gen.sigma.data) v = rng.uniform_f();
    return gen;
}

double ddu_loss(const EmbeddingMatrix& embeddings, const Eigen::VectorXf& target_center,
                DistanceMetric metric) {
    if (embeddings.dim() != int(target_center.size())) throw_param("ddu_loss: dimension mismatch");
    double total = 0.0;
    for (int i = 0; i < embeddings.count(); ++i) {
        total += metric_value_grad(embeddings.rows.row(i).data(), target_center.data(),
                                   embeddings.dim(), metric, nullptr);
    }
    return total;
}

Image generate_delta(const NoiseGenerator& gen, float eps) {
    nn::ForwardPass fp;
    const nn::Tensor& out = gen.net.forward(gen.sigma, fp);
    nn::Tensor clamped = out;
    for (float& v : clamped.data) {
        if (!std::isfinite(v)) throw_numeric("generator produced non-finite output");
        v = clampf(v, -eps, eps);
    }
    return tensor_sample_to_image(clamped, 0);
}

ClusterOptimizationResult optimize_cluster_perturbation(const nn::Tensor& cluster_images,
                                                        const Eigen::VectorXf& target_center,
                                                        const Encoder& encoder,
                                                        const GeneratorConfig& cfg,
                                                        std::uint64_t cluster_seed) {
    if (cluster_images.n < 1) throw_param("optimize_cluster_perturbation: empty cluster");
    if (!encoder.differentiable) throw_param("optimize_cluster_perturbation: encoder not differentiable");
    if (cfg.epochs < 1) throw_param("optimize_cluster_perturbation: epochs must be >= 1");
    const float eps = cfg.eps;
    if (!(eps >= 0.0f && eps < 1.0f)) throw_param("optimize_cluster_perturbation: eps out of range");

    const int n = cluster_images.n;
    const int d = int(target_center.size());
    const std::size_t pix = cluster_images.sample_size();

    NoiseGenerator gen = make_noise_generator(cluster_images.h, cluster_images.w, cfg, cluster_seed);
    nn::Adam opt(cfg.lr);
    Rng shuffle_rng(derive_seed(cluster_seed, 13));

    // Mean DDU loss over the whole cluster for the current generator state;
    // used for the pre-optimization trace entry.
    auto eval_mean_loss = [&]() {
        nn::ForwardPass gfp;
        const nn::Tensor& draw = gen.net.forward(gen.sigma, gfp);
        double total = 0.0;
        const int chunks = (n + kBatchChunk - 1) / kBatchChunk;
        std::vector<double> sums(chunks, 0.0);
        parallel_for(chunks, [&](int ci) {
            const int start = ci * kBatchChunk;
            const int count = std::min(kBatchChunk, n - start);
            nn::Tensor xp(count, cluster_images.c, cluster_images.h, cluster_images.w);
            for (int i = 0; i < count; ++i) {
                const float* x = cluster_images.sample(start + i);
                float* o = xp.sample(i);
                for (std::size_t j = 0; j < pix; ++j) {
                    o[j] = clampf(x[j] + clampf(draw.data[j], -eps, eps), 0.0f, 1.0f);
                }
            }
            nn::ForwardPass efp;
            const nn::Tensor& emb = encoder.trunk.forward(xp, efp);
            double s = 0.0;
            for (int i = 0; i < count; ++i) {
                s += metric_value_grad(emb.sample(i), target_center.data(), d, cfg.metric, nullptr);
            }
            sums[ci] = s;
        });
        for (double s : sums) total += s;
        return total / n;
    };

    ClusterOptimizationResult result;
    result.loss_trace.push_back(eval_mean_loss());

    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        for (int start = 0; start < n; start += cfg.batch) {
            const int count = std::min(cfg.batch, n - start);

            nn::ForwardPass gen_fp;
            const nn::Tensor& draw = gen.net.forward(gen.sigma, gen_fp);

            // Per-sample surrogate pass; fixed chunks keep reduction order
            // independent of worker count.
            const int chunks = (count + kBatchChunk - 1) / kBatchChunk;
            std::vector<double> sums(chunks, 0.0);
            std::vector<std::vector<float>> ddelta_chunks(chunks);
            parallel_for(chunks, [&](int ci) {
                const int cstart = ci * kBatchChunk;
                const int ccount = std::min(kBatchChunk, count - cstart);
                nn::Tensor xp(ccount, cluster_images.c, cluster_images.h, cluster_images.w);
                std::vector<std::uint8_t> open(std::size_t(ccount) * pix);
                for (int i = 0; i < ccount; ++i) {
                    const float* x = cluster_images.sample(order[start + cstart + i]);
                    float* o = xp.sample(i);
                    std::uint8_t* msk = open.data() + std::size_t(i) * pix;
                    for (std::size_t j = 0; j < pix; ++j) {
                        const float dj = clampf(draw.data[j], -eps, eps);
                        const float v = x[j] + dj;
                        o[j] = clampf(v, 0.0f, 1.0f);
                        msk[j] = (v > 0.0f && v < 1.0f) ? 1 : 0;
                    }
                }
                nn::ForwardPass efp;
                const nn::Tensor& emb = encoder.trunk.forward(xp, efp);
                nn::Tensor demb(ccount, emb.c, emb.h, emb.w);
                double s = 0.0;
                for (int i = 0; i < ccount; ++i) {
                    s += metric_value_grad(emb.sample(i), target_center.data(), d, cfg.metric,
                                           demb.sample(i));
                }
                sums[ci] = s;
                nn::Tensor dxp;
                encoder.trunk.backward(efp, demb, &dxp, nullptr);
                // dL/ddelta restricted to pixels inside the (0,1) clamp.
                std::vector<float>& dd = ddelta_chunks[ci];
                dd.assign(pix, 0.0f);
                for (int i = 0; i < ccount; ++i) {
                    const float* g = dxp.sample(i);
                    const std::uint8_t* msk = open.data() + std::size_t(i) * pix;
                    for (std::size_t j = 0; j < pix; ++j) {
                        if (msk[j]) dd[j] += g[j];
                    }
                }
            });

            nn::Tensor ddelta(1, cluster_images.c, cluster_images.h, cluster_images.w);
            for (int ci = 0; ci < chunks; ++ci) {
                epoch_loss += sums[ci];
                for (std::size_t j = 0; j < pix; ++j) ddelta.data[j] += ddelta_chunks[ci][j];
            }
            // Inner clamp at +-eps: gradient passes only strictly inside.
            for (std::size_t j = 0; j < pix; ++j) {
                if (!(draw.data[j] > -eps && draw.data[j] < eps)) ddelta.data[j] = 0.0f;
            }

            nn::GradBuffer grads = gen.net.make_grad_buffer();
            gen.net.backward(gen_fp, ddelta, nullptr, &grads);
            opt.step(gen.net, grads);
        }
        const double mean = epoch_loss / n;
        if (!std::isfinite(mean)) throw_training("DDU loss became non-finite");
        result.loss_trace.push_back(mean);
    }

    result.delta = generate_delta(gen, eps);
    return result;
}

UCResult generate_unlearnable_clusters(const LabeledImageDataset& ds, const Encoder& encoder,
                                       int p, const GeneratorConfig& cfg) {
    if (p < 2) throw_param("generate_unlearnable_clusters: p must be >= 2");
    if (ds.samples.empty()) throw_param("generate_unlearnable_clusters: empty dataset");
    check_generator_config(cfg);

    const EmbeddingMatrix emb = extract_embeddings(encoder, ds, cfg.batch);
    ClusterModel clusters = kmeans(emb, p, cfg.seed);

    // Per-cluster sample tensors in dataset order.
    std::vector<std::vector<int>> members(p);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        members[clusters.assignment[i]].push_back(int(i));
    }

    UCResult result;
    result.perturbations.mode = PerturbationSet::Mode::cluster_wise;
    result.perturbations.eps = cfg.eps;
    result.perturbations.metric = cfg.metric;
    result.perturbations.deltas.resize(p);
    result.perturbations.loss_traces.resize(p);
    result.perturbations.config_echo = config_to_json(cfg);
    result.perturbations.config_echo["p"] = p;
    result.perturbations.config_echo["encoder"] = encoder.descriptor;

    std::vector<std::string> errors(p);
    // Clusters are independent problems; each derives its own seed, so the
    // outcome does not depend on scheduling.
    parallel_for(p, [&](int i) {
        try {
            nn::Tensor images = gather_batch(ds, members[i], nullptr);
            Eigen::VectorXf target = clusters.centers.row(clusters.target_of(i));
            ClusterOptimizationResult r = optimize_cluster_perturbation(
                images, target, encoder, cfg, cfg.seed ^ std::uint64_t(i));
            result.perturbations.deltas[i] = std::move(r.delta);
            result.perturbations.loss_traces[i] = std::move(r.loss_trace);
        } catch (const Error& e) {
            errors[i] = e.what();
        }
    });
    for (int i = 0; i < p; ++i) {
        if (!errors[i].empty()) {
            throw_training("cluster " + std::to_string(i) + ": " + errors[i]);
        }
    }

    for (std::size_t i = 0; i < ds.size(); ++i) {
        result.perturbations.assignment[ds.samples[i].id] = clusters.assignment[i];
    }
    result.clusters = std::move(clusters);
    return result;
}

AssignFn make_nearest_center_assigner(const Encoder& encoder, const ClusterModel& clusters, int batch) {
    // Copies share no mutable state; safe to call later and concurrently.
    auto enc = std::make_shared<Encoder>(encoder.copy());
    auto model = std::make_shared<ClusterModel>(clusters);
    return [enc, model, batch](const LabeledImageDataset& ds) {
        const EmbeddingMatrix emb = extract_embeddings(*enc, ds, batch);
        return assign_to_clusters(*model, emb);
    };
}

LabeledImageDataset apply_perturbations(const LabeledImageDataset& ds, const PerturbationSet& ps,
                                        const AssignFn& assign_unseen) {
    LabeledImageDataset out = ds;
    out.name = ds.name + "-protected";

    std::vector<int> delta_index(ds.size(), -1);
    LabeledImageDataset unseen;
    unseen.num_categories = ds.num_categories;
    std::vector<std::size_t> unseen_pos;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        auto it = ps.assignment.find(ds.samples[i].id);
        if (it != ps.assignment.end()) {
            delta_index[i] = it->second;
        } else {
            unseen.samples.push_back(ds.samples[i]);
            unseen_pos.push_back(i);
        }
    }
    if (!unseen.samples.empty()) {
        if (!assign_unseen) {
            throw_param("apply_perturbations: sample '" + unseen.samples.front().id +
                        "' has no stored cluster and no assigner was provided");
        }
        const std::vector<int> assigned = assign_unseen(unseen);
        for (std::size_t j = 0; j < unseen_pos.size(); ++j) {
            delta_index[unseen_pos[j]] = assigned[j];
        }
    }

    for (std::size_t i = 0; i < ds.size(); ++i) {
        const int di = delta_index[i];
        if (di < 0 || di >= int(ps.deltas.size())) {
            throw_param("apply_perturbations: bad delta index for sample '" + ds.samples[i].id + "'");
        }
        const Image& delta = ps.deltas[di];
        Image& px = out.samples[i].pixels;
        if (!px.same_shape(delta)) throw_param("apply_perturbations: delta shape mismatch");
        for (std::size_t j = 0; j < px.data.size(); ++j) {
            px.data[j] = clampf(px.data[j] + delta.data[j], 0.0f, 1.0f);
        }
    }
    return out;
}

void save_perturbation_set(const PerturbationSet& ps, const fs::path& path) {
    if (ps.deltas.empty()) throw_param("save_perturbation_set: no deltas");
    const Image& first = ps.deltas.front();

    ByteWriter w;
    w.raw(kMagic, 4);
    w.u16(kVersion);
    w.raw(mode_tag(ps.mode), 4);
    w.u32(std::uint32_t(ps.deltas.size()));
    w.u32(std::uint32_t(first.height));
    w.u32(std::uint32_t(first.width));
    w.u32(std::uint32_t(first.channels));
    w.f32(ps.eps);
    for (const auto& delta : ps.deltas) {
        if (!delta.same_shape(first)) throw_param("save_perturbation_set: ragged delta shapes");
        w.f32_array(delta.data.data(), delta.data.size());
    }

    json trailer;
    trailer["assignment"] = ps.assignment;
    trailer["metric"] = metric_name(ps.metric);
    trailer["config"] = ps.config_echo;
    trailer["loss_traces"] = ps.loss_traces;
    const std::string trailer_text = trailer.dump();
    w.raw(trailer_text.data(), trailer_text.size());

    atomic_write_file(path, w.bytes().data(), w.bytes().size());
}

PerturbationSet load_perturbation_set(const fs::path& path) {
    const auto bytes = read_binary_file(path);
    ByteReader r(bytes);
    char magic[4];
    r.raw(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) throw_format("not a UCPX perturbation file: " + path.string());
    const std::uint16_t version = r.u16();
    if (version != kVersion) throw_format("unsupported UCPX version " + std::to_string(version));

    PerturbationSet ps;
    char tag[4];
    r.raw(tag, 4);
    ps.mode = mode_from_tag(tag);
    const std::uint32_t p = r.u32();
    const int h = int(r.u32());
    const int ww = int(r.u32());
    const int c = int(r.u32());
    ps.eps = r.f32();
    ps.deltas.resize(p);
    for (auto& delta : ps.deltas) {
        delta = Image(h, ww, c);
        r.f32_array(delta.data.data(), delta.data.size());
    }

    std::string trailer_text(r.remaining(), '\0');
    r.raw(trailer_text.data(), trailer_text.size());
    try {
        const json trailer = json::parse(trailer_text);
        ps.assignment = trailer.at("assignment").get<std::map<std::string, int>>();
        ps.metric = metric_from_name(trailer.at("metric").get<std::string>());
        ps.config_echo = trailer.at("config");
        ps.loss_traces = trailer.at("loss_traces").get<std::vector<std::vector<double>>>();
    } catch (const json::exception& e) {
        throw_format("invalid UCPX trailer in " + path.string() + ": " + e.what());
    }
    return ps;
}

} // namespace uclearn
