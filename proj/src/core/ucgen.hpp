#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "core/clustering.hpp"
#include "core/dataset.hpp"
#include "core/encoder.hpp"

namespace uclearn {

enum class DistanceMetric {
    squared_euclidean,
    cosine_distance,
};

const char* metric_name(DistanceMetric m);
DistanceMetric metric_from_name(const std::string& name);

struct GeneratorConfig {
    float eps = 16.0f / 255.0f;
    int epochs = 50;
    int batch = 64;
    float lr = 1e-3f;
    DistanceMetric metric = DistanceMetric::squared_euclidean;
    std::uint64_t seed = 0;
    int sigma_channels = 8; // channels of the fixed noise input sigma
    int gen_width1 = 12;
    int gen_width2 = 24;
};

// Cluster-wise (or, for the baselines, sample-/class-wise) noise tensors
// under a shared L-infinity budget, with the sample -> delta index map.
struct PerturbationSet {
    enum class Mode { cluster_wise, sample_wise, class_wise };

    Mode mode = Mode::cluster_wise;
    std::vector<Image> deltas; // entries in [-eps, eps]
    float eps = 0.0f;
    std::map<std::string, int> assignment; // sample id -> delta index
    DistanceMetric metric = DistanceMetric::squared_euclidean;
    nlohmann::json config_echo;
    std::vector<std::vector<double>> loss_traces; // per delta, trace[0] = pre-opt loss
};

// Encoder-decoder network with its fixed noise input; one per cluster.
struct NoiseGenerator {
    nn::Network net;
    nn::Tensor sigma; // (1, sigma_channels, H, W), fixed for the whole run
};

NoiseGenerator make_noise_generator(int height, int width, const GeneratorConfig& cfg,
                                    std::uint64_t cluster_seed);

// Sum over rows of d(row, target): squared Euclidean or 1 - cosine.
double ddu_loss(const EmbeddingMatrix& embeddings, const Eigen::VectorXf& target_center,
                DistanceMetric metric);

// delta = Clamp(G(sigma; theta), -eps, +eps) as an HWC image-range tensor.
Image generate_delta(const NoiseGenerator& gen, float eps);

struct ClusterOptimizationResult {
    Image delta;
    std::vector<double> loss_trace; // length epochs+1; [0] is the pre-optimization mean loss
};

// Minimizes sum_j d(f_s(clamp(x_j + G(sigma), 0, 1)), target) over generator
// parameters with seeded mini-batches; the encoder stays frozen.
ClusterOptimizationResult optimize_cluster_perturbation(const nn::Tensor& cluster_images,
                                                        const Eigen::VectorXf& target_center,
                                                        const Encoder& encoder,
                                                        const GeneratorConfig& cfg,
                                                        std::uint64_t cluster_seed);

struct UCResult {
    PerturbationSet perturbations;
    ClusterModel clusters;
};

// The full pipeline: embeddings, K-means, closed-loop targets, one freshly
// initialized generator per cluster (seed ^ cluster index), clamp, store.
UCResult generate_unlearnable_clusters(const LabeledImageDataset& ds, const Encoder& encoder,
                                       int p, const GeneratorConfig& cfg);

// Maps unseen sample ids to delta indices (nearest center / predicted class).
using AssignFn = std::function<std::vector<int>(const LabeledImageDataset&)>;

AssignFn make_nearest_center_assigner(const Encoder& encoder, const ClusterModel& clusters, int batch);

// x' = clamp(x + delta, 0, 1); labels and ids unchanged. Unseen ids require
// assign_unseen (parameter error otherwise).
LabeledImageDataset apply_perturbations(const LabeledImageDataset& ds, const PerturbationSet& ps,
                                        const AssignFn& assign_unseen = nullptr);

// "UCPX" container: header, f32 delta blocks, JSON trailer.
void save_perturbation_set(const PerturbationSet& ps, const std::filesystem::path& path);
PerturbationSet load_perturbation_set(const std::filesystem::path& path);

} // namespace uclearn
