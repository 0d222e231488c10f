#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <string>
#include <vector>

#include "core/dataset.hpp"
#include "nn/network.hpp"

namespace uclearn {

// Per-sample feature rows aligned one-to-one with the source dataset order.
struct EmbeddingMatrix {
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows;
    std::vector<std::string> ids;

    int count() const { return int(rows.rows()); }
    int dim() const { return int(rows.cols()); }
};

// Convolutional classifier: trunk maps images to embeddings, head maps
// embeddings to logits. The trunk alone acts as the feature extractor.
struct ClassifierModel {
    nn::Network trunk;
    nn::Network head;
    int embed_dim = 0;
    int num_classes = 0;

    ClassifierModel copy() const;
};

// Frozen feature extractor f_s. differentiable is always true for the conv
// trunks built here; pixel gradients flow through Network::backward.
struct Encoder {
    nn::Network trunk;
    int embed_dim = 0;
    bool differentiable = true;
    std::string descriptor;

    Encoder copy() const;
};

struct SurrogateConfig {
    int width1 = 12;
    int width2 = 24;
    int embed_dim = 128;
    int epochs = 10;
    int batch = 64;
    float lr = 2e-3f;
    std::uint64_t seed = 0;
};

// Builds the trunk/head layer spec for a classifier of the family used by
// both the surrogate and the target models.
ClassifierModel make_classifier(int num_classes, int width1, int width2, int embed_dim,
                                std::uint64_t init_seed);

// Trains the toy surrogate on clean data (no augmentation). Deterministic
// under (ds, config). Throws on divergence.
ClassifierModel train_toy_surrogate(const LabeledImageDataset& ds, const SurrogateConfig& cfg);

std::vector<int> predict_labels(const ClassifierModel& model, const LabeledImageDataset& ds);

// With normalize, appends a row L2-normalization to the extractor output
// (image-text-encoder style); default leaves penultimate features raw.
Encoder make_encoder(const ClassifierModel& model, bool normalize);

EmbeddingMatrix extract_embeddings(const Encoder& enc, const LabeledImageDataset& ds, int batch);

// Weights artifact ("UCWT"): header + named parameter blocks; loads back to
// an identical model.
void save_model(const ClassifierModel& model, const std::filesystem::path& path);
ClassifierModel load_model(const std::filesystem::path& path);

// descriptor resolves to a weights artifact path.
Encoder load_pretrained_encoder(const std::string& descriptor, bool normalize = false);

} // namespace uclearn
