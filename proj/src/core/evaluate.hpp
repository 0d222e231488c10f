#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "core/dataset.hpp"
#include "core/encoder.hpp"

namespace uclearn {

enum class Defense { none, mixup, cutmix, cutout, gaussian_smooth };
enum class Augment { resize, random_crop, random_horizontal_flip, normalize };

const char* defense_name(Defense d);
Defense defense_from_name(const std::string& name);

struct TrainerConfig {
    int epochs = 12;
    int batch = 64;
    float lr = 2e-3f;
    std::uint64_t seed = 0;
    std::set<Augment> augmentation = {Augment::random_crop, Augment::random_horizontal_flip};
    Defense defense = Defense::none;
    float mixup_alpha = 1.0f;
    float cutmix_alpha = 1.0f;
    int cutout_side = 0; // 0 = side/4
    int gauss_kernel = 3;
    float gauss_sigma = 0.5f;
    int crop_pad = 4;
    // Target net family; deliberately a different width/seed than the
    // surrogate (black-box threat model).
    int width1 = 10;
    int width2 = 20;
    int embed_dim = 64;

    nlohmann::json to_json() const;
};

struct EvalReport {
    double clean_test_acc = 0.0;
    std::optional<double> perturbed_test_acc;
    std::vector<double> train_acc_curve;
    std::vector<double> clean_test_curve;
    std::vector<double> perturbed_test_curve;
    nlohmann::json config_echo;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
    // CSV: epoch, train_acc, clean_test_acc, perturbed_test_acc
    std::string curves_csv() const;
};

struct TargetTrainResult {
    EvalReport report;
    ClassifierModel model;
};

// Trains a fresh target classifier with the configured augmentations and
// defense; records per-epoch curves. perturbed_test, when given, is the test
// set with noise already applied (nearest-center assignment upstream).
TargetTrainResult train_target(const LabeledImageDataset& train_ds, const LabeledImageDataset& test_ds,
                               const TrainerConfig& cfg,
                               const LabeledImageDataset* perturbed_test = nullptr);

double evaluate_accuracy(const ClassifierModel& model, const LabeledImageDataset& ds);
// Accuracy per category plus overall; categories absent from ds get -1.
std::vector<double> per_category_accuracy(const ClassifierModel& model, const LabeledImageDataset& ds);

struct RelabelRow {
    int n = 0;
    double accuracy = 0.0;
    double chance = 0.0;
};

// For each n: balanced grouping, relabel train+test, train, report accuracy
// against chance = 1/n.
std::vector<RelabelRow> run_relabel_experiment(const LabeledImageDataset& protected_train,
                                               const LabeledImageDataset& clean_test,
                                               const std::vector<int>& n_values,
                                               std::uint64_t grouping_seed,
                                               const TrainerConfig& trainer);

struct MixtureRow {
    int clean_count = 0;
    double overall_acc = 0.0;
    std::vector<double> per_category;
    double clean_categories_acc = 0.0;     // mean over the clean categories
    double protected_categories_acc = 0.0; // mean over the protected categories
    double clean_only_control_acc = 0.0;   // trained on clean categories only
};

// Categories [0, c) come from `clean`, the rest stay protected; the control
// trains on just the clean categories' clean samples.
std::vector<MixtureRow> run_mixture_experiment(const LabeledImageDataset& clean_train,
                                               const LabeledImageDataset& protected_train,
                                               const LabeledImageDataset& clean_test,
                                               const std::vector<int>& clean_category_counts,
                                               const TrainerConfig& trainer);

} // namespace uclearn
