#pragma once

#include <optional>
#include <string>

#include "core/baselines.hpp"
#include "core/evaluate.hpp"
#include "core/ucgen.hpp"

namespace uclearn {

enum class Method { uc, eminn, emaxn, synper };

const char* method_name(Method m);
Method method_from_name(const std::string& name);

struct ProtectConfig {
    Method method = Method::uc;
    int clusters = 10; // p, UC only
    bool normalize_embeddings = false;
    GeneratorConfig uc;
    EminnConfig eminn;
    EmaxnConfig emaxn;
    SynperConfig synper;
};

struct ProtectOutput {
    PerturbationSet perturbations;
    std::optional<ClusterModel> clusters; // cluster_wise only
    LabeledImageDataset protected_ds;
};

// Runs the chosen noise method under the label-agnostic protocol: EMinN,
// EMaxN and SynPer consume surrogate-predicted labels; UC consumes no labels
// at all. Ground-truth labels are never read.
ProtectOutput protect_dataset(const LabeledImageDataset& ds, const ClassifierModel& surrogate,
                              const ProtectConfig& cfg);

// Perturbs a held-out set: cluster_wise via nearest center, class_wise via
// the surrogate's predicted labels. sample_wise noise cannot extend to
// unseen ids, so nullopt is returned.
std::optional<LabeledImageDataset> make_perturbed_test(const LabeledImageDataset& test_ds,
                                                       const PerturbationSet& ps,
                                                       const std::optional<ClusterModel>& clusters,
                                                       const ClassifierModel& surrogate,
                                                       bool normalize_embeddings, int batch);

struct SweepRow {
    int p = 0;
    double clean_test_acc = 0.0;
    std::optional<double> perturbed_test_acc;
};

// Full UC generation + target evaluation per p.
std::vector<SweepRow> run_cluster_sweep(const LabeledImageDataset& clean_train,
                                        const LabeledImageDataset& clean_test,
                                        const ClassifierModel& surrogate,
                                        const std::vector<int>& p_values,
                                        const GeneratorConfig& gen_cfg, bool normalize_embeddings,
                                        const TrainerConfig& trainer);

} // namespace uclearn
