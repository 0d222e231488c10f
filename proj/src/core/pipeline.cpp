#include "core/pipeline.hpp"

#include "core/errors.hpp"

namespace uclearn {

const char* method_name(Method m) {
    switch (m) {
    case Method::uc: return "uc";
    case Method::eminn: return "eminn";
    case Method::emaxn: return "emaxn";
    case Method::synper: return "synper";
    }
    return "uc";
}

Method method_from_name(const std::string& name) {
    if (name == "uc") return Method::uc;
    if (name == "eminn") return Method::eminn;
    if (name == "emaxn") return Method::emaxn;
    if (name == "synper") return Method::synper;
    throw_config("unknown protection method: " + name);
}

ProtectOutput protect_dataset(const LabeledImageDataset& ds, const ClassifierModel& surrogate,
                              const ProtectConfig& cfg) {
    if (ds.samples.empty()) throw_param("protect_dataset: empty dataset");
    ProtectOutput out;

    switch (cfg.method) {
    case Method::uc: {
        const Encoder encoder = make_encoder(surrogate, cfg.normalize_embeddings);
        UCResult uc = generate_unlearnable_clusters(ds, encoder, cfg.clusters, cfg.uc);
        out.perturbations = std::move(uc.perturbations);
        out.clusters = std::move(uc.clusters);
        break;
    }
    case Method::eminn: {
        const std::vector<int> predicted = predict_labels(surrogate, ds);
        EminnResult r = eminn_generate(ds, surrogate, predicted, cfg.eminn);
        out.perturbations = std::move(r.noise);
        break;
    }
    case Method::emaxn: {
        const std::vector<int> predicted = predict_labels(surrogate, ds);
        out.perturbations = emaxn_generate(ds, surrogate, predicted, cfg.emaxn);
        break;
    }
    case Method::synper: {
        const std::vector<int> predicted = predict_labels(surrogate, ds);
        const Image& shape = ds.samples.front().pixels;
        out.perturbations = synper_generate(surrogate.num_classes, shape.height, shape.width,
                                            shape.channels, cfg.synper);
        for (std::size_t i = 0; i < ds.size(); ++i) {
            out.perturbations.assignment[ds.samples[i].id] = predicted[i];
        }
        break;
    }
    }

    out.protected_ds = apply_perturbations(ds, out.perturbations);
    return out;
}

std::optional<LabeledImageDataset> make_perturbed_test(const LabeledImageDataset& test_ds,
                                                       const PerturbationSet& ps,
                                                       const std::optional<ClusterModel>& clusters,
                                                       const ClassifierModel& surrogate,
                                                       bool normalize_embeddings, int batch) {
    switch (ps.mode) {
    case PerturbationSet::Mode::cluster_wise: {
        if (!clusters) throw_param("perturbed test: cluster model required for cluster-wise noise");
        const Encoder encoder = make_encoder(surrogate, normalize_embeddings);
        const AssignFn assigner = make_nearest_center_assigner(encoder, *clusters, batch);
        return apply_perturbations(test_ds, ps, assigner);
    }
    case PerturbationSet::Mode::class_wise: {
        // Predicted labels only; ground truth stays out of the noise path.
        auto model = std::make_shared<ClassifierModel>(surrogate.copy());
        const AssignFn assigner = [model](const LabeledImageDataset& ds) {
            return predict_labels(*model, ds);
        };
        return apply_perturbations(test_ds, ps, assigner);
    }
    case PerturbationSet::Mode::sample_wise:
        return std::nullopt;
    }
    return std::nullopt;
}

std::vector<SweepRow> run_cluster_sweep(const LabeledImageDataset& clean_train,
                                        const LabeledImageDataset& clean_test,
                                        const ClassifierModel& surrogate,
                                        const std::vector<int>& p_values,
                                        const GeneratorConfig& gen_cfg, bool normalize_embeddings,
                                        const TrainerConfig& trainer) {
    std::vector<SweepRow> rows;
    for (int p : p_values) {
        ProtectConfig cfg;
        cfg.method = Method::uc;
        cfg.clusters = p;
        cfg.normalize_embeddings = normalize_embeddings;
        cfg.uc = gen_cfg;
        const ProtectOutput prot = protect_dataset(clean_train, surrogate, cfg);
        const auto perturbed_test = make_perturbed_test(clean_test, prot.perturbations,
                                                        prot.clusters, surrogate,
                                                        normalize_embeddings, gen_cfg.batch);
        const TargetTrainResult r = train_target(prot.protected_ds, clean_test, trainer,
                                                 perturbed_test ? &*perturbed_test : nullptr);
        SweepRow row;
        row.p = p;
        row.clean_test_acc = r.report.clean_test_acc;
        row.perturbed_test_acc = r.report.perturbed_test_acc;
        rows.push_back(row);
    }
    return rows;
}

} // namespace uclearn
