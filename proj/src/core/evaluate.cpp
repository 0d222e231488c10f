#include "core/evaluate.hpp"

#include <cmath>
#include <cstdio>

#include "core/augment.hpp"
#include "core/batching.hpp"
#include "core/errors.hpp"
#include "core/rng.hpp"
#include "core/train_util.hpp"

using json = nlohmann::json;

namespace uclearn {

namespace {

const char* augment_name(Augment a) {
    switch (a) {
    case Augment::resize: return "resize";
    case Augment::random_crop: return "random_crop";
    case Augment::random_horizontal_flip: return "random_horizontal_flip";
    case Augment::normalize: return "normalize";
    }
    return "?";
}

void validate_config(const TrainerConfig& cfg, int side) {
    if (cfg.epochs < 1 || cfg.batch < 1) throw_param("trainer config: invalid epochs/batch");
    if (cfg.defense == Defense::mixup && !(cfg.mixup_alpha > 0.0f)) {
        throw_param("trainer config: mixup alpha must be > 0");
    }
    if (cfg.defense == Defense::cutmix && !(cfg.cutmix_alpha > 0.0f)) {
        throw_param("trainer config: cutmix alpha must be > 0");
    }
    if (cfg.defense == Defense::cutout) {
        const int mask = cfg.cutout_side > 0 ? cfg.cutout_side : side / 4;
        if (mask < 1 || mask > side) throw_param("trainer config: cutout mask does not fit");
    }
    if (cfg.defense == Defense::gaussian_smooth) {
        if (cfg.gauss_kernel < 1 || cfg.gauss_kernel % 2 == 0) {
            throw_param("trainer config: gaussian kernel must be odd");
        }
        if (cfg.gauss_sigma < 0.0f) throw_param("trainer config: gaussian sigma must be >= 0");
    }
}

} // namespace

const char* defense_name(Defense d) {
    switch (d) {
    case Defense::none: return "none";
    case Defense::mixup: return "mixup";
    case Defense::cutmix: return "cutmix";
    case Defense::cutout: return "cutout";
    case Defense::gaussian_smooth: return "gaussian_smooth";
    }
    return "none";
}

Defense defense_from_name(const std::string& name) {
    if (name == "none") return Defense::none;
    if (name == "mixup") return Defense::mixup;
    if (name == "cutmix") return Defense::cutmix;
    if (name == "cutout") return Defense::cutout;
    if (name == "gaussian_smooth" || name == "gaussian") return Defense::gaussian_smooth;
    throw_param("unknown defense: " + name);
}

json TrainerConfig::to_json() const {
    json aug = json::array();
    for (Augment a : augmentation) aug.push_back(augment_name(a));
    json j{{"epochs", epochs},
           {"batch", batch},
           {"lr", lr},
           {"seed", seed},
           {"augmentation", aug},
           {"defense", defense_name(defense)},
           {"width1", width1},
           {"width2", width2},
           {"embed_dim", embed_dim},
           {"crop_pad", crop_pad}};
    if (defense == Defense::mixup) j["mixup_alpha"] = mixup_alpha;
    if (defense == Defense::cutmix) j["cutmix_alpha"] = cutmix_alpha;
    if (defense == Defense::cutout) j["cutout_side"] = cutout_side;
    if (defense == Defense::gaussian_smooth) {
        j["gauss_kernel"] = gauss_kernel;
        j["gauss_sigma"] = gauss_sigma;
    }
    return j;
}

json EvalReport::to_json() const {
    json j{{"clean_test_acc", clean_test_acc},
           {"train_acc_curve", train_acc_curve},
           {"clean_test_curve", clean_test_curve},
           {"config", config_echo},
           {"seed", seed}};
    if (perturbed_test_acc) {
        j["perturbed_test_acc"] = *perturbed_test_acc;
        j["perturbed_test_curve"] = perturbed_test_curve;
    }
    return j;
}

std::string EvalReport::curves_csv() const {
    std::string out = "epoch,train_acc,clean_test_acc,perturbed_test_acc\n";
    char line[128];
    for (std::size_t e = 0; e < clean_test_curve.size(); ++e) {
        if (e < perturbed_test_curve.size()) {
            std::snprintf(line, sizeof(line), "%zu,%.6f,%.6f,%.6f\n", e + 1, train_acc_curve[e],
                          clean_test_curve[e], perturbed_test_curve[e]);
        } else {
            std::snprintf(line, sizeof(line), "%zu,%.6f,%.6f,\n", e + 1, train_acc_curve[e],
                          clean_test_curve[e]);
        }
        out += line;
    }
    return out;
}

double evaluate_accuracy(const ClassifierModel& model, const LabeledImageDataset& ds) {
    if (ds.samples.empty()) return 0.0;
    const std::vector<int> preds = predict_labels(model, ds);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (preds[i] == ds.samples[i].label) ++correct;
    }
    return double(correct) / double(ds.size());
}

std::vector<double> per_category_accuracy(const ClassifierModel& model, const LabeledImageDataset& ds) {
    const std::vector<int> preds = predict_labels(model, ds);
    std::vector<int> total(ds.num_categories, 0), correct(ds.num_categories, 0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        total[ds.samples[i].label]++;
        if (preds[i] == ds.samples[i].label) correct[ds.samples[i].label]++;
    }
    std::vector<double> acc(ds.num_categories, -1.0);
    for (int c = 0; c < ds.num_categories; ++c) {
        if (total[c] > 0) acc[c] = double(correct[c]) / total[c];
    }
    return acc;
}

TargetTrainResult train_target(const LabeledImageDataset& train_ds, const LabeledImageDataset& test_ds,
                               const TrainerConfig& cfg, const LabeledImageDataset* perturbed_test) {
    if (train_ds.samples.empty()) throw_param("train_target: empty training set");
    if (train_ds.num_categories != test_ds.num_categories) {
        throw_param("train_target: train/test label spaces disagree");
    }
    const int side = train_ds.samples.front().pixels.height;
    validate_config(cfg, side);

    ClassifierModel model = make_classifier(train_ds.num_categories, cfg.width1, cfg.width2,
                                            cfg.embed_dim, derive_seed(cfg.seed, 21));
    nn::Adam opt(cfg.lr);
    Rng shuffle_rng(derive_seed(cfg.seed, 22));
    Rng aug_rng(derive_seed(cfg.seed, 23));

    const int classes = train_ds.num_categories;
    const int cutout_side = cfg.cutout_side > 0 ? cfg.cutout_side : side / 4;

    EvalReport report;
    report.seed = cfg.seed;
    report.config_echo = cfg.to_json();

    std::vector<int> order = iota_indices(train_ds.size());
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        std::size_t seen = 0, correct = 0;
        for (std::size_t start = 0; start < order.size(); start += std::size_t(cfg.batch)) {
            const std::size_t end = std::min(order.size(), start + std::size_t(cfg.batch));
            std::vector<int> idx(order.begin() + start, order.begin() + end);
            std::vector<int> hard_labels;
            nn::Tensor batch = gather_batch(train_ds, idx, &hard_labels);

            if (cfg.augmentation.count(Augment::resize)) {
                batch = resize_nearest(batch, side, side);
            }
            if (cfg.augmentation.count(Augment::random_crop)) {
                random_crop(batch, cfg.crop_pad, aug_rng);
            }
            if (cfg.augmentation.count(Augment::random_horizontal_flip)) {
                random_horizontal_flip(batch, aug_rng);
            }

            std::vector<float> soft = one_hot(hard_labels, classes);
            bool labels_mixed = false;
            switch (cfg.defense) {
            case Defense::none: break;
            case Defense::mixup:
                mixup(batch, soft, classes, cfg.mixup_alpha, aug_rng);
                labels_mixed = true;
                break;
            case Defense::cutmix:
                cutmix(batch, soft, classes, cfg.cutmix_alpha, aug_rng);
                labels_mixed = true;
                break;
            case Defense::cutout:
                cutout(batch, cutout_side, aug_rng);
                break;
            case Defense::gaussian_smooth:
                gaussian_smooth(batch, cfg.gauss_kernel, cfg.gauss_sigma);
                break;
            }
            if (cfg.augmentation.count(Augment::normalize)) normalize_batch(batch);

            nn::GradBuffer tg = model.trunk.make_grad_buffer();
            nn::GradBuffer hg = model.head.make_grad_buffer();
            double loss;
            if (labels_mixed) {
                loss = classifier_forward_backward(model.trunk, model.head, batch, {}, soft, tg, hg);
            } else {
                loss = classifier_forward_backward(model.trunk, model.head, batch, hard_labels, {},
                                                   tg, hg);
            }
            if (!std::isfinite(loss)) throw_training("target training diverged");
            opt.step(model.trunk, tg);
            opt.step(model.head, hg);

            // Train accuracy from the transformed batch against the dominant
            // target label; cheap and monotone with fit quality.
            const std::vector<int> preds = classifier_predict(model.trunk, model.head, batch);
            for (std::size_t i = 0; i < idx.size(); ++i) {
                int want = hard_labels.empty() ? 0 : hard_labels[i];
                if (labels_mixed) {
                    const float* row = soft.data() + i * std::size_t(classes);
                    want = 0;
                    for (int k = 1; k < classes; ++k) {
                        if (row[k] > row[want]) want = k;
                    }
                }
                if (preds[i] == want) ++correct;
                ++seen;
            }
        }

        report.train_acc_curve.push_back(seen ? double(correct) / double(seen) : 0.0);
        report.clean_test_curve.push_back(evaluate_accuracy(model, test_ds));
        if (perturbed_test) {
            report.perturbed_test_curve.push_back(evaluate_accuracy(model, *perturbed_test));
        }
    }

    report.clean_test_acc = report.clean_test_curve.back();
    if (perturbed_test) report.perturbed_test_acc = report.perturbed_test_curve.back();

    TargetTrainResult result;
    result.report = std::move(report);
    result.model = std::move(model);
    return result;
}

std::vector<RelabelRow> run_relabel_experiment(const LabeledImageDataset& protected_train,
                                               const LabeledImageDataset& clean_test,
                                               const std::vector<int>& n_values,
                                               std::uint64_t grouping_seed,
                                               const TrainerConfig& trainer) {
    std::vector<RelabelRow> rows;
    for (int n : n_values) {
        if (n < 1 || n > protected_train.num_categories) {
            throw_param("relabel experiment: n=" + std::to_string(n) + " outside [1, m]");
        }
        const LabelMapping mapping = make_grouping(protected_train.num_categories, n, grouping_seed);
        const LabeledImageDataset train_n = relabel(protected_train, mapping);
        const LabeledImageDataset test_n = relabel(clean_test, mapping);
        const TargetTrainResult r = train_target(train_n, test_n, trainer);
        rows.push_back({n, r.report.clean_test_acc, 1.0 / double(n)});
    }
    return rows;
}

std::vector<MixtureRow> run_mixture_experiment(const LabeledImageDataset& clean_train,
                                               const LabeledImageDataset& protected_train,
                                               const LabeledImageDataset& clean_test,
                                               const std::vector<int>& clean_category_counts,
                                               const TrainerConfig& trainer) {
    const int m = clean_train.num_categories;
    std::vector<MixtureRow> rows;
    for (int c : clean_category_counts) {
        if (c < 0 || c > m) throw_param("mixture experiment: bad clean category count");
        std::set<int> clean_cats;
        for (int i = 0; i < c; ++i) clean_cats.insert(i);

        const LabeledImageDataset mixed = mix_datasets(clean_train, protected_train, clean_cats);
        const TargetTrainResult r = train_target(mixed, clean_test, trainer);

        MixtureRow row;
        row.clean_count = c;
        row.overall_acc = r.report.clean_test_acc;
        row.per_category = per_category_accuracy(r.model, clean_test);

        double clean_sum = 0.0, prot_sum = 0.0;
        int clean_n = 0, prot_n = 0;
        for (int cat = 0; cat < m; ++cat) {
            if (row.per_category[cat] < 0.0) continue;
            if (clean_cats.count(cat)) {
                clean_sum += row.per_category[cat];
                ++clean_n;
            } else {
                prot_sum += row.per_category[cat];
                ++prot_n;
            }
        }
        row.clean_categories_acc = clean_n ? clean_sum / clean_n : 0.0;
        row.protected_categories_acc = prot_n ? prot_sum / prot_n : 0.0;

        if (c > 0) {
            const LabeledImageDataset control_train = subset_by_categories(clean_train, clean_cats);
            const LabeledImageDataset control_test = subset_by_categories(clean_test, clean_cats);
            const TargetTrainResult ctrl = train_target(control_train, control_test, trainer);
            row.clean_only_control_acc = ctrl.report.clean_test_acc;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace uclearn
