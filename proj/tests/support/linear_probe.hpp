#pragma once

#include <Eigen/Dense>

#include <vector>

#include "core/dataset.hpp"

// Independent least-squares classifier on raw pixels. Lives in test code on
// purpose: it is the oracle that checks learnability claims without touching
// the library's training path.

namespace uclearn::testing {

struct LinearProbe {
    Eigen::MatrixXf weights; // (features+1) x classes, last row is the bias
    int classes = 0;
};

inline Eigen::MatrixXf probe_features(const LabeledImageDataset& ds) {
    const std::size_t d = ds.samples.front().pixels.size();
    Eigen::MatrixXf x(ds.size(), d + 1);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto& px = ds.samples[i].pixels.data;
        for (std::size_t j = 0; j < d; ++j) x(Eigen::Index(i), Eigen::Index(j)) = px[j];
        x(Eigen::Index(i), Eigen::Index(d)) = 1.0f;
    }
    return x;
}

inline LinearProbe fit_linear_probe(const LabeledImageDataset& ds, float ridge = 1e-3f) {
    const Eigen::MatrixXf x = probe_features(ds);
    Eigen::MatrixXf y = Eigen::MatrixXf::Zero(ds.size(), ds.num_categories);
    for (std::size_t i = 0; i < ds.size(); ++i) y(Eigen::Index(i), ds.samples[i].label) = 1.0f;

    const Eigen::MatrixXf xtx =
        x.transpose() * x + ridge * Eigen::MatrixXf::Identity(x.cols(), x.cols());
    LinearProbe probe;
    probe.weights = xtx.ldlt().solve(x.transpose() * y);
    probe.classes = ds.num_categories;
    return probe;
}

inline double probe_accuracy(const LinearProbe& probe, const LabeledImageDataset& ds) {
    const Eigen::MatrixXf x = probe_features(ds);
    const Eigen::MatrixXf scores = x * probe.weights;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        Eigen::Index best;
        scores.row(Eigen::Index(i)).maxCoeff(&best);
        if (int(best) == ds.samples[i].label) ++correct;
    }
    return double(correct) / double(ds.size());
}

} // namespace uclearn::testing
