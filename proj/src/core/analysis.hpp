#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "core/encoder.hpp"

namespace uclearn {

struct Pca3Result {
    // k x components coordinates; components <= 3 (fewer when rank-deficient,
    // flagged below).
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> coords;
    std::vector<double> explained_variance; // fractions, descending
    int components = 0;
    bool rank_deficient = false;

    // CSV: id, label, c1, c2, c3
    std::string to_csv(const std::vector<std::string>& ids, const std::vector<int>& labels) const;
};

// Mean-centered projection onto the top covariance eigenvectors; the first
// nonzero loading of each component is made positive.
Pca3Result pca3_project(const EmbeddingMatrix& embeddings);

struct CategoryGeometry {
    int category = 0;
    double discrepancy_clean = 0.0;
    double discrepancy_perturbed = 0.0;
    bool excluded = false; // fewer than 2 samples
};

// Computable proxies for the uniformity/discrepancy disruption: per-category
// covariance trace, mean pairwise distance of unit-normalized rows, and the
// clean-vs-perturbed mean shift.
struct GeometryReport {
    double discrepancy_clean = 0.0;
    double discrepancy_perturbed = 0.0;
    double discrepancy_ratio = 0.0;
    double uniformity_clean = 0.0;
    double uniformity_perturbed = 0.0;
    double uniformity_ratio = 0.0;
    double mean_shift = 0.0;
    std::vector<CategoryGeometry> per_category;

    nlohmann::json to_json() const;
};

GeometryReport geometry_report(const EmbeddingMatrix& clean, const EmbeddingMatrix& perturbed,
                               const std::vector<int>& labels);

} // namespace uclearn
