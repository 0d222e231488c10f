#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "core/encoder.hpp"

namespace uclearn {

// K-means fit on embeddings plus the cyclic permutation used to pick each
// cluster's wrong target center.
struct ClusterModel {
    int p = 0;
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> centers; // p x d_e
    std::vector<int> assignment;  // per input row, in [0, p)
    std::vector<int> sizes;       // tau(i), sums to row count
    std::vector<int> permutation; // g, fixed-point-free cycle for p >= 2
    std::uint64_t seed = 0;
    std::vector<double> inertia_trace; // per Lloyd iteration, non-increasing

    int target_of(int cluster) const { return permutation[cluster]; }
};

struct KMeansOptions {
    int max_iters = 300;
    double tol = 1e-4;
};

// Lloyd iterations from seeded k-means++ starts. An empty cluster is
// reseeded at the point currently farthest from its assigned center.
ClusterModel kmeans(const EmbeddingMatrix& embeddings, int p, std::uint64_t seed,
                    const KMeansOptions& opts = {});

// g(i) = (i+1) mod p: the closed-loop permutation.
std::vector<int> closed_loop_permutation(int p);

// Nearest-center assignment for new rows; ties resolve to the lowest index.
std::vector<int> assign_to_clusters(const ClusterModel& model, const EmbeddingMatrix& embeddings);

// JSON sidecar {p, permutation, sizes, seed} + binary centers block
// (u32 p, u32 d_e, then f32 row-major centers).
void save_cluster_model(const ClusterModel& model, const std::filesystem::path& json_path,
                        const std::filesystem::path& centers_path);
ClusterModel load_cluster_model(const std::filesystem::path& json_path,
                                const std::filesystem::path& centers_path);

} // namespace uclearn
