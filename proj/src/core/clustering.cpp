#include "core/clustering.hpp"

#include <cmath>
#include <cstring>
#include <limits>

#include <nlohmann/json.hpp>

#include "core/errors.hpp"
#include "core/io_util.hpp"
#include "core/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace uclearn {

namespace {

using MatD = Eigen::MatrixXd;

double sq_dist(const MatD& a, int i, const MatD& b, int j) {
    return (a.row(i) - b.row(j)).squaredNorm();
}

// k-means++: first center uniform, then proportional to squared distance to
// the nearest chosen center.
MatD kmeanspp_init(const MatD& points, int p, Rng& rng) {
    const int k = int(points.rows());
    MatD centers(p, points.cols());
    const int first = rng.uniform_index(k);
    centers.row(0) = points.row(first);

    std::vector<double> d2(k);
    for (int i = 0; i < k; ++i) d2[i] = (points.row(i) - centers.row(0)).squaredNorm();

    for (int c = 1; c < p; ++c) {
        double total = 0.0;
        for (double v : d2) total += v;
        int chosen;
        if (total <= 0.0) {
            chosen = rng.uniform_index(k); // all points coincide with centers
        } else {
            const double r = rng.uniform() * total;
            double acc = 0.0;
            chosen = k - 1;
            for (int i = 0; i < k; ++i) {
                acc += d2[i];
                if (r < acc) {
                    chosen = i;
                    break;
                }
            }
        }
        centers.row(c) = points.row(chosen);
        for (int i = 0; i < k; ++i) {
            d2[i] = std::min(d2[i], (points.row(i) - centers.row(c)).squaredNorm());
        }
    }
    return centers;
}

int nearest_center(const MatD& points, int i, const MatD& centers) {
    int best = 0;
    double best_d = (points.row(i) - centers.row(0)).squaredNorm();
    for (int c = 1; c < int(centers.rows()); ++c) {
        const double d = (points.row(i) - centers.row(c)).squaredNorm();
        if (d < best_d) { // strict: ties keep the lowest index
            best_d = d;
            best = c;
        }
    }
    return best;
}

} // namespace

std::vector<int> closed_loop_permutation(int p) {
    std::vector<int> g(p);
    for (int i = 0; i < p; ++i) g[i] = (i + 1) % p;
    return g;
}

ClusterModel kmeans(const EmbeddingMatrix& embeddings, int p, std::uint64_t seed,
                    const KMeansOptions& opts) {
    const int k = embeddings.count();
    const int d = embeddings.dim();
    if (p < 1) throw_param("kmeans: p must be >= 1");
    if (p > k) throw_param("kmeans: p=" + std::to_string(p) + " exceeds sample count " + std::to_string(k));
    if (opts.max_iters < 1) throw_param("kmeans: max_iters must be >= 1");

    MatD points = embeddings.rows.cast<double>();
    Rng rng(seed);
    MatD centers = kmeanspp_init(points, p, rng);

    ClusterModel model;
    model.p = p;
    model.seed = seed;
    model.assignment.assign(k, 0);
    model.sizes.assign(p, 0);

    std::vector<double> dist_to_own(k, 0.0);
    for (int iter = 0; iter < opts.max_iters; ++iter) {
        // Assignment phase; inertia is recorded here, after which both Lloyd
        // phases can only lower it.
        double inertia = 0.0;
        std::fill(model.sizes.begin(), model.sizes.end(), 0);
        for (int i = 0; i < k; ++i) {
            const int c = nearest_center(points, i, centers);
            model.assignment[i] = c;
            model.sizes[c]++;
            dist_to_own[i] = (points.row(i) - centers.row(c)).squaredNorm();
            inertia += dist_to_own[i];
        }
        model.inertia_trace.push_back(inertia);

        // Update phase.
        MatD new_centers = MatD::Zero(p, d);
        for (int i = 0; i < k; ++i) new_centers.row(model.assignment[i]) += points.row(i);
        for (int c = 0; c < p; ++c) {
            if (model.sizes[c] > 0) new_centers.row(c) /= double(model.sizes[c]);
        }

        // Empty-cluster repair: steal the point farthest from its center.
        for (int c = 0; c < p; ++c) {
            if (model.sizes[c] > 0) continue;
            int far = -1;
            double far_d = -1.0;
            for (int i = 0; i < k; ++i) {
                if (model.sizes[model.assignment[i]] <= 1) continue;
                if (dist_to_own[i] > far_d) {
                    far_d = dist_to_own[i];
                    far = i;
                }
            }
            if (far < 0) throw_numeric("kmeans: cannot repair empty cluster");
            new_centers.row(c) = points.row(far);
            model.sizes[model.assignment[far]]--;
            model.assignment[far] = c;
            model.sizes[c] = 1;
            dist_to_own[far] = 0.0;
        }

        const double movement = (new_centers - centers).rowwise().norm().maxCoeff();
        centers = std::move(new_centers);
        if (movement < opts.tol) break;
    }

    // Final assignment against the converged centers.
    std::fill(model.sizes.begin(), model.sizes.end(), 0);
    double inertia = 0.0;
    for (int i = 0; i < k; ++i) {
        const int c = nearest_center(points, i, centers);
        model.assignment[i] = c;
        model.sizes[c]++;
        inertia += (points.row(i) - centers.row(c)).squaredNorm();
    }
    model.inertia_trace.push_back(inertia);

    model.centers = centers.cast<float>();
    model.permutation = closed_loop_permutation(p);
    return model;
}

std::vector<int> assign_to_clusters(const ClusterModel& model, const EmbeddingMatrix& embeddings) {
    if (embeddings.dim() != int(model.centers.cols())) {
        throw_param("assign: embedding dimension mismatch");
    }
    MatD points = embeddings.rows.cast<double>();
    MatD centers = model.centers.cast<double>();
    std::vector<int> out(embeddings.count());
    for (int i = 0; i < embeddings.count(); ++i) out[i] = nearest_center(points, i, centers);
    return out;
}

void save_cluster_model(const ClusterModel& model, const fs::path& json_path,
                        const fs::path& centers_path) {
    json j;
    j["p"] = model.p;
    j["permutation"] = model.permutation;
    j["sizes"] = model.sizes;
    j["seed"] = model.seed;
    atomic_write_file(json_path, j.dump(2) + "\n");

    ByteWriter w;
    w.u32(std::uint32_t(model.p));
    w.u32(std::uint32_t(model.centers.cols()));
    w.f32_array(model.centers.data(), std::size_t(model.centers.size()));
    atomic_write_file(centers_path, w.bytes().data(), w.bytes().size());
}

ClusterModel load_cluster_model(const fs::path& json_path, const fs::path& centers_path) {
    ClusterModel model;
    try {
        const json j = json::parse(read_text_file(json_path));
        model.p = j.at("p").get<int>();
        model.permutation = j.at("permutation").get<std::vector<int>>();
        model.sizes = j.at("sizes").get<std::vector<int>>();
        model.seed = j.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw_format("invalid cluster model sidecar " + json_path.string() + ": " + e.what());
    }

    const auto bytes = read_binary_file(centers_path);
    ByteReader r(bytes);
    const int p = int(r.u32());
    const int d = int(r.u32());
    if (p != model.p) throw_format("cluster centers block disagrees with sidecar p");
    model.centers.resize(p, d);
    r.f32_array(model.centers.data(), std::size_t(p) * d);
    return model;
}

} // namespace uclearn
